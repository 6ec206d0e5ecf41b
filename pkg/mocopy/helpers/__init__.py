# Copyright (c) 2024 The mocopy developers
# For license information see LICENSE or https://opensource.org/licenses/BSD-3-Clause

import configparser
import re
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np
import numpy.typing as npt

from mocopy.types import GRAY_LEVELS, Rational

__all__ = [
    'as_fraction',
    'as_image',
    'natural_key',
    'read_key_values',
    'str_to_bool',
    'threshold_sweep',
    'to_gray_levels',
    'window_starts',
    'write_key_values',
]

_DIGITS = re.compile(r'(\d+)')

# Plain key = value files have no section header; one is injected before parsing.
_SECTION = 'mocopy'


def str_to_bool(s: Optional[str]) -> bool:
    """Conversion from string to boolean

    Arg:
        s: parameter to convert

    Returns:
        true if and only if s is defined and some variant capitalization of 'yes', 'true', 'on' or '1'.
    """
    return s is not None and s.strip().upper() in ['YES', 'TRUE', 'ON', '1']


def natural_key(name: str) -> Tuple:
    """
    Sort key that orders embedded integers numerically, so that frame_2 sorts before frame_10.

    Args:
        name: a file name.

    Returns:
        A tuple usable as a sort key.
    """
    return tuple(int(part) if part.isdigit() else part.lower() for part in _DIGITS.split(name))


def as_fraction(value: Rational) -> Fraction:
    """
    Convert an integer, float or Fraction into a Fraction, snapping floats such as 0.25 or 1/3
    to the closest fraction with a small denominator.

    Args:
        value: the quantity to convert.

    Returns:
        The equivalent Fraction.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    return Fraction(value).limit_denominator(1_000_000)


def to_gray_levels(image: npt.ArrayLike) -> npt.NDArray[float]:
    """
    Rescale a [0, 1] intensity image to the [0, 255] scale the detectors and neighborhood metrics work on.
    """
    return np.asarray(image, dtype=np.float64) * GRAY_LEVELS


def window_starts(extent: int, window: int, stride: int) -> List[int]:
    """
    Start offsets of sliding windows along one axis. A last window clamped to the border is added
    when the stride does not land on it, so that the windows cover the whole extent.

    Args:
        extent: the length of the axis.
        window: the window length (must not exceed extent).
        stride: the step between consecutive windows.

    Returns:
        Sorted start offsets.
    """
    starts = list(range(0, extent - window + 1, stride))
    if starts[-1] != extent - window:
        starts.append(extent - window)
    return starts


def threshold_sweep(low: float, high: float, n: int) -> npt.NDArray[float]:
    """
    A descending, evenly spaced list of n thresholds from high down to low (both inclusive).
    """
    return np.linspace(high, low, n)


def as_image(img: npt.ArrayLike) -> npt.NDArray[float]:
    """
    View a [1, 1, H, W] tensor, or any array whose leading axes are all of length one, as a 2-D float image.
    """
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim < 2 or int(np.prod(arr.shape[:-2])) != 1:
        raise ValueError(f'Expected a single 2-D image, received shape {arr.shape}.')
    return arr.reshape(arr.shape[-2:])


def read_key_values(path: Path) -> Dict[str, str]:
    """
    Read a plain "key = value" file. Comments start with # or ;. Keys are case-insensitive.
    """
    parser = configparser.ConfigParser(interpolation=None)
    with open(path) as f:
        parser.read_string(f'[{_SECTION}]\n' + f.read(), source=str(path))
    return dict(parser[_SECTION])


def write_key_values(values: Mapping[str, object], path: Path) -> None:
    with open(path, 'w') as f:
        for key, value in values.items():
            f.write(f'{key} = {value}\n')
