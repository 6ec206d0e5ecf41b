# Copyright (c) 2024 The mocopy developers
# For license information see LICENSE or https://opensource.org/licenses/BSD-3-Clause

import math
from fractions import Fraction
from functools import lru_cache
from typing import Final

import numpy as np
import numpy.typing as npt

from mocopy.errors import DegenerateSizeError, DivisibilityError
from mocopy.helpers import as_fraction
from mocopy.numerics import Tensor
from mocopy.types import FloatArray, Rational

from .sequence import FrameSequence

__all__ = [
    'bicubic_resize',
    'bicubic_upsample',
    'cubic_kernel',
    'degrade',
    'resize_weights',
    'CUBIC_A',
]

CUBIC_A: Final[float] = -0.5


def cubic_kernel(t: npt.ArrayLike, a: float = CUBIC_A) -> FloatArray:
    """
    Keys cubic convolution kernel, supported on (-2, 2).
    """
    t = np.abs(np.asarray(t, dtype=np.float64))
    t2 = t * t
    t3 = t2 * t
    near = (a + 2) * t3 - (a + 3) * t2 + 1
    far = a * t3 - 5 * a * t2 + 8 * a * t - 4 * a
    return np.where(t <= 1, near, np.where(t < 2, far, 0.0))


def _mirror(index: FloatArray, n: int) -> FloatArray:
    # Half-sample symmetric extension: -1 -> 0, n -> n - 1.
    m = np.mod(index, 2 * n)
    return np.where(m < n, m, 2 * n - 1 - m)


@lru_cache(maxsize=64)
def resize_weights(in_size: int, out_size: int, factor: Fraction) -> FloatArray:
    """
    The [out_size, in_size] matrix of a one-dimensional bicubic resize.

    Output sample o reads the input at (o + 0.5) / factor - 0.5. When downscaling, the kernel is
    stretched by 1 / factor so that it also acts as the antialiasing filter. Rows are normalised to
    sum to one, and taps beyond the border are mirrored back inside.
    """
    scale = float(factor)
    support = 1.0 / scale if scale < 1 else 1.0
    centers = (np.arange(out_size) + 0.5) / scale - 0.5
    reach = int(math.ceil(2 * support)) + 1
    taps = np.floor(centers)[:, None] + np.arange(-reach, reach + 1)[None, :]
    weights = cubic_kernel((centers[:, None] - taps) / support)

    matrix = np.zeros((out_size, in_size))
    rows = np.broadcast_to(np.arange(out_size)[:, None], taps.shape)
    np.add.at(matrix, (rows, _mirror(taps.astype(np.int64), in_size)), weights)
    matrix /= matrix.sum(axis=1, keepdims=True)
    matrix.setflags(write=False)
    return matrix


def bicubic_resize(img: npt.ArrayLike | Tensor, factor: Rational) -> Tensor:
    """
    Separable bicubic resize of the two trailing axes by factor.

    The output extent is floor(extent * factor), computed in exact rational arithmetic.

    Raises:
        DegenerateSizeError: the output would have an extent smaller than one pixel.
    """
    factor = as_fraction(factor)
    if factor <= 0:
        raise ValueError(f'Resize factor must be positive, received {factor}.')
    arr = np.asarray(img, dtype=np.float64)
    h, w = arr.shape[-2:]
    out_h, out_w = math.floor(h * factor), math.floor(w * factor)
    if out_h < 1 or out_w < 1:
        raise DegenerateSizeError(f'Resizing {h}x{w} by {factor} gives {out_h}x{out_w}.')
    rows = resize_weights(h, out_h, factor)
    cols = resize_weights(w, out_w, factor)
    return Tensor(np.matmul(np.matmul(rows, arr), cols.T))


def bicubic_upsample(img: npt.ArrayLike | Tensor, scale: int) -> Tensor:
    return bicubic_resize(img, Fraction(scale))


def degrade(hr_seq: FrameSequence, scale: int) -> FrameSequence:
    """
    Bicubic downsampling of every frame by 1 / scale; annotations are divided by scale.

    Raises:
        DivisibilityError: the frame size is not a multiple of scale.
    """
    h, w = hr_seq.size
    for extent in (h, w):
        if extent % scale != 0:
            raise DivisibilityError(extent, scale)
    factor = Fraction(1, scale)
    frames = [np.clip(bicubic_resize(hr_seq.array(i), factor).data, 0.0, 1.0) for i in range(len(hr_seq))]
    annotations = None
    if hr_seq.annotations is not None:
        annotations = [None if a is None else a.scaled(1.0 / scale) for a in hr_seq.annotations]
    return FrameSequence.from_arrays(frames, annotations, clip=False)
