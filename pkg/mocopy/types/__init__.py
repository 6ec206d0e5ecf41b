# Copyright (c) 2024 The mocopy developers
# For license information see LICENSE or https://opensource.org/licenses/BSD-3-Clause

from fractions import Fraction
from typing import Final, Tuple, TypeAlias

import numpy.typing as npt

__all__ = [
    'Box',
    'FloatArray',
    'Rational',
    'Shape',
    'EPSILON',
    'GRAY_LEVELS',
]

FloatArray: TypeAlias = npt.NDArray[float]
Shape: TypeAlias = Tuple[int, ...]

# Integer or fractional quantity such as an LSTA dilation or a resize factor.
Rational: TypeAlias = int | float | Fraction

# Half-open pixel box as (row_start, row_stop, col_start, col_stop).
Box: TypeAlias = Tuple[int, int, int, int]

# Added to every ratio denominator in the evaluation metrics.
EPSILON: Final[float] = 1e-10

# Intensities are evaluated on an 8-bit scale by detectors and neighborhood metrics.
GRAY_LEVELS: Final[int] = 255
