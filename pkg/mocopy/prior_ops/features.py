# Copyright (c) 2024 The mocopy developers
# For license information see LICENSE or https://opensource.org/licenses/BSD-3-Clause

import numpy as np
import numpy.typing as npt

from mocopy.numerics import Tensor, as_tensor
from mocopy.types import EPSILON, Box, FloatArray

__all__ = [
    'feature_contrast',
    'feature_l2_norm',
]


def feature_l2_norm(feature: Tensor) -> FloatArray:
    """
    Euclidean norm along the channel axis of a [B, C, H, W] feature, as a [B, H, W] array.
    """
    return np.sqrt(np.sum(np.square(as_tensor(feature).data), axis=1))


def feature_contrast(norm_map: npt.ArrayLike, target_box: Box) -> float:
    """
    Ratio of the mean response inside a target box to the mean response everywhere else.
    High values mean the map singles out the target rather than clutter edges.

    Args:
        norm_map: a 2-D response map, e.g. one slice of feature_l2_norm.
        target_box: (row_start, row_stop, col_start, col_stop), half open.
    """
    arr = np.asarray(norm_map, dtype=np.float64)
    mask = np.zeros(arr.shape, dtype=bool)
    r0, r1, c0, c1 = target_box
    mask[r0:r1, c0:c1] = True
    inside = arr[mask].mean()
    outside = arr[~mask].mean() if (~mask).any() else 0.0
    return float(inside / (outside + EPSILON))
