# Copyright (c) 2024 The mocopy developers
# For license information see LICENSE or https://opensource.org/licenses/BSD-3-Clause

from typing import Tuple

import numpy as np

from mocopy.errors import ShapeMismatchError
from mocopy.numerics import Tensor, as_tensor

__all__ = [
    'dlcm',
]


def _directions(d: int) -> Tuple[Tuple[int, int], ...]:
    return (d, d), (d, 0), (d, -d), (0, d)


def dlcm(feature: Tensor, d: int) -> Tensor:
    """
    Dilated local contrast measure of a single-channel map.

    For every pixel and each of four direction pairs (i, j) at distance d, the product
    (S(p) - S(p - (i, j))) * (S(p) - S(p + (i, j))) is positive only when the pixel is brighter
    (or darker) than both opposite neighbours. The measure is the minimum over the four directions,
    so a point target scores high while an edge, flat along at least one direction, does not.
    Neighbours outside the image read zero.

    This operator is for comparison and visualisation; it is not part of the trained network.

    Args:
        feature: a map of shape [1, 1, H, W].
        d: the dilation, at least 1.

    Returns:
        The measure, shaped like feature.
    """
    feature = as_tensor(feature)
    if feature.ndim != 4 or feature.shape[:2] != (1, 1):
        raise ShapeMismatchError('dlcm', (1, 1, -1, -1), feature.shape)
    if d < 1:
        raise ValueError(f'DLCM dilation must be at least 1, received {d}.')

    s = feature.data[0, 0]
    h, w = s.shape
    padded = np.pad(s, d)

    def neighbour(i: int, j: int) -> np.ndarray:
        return padded[d + i:d + i + h, d + j:d + j + w]

    out = np.full_like(s, np.inf)
    for i, j in _directions(d):
        out = np.minimum(out, (s - neighbour(-i, -j)) * (s - neighbour(i, j)))
    return Tensor(out[None, None])
