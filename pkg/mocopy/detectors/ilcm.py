# Copyright (c) 2024 The mocopy developers
# For license information see LICENSE or https://opensource.org/licenses/BSD-3-Clause

import numpy as np
import numpy.typing as npt

from mocopy.errors import ImageTooSmallError
from mocopy.helpers import as_image
from mocopy.types import EPSILON, FloatArray

__all__ = [
    'cell_means',
    'ilcm',
]


def cell_means(arr: FloatArray, cell: int) -> FloatArray:
    """
    Mean of every cell x cell block, indexed by its top-left pixel, from an integral image.
    """
    integral = np.zeros((arr.shape[0] + 1, arr.shape[1] + 1))
    integral[1:, 1:] = np.cumsum(np.cumsum(arr, axis=0), axis=1)
    sums = integral[cell:, cell:] - integral[:-cell, cell:] - integral[cell:, :-cell] + integral[:-cell, :-cell]
    return sums / (cell * cell)


def ilcm(img: npt.ArrayLike, cell: int) -> FloatArray:
    """
    Improved local contrast measure.

    A 3 x 3 grid of cell x cell cells slides over the image. With m0 the mean of the centre cell
    and m1..m8 the means of the surrounding cells, the saliency at the grid centre is
    max(0, m0 * min_i(m0 / (m_i + 1e-10))). Pixels where the grid does not fit are zero.

    Raises:
        ImageTooSmallError: the image is smaller than 3 * cell along an axis.
    """
    arr = as_image(img)
    h, w = arr.shape
    if cell < 3:
        raise ValueError(f'ILCM cell must be at least 3, received {cell}.')
    if h < 3 * cell or w < 3 * cell:
        raise ImageTooSmallError('ilcm', 3 * cell, arr.shape)

    means = cell_means(arr, cell)
    nh, nw = h - 3 * cell + 1, w - 3 * cell + 1

    def shifted(dy: int, dx: int) -> FloatArray:
        top, left = cell + dy * cell, cell + dx * cell
        return means[top:top + nh, left:left + nw]

    m0 = shifted(0, 0)
    ratio = np.full_like(m0, np.inf)
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            if dy or dx:
                ratio = np.minimum(ratio, m0 / (shifted(dy, dx) + EPSILON))

    out = np.zeros_like(arr)
    half = cell // 2
    out[cell + half:cell + half + nh, cell + half:cell + half + nw] = np.maximum(m0 * ratio, 0.0)
    return out
