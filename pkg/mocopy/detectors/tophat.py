# Copyright (c) 2024 The mocopy developers
# For license information see LICENSE or https://opensource.org/licenses/BSD-3-Clause

import numpy as np
import numpy.typing as npt
from scipy import ndimage

from mocopy.helpers import as_image
from mocopy.types import FloatArray

__all__ = [
    'tophat',
]


def tophat(img: npt.ArrayLike, se: int) -> FloatArray:
    """
    White top-hat: the image minus its grey opening by a flat se x se square.

    Structures smaller than the structuring element survive, while the smooth background, which
    the opening reproduces, is removed. The border is extended by edge replication.

    Args:
        img: the input image.
        se: the side of the structuring element, at least 3.

    Returns:
        A non-negative image of the same size.
    """
    if se < 3:
        raise ValueError(f'Top-hat structuring element must be at least 3, received {se}.')
    arr = as_image(img)
    opened = ndimage.grey_opening(arr, size=(se, se), mode='nearest')
    return np.maximum(arr - opened, 0.0)
