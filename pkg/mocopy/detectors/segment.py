# Copyright (c) 2024 The mocopy developers
# For license information see LICENSE or https://opensource.org/licenses/BSD-3-Clause

from dataclasses import dataclass
from typing import Final, Tuple, final

import numpy as np
import numpy.typing as npt
from scipy import ndimage

from mocopy.decorators import immutable
from mocopy.helpers import as_image

__all__ = [
    'Candidate',
    'default_threshold',
    'segment',
]

# 8-connectivity.
_CONNECTIVITY: Final = np.ones((3, 3), dtype=bool)


@final
@immutable
@dataclass(frozen=True)
class Candidate:
    """
    A connected component of a thresholded target image.

    Attributes:
        x, y: intensity-weighted centroid (column, row).
        score: the maximum of the component.
        area: the number of pixels.
    """
    x: float
    y: float
    score: float
    area: int


def default_threshold(target_image: npt.ArrayLike, k: float = 3.0) -> float:
    """
    Mean plus k standard deviations of the target image.
    """
    arr = as_image(target_image)
    return float(arr.mean() + k * arr.std())


def segment(target_image: npt.ArrayLike, threshold: float, min_area: int = 1) -> Tuple[Candidate, ...]:
    """
    8-connected components of the pixels at or above threshold.

    Components smaller than min_area are dropped. The centroid weights each pixel by its intensity,
    falling back to the plain pixel mean when the weights do not sum to a positive value.

    Returns:
        Candidates sorted by descending score.
    """
    if not np.isfinite(threshold):
        raise ValueError(f'Segmentation threshold must be finite, received {threshold}.')
    arr = as_image(target_image)
    labels, n = ndimage.label(arr >= threshold, structure=_CONNECTIVITY)
    if n == 0:
        return ()

    flat = labels.ravel()
    rows, cols = np.indices(arr.shape)
    area = np.bincount(flat, minlength=n + 1)[1:]
    weight = np.bincount(flat, weights=arr.ravel(), minlength=n + 1)[1:]
    wy = np.bincount(flat, weights=(arr * rows).ravel(), minlength=n + 1)[1:]
    wx = np.bincount(flat, weights=(arr * cols).ravel(), minlength=n + 1)[1:]
    my = np.bincount(flat, weights=rows.ravel(), minlength=n + 1)[1:] / area
    mx = np.bincount(flat, weights=cols.ravel(), minlength=n + 1)[1:] / area
    positive = weight > 0
    cy = np.where(positive, wy / np.where(positive, weight, 1.0), my)
    cx = np.where(positive, wx / np.where(positive, weight, 1.0), mx)
    scores = ndimage.maximum(arr, labels, np.arange(1, n + 1))

    candidates = [Candidate(x=float(cx[i]), y=float(cy[i]), score=float(scores[i]), area=int(area[i]))
                  for i in range(n) if area[i] >= min_area]
    return tuple(sorted(candidates, key=lambda c: -c.score))
