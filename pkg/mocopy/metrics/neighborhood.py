# Copyright (c) 2024 The mocopy developers
# For license information see LICENSE or https://opensource.org/licenses/BSD-3-Clause

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Final, Tuple, final

import numpy as np
import numpy.typing as npt
from gelidum import freeze

from mocopy.data import TargetAnnotation
from mocopy.decorators import immutable
from mocopy.detectors import ResolutionClass
from mocopy.errors import AnnotationOutsideImageError, ImageTooSmallError
from mocopy.helpers import as_image
from mocopy.types import EPSILON, Box

__all__ = [
    'DatasetProfile',
    'NeighborhoodSpec',
    'NeighborhoodStats',
    'local_cr',
    'local_snr',
    'neighborhood_masks',
    'neighborhood_stats',
]

logger = logging.getLogger(__name__)


@final
@immutable
@dataclass(frozen=True)
class NeighborhoodSpec:
    """
    Geometry of the local neighborhood around a target.

    Attributes:
        a: target box extent along x.
        b: target box extent along y.
        d: width of the background frame around the target box.
    """
    a: int
    b: int
    d: int

    def __post_init__(self):
        if self.a < 1 or self.b < 1:
            raise ValueError(f'Target extents must be at least 1, received a={self.a}, b={self.b}.')
        if self.d < 1:
            raise ValueError(f'Neighborhood margin must be at least 1, received {self.d}.')


@final
@immutable
@dataclass(frozen=True)
class NeighborhoodStats:
    """
    Attributes:
        p_t, p_b: maxima of the target and background areas.
        mu_t, mu_b: means of the target and background areas.
        sigma_b: standard deviation of the background area.
        clamped: the neighborhood crossed the image border and was cut to fit.
    """
    p_t: float
    p_b: float
    mu_t: float
    mu_b: float
    sigma_b: float
    clamped: bool = False


class DatasetProfile(str, Enum):
    """
    Evaluation datasets, each with its own target sizes.
    """
    SAITD = 'saitd'
    HUI = 'hui'
    ANTI_UAV = 'anti-uav'

    def neighborhood(self, resolution: ResolutionClass) -> NeighborhoodSpec:
        return _NEIGHBORHOODS[self][ResolutionClass(resolution)]


_NEIGHBORHOODS: Final[Dict[DatasetProfile, Dict[ResolutionClass, NeighborhoodSpec]]] = freeze({
    DatasetProfile.SAITD: {
        ResolutionClass.HR: NeighborhoodSpec(7, 7, 30),
        ResolutionClass.SR4: NeighborhoodSpec(29, 29, 120),
        ResolutionClass.LR4: NeighborhoodSpec(3, 3, 10),
    },
    DatasetProfile.HUI: {
        ResolutionClass.HR: NeighborhoodSpec(11, 11, 50),
        ResolutionClass.SR4: NeighborhoodSpec(45, 45, 200),
        ResolutionClass.LR4: NeighborhoodSpec(3, 3, 10),
    },
    DatasetProfile.ANTI_UAV: {
        ResolutionClass.HR: NeighborhoodSpec(21, 21, 100),
        ResolutionClass.SR4: NeighborhoodSpec(85, 85, 400),
        ResolutionClass.LR4: NeighborhoodSpec(5, 5, 20),
    },
})


def _span(center: float, extent: int) -> Tuple[int, int]:
    start = int(np.floor(center + 0.5)) - extent // 2
    return start, start + extent


def neighborhood_masks(shape: Tuple[int, int],
                       annotation: TargetAnnotation,
                       spec: NeighborhoodSpec) -> Tuple[np.ndarray, np.ndarray, bool]:
    """
    Boolean masks of the target box and of the background frame around it.

    The a x b target box is centred on the annotation centroid; the background is the
    (a + 2d) x (b + 2d) window around it minus the target box. Both are cut at the image border.

    Returns:
        The target mask, the background mask and whether anything was cut.

    Raises:
        AnnotationOutsideImageError: the centroid is not inside the image.
    """
    if not annotation.inside(shape):
        raise AnnotationOutsideImageError((annotation.x, annotation.y), shape)
    h, w = shape
    r0, r1 = _span(annotation.y, spec.b)
    c0, c1 = _span(annotation.x, spec.a)
    outer: Box = (r0 - spec.d, r1 + spec.d, c0 - spec.d, c1 + spec.d)
    clamped = outer[0] < 0 or outer[2] < 0 or outer[1] > h or outer[3] > w

    target = np.zeros(shape, dtype=bool)
    target[max(r0, 0):max(r1, 0), max(c0, 0):max(c1, 0)] = True
    background = np.zeros(shape, dtype=bool)
    background[max(outer[0], 0):max(outer[1], 0), max(outer[2], 0):max(outer[3], 0)] = True
    background &= ~target
    return target, background, clamped


def neighborhood_stats(img: npt.ArrayLike, annotation: TargetAnnotation, spec: NeighborhoodSpec) -> NeighborhoodStats:
    """
    Target and background statistics of the local neighborhood of one annotated target.

    A neighborhood that does not fit in the image is cut at the border, logged and flagged.
    """
    arr = as_image(img)
    target, background, clamped = neighborhood_masks(arr.shape, annotation, spec)
    if not background.any():
        raise ImageTooSmallError('neighborhood_stats', spec.b + 2 * spec.d, arr.shape)
    if clamped:
        logger.warning('Neighborhood of target at (%.1f, %.1f) clamped to the %s image.',
                       annotation.x, annotation.y, arr.shape)
    t = arr[target]
    bg = arr[background]
    return NeighborhoodStats(p_t=float(t.max()), p_b=float(bg.max()), mu_t=float(t.mean()), mu_b=float(bg.mean()),
                             sigma_b=float(bg.std()), clamped=clamped)


def local_snr(stats: NeighborhoodStats) -> float:
    return stats.p_t / (stats.p_b + EPSILON)


def local_cr(stats: NeighborhoodStats) -> float:
    return abs(stats.mu_t - stats.mu_b)
