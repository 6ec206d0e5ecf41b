# Copyright (c) 2024 The mocopy developers
# For license information see LICENSE or https://opensource.org/licenses/BSD-3-Clause

from dataclasses import asdict, dataclass
from typing import Dict, final

import numpy.typing as npt

from mocopy.data import TargetAnnotation
from mocopy.decorators import immutable
from mocopy.types import EPSILON

from .neighborhood import NeighborhoodSpec, NeighborhoodStats, local_cr, local_snr, neighborhood_stats

__all__ = [
    'DetectionGains',
    'detection_gains',
    'gains_from_stats',
    'local_scr',
]


@final
@immutable
@dataclass(frozen=True)
class DetectionGains:
    """
    Improvement of a detector output over the low-resolution input, each a ratio of "out" over "in".

    Attributes:
        snrg: signal-to-noise ratio gain.
        bsf: background suppression factor, sigma_b in over sigma_b out.
        scrg: signal-to-clutter ratio gain.
        cg: contrast gain.
        clamped: either neighborhood was cut at the image border.
    """
    snrg: float
    bsf: float
    scrg: float
    cg: float
    clamped: bool = False

    def as_dict(self) -> Dict[str, float]:
        return asdict(self)


def local_scr(stats: NeighborhoodStats) -> float:
    """
    Signal-to-clutter ratio |mu_t - mu_b| / (sigma_b + eps).
    """
    return abs(stats.mu_t - stats.mu_b) / (stats.sigma_b + EPSILON)


def gains_from_stats(stats_in: NeighborhoodStats, stats_out: NeighborhoodStats) -> DetectionGains:
    return DetectionGains(
        snrg=local_snr(stats_out) / (local_snr(stats_in) + EPSILON),
        bsf=stats_in.sigma_b / (stats_out.sigma_b + EPSILON),
        scrg=local_scr(stats_out) / (local_scr(stats_in) + EPSILON),
        cg=local_cr(stats_out) / (local_cr(stats_in) + EPSILON),
        clamped=stats_in.clamped or stats_out.clamped,
    )


def detection_gains(lr_img: npt.ArrayLike,
                    lr_annotation: TargetAnnotation,
                    lr_spec: NeighborhoodSpec,
                    target_img: npt.ArrayLike,
                    hr_annotation: TargetAnnotation,
                    hr_spec: NeighborhoodSpec) -> DetectionGains:
    """
    SNRG, BSF, SCRG and CG of a detector output.

    The "in" statistics come from the low-resolution image before super-resolution and the "out"
    statistics from the detector's target image at the super-resolved scale, each with the
    neighborhood of its own resolution. Both images are expected on the same intensity scale.
    """
    return gains_from_stats(neighborhood_stats(lr_img, lr_annotation, lr_spec),
                            neighborhood_stats(target_img, hr_annotation, hr_spec))
