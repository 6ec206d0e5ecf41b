# Copyright (c) 2024 The mocopy developers
# For license information see LICENSE or https://opensource.org/licenses/BSD-3-Clause

from dataclasses import dataclass
from typing import Optional, Tuple, final

import numpy as np
import numpy.typing as npt

from mocopy.decorators import immutable
from mocopy.helpers import as_image, to_gray_levels
from mocopy.types import FloatArray

from .ilcm import ilcm
from .ipi import ipi
from .params import DetectorName, DetectorParams
from .segment import Candidate, default_threshold, segment
from .tophat import tophat

__all__ = [
    'DetectionResult',
    'detect',
]


@final
@immutable
@dataclass(frozen=True, eq=False)
class DetectionResult:
    """
    Attributes:
        detector: the detector that produced the result.
        target_image: the detector response, the size of the input, on the [0, 255] scale.
        candidates: components above threshold, by descending score.
        threshold: the segmentation threshold used.
        converged: False only when IPI hit its iteration cap.
    """
    detector: DetectorName
    target_image: FloatArray
    candidates: Tuple[Candidate, ...]
    threshold: float
    converged: bool = True


def detect(img: npt.ArrayLike,
           name: DetectorName,
           params: DetectorParams = DetectorParams(),
           threshold: Optional[float] = None,
           min_area: int = 1) -> DetectionResult:
    """
    Run one classical detector on a [0, 1] image, rescaled to [0, 255] first.

    Args:
        img: the input image.
        name: the detector.
        params: the window sizes.
        threshold: the candidate threshold; mean + 3 std of the target image when omitted.
        min_area: the smallest candidate component.
    """
    gray = to_gray_levels(as_image(img))
    converged = True
    match DetectorName(name):
        case DetectorName.TOPHAT:
            target = tophat(gray, params.tophat_se)
        case DetectorName.ILCM:
            target = ilcm(gray, params.ilcm_cell)
        case DetectorName.IPI:
            model = ipi(gray, params)
            target = model.target_image
            converged = model.converged
    target = np.nan_to_num(target, nan=0.0, posinf=0.0, neginf=0.0)
    if threshold is None:
        threshold = default_threshold(target)
    return DetectionResult(detector=DetectorName(name), target_image=target,
                           candidates=segment(target, threshold, min_area), threshold=threshold,
                           converged=converged)
