# Copyright (c) 2024 The mocopy developers
# For license information see LICENSE or https://opensource.org/licenses/BSD-3-Clause

from dataclasses import dataclass
from typing import List, Sequence, Set, Tuple, final

import numpy as np
import numpy.typing as npt
from scipy.integrate import trapezoid

from mocopy.data import TargetAnnotation
from mocopy.decorators import immutable
from mocopy.detectors import Candidate, segment
from mocopy.helpers import as_image

__all__ = [
    'MatchCounts',
    'RocCurve',
    'match_candidates',
    'match_pairs',
    'roc',
    'roc_auc',
]


@final
@immutable
@dataclass(frozen=True)
class MatchCounts:
    """
    Attributes:
        td: candidates matched to a ground-truth target.
        fd: candidates left unmatched.
        at: ground-truth targets.
        pixels: pixels examined (NP).
    """
    td: int
    fd: int
    at: int
    pixels: int

    def __add__(self, other: 'MatchCounts') -> 'MatchCounts':
        return MatchCounts(self.td + other.td, self.fd + other.fd, self.at + other.at, self.pixels + other.pixels)

    @property
    def pd(self) -> float:
        return self.td / self.at if self.at else 0.0

    @property
    def fa(self) -> float:
        return self.fd / self.pixels if self.pixels else 0.0


@final
@immutable
@dataclass(frozen=True)
class RocCurve:
    """
    Detection probability against false-alarm rate over a descending threshold sweep.

    Attributes:
        thresholds: the thresholds, highest first.
        counts: aggregated match counts at each threshold.
    """
    thresholds: Tuple[float, ...]
    counts: Tuple[MatchCounts, ...]

    @property
    def pd(self) -> Tuple[float, ...]:
        return tuple(c.pd for c in self.counts)

    @property
    def fa(self) -> Tuple[float, ...]:
        return tuple(c.fa for c in self.counts)


def match_pairs(candidates: Sequence[Candidate],
                truths: Sequence[TargetAnnotation],
                tau: float) -> List[Tuple[int, int]]:
    """
    Greedy nearest-first matching: candidate and target pairs are taken by ascending centroid
    distance, each candidate and each target at most once, and only while the distance is below tau.

    Returns:
        The matched (candidate index, target index) pairs, nearest first.
    """
    pairs: List[Tuple[float, int, int]] = []
    for i, c in enumerate(candidates):
        for j, t in enumerate(truths):
            dist = float(np.hypot(c.x - t.x, c.y - t.y))
            if dist < tau:
                pairs.append((dist, i, j))
    used_c, used_t = set(), set()
    matched: List[Tuple[int, int]] = []
    for _, i, j in sorted(pairs):
        if i not in used_c and j not in used_t:
            used_c.add(i)
            used_t.add(j)
            matched.append((i, j))
    return matched


def match_candidates(candidates: Sequence[Candidate], truths: Sequence[TargetAnnotation], tau: float) -> int:
    """The number of greedy matches, see `match_pairs`."""
    return len(match_pairs(candidates, truths, tau))


def roc(target_images: Sequence[npt.ArrayLike],
        annotations: Sequence[Sequence[TargetAnnotation]],
        tau: float,
        sweep: Sequence[float],
        min_area: int = 1) -> RocCurve:
    """
    Pd = TD / AT and Fa = FD / NP aggregated over a set of target images at each threshold of the sweep.

    Detection state is carried down the sweep: a target matched at a higher threshold stays
    detected, and the false detections of an image are the most seen at any threshold so far.
    Pd and Fa never fall as the threshold falls, even where blobs merge.

    Args:
        target_images: detector outputs.
        annotations: the ground-truth targets of each image.
        tau: the matching distance, in pixels.
        sweep: thresholds in descending order.
        min_area: the smallest candidate component.
    """
    if len(target_images) != len(annotations):
        raise ValueError(f'{len(target_images)} target images but {len(annotations)} annotation sets.')
    thresholds = tuple(float(t) for t in sweep)
    if any(b > a for a, b in zip(thresholds, thresholds[1:])):
        raise ValueError('ROC thresholds must be in descending order.')
    images = [as_image(img) for img in target_images]

    found: List[Set[int]] = [set() for _ in images]
    false_peak = [0] * len(images)
    counts = []
    for threshold in thresholds:
        total = MatchCounts(0, 0, 0, 0)
        for k, (img, truths) in enumerate(zip(images, annotations)):
            candidates = segment(img, threshold, min_area)
            pairs = match_pairs(candidates, truths, tau)
            found[k].update(j for _, j in pairs)
            false_peak[k] = max(false_peak[k], len(candidates) - len(pairs))
            total = total + MatchCounts(len(found[k]), false_peak[k], len(truths), img.size)
        counts.append(total)
    return RocCurve(thresholds=thresholds, counts=tuple(counts))


def roc_auc(curve: RocCurve) -> float:
    """
    Trapezoidal area under Pd against Fa.
    """
    fa = np.asarray(curve.fa)
    pd = np.asarray(curve.pd)
    order = np.argsort(fa, kind='stable')
    return float(trapezoid(pd[order], fa[order]))
