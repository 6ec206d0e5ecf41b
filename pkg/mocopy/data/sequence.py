# Copyright (c) 2024 The mocopy developers
# For license information see LICENSE or https://opensource.org/licenses/BSD-3-Clause

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, final

import numpy as np
import numpy.typing as npt

from mocopy.decorators import immutable
from mocopy.errors import (AnnotationOutsideImageError, MixedFrameSizeError,
                           ShapeMismatchError)
from mocopy.numerics import Tensor
from mocopy.types import FloatArray

__all__ = [
    'FrameSequence',
    'TargetAnnotation',
]


@final
@immutable
@dataclass(frozen=True)
class TargetAnnotation:
    """
    Ground truth of one target in one frame.

    Attributes:
        x: centroid column, in pixels.
        y: centroid row, in pixels.
        a: extent along x, in pixels.
        b: extent along y, in pixels.
    """
    x: float
    y: float
    a: float
    b: float

    def __post_init__(self):
        if self.a <= 0 or self.b <= 0:
            raise ValueError(f'Target extents must be positive, received a={self.a}, b={self.b}.')

    def scaled(self, factor: float) -> 'TargetAnnotation':
        return TargetAnnotation(x=self.x * factor, y=self.y * factor, a=self.a * factor, b=self.b * factor)

    def inside(self, shape: Tuple[int, int]) -> bool:
        h, w = shape
        return 0 <= self.x < w and 0 <= self.y < h


@final
@immutable
@dataclass(frozen=True, eq=False)
class FrameSequence:
    """
    Ordered grayscale frames with intensities in [0, 1] and optional per-frame target annotations.

    Attributes:
        frames: tensors of shape [1, 1, H, W], all of the same size; the temporal index is the position.
        annotations: one annotation (or None for a frame without ground truth) per frame, or None.
    """
    frames: Tuple[Tensor, ...]
    annotations: Optional[Tuple[Optional[TargetAnnotation], ...]] = None

    def __post_init__(self):
        if not self.frames:
            raise ValueError('A frame sequence needs at least one frame.')
        size = self.frames[0].shape
        if len(size) != 4 or size[:2] != (1, 1):
            raise ShapeMismatchError('FrameSequence', (1, 1, -1, -1), size)
        for i, frame in enumerate(self.frames):
            if frame.shape != size:
                raise MixedFrameSizeError(f'frame {i}', size[2:], frame.shape[2:])
        if self.annotations is not None:
            if len(self.annotations) != len(self.frames):
                raise ValueError(f'{len(self.annotations)} annotations for {len(self.frames)} frames.')
            for ann in self.annotations:
                if ann is not None and not ann.inside(self.size):
                    raise AnnotationOutsideImageError((ann.x, ann.y), self.size)

    @staticmethod
    def from_arrays(arrays: Sequence[npt.ArrayLike],
                    annotations: Optional[Sequence[Optional[TargetAnnotation]]] = None,
                    clip: bool = True) -> 'FrameSequence':
        """
        Build a sequence from 2-D arrays, clamping intensities to [0, 1] unless clip is False.
        """
        frames = []
        for arr in arrays:
            arr = np.asarray(arr, dtype=np.float64)
            if clip:
                arr = np.clip(arr, 0.0, 1.0)
            frames.append(Tensor(arr[None, None]))
        return FrameSequence(frames=tuple(frames),
                             annotations=tuple(annotations) if annotations is not None else None)

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def size(self) -> Tuple[int, int]:
        return self.frames[0].shape[2], self.frames[0].shape[3]

    def array(self, index: int) -> FloatArray:
        return self.frames[index].data[0, 0]

    def stack(self) -> FloatArray:
        """
        Returns:
            The frames as a [N, H, W] array.
        """
        return np.stack([f.data[0, 0] for f in self.frames])

    def annotation(self, index: int) -> Optional[TargetAnnotation]:
        return None if self.annotations is None else self.annotations[index]

    def window(self, start: int, length: int) -> 'FrameSequence':
        if start < 0 or length < 1 or start + length > len(self):
            raise ValueError(f'Window [{start}, {start + length}) outside a sequence of {len(self)} frames.')
        anns = None if self.annotations is None else self.annotations[start:start + length]
        return FrameSequence(frames=self.frames[start:start + length], annotations=anns)
