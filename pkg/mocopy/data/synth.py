# Copyright (c) 2024 The mocopy developers
# For license information see LICENSE or https://opensource.org/licenses/BSD-3-Clause

import math
from dataclasses import dataclass, fields, replace
from enum import Enum
from typing import Dict, List, Mapping, Optional, Tuple, final

import numpy as np

from mocopy.decorators import immutable
from mocopy.errors import ConfigError, TargetOutOfBoundsError
from mocopy.types import FloatArray

from .sequence import FrameSequence, TargetAnnotation

__all__ = [
    'SynthPreset',
    'SynthSpec',
    'TargetShape',
    'synth_sequence',
]


class TargetShape(str, Enum):
    SQUARE = 'square'
    GAUSSIAN = 'gaussian'


@final
@immutable
@dataclass(frozen=True)
class SynthSpec:
    """
    Recipe of a synthetic infrared sequence: a smooth low-rank background with noise and one
    small target moving with constant velocity.

    Attributes:
        height, width: frame size in pixels.
        frames: number of frames.
        level: flat background intensity.
        gradient_y, gradient_x: background increment per pixel along each axis.
        clutter_blobs: number of separable Gaussian clutter blobs.
        clutter_amplitude: peak intensity of each blob.
        clutter_sigma: spatial standard deviation of the blobs.
        band_amplitude: peak intensity of a horizontal clutter band (0 disables it).
        band_row: the row the band is centred on.
        band_sigma: the vertical standard deviation of the band.
        noise_sigma: standard deviation of the additive Gaussian noise.
        target_shape: square or Gaussian profile.
        target_size: side of the square, or twice the standard deviation of the Gaussian.
        target_peak: intensity added at the centre of the target.
        start_y, start_x: target centroid in frame 0.
        motion_y, motion_x: constant per-frame displacement, possibly fractional.
        seed: seeds the clutter positions and the noise.
    """
    height: int = 64
    width: int = 64
    frames: int = 7
    level: float = 0.2
    gradient_y: float = 0.0
    gradient_x: float = 0.0
    clutter_blobs: int = 0
    clutter_amplitude: float = 0.0
    clutter_sigma: float = 4.0
    band_amplitude: float = 0.0
    band_row: int = 0
    band_sigma: float = 2.0
    noise_sigma: float = 0.0
    target_shape: TargetShape = TargetShape.SQUARE
    target_size: int = 3
    target_peak: float = 0.5
    start_y: float = 32.0
    start_x: float = 32.0
    motion_y: float = 0.0
    motion_x: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.height < 1 or self.width < 1 or self.frames < 1:
            raise ValueError(f'Invalid synthetic geometry: {self.height}x{self.width}, {self.frames} frames.')
        if self.noise_sigma < 0:
            raise ValueError(f'Noise standard deviation must be non-negative, received {self.noise_sigma}.')
        if self.target_size < 1:
            raise ValueError(f'Target size must be at least 1, received {self.target_size}.')

    def centroid(self, frame: int) -> Tuple[float, float]:
        """(y, x) of the target in the given frame."""
        return self.start_y + frame * self.motion_y, self.start_x + frame * self.motion_x

    def to_config(self) -> Dict[str, str]:
        return {f.name: str(getattr(self, f.name).value if isinstance(getattr(self, f.name), Enum)
                            else getattr(self, f.name))
                for f in fields(self)}

    @staticmethod
    def from_config(values: Mapping[str, str], base: Optional['SynthSpec'] = None) -> 'SynthSpec':
        """
        Override the fields of base (the defaults when omitted) from string values.

        Raises:
            ConfigError: a key is unknown or a value cannot be converted.
        """
        base = base or SynthSpec()
        kinds = {f.name: type(getattr(base, f.name)) for f in fields(base)}
        changes = {}
        for key, raw in values.items():
            if key not in kinds:
                raise ConfigError(key, 'unknown synthetic sequence parameter.')
            try:
                changes[key] = kinds[key](raw.strip()) if kinds[key] is not int else int(float(raw))
            except ValueError as e:
                raise ConfigError(key, str(e)) from e
        return replace(base, **changes)


class SynthPreset(str, Enum):
    """
    Canned toy scenes.

    MOVING_TARGET: a 3 x 3 target in consistent random motion over seven frames.
    IMPULSE_PAIR: a single-pixel target shifted by one pixel between two frames.
    TARGET_CLUTTER: a 3 x 3 target above a bright clutter band.
    CLEAN_MOVING_TARGET: the moving target without noise, the clip of the toy-overfit training preset.
    """
    MOVING_TARGET = 'moving-target'
    CLEAN_MOVING_TARGET = 'clean-moving-target'
    IMPULSE_PAIR = 'impulse-pair'
    TARGET_CLUTTER = 'target-clutter'

    def spec(self, seed: int = 0) -> SynthSpec:
        match self:
            case SynthPreset.MOVING_TARGET:
                rng = np.random.default_rng(seed)
                motion_y, motion_x = rng.uniform(-1.0, 1.0, size=2)
                return SynthSpec(height=64, width=64, frames=7, level=0.2, noise_sigma=0.01,
                                 target_size=3, target_peak=0.6, start_y=32.0, start_x=32.0,
                                 motion_y=float(motion_y), motion_x=float(motion_x), seed=seed)
            case SynthPreset.CLEAN_MOVING_TARGET:
                return replace(SynthPreset.MOVING_TARGET.spec(seed), noise_sigma=0.0)
            case SynthPreset.IMPULSE_PAIR:
                return SynthSpec(height=32, width=32, frames=2, level=0.0, noise_sigma=0.0,
                                 target_size=1, target_peak=1.0, start_y=15.0, start_x=15.0,
                                 motion_y=1.0, motion_x=1.0, seed=seed)
            case SynthPreset.TARGET_CLUTTER:
                return SynthSpec(height=64, width=64, frames=7, level=0.1, noise_sigma=0.005,
                                 band_amplitude=0.6, band_row=48, band_sigma=3.0,
                                 target_size=3, target_peak=0.6, start_y=20.0, start_x=28.0,
                                 motion_y=0.0, motion_x=1.0, seed=seed)


def _profile(spec: SynthSpec) -> FloatArray:
    """
    The target template, centred on the middle pixel of an odd-sized array.
    """
    if spec.target_shape is TargetShape.SQUARE:
        return np.full((spec.target_size, spec.target_size), spec.target_peak)
    sigma = spec.target_size / 2.0
    radius = int(math.ceil(3 * sigma))
    r = np.arange(-radius, radius + 1)
    g = np.exp(-(r * r) / (2 * sigma * sigma))
    return spec.target_peak * np.outer(g, g)


def _background(spec: SynthSpec, rng: np.random.Generator) -> FloatArray:
    ys = np.arange(spec.height, dtype=np.float64)
    xs = np.arange(spec.width, dtype=np.float64)
    bg = spec.level + spec.gradient_y * ys[:, None] + spec.gradient_x * xs[None, :]
    # Each blob and the band are outer products, so the clutter stays low rank.
    for _ in range(spec.clutter_blobs):
        cy = rng.uniform(0, spec.height)
        cx = rng.uniform(0, spec.width)
        gy = np.exp(-(ys - cy) ** 2 / (2 * spec.clutter_sigma ** 2))
        gx = np.exp(-(xs - cx) ** 2 / (2 * spec.clutter_sigma ** 2))
        bg = bg + spec.clutter_amplitude * np.outer(gy, gx)
    if spec.band_amplitude:
        band = np.exp(-(ys - spec.band_row) ** 2 / (2 * spec.band_sigma ** 2))
        bg = bg + spec.band_amplitude * np.outer(band, np.ones_like(xs))
    return bg


def _check_bounds(spec: SynthSpec, half: int) -> None:
    for t in range(spec.frames):
        cy, cx = spec.centroid(t)
        if (math.floor(cy) - half < 0 or math.ceil(cy) + half > spec.height - 1
                or math.floor(cx) - half < 0 or math.ceil(cx) + half > spec.width - 1):
            raise TargetOutOfBoundsError(t, (cx, cy), (spec.height, spec.width))


def _splat(frame: FloatArray, profile: FloatArray, cy: float, cx: float) -> None:
    """
    Add profile centred at a fractional position by distributing it over the four surrounding
    integer placements with bilinear weights.
    """
    half = profile.shape[0] // 2
    y0, x0 = math.floor(cy), math.floor(cx)
    fy, fx = cy - y0, cx - x0
    for dy, dx, weight in ((0, 0, (1 - fy) * (1 - fx)), (0, 1, (1 - fy) * fx),
                           (1, 0, fy * (1 - fx)), (1, 1, fy * fx)):
        if weight == 0:
            continue
        top, left = y0 + dy - half, x0 + dx - half
        frame[top:top + profile.shape[0], left:left + profile.shape[1]] += weight * profile


def synth_sequence(spec: SynthSpec) -> FrameSequence:
    """
    Render a synthetic sequence with exact ground-truth annotations.

    The output only depends on spec, seed included.

    Raises:
        TargetOutOfBoundsError: the target footprint leaves the image in some frame; checked
            before anything is generated.
    """
    profile = _profile(spec)
    _check_bounds(spec, profile.shape[0] // 2)

    rng = np.random.default_rng(spec.seed)
    background = _background(spec, rng)
    frames: List[FloatArray] = []
    annotations: List[TargetAnnotation] = []
    for t in range(spec.frames):
        cy, cx = spec.centroid(t)
        frame = background.copy()
        _splat(frame, profile, cy, cx)
        if spec.noise_sigma > 0:
            frame = frame + rng.normal(0.0, spec.noise_sigma, size=frame.shape)
        frames.append(frame)
        annotations.append(TargetAnnotation(x=cx, y=cy, a=spec.target_size, b=spec.target_size))
    return FrameSequence.from_arrays(frames, annotations)
