# Copyright (c) 2024 The mocopy developers
# For license information see LICENSE or https://opensource.org/licenses/BSD-3-Clause

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Tuple, TypeAlias, final

import numpy as np

from mocopy.decorators import immutable
from mocopy.errors import ConfigError, ShapeMismatchError
from mocopy.helpers import as_fraction
from mocopy.numerics import Params, Tensor
from mocopy.numerics.ops import (add, bilinear_sample, concat, mul, narrow,
                                 shift2d, softmax, sum)
from mocopy.types import Rational

from .layers import conv, identity_projection, init_conv

__all__ = [
    'AttentionMap',
    'LstaCfg',
    'gather_offset',
    'identity_lsta_params',
    'init_lsta',
    'lsta',
    'lsta_apply',
    'lsta_attention',
]

# [B, kern * kern, H, W]; every (b, :, h, w) slice is a distribution over the neighbourhood offsets.
AttentionMap: TypeAlias = Tensor


@final
@immutable
@dataclass(frozen=True)
class LstaCfg:
    """
    Geometry of a local spatio-temporal attention module.

    Attributes:
        kern: the side of the square neighbourhood searched around each site (odd).
        dila: the spacing between neighbourhood offsets; fractional values sample bilinearly.
        cr: the channel compression ratio of the query and key projections.
    """
    kern: int = 3
    dila: Rational = 1
    cr: int = 8

    def __post_init__(self):
        if self.kern < 1 or self.kern % 2 == 0:
            raise ConfigError('kern', f'must be a positive odd integer, received {self.kern}.')
        if self.dila <= 0:
            raise ConfigError('dila', f'must be positive, received {self.dila}.')
        if self.cr < 1:
            raise ConfigError('cr', f'must be at least 1, received {self.cr}.')

    @property
    def dilation(self) -> Fraction:
        return as_fraction(self.dila)

    @property
    def offsets(self) -> Tuple[Tuple[Fraction, Fraction], ...]:
        """
        The kern * kern (dy, dx) offsets in row-major order; the centre offset sits in the middle.
        """
        half = self.kern // 2
        step = self.dilation
        return tuple(((i - half) * step, (j - half) * step)
                     for i in range(self.kern) for j in range(self.kern))

    @property
    def center_index(self) -> int:
        return (self.kern * self.kern) // 2

    def projected_channels(self, channels: int) -> int:
        if channels % self.cr != 0:
            raise ConfigError('cr', f'{channels} channels are not divisible by the compression ratio {self.cr}.')
        return channels // self.cr


def gather_offset(feature: Tensor, offset: Tuple[Fraction, Fraction]) -> Tensor:
    """
    Read feature at p + offset for every site p, with zero-valued pixels outside the grid.
    Integral offsets are exact shifts; fractional offsets are bilinear samples.
    """
    dy, dx = offset
    if dy.denominator == 1 and dx.denominator == 1:
        return shift2d(feature, int(dy), int(dx))
    h, w = feature.shape[-2:]
    grid = np.stack(np.meshgrid(np.arange(h, dtype=np.float64), np.arange(w, dtype=np.float64), indexing='ij'),
                    axis=-1)
    return bilinear_sample(feature, grid + np.array([float(dy), float(dx)]))


def init_lsta(rng: np.random.Generator, channels: int, cfg: LstaCfg, prefix: str) -> Dict[str, Tensor]:
    reduced = cfg.projected_channels(channels)
    return {**init_conv(rng, f'{prefix}.q', channels, reduced, 1),
            **init_conv(rng, f'{prefix}.k', channels, reduced, 1)}


def identity_lsta_params(channels: int, cfg: LstaCfg, prefix: str) -> Dict[str, Tensor]:
    """
    Query and key projections that keep the first C / cr channels unchanged.
    """
    reduced = cfg.projected_channels(channels)
    return {**identity_projection(f'{prefix}.q', channels, reduced),
            **identity_projection(f'{prefix}.k', channels, reduced)}


def lsta_attention(ref: Tensor, nbr: Tensor, cfg: LstaCfg, params: Params, prefix: str = 'lsta') -> AttentionMap:
    """
    Attention of every reference site over the dilated neighbourhood of the same site in the neighbour.

    The query F0 = conv_q(ref) and key F1 = conv_k(nbr) are 1 x 1 projections to C / cr channels.
    The response of offset p_n at site p is the channel inner product of F0(p) and F1(p + p_n);
    the responses are normalised with a softmax over the offsets.

    Args:
        ref: reference features of shape [B, C, H, W].
        nbr: neighbour features, shaped like ref.
        cfg: the neighbourhood geometry.
        params: the projection parameters produced by init_lsta with the same prefix.
        prefix: the parameter name prefix.

    Returns:
        The attention map of shape [B, kern * kern, H, W].

    Raises:
        ConfigError: C is not divisible by cfg.cr.
        ShapeMismatchError: ref and nbr have different shapes.
    """
    if ref.shape != nbr.shape or ref.ndim != 4:
        raise ShapeMismatchError('lsta_attention', ref.shape, nbr.shape)
    cfg.projected_channels(ref.shape[1])

    query = conv(ref, params, f'{prefix}.q', padding=0)
    key = conv(nbr, params, f'{prefix}.k', padding=0)
    responses = [sum(mul(query, gather_offset(key, offset)), axis=1, keepdims=True) for offset in cfg.offsets]
    return softmax(concat(responses, axis=1), axis=1)


def lsta_apply(nbr: Tensor, attn: AttentionMap, cfg: LstaCfg) -> Tensor:
    """
    Motion compensated neighbour: output(p) = sum over n of nbr(p + p_n) * attn(p, n),
    gathered from the full-channel neighbour features.
    """
    n_offsets = cfg.kern * cfg.kern
    if attn.ndim != 4 or attn.shape[1] != n_offsets or attn.shape[0] != nbr.shape[0] \
            or attn.shape[2:] != nbr.shape[2:]:
        raise ShapeMismatchError('lsta_apply', (nbr.shape[0], n_offsets, *nbr.shape[2:]), attn.shape)
    out = None
    for n, offset in enumerate(cfg.offsets):
        term = mul(gather_offset(nbr, offset), narrow(attn, 1, n, 1))
        out = term if out is None else add(out, term)
    return out


def lsta(ref: Tensor, nbr: Tensor, cfg: LstaCfg, params: Params, prefix: str = 'lsta') -> Tensor:
    """
    Align nbr to ref: attention followed by the weighted gather.
    """
    return lsta_apply(nbr, lsta_attention(ref, nbr, cfg, params, prefix), cfg)
