# Copyright (c) 2024 The mocopy developers
# For license information see LICENSE or https://opensource.org/licenses/BSD-3-Clause

from dataclasses import dataclass
from typing import Final, final

import numpy as np

from mocopy.decorators import immutable
from mocopy.errors import ShapeMismatchError
from mocopy.numerics import Tensor
from mocopy.numerics.ops import conv2d, mul, reshape, sub, sum

from .layers import init_conv

__all__ = [
    'CdConvLayer',
    'cd_conv',
    'cd_conv2d',
    'init_cd_conv',
    'THETA_DEFAULT',
]

THETA_DEFAULT: Final[float] = 0.7


@final
@immutable
@dataclass(frozen=True, eq=False)
class CdConvLayer:
    """
    A central difference convolution: each tap aggregates S(p + p_n) - theta * S(p).

    Attributes:
        weight: kernel of shape [Cout, Cin, k, k], k odd.
        bias: bias of shape [Cout].
        theta: weight of the central difference term in [0, 1]; 0 is a plain convolution.
    """
    weight: Tensor
    bias: Tensor
    theta: float = THETA_DEFAULT

    def __post_init__(self):
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError(f'CD-Conv theta must lie in [0, 1], received {self.theta}.')
        if self.weight.ndim != 4 or self.weight.shape[2] != self.weight.shape[3] or self.weight.shape[2] % 2 == 0:
            raise ShapeMismatchError('CdConvLayer', (-1, -1, 3, 3), self.weight.shape)
        if self.bias.shape != (self.weight.shape[0],):
            raise ShapeMismatchError('CdConvLayer', (self.weight.shape[0],), self.bias.shape)


def cd_conv2d(x: Tensor, weight: Tensor, bias: Tensor, theta: float = THETA_DEFAULT) -> Tensor:
    """
    Central difference convolution over the full k x k support, computed as
    conv2d(x, w) - theta * (sum of w over the taps) * x + bias.
    """
    out = conv2d(x, weight, bias)
    if theta == 0.0:
        return out
    cout, cin = weight.shape[:2]
    kernel_sum = reshape(sum(weight, axis=(2, 3)), (cout, cin, 1, 1))
    return sub(out, mul(conv2d(x, kernel_sum, padding=0), theta))


def cd_conv(x: Tensor, layer: CdConvLayer) -> Tensor:
    return cd_conv2d(x, layer.weight, layer.bias, layer.theta)


def init_cd_conv(rng: np.random.Generator, cin: int, cout: int, k: int = 3, theta: float = THETA_DEFAULT) -> CdConvLayer:
    params = init_conv(rng, 'cd', cin, cout, k)
    return CdConvLayer(weight=params['cd.weight'], bias=params['cd.bias'], theta=theta)
