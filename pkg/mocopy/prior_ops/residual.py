# Copyright (c) 2024 The mocopy developers
# For license information see LICENSE or https://opensource.org/licenses/BSD-3-Clause

from dataclasses import dataclass
from enum import Enum
from typing import Dict, final

import numpy as np

from mocopy.decorators import immutable
from mocopy.errors import ShapeMismatchError
from mocopy.numerics import Params, Tensor
from mocopy.numerics.ops import add, concat, leaky_relu, relu

from .cdconv import THETA_DEFAULT, cd_conv2d
from .layers import conv, init_conv

__all__ = [
    'Activation',
    'ResidualGroupCfg',
    'activate',
    'init_residual_group',
    'residual_group',
]


class Activation(str, Enum):
    """
    Non-linearity applied after every dense convolution of a residual dense block.
    """
    NONE = 'none'
    RELU = 'relu'
    LEAKY_RELU = 'leaky_relu'


def activate(x: Tensor, activation: Activation) -> Tensor:
    match activation:
        case Activation.RELU:
            return relu(x)
        case Activation.LEAKY_RELU:
            return leaky_relu(x)
        case _:
            return x


@final
@immutable
@dataclass(frozen=True)
class ResidualGroupCfg:
    """
    Geometry of a residual group of residual dense blocks.

    Attributes:
        blocks: D, the number of dense blocks.
        convs: K, the number of convolutions per block.
        growth: G, the channels produced by each dense convolution.
        channels: C, the channels entering and leaving the group.
        use_central_difference: when set, the first convolution of every block is a CD-Conv (CD-RG).
        theta: the CD-Conv central difference weight.
        activation: applied after each dense convolution.
        kernel: the dense convolution kernel size.
    """
    blocks: int
    convs: int
    growth: int
    channels: int
    use_central_difference: bool = False
    theta: float = THETA_DEFAULT
    activation: Activation = Activation.RELU
    kernel: int = 3

    def __post_init__(self):
        if self.blocks < 1 or self.convs < 2 or self.growth < 1 or self.channels < 1:
            raise ValueError(f'Invalid residual group: D={self.blocks}, K={self.convs}, '
                             f'G={self.growth}, C={self.channels}.')
        if self.kernel % 2 == 0:
            raise ValueError(f'Residual group kernel must be odd, received {self.kernel}.')


def init_residual_group(rng: np.random.Generator, cfg: ResidualGroupCfg, prefix: str) -> Dict[str, Tensor]:
    """
    Parameters of a residual group, named prefix.b{d}.c{j}, prefix.b{d}.fuse and prefix.fuse.
    """
    params: Dict[str, Tensor] = {}
    c, g = cfg.channels, cfg.growth
    for d in range(cfg.blocks):
        for j in range(cfg.convs):
            params.update(init_conv(rng, f'{prefix}.b{d}.c{j}', c + j * g, g, cfg.kernel))
        params.update(init_conv(rng, f'{prefix}.b{d}.fuse', c + cfg.convs * g, c, 1))
    params.update(init_conv(rng, f'{prefix}.fuse', cfg.blocks * c, c, 1))
    return params


def _dense_block(x: Tensor, cfg: ResidualGroupCfg, params: Params, prefix: str) -> Tensor:
    features = [x]
    for j in range(cfg.convs):
        inp = concat(features, axis=1)
        name = f'{prefix}.c{j}'
        if j == 0 and cfg.use_central_difference:
            y = cd_conv2d(inp, params[f'{name}.weight'], params[f'{name}.bias'], cfg.theta)
        else:
            y = conv(inp, params, name)
        features.append(activate(y, cfg.activation))
    # Local feature fusion and local residual.
    return add(x, conv(concat(features, axis=1), params, f'{prefix}.fuse'))


def residual_group(x: Tensor, cfg: ResidualGroupCfg, params: Params, prefix: str = 'rg') -> Tensor:
    """
    Residual group: D dense blocks in sequence, the hierarchical block outputs concatenated and
    fused back to C channels by a 1 x 1 convolution, plus a global residual connection.

    With all parameters zero the group is the identity map.

    Args:
        x: features of shape [B, C, H, W].
        cfg: the group geometry.
        params: the parameters produced by init_residual_group with the same prefix.
        prefix: the parameter name prefix.

    Returns:
        Features shaped like x.
    """
    if x.ndim != 4 or x.shape[1] != cfg.channels:
        raise ShapeMismatchError('residual_group', (-1, cfg.channels, -1, -1), x.shape)
    outputs = []
    h = x
    for d in range(cfg.blocks):
        h = _dense_block(h, cfg, params, f'{prefix}.b{d}')
        outputs.append(h)
    return add(x, conv(concat(outputs, axis=1), params, f'{prefix}.fuse'))
