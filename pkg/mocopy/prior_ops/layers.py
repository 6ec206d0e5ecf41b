# Copyright (c) 2024 The mocopy developers
# For license information see LICENSE or https://opensource.org/licenses/BSD-3-Clause

from typing import Dict, Optional

import numpy as np

from mocopy.numerics import Params, Tensor
from mocopy.numerics.ops import conv2d

__all__ = [
    'conv',
    'init_conv',
    'identity_projection',
]


def init_conv(rng: np.random.Generator, prefix: str, cin: int, cout: int, k: int) -> Dict[str, Tensor]:
    """
    Weight and bias of a k x k convolution, drawn uniformly in [-1/sqrt(fan_in), 1/sqrt(fan_in)].

    Returns:
        {prefix.weight: [cout, cin, k, k], prefix.bias: [cout]}
    """
    bound = 1.0 / np.sqrt(cin * k * k)
    return {f'{prefix}.weight': Tensor(rng.uniform(-bound, bound, size=(cout, cin, k, k))),
            f'{prefix}.bias': Tensor(rng.uniform(-bound, bound, size=(cout,)))}


def conv(x: Tensor, params: Params, prefix: str, dilation: int = 1, padding: Optional[int] = None) -> Tensor:
    """
    Apply the convolution stored under prefix with size-preserving zero padding.
    """
    return conv2d(x, params[f'{prefix}.weight'], params[f'{prefix}.bias'], padding=padding, dilation=dilation)


def identity_projection(prefix: str, cin: int, cout: int) -> Dict[str, Tensor]:
    """
    A 1 x 1 convolution that copies the first min(cin, cout) channels and has zero bias.
    """
    weight = np.zeros((cout, cin, 1, 1))
    for c in range(min(cin, cout)):
        weight[c, c, 0, 0] = 1.0
    return {f'{prefix}.weight': Tensor(weight), f'{prefix}.bias': Tensor(np.zeros(cout))}
