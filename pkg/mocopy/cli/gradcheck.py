# Copyright (c) 2024 The mocopy developers
# For license information see LICENSE or https://opensource.org/licenses/BSD-3-Clause

from enum import Enum
from fractions import Fraction
from typing import Callable, Dict, Final, List

import numpy as np

from mocopy.network import MoCoPnetCfg, forward, init_params
from mocopy.numerics import GRADCHECK_STEP, GRADCHECK_TOL, GradCheckReport, Tensor, grad_check
from mocopy.numerics.ops import mul, sum
from mocopy.prior_ops import (Activation, LstaCfg, ResidualGroupCfg, cd_conv2d, init_lsta,
                              init_residual_group, lsta, residual_group)

__all__ = [
    'GradcheckTarget',
    'run_gradcheck',
    'END_TO_END_TOL',
]

# Tolerance of the whole-network check.
END_TO_END_TOL: Final[float] = 1e-3


class GradcheckTarget(str, Enum):
    """
    Components whose tape gradients can be checked from the command line.
    """
    CDCONV = 'cdconv'
    LSTA = 'lsta'
    LSTA_FRAC = 'lsta-frac'
    RG = 'rg'
    NET_TOY = 'net-toy'


def _weighted_sum(out: Tensor, weights: np.ndarray) -> Tensor:
    return sum(mul(out, Tensor(weights)))


def _check_cdconv(rng: np.random.Generator, tol: float, step: float) -> GradCheckReport:
    x = rng.normal(size=(2, 3, 6, 6))
    w = rng.normal(size=(4, 3, 3, 3))
    b = rng.normal(size=(4,))
    proj = rng.normal(size=(2, 4, 6, 6))
    return grad_check(lambda xt, wt, bt: _weighted_sum(cd_conv2d(xt, wt, bt, 0.7), proj),
                      [x, w, b], step=step, tol=tol, names=('x', 'weight', 'bias'))


def _check_lsta(rng: np.random.Generator, tol: float, step: float, cfg: LstaCfg) -> GradCheckReport:
    channels = 4
    params = init_lsta(rng, channels, cfg, 'lsta')
    names: List[str] = list(params)
    ref = rng.normal(size=(1, channels, 6, 6))
    nbr = rng.normal(size=(1, channels, 6, 6))
    proj = rng.normal(size=(1, channels, 6, 6))

    def f(ref_t: Tensor, nbr_t: Tensor, *tensors: Tensor) -> Tensor:
        return _weighted_sum(lsta(ref_t, nbr_t, cfg, dict(zip(names, tensors)), 'lsta'), proj)

    return grad_check(f, [ref, nbr, *(params[n].data for n in names)], step=step, tol=tol,
                      names=('ref', 'nbr', *names))


def _check_rg(rng: np.random.Generator, tol: float, step: float) -> GradCheckReport:
    cfg = ResidualGroupCfg(blocks=2, convs=2, growth=3, channels=4, use_central_difference=True,
                           activation=Activation.NONE)
    params = init_residual_group(rng, cfg, 'rg')
    names = list(params)
    x = rng.normal(size=(1, 4, 5, 5))
    proj = rng.normal(size=(1, 4, 5, 5))

    def f(xt: Tensor, *tensors: Tensor) -> Tensor:
        return _weighted_sum(residual_group(xt, cfg, dict(zip(names, tensors)), 'rg'), proj)

    return grad_check(f, [x, *(params[n].data for n in names)], step=step, tol=tol, names=('x', *names))


def _check_net_toy(rng: np.random.Generator, tol: float, step: float, seed: int) -> GradCheckReport:
    cfg = MoCoPnetCfg.toy(frames=5, scale=4, channels=16, activation=Activation.NONE)
    params = init_params(cfg, seed)
    names = list(params)
    clip = Tensor(rng.uniform(size=(1, cfg.frames, 16, 16)))
    proj = rng.normal(size=(1, 1, 16 * cfg.scale, 16 * cfg.scale))

    def f(*tensors: Tensor) -> Tensor:
        return _weighted_sum(forward(clip, cfg, dict(zip(names, tensors))), proj)

    return grad_check(f, [params[n].data for n in names], step=step, tol=max(tol, END_TO_END_TOL), names=names,
                      max_elements=3, seed=seed)


def run_gradcheck(target: GradcheckTarget,
                  seed: int = 0,
                  tol: float = GRADCHECK_TOL,
                  step: float = GRADCHECK_STEP) -> GradCheckReport:
    """
    Finite-difference check of one component at a seeded random point, in 64-bit precision.

    The whole-network check samples three elements of every parameter tensor and accepts
    relative errors up to END_TO_END_TOL.
    """
    rng = np.random.default_rng(seed)
    checks: Dict[GradcheckTarget, Callable[[], GradCheckReport]] = {
        GradcheckTarget.CDCONV: lambda: _check_cdconv(rng, tol, step),
        GradcheckTarget.LSTA: lambda: _check_lsta(rng, tol, step, LstaCfg(kern=3, dila=1, cr=2)),
        GradcheckTarget.LSTA_FRAC: lambda: _check_lsta(rng, tol, step, LstaCfg(kern=3, dila=Fraction(1, 2), cr=2)),
        GradcheckTarget.RG: lambda: _check_rg(rng, tol, step),
        GradcheckTarget.NET_TOY: lambda: _check_net_toy(rng, tol, step, seed),
    }
    return checks[GradcheckTarget(target)]()
