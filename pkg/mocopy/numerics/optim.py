# Copyright (c) 2024 The mocopy developers
# For license information see LICENSE or https://opensource.org/licenses/BSD-3-Clause

from dataclasses import dataclass, field
from typing import Dict, Final, Mapping, Sequence, Tuple, final

import numpy as np

from mocopy.decorators import immutable
from mocopy.errors import ShapeMismatchError
from mocopy.types import FloatArray

from .tensor import Tensor

__all__ = [
    'AdamState',
    'LrSchedule',
    'adam_step',
    'ADAM_BETA1',
    'ADAM_BETA2',
    'ADAM_EPS',
]

ADAM_BETA1: Final[float] = 0.9
ADAM_BETA2: Final[float] = 0.999
ADAM_EPS: Final[float] = 1e-8

# Halving marks of the full-length schedule and the run length they refer to.
_REFERENCE_MARKS: Final[Tuple[int, ...]] = (10_000, 20_000, 60_000)
_REFERENCE_TOTAL: Final[int] = 100_000


@final
@dataclass
class AdamState:
    """
    Moment accumulators of the Adam optimizer, keyed by parameter name.
    The state is updated in place by adam_step; parameters are not.
    """
    m: Dict[str, FloatArray]
    v: Dict[str, FloatArray]
    step: int = 0
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    eps: float = ADAM_EPS

    @staticmethod
    def init(params: Mapping[str, Tensor | FloatArray], **kwargs) -> 'AdamState':
        return AdamState(m={k: np.zeros_like(np.asarray(p)) for k, p in params.items()},
                         v={k: np.zeros_like(np.asarray(p)) for k, p in params.items()},
                         **kwargs)


def adam_step(state: AdamState,
              params: Mapping[str, Tensor],
              grads: Mapping[str, FloatArray],
              lr: float) -> Dict[str, Tensor]:
    """
    One bias-corrected Adam update.

    Args:
        state: the optimizer state, advanced in place.
        params: the current parameters.
        grads: one gradient per parameter, shaped like it.
        lr: the learning rate of this step.

    Returns:
        The updated parameters as new tensors, in the dtype of the old ones.

    Raises:
        ShapeMismatchError: a gradient or moment does not have the shape of its parameter.
        KeyError: a parameter has no gradient.
    """
    state.step += 1
    t = state.step
    correction1 = 1.0 - state.beta1 ** t
    correction2 = 1.0 - state.beta2 ** t

    updated: Dict[str, Tensor] = {}
    for name, p in params.items():
        g = np.asarray(grads[name])
        if g.shape != p.shape:
            raise ShapeMismatchError(f'adam_step[{name}]', p.shape, g.shape)
        m = state.m.get(name)
        v = state.v.get(name)
        if m is None or m.shape != p.shape:
            raise ShapeMismatchError(f'adam_step[{name}]', p.shape, () if m is None else m.shape)
        m = state.beta1 * m + (1.0 - state.beta1) * g
        v = state.beta2 * v + (1.0 - state.beta2) * g * g
        state.m[name] = m
        state.v[name] = v
        delta = lr * (m / correction1) / (np.sqrt(v / correction2) + state.eps)
        updated[name] = Tensor.wrap((p.data - delta).astype(p.dtype))
    return updated


@final
@immutable
@dataclass(frozen=True)
class LrSchedule:
    """
    Step-wise learning rate: the initial rate is halved at every mark the iteration has reached.

    Attributes:
        initial: the learning rate before the first mark.
        marks: increasing iteration numbers at which the rate halves.
    """
    initial: float = 1e-3
    marks: Tuple[int, ...] = field(default=_REFERENCE_MARKS)

    def __post_init__(self):
        if self.initial <= 0:
            raise ValueError(f'Learning rate must be positive, received {self.initial}.')
        if list(self.marks) != sorted(self.marks):
            raise ValueError(f'Halving marks must be increasing: {self.marks}.')

    @staticmethod
    def scaled(total_iterations: int,
               initial: float = 1e-3,
               reference_marks: Sequence[int] = _REFERENCE_MARKS,
               reference_total: int = _REFERENCE_TOTAL) -> 'LrSchedule':
        """
        The default halving marks, scaled proportionally to a run of total_iterations.
        """
        marks = tuple(max(1, round(m * total_iterations / reference_total)) for m in reference_marks)
        return LrSchedule(initial=initial, marks=marks)

    def lr_at(self, iteration: int) -> float:
        halvings = sum(1 for m in self.marks if iteration >= m)
        return self.initial * 0.5 ** halvings
