# Copyright (c) 2024 The mocopy developers
# For license information see LICENSE or https://opensource.org/licenses/BSD-3-Clause

from dataclasses import dataclass
from typing import Callable, Final, Optional, Sequence, Tuple, final

import numpy as np
import numpy.typing as npt

from mocopy.decorators import immutable
from mocopy.errors import ShapeMismatchError

from .tensor import Tape, Tensor

__all__ = [
    'GradCheckReport',
    'grad_check',
    'GRADCHECK_STEP',
    'GRADCHECK_TOL',
]

GRADCHECK_STEP: Final[float] = 1e-5
GRADCHECK_TOL: Final[float] = 1e-4

# Gradients smaller than this are compared in absolute terms.
_REL_FLOOR: Final[float] = 1e-6


@final
@immutable
@dataclass(frozen=True)
class GradCheckReport:
    """
    Outcome of a finite-difference gradient check.

    Attributes:
        names: one label per checked input.
        max_rel_errors: the largest relative error found for each input.
        checked_elements: how many elements of each input were perturbed.
        tol: the tolerance the errors were compared against.
    """
    names: Tuple[str, ...]
    max_rel_errors: Tuple[float, ...]
    checked_elements: Tuple[int, ...]
    tol: float

    @property
    def max_rel_error(self) -> float:
        return max(self.max_rel_errors, default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_rel_error <= self.tol

    def lines(self) -> Tuple[str, ...]:
        return tuple(f'{name}: max rel. err {err:.3e} over {n} elements'
                     for name, err, n in zip(self.names, self.max_rel_errors, self.checked_elements))


def _scalar(loss: Tensor) -> float:
    if loss.size != 1:
        raise ShapeMismatchError('grad_check', (1,), loss.shape)
    return float(loss.data.reshape(-1)[0])


def grad_check(forward: Callable[..., Tensor],
               inputs: Sequence[npt.ArrayLike | Tensor],
               step: float = GRADCHECK_STEP,
               tol: float = GRADCHECK_TOL,
               names: Optional[Sequence[str]] = None,
               max_elements: Optional[int] = None,
               seed: int = 0) -> GradCheckReport:
    """
    Compare the tape gradients of a scalar function against central finite differences
    (f(x + h) - f(x - h)) / 2h, in 64-bit precision.

    The relative error of an element is |a - n| / max(|a|, |n|, 1e-6).

    Args:
        forward: maps the inputs, as Tensors, to a single-element loss.
        inputs: the point at which gradients are checked.
        step: the finite-difference step h.
        tol: the largest accepted relative error.
        names: labels for the report, defaulting to input0, input1, ...
        max_elements: when given, only this many randomly chosen elements of each input are perturbed.
        seed: seeds the element sampling.

    Returns:
        A report; a failed check is a report outcome rather than an exception.
    """
    points = [np.array(x, dtype=np.float64) for x in inputs]
    names = tuple(names) if names is not None else tuple(f'input{i}' for i in range(len(points)))
    rng = np.random.default_rng(seed)

    with Tape() as tape:
        leaves = [Tensor(p) for p in points]
        tape.watch(*leaves)
        loss = forward(*leaves)
        _scalar(loss)
        analytic = tape.gradient(loss, leaves)

    def evaluate(position: int, values: npt.NDArray[float]) -> float:
        args = [Tensor(values) if i == position else Tensor(p) for i, p in enumerate(points)]
        return _scalar(forward(*args))

    errors, counts = [], []
    for i, point in enumerate(points):
        flat_indices = np.arange(point.size)
        if max_elements is not None and point.size > max_elements:
            flat_indices = rng.choice(point.size, size=max_elements, replace=False)

        worst = 0.0
        for flat in flat_indices:
            idx = np.unravel_index(flat, point.shape)
            shifted = point.copy()
            shifted[idx] = point[idx] + step
            f_plus = evaluate(i, shifted)
            shifted[idx] = point[idx] - step
            f_minus = evaluate(i, shifted)
            numeric = (f_plus - f_minus) / (2 * step)
            a = float(analytic[i][idx])
            err = abs(a - numeric) / max(abs(a), abs(numeric), _REL_FLOOR)
            worst = max(worst, err)
        errors.append(worst)
        counts.append(len(flat_indices))

    return GradCheckReport(names=names, max_rel_errors=tuple(errors), checked_elements=tuple(counts), tol=tol)
