# Copyright (c) 2024 The mocopy developers
# For license information see LICENSE or https://opensource.org/licenses/BSD-3-Clause

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import (Callable, Dict, List, Mapping, Optional, Sequence, Set,
                    Tuple, TypeAlias, final)

import numpy as np
import numpy.typing as npt

from mocopy.errors import ShapeMismatchError
from mocopy.types import Shape

__all__ = [
    'Params',
    'Tape',
    'Tensor',
    'TapeNode',
    'active_tape',
    'as_tensor',
]

# A vector-Jacobian product: maps the gradient of an op output to one gradient (or None) per input.
VJP = Callable[[npt.NDArray[float]], Sequence[Optional[npt.NDArray[float]]]]

_local = threading.local()


def _tape_stack() -> List[Tape]:
    if not hasattr(_local, 'stack'):
        _local.stack = []
    return _local.stack


def active_tape() -> Optional[Tape]:
    """
    Returns:
        The innermost tape entered on the calling thread, or None when gradients are not being recorded.
    """
    stack = _tape_stack()
    return stack[-1] if stack else None


@final
class Tensor:
    """
    A dense N-dimensional array of real scalars. Tensors are immutable values: the wrapped
    array is read-only and every operation returns a new Tensor.

    Image tensors use the batch x channel x height x width layout. The default dtype is float64;
    float32 is kept when it is explicitly requested.
    """
    __slots__ = ('_data', '__weakref__')

    def __init__(self, data: npt.ArrayLike, dtype: Optional[npt.DTypeLike] = None):
        arr = np.array(data, dtype=dtype, copy=True)
        if dtype is None and not np.issubdtype(arr.dtype, np.floating):
            arr = arr.astype(np.float64)
        if arr.size == 0:
            raise ShapeMismatchError('Tensor', (1,), arr.shape)
        arr.setflags(write=False)
        self._data = arr

    @staticmethod
    def wrap(arr: npt.NDArray[float]) -> Tensor:
        """
        Wrap an array produced by an operation without copying it. The array is frozen in place.
        """
        t = Tensor.__new__(Tensor)
        arr = np.asarray(arr)
        if arr.flags.writeable:
            arr.setflags(write=False)
        t._data = arr
        return t

    @property
    def data(self) -> npt.NDArray[float]:
        return self._data

    @property
    def shape(self) -> Shape:
        return self._data.shape

    @property
    def ndim(self) -> int:
        return self._data.ndim

    @property
    def size(self) -> int:
        return self._data.size

    @property
    def dtype(self) -> np.dtype:
        return self._data.dtype

    def numpy(self) -> npt.NDArray[float]:
        """
        Returns:
            A writable copy of the values.
        """
        return self._data.copy()

    def item(self) -> float:
        return float(self._data.reshape(-1)[0]) if self._data.size == 1 else float('nan')

    def __array__(self, dtype=None, copy=None):
        return self._data if dtype is None else self._data.astype(dtype)

    def __len__(self) -> int:
        return self._data.shape[0]

    def __repr__(self) -> str:
        return f'Tensor(shape={self.shape}, dtype={self.dtype})'

    # Arithmetic is delegated to the differentiable ops.
    def __add__(self, other):
        from .ops import add
        return add(self, other)

    def __radd__(self, other):
        from .ops import add
        return add(other, self)

    def __sub__(self, other):
        from .ops import sub
        return sub(self, other)

    def __rsub__(self, other):
        from .ops import sub
        return sub(other, self)

    def __mul__(self, other):
        from .ops import mul
        return mul(self, other)

    def __rmul__(self, other):
        from .ops import mul
        return mul(other, self)

    def __truediv__(self, other: float):
        from .ops import mul
        return mul(self, 1.0 / other)

    def __neg__(self):
        from .ops import mul
        return mul(self, -1.0)


def as_tensor(value: npt.ArrayLike | Tensor, dtype: Optional[npt.DTypeLike] = None) -> Tensor:
    """
    Return value unchanged if it is already a Tensor (of the requested dtype), otherwise wrap a copy of it.
    """
    if isinstance(value, Tensor) and (dtype is None or value.dtype == np.dtype(dtype)):
        return value
    return Tensor(np.asarray(value), dtype=dtype)


# Named network parameters, e.g. {'feat.weight': ..., 'feat.bias': ...}.
Params: TypeAlias = Mapping[str, Tensor]


@final
@dataclass(frozen=True, eq=False)
class TapeNode:
    """
    One recorded primitive operation.

    Attributes:
        output (Tensor): the value produced by the operation.
        inputs (Tuple[Tensor, ...]): the operands, in the order the vjp returns their gradients.
        vjp (VJP): the vector-Jacobian product of the operation.
        name (str): the primitive name, for debugging.
    """
    output: Tensor
    inputs: Tuple[Tensor, ...]
    vjp: VJP
    name: str


@final
class Tape:
    """
    An ordered record of the primitive operations applied to watched tensors.

    Usage:
        with Tape() as tape:
            tape.watch(w)
            loss = ops.mse(model(x, w), y)
        (grad_w,) = tape.gradient(loss, [w])

    A tape is confined to the thread that entered it. Only operations with at least one watched
    (or derived) operand are recorded; everything else is evaluated eagerly without bookkeeping.
    """
    def __init__(self):
        self._nodes: List[TapeNode] = []
        self._tracked: Set[int] = set()
        self._leaves: Dict[int, Tensor] = {}

    def __enter__(self) -> Tape:
        _tape_stack().append(self)
        return self

    def __exit__(self, exc_type, exc_val, exc_tb) -> None:
        stack = _tape_stack()
        if stack and stack[-1] is self:
            stack.pop()

    @property
    def nodes(self) -> Tuple[TapeNode, ...]:
        return tuple(self._nodes)

    @property
    def leaves(self) -> Tuple[Tensor, ...]:
        return tuple(self._leaves.values())

    def watch(self, *tensors: Tensor) -> None:
        """
        Mark tensors as parameter leaves whose gradients can be requested.
        """
        for t in tensors:
            self._tracked.add(id(t))
            self._leaves[id(t)] = t

    def is_tracked(self, t: Tensor) -> bool:
        return id(t) in self._tracked

    def record(self, output: Tensor, inputs: Tuple[Tensor, ...], vjp: VJP, name: str) -> None:
        self._nodes.append(TapeNode(output, inputs, vjp, name))
        self._tracked.add(id(output))

    def gradient(self, target: Tensor, sources: Sequence[Tensor]) -> List[npt.NDArray[float]]:
        """
        Reverse-mode differentiation of a scalar target.

        Nodes are visited in exact reverse recording order, which is a reverse topological order
        because an operation can only consume tensors that already exist.

        Args:
            target: a single-element tensor computed under this tape.
            sources: the tensors to differentiate with respect to.

        Returns:
            One gradient array per source, shaped like the source. Sources the target does not
            depend on receive an exact zero gradient.
        """
        if target.size != 1:
            raise ShapeMismatchError('Tape.gradient', (1,), target.shape)

        grads: Dict[int, npt.NDArray[float]] = {id(target): np.ones_like(target.data)}
        for node in reversed(self._nodes):
            g = grads.get(id(node.output))
            if g is None:
                continue
            for inp, gi in zip(node.inputs, node.vjp(g)):
                if gi is None or id(inp) not in self._tracked:
                    continue
                key = id(inp)
                grads[key] = grads[key] + gi if key in grads else gi

        return [np.asarray(grads[id(s)], dtype=s.dtype).reshape(s.shape) if id(s) in grads
                else np.zeros_like(s.data) for s in sources]


def record(data: npt.NDArray[float], inputs: Sequence[Tensor], vjp: VJP, name: str) -> Tensor:
    """
    Wrap the result of a primitive and record it on the active tape when any operand is tracked.
    """
    out = Tensor.wrap(data)
    tape = active_tape()
    if tape is not None and any(tape.is_tracked(t) for t in inputs):
        tape.record(out, tuple(inputs), vjp, name)
    return out
