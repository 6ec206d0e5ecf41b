# Copyright (c) 2024 The mocopy developers
# For license information see LICENSE or https://opensource.org/licenses/BSD-3-Clause

from typing import Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt
from scipy import sparse

from mocopy.errors import ShapeMismatchError
from mocopy.types import FloatArray, Shape

from .tensor import Tensor, as_tensor, record

__all__ = [
    'add',
    'bilinear_sample',
    'concat',
    'conv2d',
    'leaky_relu',
    'mean',
    'mse',
    'mul',
    'narrow',
    'pixel_shuffle',
    'relu',
    'reshape',
    'shift2d',
    'softmax',
    'sub',
    'sum',
]


def _operand(value, like: Optional[Tensor] = None) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return as_tensor(value, dtype=like.dtype if like is not None else None)


def _unbroadcast(grad: FloatArray, shape: Shape) -> FloatArray:
    """
    Sum a broadcast gradient back down to the shape of the operand it came from.
    """
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


def add(a, b) -> Tensor:
    a = _operand(a, b if isinstance(b, Tensor) else None)
    b = _operand(b, a)
    return record(a.data + b.data, (a, b),
                  lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)),
                  'add')


def sub(a, b) -> Tensor:
    a = _operand(a, b if isinstance(b, Tensor) else None)
    b = _operand(b, a)
    return record(a.data - b.data, (a, b),
                  lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)),
                  'sub')


def mul(a, b) -> Tensor:
    a = _operand(a, b if isinstance(b, Tensor) else None)
    b = _operand(b, a)
    return record(a.data * b.data, (a, b),
                  lambda g: (_unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)),
                  'mul')


def sum(x: Tensor, axis: Optional[int | Tuple[int, ...]] = None, keepdims: bool = False) -> Tensor:  # noqa: A001
    def vjp(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return np.broadcast_to(g, x.shape),

    return record(np.sum(x.data, axis=axis, keepdims=keepdims), (x,), vjp, 'sum')


def mean(x: Tensor, axis: Optional[int | Tuple[int, ...]] = None, keepdims: bool = False) -> Tensor:
    n = x.size if axis is None else int(np.prod([x.shape[i] for i in np.atleast_1d(axis)]))
    return mul(sum(x, axis=axis, keepdims=keepdims), 1.0 / n)


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    return record(x.data.reshape(shape), (x,), lambda g: (g.reshape(x.shape),), 'reshape')


def concat(tensors: Sequence[Tensor], axis: int = 1) -> Tensor:
    """
    Concatenate tensors along an existing axis (the channel axis by default).
    """
    tensors = tuple(tensors)
    sizes = [t.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def vjp(g):
        return tuple(np.split(g, splits, axis=axis))

    return record(np.concatenate([t.data for t in tensors], axis=axis), tensors, vjp, 'concat')


def narrow(x: Tensor, axis: int, start: int, length: int) -> Tensor:
    """
    The slice [start, start + length) of x along axis.
    """
    if start < 0 or length < 1 or start + length > x.shape[axis]:
        raise ShapeMismatchError('narrow', (start + length,), x.shape)
    index = [slice(None)] * x.ndim
    index[axis] = slice(start, start + length)
    index = tuple(index)

    def vjp(g):
        out = np.zeros_like(x.data)
        out[index] = g
        return out,

    return record(x.data[index], (x,), vjp, 'narrow')


def _shift(arr: FloatArray, dy: int, dx: int) -> FloatArray:
    """out[..., y, x] = arr[..., y + dy, x + dx], zero where the source is outside the grid."""
    h, w = arr.shape[-2:]
    out = np.zeros_like(arr)
    if abs(dy) >= h or abs(dx) >= w:
        return out
    ys, yd = (slice(dy, h), slice(0, h - dy)) if dy >= 0 else (slice(0, h + dy), slice(-dy, h))
    xs, xd = (slice(dx, w), slice(0, w - dx)) if dx >= 0 else (slice(0, w + dx), slice(-dx, w))
    out[..., yd, xd] = arr[..., ys, xs]
    return out


def shift2d(x: Tensor, dy: int, dx: int) -> Tensor:
    """
    Integer translation of the two trailing axes: output(y, x) = x(y + dy, x + dx), with
    zero-valued virtual pixels outside the grid.
    """
    return record(_shift(x.data, dy, dx), (x,), lambda g: (_shift(g, -dy, -dx),), 'shift2d')


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0
    return record(np.where(mask, x.data, 0.0), (x,), lambda g: (g * mask,), 'relu')


def leaky_relu(x: Tensor, slope: float = 0.1) -> Tensor:
    factor = np.where(x.data > 0, 1.0, slope).astype(x.dtype)
    return record(x.data * factor, (x,), lambda g: (g * factor,), 'leaky_relu')


def softmax(x: Tensor, axis: int) -> Tensor:
    """
    Numerically stable softmax along axis: the maximum is subtracted before exponentiation.
    """
    if not -x.ndim <= axis < x.ndim:
        raise ShapeMismatchError('softmax', (axis,), x.shape)
    z = np.exp(x.data - np.max(x.data, axis=axis, keepdims=True))
    y = z / np.sum(z, axis=axis, keepdims=True)

    def vjp(g):
        return y * (g - np.sum(g * y, axis=axis, keepdims=True)),

    return record(y, (x,), vjp, 'softmax')


def mse(a: Tensor, b: Tensor) -> Tensor:
    """
    Mean of the squared differences of two equally shaped tensors.
    """
    a = _operand(a)
    b = _operand(b, a)
    if a.shape != b.shape:
        raise ShapeMismatchError('mse', a.shape, b.shape)
    diff = a.data - b.data
    scale = 2.0 / diff.size

    def vjp(g):
        d = g * scale * diff
        return d, -d

    return record(np.mean(diff * diff), (a, b), vjp, 'mse')


def pixel_shuffle(x: Tensor, factor: int) -> Tensor:
    """
    Depth-to-space rearrangement of a [B, C*r*r, H, W] tensor into [B, C, H*r, W*r].
    Channel c*r*r + i*r + j lands on output row h*r + i and column w*r + j.
    """
    b, cr2, h, w = x.shape
    if cr2 % (factor * factor) != 0:
        raise ShapeMismatchError('pixel_shuffle', (factor * factor,), x.shape)
    c = cr2 // (factor * factor)
    out = x.data.reshape(b, c, factor, factor, h, w).transpose(0, 1, 4, 2, 5, 3).reshape(b, c, h * factor, w * factor)

    def vjp(g):
        return g.reshape(b, c, h, factor, w, factor).transpose(0, 1, 3, 5, 2, 4).reshape(x.shape),

    return record(out, (x,), vjp, 'pixel_shuffle')


def conv2d(x: Tensor,
           weight: Tensor,
           bias: Optional[Tensor] = None,
           padding: Optional[int] = None,
           dilation: int = 1) -> Tensor:
    """
    Two-dimensional cross-correlation with stride 1 and zero padding.

    The receptive field is unrolled into a column matrix so that the whole layer is a single
    batched matrix product. The output extent is H + 2 * padding - dilation * (k - 1).

    Args:
        x: input of shape [B, Cin, H, W].
        weight: kernel of shape [Cout, Cin, k, k] with k odd.
        bias: optional bias of shape [Cout].
        padding: zero padding on every side; None keeps the spatial size (dilation * (k - 1) / 2).
        dilation: spacing between kernel taps.

    Returns:
        A tensor of shape [B, Cout, H', W'].

    Raises:
        ShapeMismatchError: the channels of x and weight disagree, the kernel is not square and odd,
            or the output would be empty.
    """
    if x.ndim != 4 or weight.ndim != 4:
        raise ShapeMismatchError('conv2d', (4,), (x.ndim, weight.ndim))
    b, cin, h, w = x.shape
    cout, wcin, k, k2 = weight.shape
    if wcin != cin:
        raise ShapeMismatchError('conv2d', (cout, cin, k, k2), weight.shape)
    if k != k2 or k % 2 == 0:
        raise ShapeMismatchError('conv2d', (cout, cin, k, k), weight.shape)
    if bias is not None and bias.shape != (cout,):
        raise ShapeMismatchError('conv2d', (cout,), bias.shape)
    if padding is None:
        padding = dilation * (k - 1) // 2

    hout = h + 2 * padding - dilation * (k - 1)
    wout = w + 2 * padding - dilation * (k - 1)
    if hout < 1 or wout < 1:
        raise ShapeMismatchError('conv2d', (dilation * (k - 1) + 1,) * 2, (h, w))

    xp = np.pad(x.data, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    taps = [(i * dilation, j * dilation) for i in range(k) for j in range(k)]
    # cols[b, c, t, y, x] = xp[b, c, y + dy_t, x + dx_t]
    cols = np.stack([xp[:, :, dy:dy + hout, dx:dx + wout] for dy, dx in taps], axis=2)
    cols = cols.reshape(b, cin * k * k, hout * wout)
    w2 = weight.data.reshape(cout, cin * k * k)

    out = np.matmul(w2, cols).reshape(b, cout, hout, wout)
    if bias is not None:
        out = out + bias.data[None, :, None, None]

    def vjp(g):
        g2 = g.reshape(b, cout, hout * wout)
        grad_w = np.einsum('boh,bkh->ok', g2, cols).reshape(weight.shape)
        dcols = np.matmul(w2.T, g2).reshape(b, cin, k * k, hout, wout)
        dxp = np.zeros_like(xp)
        for t, (dy, dx) in enumerate(taps):
            dxp[:, :, dy:dy + hout, dx:dx + wout] += dcols[:, :, t]
        grad_x = dxp[:, :, padding:padding + h, padding:padding + w]
        grads = [grad_x, grad_w]
        if bias is not None:
            grads.append(g.sum(axis=(0, 2, 3)))
        return grads

    inputs = (x, weight) if bias is None else (x, weight, bias)
    return record(out, inputs, vjp, 'conv2d')


def _bilinear_matrix(coords: npt.NDArray[float], h: int, w: int) -> sparse.csr_matrix:
    """
    Sparse interpolation matrix S with out_flat = S @ in_flat over the flattened H x W grid.
    Corners outside the grid are dropped, which is the same as reading zero-valued pixels.
    """
    ys = coords[..., 0].reshape(-1)
    xs = coords[..., 1].reshape(-1)
    y0 = np.floor(ys).astype(np.int64)
    x0 = np.floor(xs).astype(np.int64)
    fy = ys - y0
    fx = xs - x0
    sites = np.arange(ys.size)

    rows, cols, vals = [], [], []
    for cy, cx, wt in ((y0, x0, (1 - fy) * (1 - fx)),
                       (y0, x0 + 1, (1 - fy) * fx),
                       (y0 + 1, x0, fy * (1 - fx)),
                       (y0 + 1, x0 + 1, fy * fx)):
        inside = (cy >= 0) & (cy < h) & (cx >= 0) & (cx < w) & (wt != 0)
        rows.append(sites[inside])
        cols.append(cy[inside] * w + cx[inside])
        vals.append(wt[inside])
    return sparse.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                             shape=(ys.size, h * w))


def bilinear_sample(x: Tensor, coords: npt.ArrayLike) -> Tensor:
    """
    Sample every channel of x at fractional positions.

    Args:
        x: input of shape [B, C, H, W].
        coords: array of shape [Hout, Wout, 2] holding the (y, x) position read for each output site.

    Returns:
        A tensor of shape [B, C, Hout, Wout]. Positions outside the grid blend zero-valued
        virtual pixels; integral positions reproduce the input exactly.
    """
    coords = np.asarray(coords, dtype=np.float64)
    if coords.ndim != 3 or coords.shape[-1] != 2:
        raise ShapeMismatchError('bilinear_sample', (-1, -1, 2), coords.shape)
    b, c, h, w = x.shape
    hout, wout = coords.shape[:2]
    interp = _bilinear_matrix(coords, h, w)

    flat = x.data.reshape(b * c, h * w)
    out = np.asarray(interp.dot(flat.T).T, dtype=x.dtype).reshape(b, c, hout, wout)

    def vjp(g):
        g2 = g.reshape(b * c, hout * wout)
        return np.asarray(interp.T.dot(g2.T).T, dtype=x.dtype).reshape(x.shape),

    return record(out, (x,), vjp, 'bilinear_sample')
