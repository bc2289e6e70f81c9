"""Reverse-mode differentiation over dense float64 arrays.

Deliberately small: exactly the operator set the two forecast branches need
(affine layers, same-padded 1-d convolution, max pooling, leaky-relu,
softplus, the smooth range squash, and elementwise arithmetic with
scalar-style broadcasting). Graph construction and backward are
single-threaded per graph; separate graphs are independent.
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeError


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Reduce a broadcasted gradient back to ``shape`` by summing."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    """A node of the computation graph holding a float64 array."""

    __slots__ = ("data", "grad", "requires_grad", "name", "op", "_parents", "_backward")

    def __init__(self, data, requires_grad=False, name=None, op="leaf", parents=()):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self.name = name
        self.op = op
        self._parents = tuple(parents)
        self._backward = None

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Tensor(op={self.op!r}, shape={self.data.shape}, requires_grad={self.requires_grad})"

    # -- graph plumbing -----------------------------------------------------

    def backward(self):
        """Accumulate gradients of this (scalar) tensor w.r.t. the graph."""
        if self.data.size != 1:
            raise ShapeError(f"backward requires a scalar root, got shape {self.data.shape}")
        order = []
        seen = set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in seen:
                    stack.append((parent, False))
        for node in order:
            node.grad = np.zeros_like(node.data)
        self.grad = np.ones_like(self.data)
        for node in reversed(order):
            if node._backward is not None:
                node._backward()

    # -- operator sugar -----------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return add(self, neg(_as_tensor(other)))

    def __rsub__(self, other):
        return add(neg(self), other)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(self, other)

    def __truediv__(self, other):
        return div(self, _as_tensor(other))

    def __neg__(self):
        return neg(self)


def _as_tensor(x) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(np.asarray(x, dtype=np.float64))


def _make(data, parents, op) -> Tensor:
    requires = any(p.requires_grad for p in parents)
    out = Tensor(data, requires_grad=requires, op=op, parents=parents if requires else ())
    return out


def _check_broadcast(a: Tensor, b: Tensor, op: str):
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(f"{op}: incompatible shapes {a.shape} and {b.shape}") from None


# -- elementwise arithmetic ----------------------------------------------


def add(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _check_broadcast(a, b, "add")
    out = _make(a.data + b.data, (a, b), "add")

    def backward():
        a.grad += _unbroadcast(out.grad, a.shape)
        b.grad += _unbroadcast(out.grad, b.shape)

    out._backward = backward if out.requires_grad else None
    return out


def neg(a) -> Tensor:
    a = _as_tensor(a)
    out = _make(-a.data, (a,), "neg")

    def backward():
        a.grad += -out.grad

    out._backward = backward if out.requires_grad else None
    return out


def mul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _check_broadcast(a, b, "mul")
    out = _make(a.data * b.data, (a, b), "mul")

    def backward():
        a.grad += _unbroadcast(b.data * out.grad, a.shape)
        b.grad += _unbroadcast(a.data * out.grad, b.shape)

    out._backward = backward if out.requires_grad else None
    return out


def div(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _check_broadcast(a, b, "div")
    out = _make(a.data / b.data, (a, b), "div")

    def backward():
        a.grad += _unbroadcast(out.grad / b.data, a.shape)
        b.grad += _unbroadcast(-out.grad * a.data / (b.data * b.data), b.shape)

    out._backward = backward if out.requires_grad else None
    return out


def power(a, exponent: float) -> Tensor:
    a = _as_tensor(a)
    out = _make(a.data**exponent, (a,), f"pow{exponent}")

    def backward():
        a.grad += exponent * a.data ** (exponent - 1) * out.grad

    out._backward = backward if out.requires_grad else None
    return out


def exp(a) -> Tensor:
    a = _as_tensor(a)
    out = _make(np.exp(a.data), (a,), "exp")

    def backward():
        a.grad += out.data * out.grad

    out._backward = backward if out.requires_grad else None
    return out


def log(a) -> Tensor:
    a = _as_tensor(a)
    out = _make(np.log(a.data), (a,), "log")

    def backward():
        a.grad += out.grad / a.data

    out._backward = backward if out.requires_grad else None
    return out


def sqrt(a) -> Tensor:
    a = _as_tensor(a)
    out = _make(np.sqrt(a.data), (a,), "sqrt")

    def backward():
        a.grad += out.grad / (2.0 * out.data)

    out._backward = backward if out.requires_grad else None
    return out


# -- reductions and layout -------------------------------------------------


def tsum(a, axis=None, keepdims=False) -> Tensor:
    a = _as_tensor(a)
    out = _make(a.data.sum(axis=axis, keepdims=keepdims), (a,), "sum")

    def backward():
        g = out.grad
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        a.grad += np.broadcast_to(g, a.shape)

    out._backward = backward if out.requires_grad else None
    return out


def tmean(a) -> Tensor:
    a = _as_tensor(a)
    n = a.data.size
    out = _make(np.asarray(a.data.mean()), (a,), "mean")

    def backward():
        a.grad += np.broadcast_to(out.grad / n, a.shape)

    out._backward = backward if out.requires_grad else None
    return out


def concat(parts, axis=1) -> Tensor:
    parts = [_as_tensor(p) for p in parts]
    out = _make(np.concatenate([p.data for p in parts], axis=axis), tuple(parts), "concat")
    sizes = [p.shape[axis] for p in parts]
    offsets = np.cumsum([0] + sizes)

    def backward():
        for p, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
            index = [slice(None)] * out.grad.ndim
            index[axis] = slice(lo, hi)
            p.grad += out.grad[tuple(index)]

    out._backward = backward if out.requires_grad else None
    return out


def reshape(a, shape) -> Tensor:
    a = _as_tensor(a)
    out = _make(a.data.reshape(shape), (a,), "reshape")

    def backward():
        a.grad += out.grad.reshape(a.shape)

    out._backward = backward if out.requires_grad else None
    return out


def flatten(a) -> Tensor:
    """Collapse all but the leading (batch) axis."""
    a = _as_tensor(a)
    return reshape(a, (a.shape[0], -1))


def narrow(a, axis, start, length) -> Tensor:
    """Contiguous slice [start, start+length) along ``axis``."""
    a = _as_tensor(a)
    index = [slice(None)] * a.data.ndim
    index[axis] = slice(start, start + length)
    index = tuple(index)
    out = _make(a.data[index], (a,), "narrow")

    def backward():
        a.grad[index] += out.grad

    out._backward = backward if out.requires_grad else None
    return out


# -- layers ------------------------------------------------------------------


def dense(x, w, b) -> Tensor:
    """Affine map: (batch, n_in) @ (n_in, n_out) + (n_out,)."""
    x, w, b = _as_tensor(x), _as_tensor(w), _as_tensor(b)
    if x.data.ndim != 2 or w.data.ndim != 2 or x.shape[1] != w.shape[0]:
        raise ShapeError(f"dense: cannot multiply {x.shape} by {w.shape}")
    if b.shape != (w.shape[1],):
        raise ShapeError(f"dense: bias shape {b.shape} does not match {w.shape[1]} outputs")
    out = _make(x.data @ w.data + b.data, (x, w, b), "dense")

    def backward():
        x.grad += out.grad @ w.data.T
        w.grad += x.data.T @ out.grad
        b.grad += out.grad.sum(axis=0)

    out._backward = backward if out.requires_grad else None
    return out


def matmul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: cannot multiply {a.shape} by {b.shape}")
    out = _make(a.data @ b.data, (a, b), "matmul")

    def backward():
        a.grad += out.grad @ b.data.T
        b.grad += a.data.T @ out.grad

    out._backward = backward if out.requires_grad else None
    return out


def conv1d(x, kernels, bias) -> Tensor:
    """Same-padded cross-correlation.

    x: (batch, c_in, length), kernels: (c_out, c_in, k) with odd k,
    bias: (c_out,). Output keeps the input length (zero padding k//2).
    """
    x, kernels, bias = _as_tensor(x), _as_tensor(kernels), _as_tensor(bias)
    if x.data.ndim != 3 or kernels.data.ndim != 3:
        raise ShapeError(f"conv1d: need 3-d input/kernels, got {x.shape} and {kernels.shape}")
    c_out, c_in, k = kernels.shape
    if x.shape[1] != c_in:
        raise ShapeError(f"conv1d: input has {x.shape[1]} channels, kernels expect {c_in}")
    if k % 2 != 1:
        raise ShapeError(f"conv1d: kernel size must be odd for same padding, got {k}")
    length = x.shape[2]
    if length < k:
        raise ShapeError(f"conv1d: length {length} shorter than kernel {k}")
    pad = k // 2
    xpad = np.pad(x.data, ((0, 0), (0, 0), (pad, pad)))
    y = np.empty((x.shape[0], c_out, length))
    y[:] = bias.data[None, :, None]
    for j in range(k):
        y += np.einsum("oi,bil->bol", kernels.data[:, :, j], xpad[:, :, j : j + length])
    out = _make(y, (x, kernels, bias), "conv1d")

    def backward():
        gxpad = np.zeros_like(xpad)
        for j in range(k):
            gxpad[:, :, j : j + length] += np.einsum(
                "oi,bol->bil", kernels.data[:, :, j], out.grad
            )
            kernels.grad[:, :, j] += np.einsum(
                "bol,bil->oi", out.grad, xpad[:, :, j : j + length]
            )
        x.grad += gxpad[:, :, pad : pad + length]
        bias.grad += out.grad.sum(axis=(0, 2))

    out._backward = backward if out.requires_grad else None
    return out


def maxpool1d(x, pool=3, stride=2) -> Tensor:
    """Valid max pooling over the last axis; first occurrence wins ties."""
    x = _as_tensor(x)
    if x.data.ndim != 3:
        raise ShapeError(f"maxpool1d: need (batch, channels, length), got {x.shape}")
    length = x.shape[2]
    if length < pool:
        raise ShapeError(f"maxpool1d: length {length} shorter than pool {pool}")
    n_out = (length - pool) // stride + 1
    starts = np.arange(n_out) * stride
    # windows: (batch, channels, n_out, pool)
    idx = starts[:, None] + np.arange(pool)[None, :]
    windows = x.data[:, :, idx]
    arg = windows.argmax(axis=3)
    out = _make(windows.max(axis=3), (x,), "maxpool1d")
    src = starts[None, None, :] + arg  # positions in the input, per output slot

    def backward():
        b_idx, c_idx, o_idx = np.indices(out.data.shape)
        np.add.at(x.grad, (b_idx, c_idx, src), out.grad)

    out._backward = backward if out.requires_grad else None
    return out


# -- activations -------------------------------------------------------------


def leaky_relu(x, slope=0.3) -> Tensor:
    x = _as_tensor(x)
    out = _make(np.where(x.data >= 0, x.data, slope * x.data), (x,), "leaky_relu")

    def backward():
        x.grad += np.where(x.data >= 0, 1.0, slope) * out.grad

    out._backward = backward if out.requires_grad else None
    return out


def _softplus(v: np.ndarray) -> np.ndarray:
    # max(v, 0) + log1p(exp(-|v|)) is overflow-safe for any magnitude
    return np.maximum(v, 0.0) + np.log1p(np.exp(-np.abs(v)))


def _sigmoid(v: np.ndarray) -> np.ndarray:
    # tanh form avoids overflow for large |v| and works on any shape
    return 0.5 * (1.0 + np.tanh(0.5 * v))


def softplus(x) -> Tensor:
    x = _as_tensor(x)
    out = _make(_softplus(x.data), (x,), "softplus")

    def backward():
        x.grad += _sigmoid(x.data) * out.grad

    out._backward = backward if out.requires_grad else None
    return out


def softrange(x, y_lower: float, y_upper: float) -> Tensor:
    """Smooth squash of the reals into (y_lower, y_upper).

    Built from softplus so it is differentiable everywhere and approaches the
    bounds asymptotically instead of clipping (which would zero gradients).
    Far in the tails the exact value sits closer to a bound than one float64
    ulp; the output is nudged to the nearest representable value strictly
    inside the interval (the gradient there is ~0 either way).
    """
    if not y_upper > y_lower:
        raise ShapeError(f"softrange: need y_upper > y_lower, got ({y_lower}, {y_upper})")
    x = _as_tensor(x)
    width = y_upper - y_lower
    gain = width / float(_softplus(np.asarray(width)))
    inner = softplus(add(neg(softplus(add(neg(x), y_upper))), width))
    out = add(mul(inner, gain), y_lower)
    np.clip(out.data, np.nextafter(y_lower, np.inf), np.nextafter(y_upper, -np.inf),
            out=out.data)
    return out
