"""Reverse-mode automatic differentiation over dense numpy tensors.

Storage is float32 with float64 accumulation inside reductions; running a
graph on float64 inputs keeps float64 throughout (the shadow mode used by
gradient checking).  Every op checks its output for NaN/Inf and fails
hard.  Only the ops required by the models here are provided.
"""

from __future__ import annotations

import contextlib

import numpy as np


class NumericsError(ArithmeticError):
    pass


_grad_enabled = [True]


@contextlib.contextmanager
def no_grad():
    _grad_enabled.append(False)
    try:
        yield
    finally:
        _grad_enabled.pop()


def grad_enabled() -> bool:
    return _grad_enabled[-1]


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False):
        arr = np.asarray(data)
        if arr.dtype not in (np.float32, np.float64):
            arr = arr.astype(np.float32)
        if not np.all(np.isfinite(arr)):
            raise NumericsError("non-finite values in tensor")
        self.data = arr
        self.grad = None
        self.requires_grad = requires_grad
        self._parents: tuple = ()
        self._backward = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype})"


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(np.asarray(x, dtype=np.float32))


def _make(data: np.ndarray, parents, backward) -> Tensor:
    if not np.all(np.isfinite(data)):
        raise NumericsError("non-finite values produced by an operation")
    out = Tensor.__new__(Tensor)
    out.data = data
    out.grad = None
    out.requires_grad = False
    if grad_enabled() and any(
        p.requires_grad or p._backward is not None for p in parents
    ):
        out._parents = tuple(parents)
        out._backward = backward
    else:
        out._parents = ()
        out._backward = None
    return out


def _unbroadcast(grad: np.ndarray, shape) -> np.ndarray:
    if grad.shape == tuple(shape):
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


def _accum(t: Tensor, grad: np.ndarray):
    grad = np.asarray(grad, dtype=t.data.dtype)
    if t.grad is None:
        t.grad = grad.copy()
    else:
        t.grad = t.grad + grad


# -- arithmetic ---------------------------------------------------------------


def add(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    data = a.data + b.data

    def backward(out):
        _accum(a, _unbroadcast(out.grad, a.shape))
        _accum(b, _unbroadcast(out.grad, b.shape))

    return _make(data, (a, b), backward)


def sub(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    data = a.data - b.data

    def backward(out):
        _accum(a, _unbroadcast(out.grad, a.shape))
        _accum(b, _unbroadcast(-out.grad, b.shape))

    return _make(data, (a, b), backward)


def mul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    data = a.data * b.data

    def backward(out):
        _accum(a, _unbroadcast(out.grad * b.data, a.shape))
        _accum(b, _unbroadcast(out.grad * a.data, b.shape))

    return _make(data, (a, b), backward)


def div(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    with np.errstate(all="ignore"):
        data = a.data / b.data

    def backward(out):
        _accum(a, _unbroadcast(out.grad / b.data, a.shape))
        _accum(b, _unbroadcast(-out.grad * a.data / (b.data * b.data), b.shape))

    return _make(data, (a, b), backward)


def neg(a) -> Tensor:
    a = _as_tensor(a)

    def backward(out):
        _accum(a, -out.grad)

    return _make(-a.data, (a,), backward)


def matmul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise NumericsError(f"matmul expects 2-D operands, got {a.shape} @ {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise NumericsError(f"matmul shape mismatch {a.shape} @ {b.shape}")
    out_dtype = np.result_type(a.dtype, b.dtype)

    def mm(x, y):
        if out_dtype == np.float32:
            # float64 accumulation, float32 storage
            return (x.astype(np.float64) @ y.astype(np.float64)).astype(np.float32)
        return x @ y

    data = mm(a.data, b.data)

    def backward(out):
        _accum(a, mm(out.grad, b.data.T))
        _accum(b, mm(a.data.T, out.grad))

    return _make(data, (a, b), backward)


def transpose(a) -> Tensor:
    a = _as_tensor(a)

    def backward(out):
        _accum(a, out.grad.T)

    return _make(a.data.T, (a,), backward)


def reshape(a, shape) -> Tensor:
    a = _as_tensor(a)

    def backward(out):
        _accum(a, out.grad.reshape(a.shape))

    return _make(a.data.reshape(shape), (a,), backward)


def concat(tensors, axis: int = 0) -> Tensor:
    tensors = [_as_tensor(t) for t in tensors]
    data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.shape[axis] for t in tensors]

    def backward(out):
        start = 0
        for t, size in zip(tensors, sizes):
            index = [slice(None)] * out.grad.ndim
            index[axis] = slice(start, start + size)
            _accum(t, out.grad[tuple(index)])
            start += size

    return _make(data, tuple(tensors), backward)


def take_row(a, idx: int) -> Tensor:
    a = _as_tensor(a)

    def backward(out):
        grad = np.zeros_like(a.data)
        grad[idx] = out.grad[0]
        _accum(a, grad)

    return _make(a.data[idx : idx + 1], (a,), backward)


# -- nonlinearities -----------------------------------------------------------


def exp(a) -> Tensor:
    a = _as_tensor(a)
    with np.errstate(all="ignore"):
        data = np.exp(a.data)

    def backward(out):
        _accum(a, out.grad * data)

    return _make(data, (a,), backward)


def log(a) -> Tensor:
    a = _as_tensor(a)
    with np.errstate(all="ignore"):
        data = np.log(a.data)

    def backward(out):
        _accum(a, out.grad / a.data)

    return _make(data, (a,), backward)


def tanh(a) -> Tensor:
    a = _as_tensor(a)
    data = np.tanh(a.data)

    def backward(out):
        _accum(a, out.grad * (1.0 - data * data))

    return _make(data, (a,), backward)


def sigmoid(a) -> Tensor:
    a = _as_tensor(a)
    data = 1.0 / (1.0 + np.exp(-a.data))

    def backward(out):
        _accum(a, out.grad * data * (1.0 - data))

    return _make(data, (a,), backward)


def relu(a) -> Tensor:
    a = _as_tensor(a)
    data = np.maximum(a.data, 0)

    def backward(out):
        _accum(a, out.grad * (a.data > 0))

    return _make(data, (a,), backward)


def clamp(a, lo: float, hi: float) -> Tensor:
    a = _as_tensor(a)
    data = np.clip(a.data, lo, hi)
    inside = (a.data > lo) & (a.data < hi)

    def backward(out):
        _accum(a, out.grad * inside)

    return _make(data, (a,), backward)


# -- reductions ---------------------------------------------------------------


def tsum(a, axis=None, keepdims: bool = False) -> Tensor:
    a = _as_tensor(a)
    data = np.sum(a.data, axis=axis, keepdims=keepdims, dtype=np.float64).astype(a.dtype)

    def backward(out):
        grad = out.grad
        if axis is not None and not keepdims:
            grad = np.expand_dims(grad, axis)
        _accum(a, np.broadcast_to(grad, a.shape))

    return _make(data, (a,), backward)


def tmean(a, axis=None, keepdims: bool = False) -> Tensor:
    a = _as_tensor(a)
    count = a.data.size if axis is None else a.shape[axis]
    return mul(tsum(a, axis=axis, keepdims=keepdims), 1.0 / count)


# -- backward pass ------------------------------------------------------------


def backward(loss: Tensor):
    """Reverse-mode gradient of a scalar loss through the recorded graph."""
    if loss.data.size != 1:
        raise NumericsError(f"backward needs a scalar loss, got shape {loss.shape}")
    topo: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        node, processed = stack.pop()
        if processed:
            topo.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in seen:
                stack.append((parent, False))
    loss.grad = np.ones_like(loss.data)
    for node in reversed(topo):
        if node._backward is not None and node.grad is not None:
            node._backward(node)


def grad_check(f, params: dict, eps: float = 1e-4) -> float:
    """Max relative error between reverse-mode and central finite differences.

    Runs the whole computation in float64 (shadow mode).  ``f`` must be a
    deterministic function of the parameter dict returning a scalar Tensor.
    """
    if not (1e-6 <= eps <= 1e-3):
        raise NumericsError("eps must lie in [1e-6, 1e-3]")
    shadow = {
        name: Tensor(p.data.astype(np.float64), requires_grad=True)
        for name, p in params.items()
    }
    loss = f(shadow)
    backward(loss)
    worst = 0.0
    for name, p in shadow.items():
        analytic = np.zeros_like(p.data) if p.grad is None else p.grad
        flat = p.data.reshape(-1)
        for i in range(flat.size):
            original = flat[i]
            with no_grad():
                flat[i] = original + eps
                up = f(shadow).item()
                flat[i] = original - eps
                down = f(shadow).item()
            flat[i] = original
            numeric = (up - down) / (2.0 * eps)
            a = analytic.reshape(-1)[i]
            err = abs(a - numeric) / max(abs(a), abs(numeric), 1e-4)
            worst = max(worst, err)
    return worst
