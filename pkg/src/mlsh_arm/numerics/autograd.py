"""Reverse-mode differentiation over numpy arrays.

A :class:`Var` wraps an ndarray and records how it was produced. Calling
``backward()`` on a scalar ``Var`` walks the graph in reverse topological
order and accumulates ``.grad`` on every node.

The module-level functions (``tanh``, ``exp``, ``log``, ...) accept either a
plain ndarray or a ``Var`` so that the same forward code runs untraced during
rollouts and traced during updates, with identical floating-point results.
"""

from __future__ import annotations

import numpy as np


class NonFiniteError(FloatingPointError):
    """Raised when a traced value or gradient stops being finite."""

    def __init__(self, op: str, where: str = "forward"):
        self.op = op
        self.where = where
        super().__init__(f"non-finite value in {where} pass at node '{op}'")


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _finite(a: np.ndarray) -> bool:
    # a sum is non-finite whenever any term is
    return bool(np.isfinite(a.sum()))


class Var:
    """Traced value.

    Finiteness is checked lazily: ``backward()`` verifies the output and the
    accumulated gradients, and only when one of them is non-finite scans the
    graph for the first offending node.
    """

    __array_ufunc__ = None

    def __init__(self, data, parents=(), backward=None, op: str = "leaf"):
        data = np.asarray(data, dtype=np.float64)
        self.data = data
        self.grad: np.ndarray | None = None
        self._parents = parents
        self._backward = backward
        self.op = op

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def __len__(self) -> int:
        return len(self.data)

    def __repr__(self) -> str:
        return f"Var(op={self.op}, shape={self.data.shape})"

    def backward(self, grad=None) -> None:
        if grad is None:
            if self.data.size != 1:
                raise ValueError("backward() without a seed needs a scalar output")
            grad = np.ones_like(self.data)
        order: list[Var] = []
        seen: set[int] = set()
        stack: list[tuple[Var, bool]] = [(self, False)]
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
        if not _finite(self.data):
            _raise_first_nonfinite(order)
        grads: dict[int, np.ndarray] = {id(self): np.asarray(grad, dtype=np.float64)}
        for node in reversed(order):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node._backward is None:
                if not _finite(g):
                    _raise_first_nonfinite(order)
                    raise NonFiniteError(node.op, "backward")
                node.grad = g if node.grad is None else node.grad + g
                continue
            for parent, pg in zip(node._parents, node._backward(g)):
                if pg is None:
                    continue
                key = id(parent)
                grads[key] = pg if key not in grads else grads[key] + pg

    # arithmetic -----------------------------------------------------------

    def __add__(self, other):
        other = _lift(other)
        a, b = self.shape, other.shape
        return Var(self.data + other.data, (self, other),
                   lambda g: (_unbroadcast(g, a), _unbroadcast(g, b)), "add")

    __radd__ = __add__

    def __neg__(self):
        return Var(-self.data, (self,), lambda g: (-g,), "neg")

    def __sub__(self, other):
        other = _lift(other)
        a, b = self.shape, other.shape
        return Var(self.data - other.data, (self, other),
                   lambda g: (_unbroadcast(g, a), _unbroadcast(-g, b)), "sub")

    def __rsub__(self, other):
        return _lift(other) - self

    def __mul__(self, other):
        other = _lift(other)
        x, y = self.data, other.data
        return Var(x * y, (self, other),
                   lambda g: (_unbroadcast(g * y, x.shape), _unbroadcast(g * x, y.shape)),
                   "mul")

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _lift(other)
        x, y = self.data, other.data
        return Var(x / y, (self, other),
                   lambda g: (_unbroadcast(g / y, x.shape),
                              _unbroadcast(-g * x / (y * y), y.shape)),
                   "div")

    def __rtruediv__(self, other):
        return _lift(other) / self

    def __pow__(self, power: float):
        x = self.data
        return Var(x ** power, (self,), lambda g: (g * power * x ** (power - 1),), "pow")

    def __matmul__(self, other):
        other = _lift(other)
        x, y = self.data, other.data
        need_x, need_y = self.op != "const", other.op != "const"

        def back(g):
            gx = g @ y.T if need_x else None
            if not need_y:
                gy = None
            elif x.ndim == 1:
                gy = np.outer(x, g)
            else:
                gy = x.T @ g
            return gx, gy

        return Var(x @ y, (self, other), back, "matmul")

    def __rmatmul__(self, other):
        return _lift(other) @ self

    def __getitem__(self, idx):
        shape = self.shape

        def back(g):
            out = np.zeros(shape)
            if isinstance(idx, (int, slice)):
                out[idx] = g
            else:
                np.add.at(out, idx, g)
            return (out,)

        return Var(self.data[idx], (self,), back, "getitem")

    def reshape(self, *shape):
        orig = self.shape
        return Var(self.data.reshape(*shape), (self,), lambda g: (g.reshape(orig),), "reshape")

    def sum(self, axis=None, keepdims: bool = False):
        shape = self.shape

        def back(g):
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            return (np.broadcast_to(g, shape).copy(),)

        return Var(self.data.sum(axis=axis, keepdims=keepdims), (self,), back, "sum")

    def mean(self, axis=None, keepdims: bool = False):
        count = self.data.size if axis is None else self.shape[axis]
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / count)


def _raise_first_nonfinite(order: list[Var]) -> None:
    for node in order:
        if not np.all(np.isfinite(node.data)):
            raise NonFiniteError(node.op)


def _lift(x) -> Var:
    return x if isinstance(x, Var) else Var(x, op="const")


def value_of(x) -> np.ndarray:
    """Underlying ndarray of a Var, or the input itself."""
    return x.data if isinstance(x, Var) else np.asarray(x, dtype=np.float64)


# elementwise functions working on ndarray or Var ------------------------------

def tanh(x):
    if not isinstance(x, Var):
        return np.tanh(x)
    y = np.tanh(x.data)
    return Var(y, (x,), lambda g: (g * (1.0 - y * y),), "tanh")


def exp(x):
    if not isinstance(x, Var):
        return np.exp(x)
    y = np.exp(x.data)
    return Var(y, (x,), lambda g: (g * y,), "exp")


def log(x):
    if not isinstance(x, Var):
        return np.log(x)
    d = x.data
    return Var(np.log(d), (x,), lambda g: (g / d,), "log")


def square(x):
    if not isinstance(x, Var):
        return np.square(x)
    d = x.data
    return Var(d * d, (x,), lambda g: (2.0 * g * d,), "square")


def clip(x, lo: float, hi: float):
    """Clamp; the gradient is zero where the clamp is active."""
    if not isinstance(x, Var):
        return np.clip(x, lo, hi)
    d = x.data
    inside = (d >= lo) & (d <= hi)
    return Var(np.clip(d, lo, hi), (x,), lambda g: (g * inside,), "clip")


def minimum(a, b):
    if not isinstance(a, Var) and not isinstance(b, Var):
        return np.minimum(a, b)
    a, b = _lift(a), _lift(b)
    pick_a = a.data <= b.data
    return Var(np.minimum(a.data, b.data), (a, b),
               lambda g: (_unbroadcast(g * pick_a, a.shape),
                          _unbroadcast(g * ~pick_a, b.shape)),
               "minimum")


def total(x, axis=None):
    if not isinstance(x, Var):
        return np.sum(x, axis=axis)
    return x.sum(axis=axis)


def log_softmax(x):
    """Log-softmax over the last axis, stabilised by max subtraction."""
    d = value_of(x)
    shifted = d - d.max(axis=-1, keepdims=True)
    out = shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    if not isinstance(x, Var):
        return out
    soft = np.exp(out)
    return Var(out, (x,), lambda g: (g - soft * g.sum(axis=-1, keepdims=True),), "log_softmax")
