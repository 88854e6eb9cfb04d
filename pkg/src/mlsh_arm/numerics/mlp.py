"""Flat parameter vectors, dense tanh MLPs, and scalar gradients."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .autograd import Var, tanh, value_of


@dataclass(frozen=True)
class Segment:
    name: str
    shape: tuple[int, ...]

    @property
    def size(self) -> int:
        return math.prod(self.shape)


class _LayoutIndex:
    """Offsets of each named segment, shared by vectors with one layout."""

    def __init__(self, layout: tuple[Segment, ...]):
        names = [seg.name for seg in layout]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate segment names in layout: {names}")
        self.layout = layout
        self.offsets: dict[str, tuple[int, int, tuple[int, ...]]] = {}
        start = 0
        for seg in layout:
            self.offsets[seg.name] = (start, start + seg.size, seg.shape)
            start += seg.size
        self.size = start
        self.checked: set = set()


class ParamVector:
    """A flat float64 vector with a named segment layout.

    ``values`` may be an ndarray or, inside :func:`grad_of_scalar`, a traced
    :class:`Var`; ``segment()`` returns a view of the matching kind.
    """

    def __init__(self, values, layout, _index: _LayoutIndex | None = None):
        index = _index if _index is not None else _LayoutIndex(tuple(layout))
        if not isinstance(values, Var):
            values = np.asarray(values, dtype=np.float64)
        if values.shape != (index.size,):
            raise ValueError(f"values have shape {values.shape}, layout needs ({index.size},)")
        self.values = values
        self._index = index
        self._views: dict[str, np.ndarray] = {}

    @property
    def layout(self) -> tuple[Segment, ...]:
        return self._index.layout

    @classmethod
    def zeros(cls, layout) -> "ParamVector":
        layout = tuple(layout)
        return cls(np.zeros(sum(seg.size for seg in layout)), layout)

    def __len__(self) -> int:
        return len(self.values)

    def __contains__(self, name: str) -> bool:
        return name in self._index.offsets

    def names(self) -> list[str]:
        return [seg.name for seg in self.layout]

    def segment(self, name: str):
        view = self._views.get(name)
        if view is not None:
            return view
        try:
            start, stop, shape = self._index.offsets[name]
        except KeyError:
            raise KeyError(f"no segment named '{name}'") from None
        view = self.values[start:stop].reshape(shape)
        if not isinstance(view, Var):
            # ndarray views alias the flat vector, so caching them is safe
            self._views[name] = view
        return view

    def segment_shape(self, name: str) -> tuple[int, ...]:
        return self._index.offsets[name][2]

    def with_values(self, values) -> "ParamVector":
        return ParamVector(values, None, self._index)

    def copy(self) -> "ParamVector":
        return ParamVector(value_of(self.values).copy(), None, self._index)

    def same_layout(self, other: "ParamVector") -> bool:
        return self.layout == other.layout

    def __eq__(self, other) -> bool:
        if not isinstance(other, ParamVector):
            return NotImplemented
        return self.layout == other.layout and np.array_equal(
            value_of(self.values), value_of(other.values))

    def __repr__(self) -> str:
        return f"ParamVector(n={len(self)}, segments={self.names()})"


@dataclass(frozen=True)
class MlpSpec:
    input_dim: int
    hidden: tuple[int, ...]
    output_dim: int
    activation: str = "tanh"

    def __post_init__(self):
        dims = (self.input_dim, *self.hidden, self.output_dim)
        if any(d < 1 for d in dims):
            raise ValueError(f"all MLP dims must be >= 1, got {dims}")
        if self.activation != "tanh":
            raise ValueError(f"unsupported activation '{self.activation}'")

    @property
    def dims(self) -> tuple[int, ...]:
        return (self.input_dim, *self.hidden, self.output_dim)

    def layout(self, prefix: str = "") -> list[Segment]:
        segs = []
        dims = self.dims
        for i in range(len(dims) - 1):
            segs.append(Segment(f"{prefix}W{i}", (dims[i], dims[i + 1])))
            segs.append(Segment(f"{prefix}b{i}", (dims[i + 1],)))
        return segs


@dataclass
class GradResult:
    value: float
    grad: ParamVector


def mlp_forward(spec: MlpSpec, params: ParamVector, x, prefix: str = ""):
    """Apply the MLP to a single input vector or a (batch, input_dim) array."""
    width = x.shape[-1]
    if width != spec.input_dim:
        raise ValueError(f"input has width {width}, spec expects {spec.input_dim}")
    dims = spec.dims
    n_layers = len(dims) - 1
    checked = params._index.checked
    if (spec, prefix) not in checked:
        for i in range(n_layers):
            for name, shape in ((f"{prefix}W{i}", (dims[i], dims[i + 1])),
                                (f"{prefix}b{i}", (dims[i + 1],))):
                if name not in params:
                    raise ValueError(f"parameter segment '{name}' missing")
                if params.segment_shape(name) != shape:
                    raise ValueError(f"segment '{name}' has shape "
                                     f"{params.segment_shape(name)}, expected {shape}")
        checked.add((spec, prefix))
    h = x
    for i, (w_name, b_name) in enumerate(_layer_names(n_layers, prefix)):
        h = h @ params.segment(w_name) + params.segment(b_name)
        if i < n_layers - 1:
            h = tanh(h)
    return h


@lru_cache(maxsize=None)
def _layer_names(n_layers: int, prefix: str) -> tuple[tuple[str, str], ...]:
    return tuple((f"{prefix}W{i}", f"{prefix}b{i}") for i in range(n_layers))


def init_mlp(spec: MlpSpec, rng: np.random.Generator, out_scale: float = 1.0,
             hidden_gain: float = np.sqrt(2.0)) -> np.ndarray:
    """Flat values for ``spec.layout()``: orthogonal weights, zero biases."""
    dims = spec.dims
    chunks = []
    for i in range(len(dims) - 1):
        gain = out_scale if i == len(dims) - 2 else hidden_gain
        chunks.append(orthogonal(dims[i], dims[i + 1], rng, gain).ravel())
        chunks.append(np.zeros(dims[i + 1]))
    return np.concatenate(chunks)


def orthogonal(rows: int, cols: int, rng: np.random.Generator, gain: float) -> np.ndarray:
    a = rng.standard_normal((max(rows, cols), min(rows, cols)))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))
    if rows < cols:
        q = q.T
    return gain * q[:rows, :cols]


def grad_of_scalar(f: Callable[[ParamVector], Var], params: ParamVector) -> GradResult:
    """Value and gradient of ``f`` at ``params`` by reverse-mode differentiation.

    ``f`` receives a ParamVector whose values are traced and must return a
    scalar built from operations in :mod:`mlsh_arm.numerics`.
    """
    leaf = Var(value_of(params.values).copy())
    out = f(params.with_values(leaf))
    if not isinstance(out, Var):
        # f did not touch the parameters
        return GradResult(float(np.asarray(out).reshape(())), ParamVector.zeros(params.layout))
    if out.data.size != 1:
        raise ValueError(f"f must return a scalar, got shape {out.shape}")
    out.backward()
    grad = leaf.grad if leaf.grad is not None else np.zeros(len(params))
    return GradResult(float(out.data.reshape(())), ParamVector(grad, params.layout))


def concat_layouts(*parts: list[Segment]) -> list[Segment]:
    out: list[Segment] = []
    for part in parts:
        out.extend(part)
    return out
