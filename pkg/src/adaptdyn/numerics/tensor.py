"""Dense float64 tensors with reverse-mode automatic differentiation.

Small eager autodiff engine: every op computes its numpy result immediately
and, when gradients are enabled, records a backward closure on the output.
Calling :func:`backward` on a scalar loss walks the recorded graph once in
reverse topological order and then releases it; a second backward through
the same nodes is an error rather than a silently wrong gradient.
"""

from __future__ import annotations

import threading
from typing import Callable, Iterable, Sequence

import numpy as np

__all__ = [
    "Tensor",
    "ShapeError",
    "GraphError",
    "no_grad",
    "grad_enabled",
    "backward",
    "topo_order",
    "add",
    "sub",
    "mul",
    "matmul",
    "relu",
    "tanh",
    "concat",
    "tslice",
    "reshape",
    "mean",
    "sum_sq",
    "conv1d",
    "dropout",
]


class ShapeError(ValueError):
    """Operand shapes do not conform for the requested op."""


class GraphError(RuntimeError):
    """Misuse of the compute graph (non-scalar loss, repeated backward)."""


_grad_state = threading.local()


def grad_enabled() -> bool:
    return getattr(_grad_state, "enabled", True)


class no_grad:
    """Context manager that disables graph recording on the current thread."""

    def __enter__(self):
        self._prev = grad_enabled()
        _grad_state.enabled = False
        return self

    def __exit__(self, *exc):
        _grad_state.enabled = self._prev
        return False


class Tensor:
    """A numpy float64 array plus an optional gradient tape entry.

    Leaves are created directly; interior nodes are produced by ops and hold
    a closure that scatters the incoming gradient to their parents.
    """

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "_op")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = bool(requires_grad)
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable[[np.ndarray], None] | None = None
        self._op = "leaf"

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def item(self) -> float:
        return float(self.data)

    def numpy(self) -> np.ndarray:
        return self.data

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.data)))

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.data.shape}, op={self._op!r}{flag})"

    # arithmetic at operator level so integrator code stays generic
    def __add__(self, other):
        return add(self, _lift(other))

    def __radd__(self, other):
        return add(_lift(other), self)

    def __sub__(self, other):
        return sub(self, _lift(other))

    def __rsub__(self, other):
        return sub(_lift(other), self)

    def __mul__(self, other):
        return mul(self, _lift(other))

    def __rmul__(self, other):
        return mul(_lift(other), self)

    def __neg__(self):
        return mul(self, Tensor(-1.0))

    def __matmul__(self, other):
        return matmul(self, _lift(other))

    def __getitem__(self, idx):
        return tslice(self, idx)


def _lift(value) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(np.asarray(value, dtype=np.float64))


def _make_node(data: np.ndarray, parents: tuple[Tensor, ...], bw, op: str) -> Tensor:
    out = Tensor.__new__(Tensor)
    out.data = data
    out.grad = None
    out.requires_grad = True
    out._parents = parents
    out._backward = bw
    out._op = op
    return out


def _recording(*tensors: Tensor) -> bool:
    return grad_enabled() and any(t.requires_grad for t in tensors)


def _accumulate(t: Tensor, g: np.ndarray) -> None:
    if not t.requires_grad:
        return
    t.grad = g if t.grad is None else t.grad + g


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


def _elementwise(a: Tensor, b: Tensor, fn, name: str) -> np.ndarray:
    try:
        return fn(a.data, b.data)
    except ValueError as exc:
        raise ShapeError(f"{name}: shapes {a.shape} and {b.shape} do not broadcast") from exc


def add(a: Tensor, b: Tensor) -> Tensor:
    a, b = _lift(a), _lift(b)
    data = _elementwise(a, b, np.add, "add")
    if not _recording(a, b):
        return Tensor(data)

    def bw(g):
        _accumulate(a, _unbroadcast(g, a.shape))
        _accumulate(b, _unbroadcast(g, b.shape))

    return _make_node(data, (a, b), bw, "add")


def sub(a: Tensor, b: Tensor) -> Tensor:
    a, b = _lift(a), _lift(b)
    data = _elementwise(a, b, np.subtract, "sub")
    if not _recording(a, b):
        return Tensor(data)

    def bw(g):
        _accumulate(a, _unbroadcast(g, a.shape))
        _accumulate(b, _unbroadcast(-g, b.shape))

    return _make_node(data, (a, b), bw, "sub")


def mul(a: Tensor, b: Tensor) -> Tensor:
    a, b = _lift(a), _lift(b)
    data = _elementwise(a, b, np.multiply, "mul")
    if not _recording(a, b):
        return Tensor(data)

    def bw(g):
        _accumulate(a, _unbroadcast(g * b.data, a.shape))
        _accumulate(b, _unbroadcast(g * a.data, b.shape))

    return _make_node(data, (a, b), bw, "mul")


def matmul(a: Tensor, b: Tensor) -> Tensor:
    a, b = _lift(a), _lift(b)
    if a.ndim > 2 or b.ndim > 2 or a.ndim == 0 or b.ndim == 0:
        raise ShapeError(f"matmul supports 1D/2D operands, got {a.shape} @ {b.shape}")
    if a.shape[-1] != b.shape[0]:
        raise ShapeError(f"matmul: inner dims differ, {a.shape} @ {b.shape}")
    data = a.data @ b.data
    if not _recording(a, b):
        return Tensor(data)

    def bw(g):
        # promote 1D operands to row/column, push gradient, squeeze back
        A = a.data if a.ndim == 2 else a.data[None, :]
        B = b.data if b.ndim == 2 else b.data[:, None]
        g2 = g
        if a.ndim == 1:
            g2 = g2[None, ...]
        if b.ndim == 1:
            g2 = g2[..., None]
        ga = g2 @ B.T
        gb = A.T @ g2
        _accumulate(a, ga[0] if a.ndim == 1 else ga)
        _accumulate(b, gb[:, 0] if b.ndim == 1 else gb)

    return _make_node(data, (a, b), bw, "matmul")


def relu(a: Tensor) -> Tensor:
    a = _lift(a)
    data = np.maximum(a.data, 0.0)
    if not _recording(a):
        return Tensor(data)
    mask = a.data > 0.0

    def bw(g):
        _accumulate(a, g * mask)

    return _make_node(data, (a,), bw, "relu")


def tanh(a: Tensor) -> Tensor:
    a = _lift(a)
    data = np.tanh(a.data)
    if not _recording(a):
        return Tensor(data)

    def bw(g):
        _accumulate(a, g * (1.0 - data * data))

    return _make_node(data, (a,), bw, "tanh")


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    ts = [_lift(t) for t in tensors]
    if not ts:
        raise ShapeError("concat of empty sequence")
    try:
        data = np.concatenate([t.data for t in ts], axis=axis)
    except ValueError as exc:
        raise ShapeError(f"concat: incompatible shapes {[t.shape for t in ts]}") from exc
    if not _recording(*ts):
        return Tensor(data)
    ax = axis if axis >= 0 else data.ndim + axis
    sizes = [t.shape[ax] for t in ts]
    offsets = np.cumsum([0] + sizes)

    def bw(g):
        for t, lo, hi in zip(ts, offsets[:-1], offsets[1:]):
            idx = tuple(slice(None) if d != ax else slice(lo, hi) for d in range(g.ndim))
            _accumulate(t, g[idx])

    return _make_node(data, tuple(ts), bw, "concat")


def tslice(a: Tensor, idx) -> Tensor:
    """Basic indexing (ints / slices); gradient scatters back into place."""
    a = _lift(a)
    data = a.data[idx]
    if not _recording(a):
        return Tensor(data)

    def bw(g):
        full = np.zeros_like(a.data)
        full[idx] = g
        _accumulate(a, full)

    return _make_node(np.asarray(data), (a,), bw, "slice")


def reshape(a: Tensor, shape: tuple[int, ...]) -> Tensor:
    a = _lift(a)
    try:
        data = a.data.reshape(shape)
    except ValueError as exc:
        raise ShapeError(f"reshape: cannot view {a.shape} as {shape}") from exc
    if not _recording(a):
        return Tensor(data)

    def bw(g):
        _accumulate(a, g.reshape(a.shape))

    return _make_node(data, (a,), bw, "reshape")


def mean(a: Tensor) -> Tensor:
    a = _lift(a)
    data = np.asarray(a.data.mean())
    if not _recording(a):
        return Tensor(data)
    n = a.data.size

    def bw(g):
        _accumulate(a, np.full_like(a.data, g / n))

    return _make_node(data, (a,), bw, "mean")


def sum_sq(a: Tensor) -> Tensor:
    a = _lift(a)
    data = np.asarray(np.sum(a.data * a.data))
    if not _recording(a):
        return Tensor(data)

    def bw(g):
        _accumulate(a, 2.0 * g * a.data)

    return _make_node(data, (a,), bw, "sum_sq")


def conv1d(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """Valid cross-correlation over the last axis.

    x: (batch, channels_in, length), w: (channels_out, channels_in, kernel),
    b: (channels_out,). Output length is length - kernel + 1.
    """
    x, w, b = _lift(x), _lift(w), _lift(b)
    if x.ndim != 3 or w.ndim != 3 or b.ndim != 1:
        raise ShapeError(f"conv1d: expected 3D/3D/1D, got {x.shape}/{w.shape}/{b.shape}")
    if x.shape[1] != w.shape[1] or w.shape[0] != b.shape[0]:
        raise ShapeError(f"conv1d: channel mismatch {x.shape}/{w.shape}/{b.shape}")
    kern = w.shape[2]
    if kern > x.shape[2]:
        raise ShapeError(f"conv1d: kernel {kern} longer than input {x.shape[2]}")
    windows = np.lib.stride_tricks.sliding_window_view(x.data, kern, axis=2)
    data = np.einsum("bclk,fck->bfl", windows, w.data) + b.data[None, :, None]
    if not _recording(x, w, b):
        return Tensor(data)
    l_out = data.shape[2]

    def bw(g):
        _accumulate(w, np.einsum("bfl,bclk->fck", g, windows))
        _accumulate(b, g.sum(axis=(0, 2)))
        gx = np.zeros_like(x.data)
        for k in range(kern):
            gx[:, :, k : k + l_out] += np.einsum("bfl,fc->bcl", g, w.data[:, :, k])
        _accumulate(x, gx)

    return _make_node(data, (x, w, b), bw, "conv1d")


def dropout(a: Tensor, rate: float, rng: np.random.Generator, training: bool) -> Tensor:
    """Inverted dropout; identity when not training or rate == 0."""
    a = _lift(a)
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return a
    mask = (rng.random(a.shape) >= rate) / (1.0 - rate)
    data = a.data * mask
    if not _recording(a):
        return Tensor(data)

    def bw(g):
        _accumulate(a, g * mask)

    return _make_node(data, (a,), bw, "dropout")


def topo_order(root: Tensor) -> list[Tensor]:
    """Nodes of the graph below ``root``, parents before children."""
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        if node._op == "released":
            raise GraphError("graph segment was already consumed by a previous backward")
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in seen:
                stack.append((p, False))
    return order


def backward(loss: Tensor) -> None:
    """Accumulate d(loss)/d(leaf) into .grad of every reachable leaf.

    The graph below ``loss`` is released afterwards; reusing it raises.
    """
    if loss.data.shape != ():
        raise GraphError(f"backward expects a scalar loss, got shape {loss.data.shape}")
    if loss._backward is None and not loss.requires_grad:
        raise GraphError("loss does not depend on any tracked tensor")
    order = topo_order(loss)
    loss.grad = np.ones((), dtype=np.float64)
    for node in reversed(order):
        if node._backward is None:
            continue
        if node.grad is None:
            continue  # not on a path to the loss
        node._backward(node.grad)
    for node in order:
        if node._backward is not None:
            node._backward = None
            node._parents = ()
            node._op = "released"


def parameters_allclose(a: Iterable[Tensor], b: Iterable[Tensor], tol: float = 0.0) -> bool:
    """True when two parameter lists match elementwise within tol."""
    la, lb = list(a), list(b)
    if len(la) != len(lb):
        return False
    for ta, tb in zip(la, lb):
        if ta.shape != tb.shape:
            return False
        if not np.allclose(ta.data, tb.data, rtol=0.0, atol=tol):
            return False
    return True
