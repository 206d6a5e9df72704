"""Reverse-mode automatic differentiation over dense float64 arrays.

A computation is recorded as a DAG of :class:`Node` objects. Leaves hold
inputs or learned parameters; every interior node keeps its forward value,
ordered references to its parents, and a closure mapping the output
gradient to one gradient per parent. :func:`backward` seeds a scalar
output with gradient 1 and walks the record once in reverse topological
order, summing contributions whenever a node feeds several consumers.

All values are row-major numpy float64 arrays. Each operation validates
its result and raises :class:`NumericError` naming the operation as soon
as a NaN or infinity would enter the record, so non-finite values never
propagate silently.

A record is confined to a single worker. Leaf values used as frozen
parameters may be shared across concurrent forward passes because nothing
here mutates them.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, GraphError, NumericError, ShapeError


def as_value(x) -> np.ndarray:
    """Coerce to a float64 array, rejecting non-finite input."""
    v = np.asarray(x, dtype=np.float64)
    if not np.isfinite(v).all():
        raise NumericError("non-finite input value")
    return v


class Node:
    """One entry in the computation record.

    ``value`` is the forward result, ``grad`` the accumulated gradient of
    the most recent :func:`backward` call (lazily zero before that), and
    ``vjp`` the producing operation's local gradient rule.
    """

    __slots__ = ("value", "parents", "vjp", "op", "name", "_grad")

    def __init__(
        self,
        value: np.ndarray,
        parents: Sequence["Node"] = (),
        vjp: Callable[[np.ndarray], Sequence[np.ndarray | None]] | None = None,
        op: str = "input",
        name: str | None = None,
    ):
        self.value = value
        self.parents = tuple(parents)
        self.vjp = vjp
        self.op = op
        self.name = name
        self._grad: np.ndarray | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    @property
    def ndim(self) -> int:
        return self.value.ndim

    @property
    def grad(self) -> np.ndarray:
        if self._grad is None:
            return np.zeros_like(self.value)
        return self._grad

    def zero_grad(self) -> None:
        self._grad = None

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        tag = f" name={self.name!r}" if self.name else ""
        return f"<Node {self.op} shape={self.value.shape}{tag}>"

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)


def constant(x, name: str | None = None) -> Node:
    return Node(as_value(x), op="constant", name=name)


def param(x, name: str | None = None) -> Node:
    """A leaf that owns its buffer; optimizers update it in place."""
    return Node(np.array(as_value(x), copy=True), op="param", name=name)


def lift(x) -> Node:
    return x if isinstance(x, Node) else constant(x)


def _make(op: str, value: np.ndarray, parents: Sequence[Node], vjp) -> Node:
    if not np.isfinite(value).all():
        raise NumericError(f"operation '{op}' produced a non-finite value")
    return Node(value, parents=parents, vjp=vjp, op=op)


def _contig(x) -> np.ndarray:
    """C-contiguous float64 view/copy that preserves 0-d shapes."""
    return np.asarray(x, order="C")


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to the operand's shape."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return _contig(g.reshape(shape))


# ---------------------------------------------------------------------------
# arithmetic


def add(a, b) -> Node:
    a, b = lift(a), lift(b)
    out = a.value + b.value

    def vjp(g):
        return _unbroadcast(g, a.value.shape), _unbroadcast(g, b.value.shape)

    return _make("add", out, (a, b), vjp)


def sub(a, b) -> Node:
    a, b = lift(a), lift(b)
    out = a.value - b.value

    def vjp(g):
        return _unbroadcast(g, a.value.shape), _unbroadcast(-g, b.value.shape)

    return _make("sub", out, (a, b), vjp)


def neg(a) -> Node:
    a = lift(a)
    return _make("neg", -a.value, (a,), lambda g: (-g,))


def mul(a, b) -> Node:
    a, b = lift(a), lift(b)
    out = a.value * b.value
    av, bv = a.value, b.value

    def vjp(g):
        return _unbroadcast(g * bv, av.shape), _unbroadcast(g * av, bv.shape)

    return _make("mul", out, (a, b), vjp)


def scale(a, s: float) -> Node:
    a = lift(a)
    s = float(s)
    return _make("scale", a.value * s, (a,), lambda g: (g * s,))


def matmul(a, b) -> Node:
    a, b = lift(a), lift(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul expects (m,k) x (k,n), got {a.shape} x {b.shape}")
    av, bv = a.value, b.value

    def vjp(g):
        return g @ bv.T, av.T @ g

    return _make("matmul", av @ bv, (a, b), vjp)


def bilinear(x, u, y) -> Node:
    """Pairwise bilinear scores: out[i, j, c] = sum_de x[i,d] u[d,c,e] y[j,e].

    Decomposed into plain matrix products (t = x u, then t y') rather
    than a generic contraction; the per-call planning cost of the latter
    dominates at small extents.
    """
    x, u, y = lift(x), lift(u), lift(y)
    if x.ndim != 2 or y.ndim != 2 or u.ndim != 3:
        raise ShapeError(f"bilinear expects (n,d),(d,c,e),(m,e), got {x.shape},{u.shape},{y.shape}")
    if x.shape[1] != u.shape[0] or y.shape[1] != u.shape[2]:
        raise ShapeError(f"bilinear inner extents differ: {x.shape},{u.shape},{y.shape}")
    xv, uv, yv = x.value, u.value, y.value
    n, d = xv.shape
    _, c, e = uv.shape
    m = yv.shape[0]
    t = (xv @ uv.reshape(d, c * e)).reshape(n, c, e)
    out = (t @ yv.T).transpose(0, 2, 1)  # (n, c, m) -> (n, m, c)

    def vjp(g):
        g_ncm = g.transpose(0, 2, 1)  # (n, c, m)
        gt = (g_ncm @ yv).reshape(n, c * e)  # (n, c, e) flattened
        gy = g_ncm.reshape(n * c, m).T @ t.reshape(n * c, e)
        gu = (xv.T @ gt).reshape(d, c, e)
        gx = gt @ uv.reshape(d, c * e).T
        return gx, gu, gy

    return _make("bilinear", out, (x, u, y), vjp)


def transpose(a) -> Node:
    a = lift(a)
    if a.ndim != 2:
        raise ShapeError(f"transpose expects a matrix, got shape {a.shape}")
    return _make("transpose", a.value.T.copy(), (a,), lambda g: (g.T,))


def reshape(a, shape) -> Node:
    a = lift(a)
    orig = a.value.shape
    return _make("reshape", a.value.reshape(shape), (a,), lambda g: (g.reshape(orig),))


# ---------------------------------------------------------------------------
# structure: concatenation, splitting, indexing


def concat(nodes: Sequence[Node], axis: int = 0) -> Node:
    nodes = [lift(n) for n in nodes]
    if not nodes:
        raise ShapeError("concat of an empty sequence")
    out = np.concatenate([n.value for n in nodes], axis=axis)
    sizes = [n.value.shape[axis] for n in nodes]
    offsets = np.cumsum([0] + sizes)

    def vjp(g):
        pieces = []
        for k in range(len(sizes)):
            idx = [slice(None)] * g.ndim
            idx[axis] = slice(int(offsets[k]), int(offsets[k + 1]))
            pieces.append(_contig(g[tuple(idx)]))
        return tuple(pieces)

    return _make("concat", out, nodes, vjp)


def stack(nodes: Sequence[Node], axis: int = 0) -> Node:
    nodes = [lift(n) for n in nodes]
    if not nodes:
        raise ShapeError("stack of an empty sequence")
    out = np.stack([n.value for n in nodes], axis=axis)

    def vjp(g):
        return tuple(_contig(piece) for piece in np.moveaxis(g, axis, 0))

    return _make("stack", out, nodes, vjp)


def split(a, sections: int, axis: int = 0) -> list[Node]:
    """Split into equal sections; each child backpropagates into its slice."""
    a = lift(a)
    extent = a.value.shape[axis]
    if extent % sections != 0:
        raise ShapeError(f"cannot split extent {extent} into {sections} equal parts")
    size = extent // sections
    children = []
    for k in range(sections):
        idx = [slice(None)] * a.ndim
        idx[axis] = slice(k * size, (k + 1) * size)
        idx = tuple(idx)

        def vjp(g, idx=idx):
            full = np.zeros_like(a.value)
            full[idx] = g
            return (full,)

        children.append(_make("split", _contig(a.value[idx]), (a,), vjp))
    return children


def narrow(a, axis: int, start: int, length: int) -> Node:
    """A contiguous slice [start, start+length) along one axis."""
    a = lift(a)
    idx = [slice(None)] * a.ndim
    idx[axis] = slice(start, start + length)
    idx = tuple(idx)

    def vjp(g):
        full = np.zeros_like(a.value)
        full[idx] = g
        return (full,)

    return _make("narrow", _contig(a.value[idx]), (a,), vjp)


def select(a, axis: int, index: int) -> Node:
    """Index one position along an axis, dropping that axis."""
    a = lift(a)
    idx = [slice(None)] * a.ndim
    idx[axis] = index
    idx = tuple(idx)

    def vjp(g):
        full = np.zeros_like(a.value)
        full[idx] = g
        return (full,)

    return _make("select", _contig(a.value[idx]), (a,), vjp)


def gather_rows(table, indices) -> Node:
    """Row lookup: out[..., :] = table[indices[...], :].

    Gradients scatter-add back into the table, so repeated indices
    accumulate as expected for embedding lookups.
    """
    table = lift(table)
    if table.ndim != 2:
        raise ShapeError(f"gather_rows expects a matrix table, got shape {table.shape}")
    idx = np.asarray(indices, dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= table.shape[0]):
        raise ShapeError(
            f"gather_rows index out of range for table with {table.shape[0]} rows"
        )
    out = table.value[idx]

    def vjp(g):
        full = np.zeros_like(table.value)
        np.add.at(full, idx.reshape(-1), g.reshape(-1, table.value.shape[1]))
        return (full,)

    return _make("gather_rows", out, (table,), vjp)


# ---------------------------------------------------------------------------
# nonlinearities


def relu(a) -> Node:
    a = lift(a)
    av = a.value
    return _make("relu", np.maximum(av, 0.0), (a,), lambda g: (g * (av > 0.0),))


def leaky_relu(a, alpha: float = 0.2) -> Node:
    a = lift(a)
    av = a.value
    slope = np.where(av > 0.0, 1.0, float(alpha))
    return _make("leaky_relu", np.where(av > 0.0, av, alpha * av), (a,), lambda g: (g * slope,))


def _sigmoid(x: np.ndarray) -> np.ndarray:
    ex = np.exp(-np.abs(x))  # bounded by 1, so no overflow either side
    return np.where(x >= 0, 1.0 / (1.0 + ex), ex / (1.0 + ex))


def sigmoid(a) -> Node:
    a = lift(a)
    y = _sigmoid(a.value)
    return _make("sigmoid", y, (a,), lambda g: (g * y * (1.0 - y),))


def tanh(a) -> Node:
    a = lift(a)
    y = np.tanh(a.value)
    return _make("tanh", y, (a,), lambda g: (g * (1.0 - y * y),))


def softmax(a, axis: int = -1) -> Node:
    a = lift(a)
    if not -a.ndim <= axis < a.ndim:
        raise ShapeError(f"softmax axis {axis} invalid for shape {a.shape}")
    z = a.value - a.value.max(axis=axis, keepdims=True)
    e = np.exp(z)
    y = e / e.sum(axis=axis, keepdims=True)

    def vjp(g):
        return (y * (g - (g * y).sum(axis=axis, keepdims=True)),)

    return _make("softmax", y, (a,), vjp)


def masked_softmax(a, mask, axis: int = -1) -> Node:
    """Softmax over positions where ``mask`` is nonzero.

    Fully masked slices yield all zeros rather than NaN, which realizes
    the empty-neighborhood convention of attention layers.
    """
    a = lift(a)
    if not -a.ndim <= axis < a.ndim:
        raise ShapeError(f"masked_softmax axis {axis} invalid for shape {a.shape}")
    keep = np.broadcast_to(np.asarray(mask, dtype=bool), a.value.shape)
    neg_inf = np.where(keep, a.value, -np.inf)
    top = neg_inf.max(axis=axis, keepdims=True)
    top = np.where(np.isfinite(top), top, 0.0)
    e = np.exp(np.where(keep, a.value - top, -np.inf))
    denom = e.sum(axis=axis, keepdims=True)
    y = e / np.where(denom == 0.0, 1.0, denom)

    def vjp(g):
        return (y * (g - (g * y).sum(axis=axis, keepdims=True)),)

    return _make("masked_softmax", y, (a,), vjp)


def log(a) -> Node:
    a = lift(a)
    if (a.value <= 0.0).any():
        raise NumericError("operation 'log' would produce a non-finite value")
    av = a.value
    return _make("log", np.log(av), (a,), lambda g: (g / av,))


def clip_min(a, floor: float) -> Node:
    """Elementwise max(a, floor); gradient is zero where the floor binds."""
    a = lift(a)
    av = a.value
    passed = av >= floor
    return _make("clip_min", np.maximum(av, floor), (a,), lambda g: (g * passed,))


# ---------------------------------------------------------------------------
# reductions


def sum_all(a) -> Node:
    a = lift(a)
    shape = a.value.shape

    def vjp(g):
        return (np.broadcast_to(g, shape).copy(),)

    return _make("sum", np.asarray(a.value.sum()), (a,), vjp)


def sum_axis(a, axis: int, keepdims: bool = False) -> Node:
    a = lift(a)
    if not -a.ndim <= axis < a.ndim:
        raise ShapeError(f"sum axis {axis} invalid for shape {a.shape}")
    shape = a.value.shape

    def vjp(g):
        if not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, shape).copy(),)

    return _make("sum", a.value.sum(axis=axis, keepdims=keepdims), (a,), vjp)


def mean_all(a) -> Node:
    a = lift(a)
    n = a.value.size
    shape = a.value.shape

    def vjp(g):
        return (np.broadcast_to(g / n, shape).copy(),)

    return _make("mean", np.asarray(a.value.mean()), (a,), vjp)


def add_n(nodes: Sequence[Node]) -> Node:
    """Sum of same-shaped nodes in one record entry."""
    nodes = [lift(n) for n in nodes]
    if not nodes:
        raise ShapeError("add_n of an empty sequence")
    out = nodes[0].value.copy()
    for n in nodes[1:]:
        out += n.value
    return _make("add_n", out, nodes, lambda g: tuple(g for _ in nodes))


def lstm_cell(z, c_prev) -> Node:
    """One LSTM cell from gate preactivations (no peepholes).

    ``z`` is (B, 4H) holding input, forget, candidate, output gates in
    that order; ``c_prev`` is (B, H). Returns (B, 2H): the new hidden
    state next to the new cell state. Fusing the gate arithmetic into a
    single record entry keeps sequence graphs small.
    """
    z, c_prev = lift(z), lift(c_prev)
    if z.ndim != 2 or c_prev.ndim != 2 or z.shape[1] != 4 * c_prev.shape[1]:
        raise ShapeError(f"lstm_cell expects (B,4H),(B,H), got {z.shape},{c_prev.shape}")
    hidden = c_prev.shape[1]
    gates = _sigmoid(z.value[:, : 2 * hidden])
    gate_i, gate_f = gates[:, :hidden], gates[:, hidden:]
    cand = np.tanh(z.value[:, 2 * hidden : 3 * hidden])
    gate_o = _sigmoid(z.value[:, 3 * hidden :])
    c_new = gate_f * c_prev.value + gate_i * cand
    tanh_c = np.tanh(c_new)
    h_new = gate_o * tanh_c

    def vjp(g):
        gh, gc_out = g[:, :hidden], g[:, hidden:]
        gc = gc_out + gh * gate_o * (1.0 - tanh_c * tanh_c)
        gz = np.empty_like(z.value)
        gz[:, :hidden] = gc * cand * gate_i * (1.0 - gate_i)
        gz[:, hidden : 2 * hidden] = gc * c_prev.value * gate_f * (1.0 - gate_f)
        gz[:, 2 * hidden : 3 * hidden] = gc * gate_i * (1.0 - cand * cand)
        gz[:, 3 * hidden :] = gh * tanh_c * gate_o * (1.0 - gate_o)
        return gz, gc * gate_f

    return _make("lstm_cell", np.concatenate([h_new, c_new], axis=1), (z, c_prev), vjp)


# ---------------------------------------------------------------------------
# dropout


def dropout(a, p: float, rng=None, train: bool = False) -> Node:
    """Inverted dropout: evaluation is the identity, training zeroes each
    element with probability ``p`` and scales survivors by 1/(1-p)."""
    a = lift(a)
    if not 0.0 <= p < 1.0:
        raise ConfigError(f"dropout rate must satisfy 0 <= p < 1, got {p}")
    if not train or p == 0.0:
        return a
    if rng is None:
        raise ConfigError("train-mode dropout requires an Rng")
    keep = (rng.random(a.value.shape) >= p) / (1.0 - p)
    return _make("dropout", a.value * keep, (a,), lambda g: (g * keep,))


# ---------------------------------------------------------------------------
# backward pass


def _topo_order(output: Node) -> list[Node]:
    order: list[Node] = []
    seen: set[int] = set()
    stack: list[tuple[Node, bool]] = [(output, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node.parents:
            if id(parent) not in seen:
                stack.append((parent, False))
    return order


def backward(output: Node) -> None:
    """Accumulate d(output)/d(node) into every node reachable from ``output``.

    The output must be scalar. Gradients of the traversed subgraph are
    reset first, so repeated calls never mix records.
    """
    if output.value.size != 1:
        raise GraphError(f"backward requires a scalar output, got shape {output.shape}")
    order = _topo_order(output)
    for node in order:
        node._grad = None
    output._grad = np.ones_like(output.value)
    for node in reversed(order):
        if node.vjp is None or node._grad is None:
            continue
        grads = node.vjp(node._grad)
        for parent, g in zip(node.parents, grads):
            if g is None:
                continue
            if g.shape != parent.value.shape:
                raise ShapeError(
                    f"gradient shape {g.shape} does not match value shape "
                    f"{parent.value.shape} in op '{node.op}'"
                )
            if parent._grad is None:
                parent._grad = np.array(g, dtype=np.float64, copy=True)
            else:
                parent._grad += g
