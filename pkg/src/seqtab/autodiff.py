"""Reverse-mode automatic differentiation over dense NumPy arrays.

A :class:`Node` wraps an ndarray and remembers how it was produced; calling
:func:`backward` on a scalar-shaped node walks the graph in reverse
topological order and accumulates gradients into every reachable node.
Arrays are float32 by default; the finite-difference test harness runs the
same graphs in float64.
"""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np

DEFAULT_DTYPE = np.float32


class ShapeError(ValueError):
    """Raised on shape-incompatible operands; names the op and shapes."""


class Node:
    """One value in the computation graph."""

    __slots__ = ("value", "grad", "parents", "_backward", "op", "name")

    def __init__(
        self,
        value: np.ndarray,
        parents: tuple["Node", ...] = (),
        backward: Callable[[np.ndarray], None] | None = None,
        op: str = "leaf",
        name: str | None = None,
    ):
        self.value = value
        self.grad: np.ndarray | None = None
        self.parents = parents
        self._backward = backward
        self.op = op
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    def accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.value)
        self.grad += g

    def zero_grad(self) -> None:
        self.grad = None

    def __add__(self, other):
        return add(self, as_node(other, like=self))

    def __radd__(self, other):
        return add(as_node(other, like=self), self)

    def __mul__(self, other):
        return mul(self, as_node(other, like=self))

    def __rmul__(self, other):
        return mul(as_node(other, like=self), self)

    def __neg__(self):
        return scale(self, -1.0)

    def __sub__(self, other):
        return add(self, -as_node(other, like=self))

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, idx):
        return getitem(self, idx)

    def __repr__(self) -> str:
        label = self.name or self.op
        return f"Node({label}, shape={self.value.shape})"


def param(value: np.ndarray, name: str) -> Node:
    """A named trainable leaf."""
    return Node(np.asarray(value), op="param", name=name)


def constant(value, dtype=None) -> Node:
    arr = np.asarray(value, dtype=dtype if dtype is not None else None)
    if arr.dtype not in (np.float32, np.float64):
        arr = arr.astype(DEFAULT_DTYPE)
    return Node(arr, op="const")


def as_node(value, like: Node | None = None) -> Node:
    if isinstance(value, Node):
        return value
    dtype = like.value.dtype if like is not None else DEFAULT_DTYPE
    return Node(np.asarray(value, dtype=dtype), op="const")


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Reduce a broadcast gradient back to ``shape``."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g.reshape(shape)


def _check_broadcast(op: str, a: Node, b: Node) -> None:
    try:
        np.broadcast_shapes(a.value.shape, b.value.shape)
    except ValueError:
        raise ShapeError(f"{op}: shapes {a.value.shape} and {b.value.shape} do not broadcast")


def add(a: Node, b: Node) -> Node:
    _check_broadcast("add", a, b)
    out = Node(a.value + b.value, (a, b), op="add")

    def bwd(g):
        a.accumulate(_unbroadcast(g, a.value.shape))
        b.accumulate(_unbroadcast(g, b.value.shape))

    out._backward = bwd
    return out


def mul(a: Node, b: Node) -> Node:
    _check_broadcast("mul", a, b)
    out = Node(a.value * b.value, (a, b), op="mul")

    def bwd(g):
        a.accumulate(_unbroadcast(g * b.value, a.value.shape))
        b.accumulate(_unbroadcast(g * a.value, b.value.shape))

    out._backward = bwd
    return out


def scale(a: Node, k: float) -> Node:
    out = Node(a.value * k, (a,), op="scale")

    def bwd(g):
        a.accumulate(g * k)

    out._backward = bwd
    return out


def matmul(a: Node, b: Node) -> Node:
    """Matrix product for 1-D/2-D operands with NumPy semantics."""
    av, bv = a.value, b.value
    if av.ndim not in (1, 2) or bv.ndim not in (1, 2):
        raise ShapeError(f"matmul: unsupported ranks {av.shape} @ {bv.shape}")
    if av.shape[-1] != bv.shape[0]:
        raise ShapeError(f"matmul: inner dimensions differ, {av.shape} @ {bv.shape}")
    out = Node(av @ bv, (a, b), op="matmul")

    def bwd(g):
        if av.ndim == 1 and bv.ndim == 1:
            a.accumulate(g * bv)
            b.accumulate(g * av)
        elif av.ndim == 1:
            # (k,) @ (k, n) -> (n,)
            a.accumulate(bv @ g)
            b.accumulate(np.outer(av, g))
        elif bv.ndim == 1:
            # (m, k) @ (k,) -> (m,)
            a.accumulate(np.outer(g, bv))
            b.accumulate(av.T @ g)
        else:
            a.accumulate(g @ bv.T)
            b.accumulate(av.T @ g)

    out._backward = bwd
    return out


def bilinear(x: Node, w: Node, y: Node) -> Node:
    """Batched bilinear form ``out[...] = x[..., :] W y``.

    ``x`` has shape (..., d1), ``w`` (d1, d2), ``y`` (d2,); the result drops
    the last axis of ``x``. A plain vector ``x`` gives the scalar x^T W y.
    """
    xv, wv, yv = x.value, w.value, y.value
    if wv.ndim != 2 or yv.ndim != 1 or xv.ndim < 1:
        raise ShapeError(f"bilinear: ranks {xv.shape}, {wv.shape}, {yv.shape}")
    if xv.shape[-1] != wv.shape[0] or wv.shape[1] != yv.shape[0]:
        raise ShapeError(f"bilinear: shapes {xv.shape}, {wv.shape}, {yv.shape} do not chain")
    wy = wv @ yv  # (d1,)
    out = Node(xv @ wy, (x, w, y), op="bilinear")

    def bwd(g):
        x.accumulate(g[..., None] * wy)
        axes = tuple(range(g.ndim))
        gx = np.tensordot(g, xv, axes=(axes, axes))  # (d1,)
        w.accumulate(np.outer(gx, yv))
        y.accumulate(gx @ wv)

    out._backward = bwd
    return out


def relu(a: Node) -> Node:
    out = Node(np.maximum(a.value, 0), (a,), op="relu")

    def bwd(g):
        a.accumulate(g * (a.value > 0))

    out._backward = bwd
    return out


def sigmoid(a: Node) -> Node:
    # exp overflow saturates to inf and the quotient lands on exactly 0,
    # which is the right limit, so the warning carries no information
    with np.errstate(over="ignore"):
        s = 1.0 / (1.0 + np.exp(-a.value))
    out = Node(s, (a,), op="sigmoid")

    def bwd(g):
        a.accumulate(g * s * (1.0 - s))

    out._backward = bwd
    return out


def tanh(a: Node) -> Node:
    t = np.tanh(a.value)
    out = Node(t, (a,), op="tanh")

    def bwd(g):
        a.accumulate(g * (1.0 - t * t))

    out._backward = bwd
    return out


def log(a: Node) -> Node:
    out = Node(np.log(a.value), (a,), op="log")

    def bwd(g):
        a.accumulate(g / a.value)

    out._backward = bwd
    return out


def clip(a: Node, lo: float, hi: float) -> Node:
    """Clamp values; gradient passes only through unclipped entries."""
    out = Node(np.clip(a.value, lo, hi), (a,), op="clip")
    inside = (a.value > lo) & (a.value < hi)

    def bwd(g):
        a.accumulate(g * inside)

    out._backward = bwd
    return out


def softmax(a: Node, axis: int = -1) -> Node:
    """Numerically stable softmax along ``axis`` (max-subtraction)."""
    shifted = a.value - np.max(a.value, axis=axis, keepdims=True)
    e = np.exp(shifted)
    s = e / np.sum(e, axis=axis, keepdims=True)
    out = Node(s, (a,), op="softmax")

    def bwd(g):
        inner = np.sum(g * s, axis=axis, keepdims=True)
        a.accumulate(s * (g - inner))

    out._backward = bwd
    return out


def reduce_sum(a: Node, axis: int | None = None, keepdims: bool = False) -> Node:
    out_val = np.sum(a.value, axis=axis, keepdims=keepdims)
    out = Node(np.asarray(out_val), (a,), op="sum")

    def bwd(g):
        if axis is None:
            a.accumulate(np.broadcast_to(g, a.value.shape).copy())
        else:
            ge = g if keepdims else np.expand_dims(g, axis)
            a.accumulate(np.broadcast_to(ge, a.value.shape).copy())

    out._backward = bwd
    return out


def mean(a: Node) -> Node:
    return scale(reduce_sum(a), 1.0 / a.value.size)


def dot(a: Node, b: Node) -> Node:
    if a.value.shape != b.value.shape or a.value.ndim != 1:
        raise ShapeError(f"dot: shapes {a.value.shape}, {b.value.shape}")
    return reduce_sum(mul(a, b))


def concat(nodes: Sequence[Node], axis: int = 0) -> Node:
    if not nodes:
        raise ShapeError("concat: no inputs")
    values = [n.value for n in nodes]
    ranks = {v.ndim for v in values}
    if len(ranks) != 1:
        raise ShapeError(f"concat: mixed ranks {[v.shape for v in values]}")
    out = Node(np.concatenate(values, axis=axis), tuple(nodes), op="concat")
    sizes = [v.shape[axis] for v in values]

    def bwd(g):
        offset = 0
        for n, size in zip(nodes, sizes):
            index = [slice(None)] * g.ndim
            index[axis] = slice(offset, offset + size)
            n.accumulate(g[tuple(index)])
            offset += size

    out._backward = bwd
    return out


def getitem(a: Node, idx) -> Node:
    out = Node(np.asarray(a.value[idx]), (a,), op="getitem")

    def bwd(g):
        full = np.zeros_like(a.value)
        np.add.at(full, idx, g)
        a.accumulate(full)

    out._backward = bwd
    return out


def reshape(a: Node, shape: tuple[int, ...]) -> Node:
    out = Node(a.value.reshape(shape), (a,), op="reshape")

    def bwd(g):
        a.accumulate(g.reshape(a.value.shape))

    out._backward = bwd
    return out


def embedding_lookup(table: Node, indices) -> Node:
    """Gather rows of an embedding matrix; backward scatter-adds."""
    idx = np.asarray(indices, dtype=np.intp)
    if table.value.ndim != 2:
        raise ShapeError(f"embedding_lookup: table must be 2-D, got {table.value.shape}")
    if idx.size and (idx.min() < 0 or idx.max() >= table.value.shape[0]):
        raise ShapeError(
            f"embedding_lookup: index out of range for table with {table.value.shape[0]} rows"
        )
    out = Node(table.value[idx], (table,), op="embedding_lookup")

    def bwd(g):
        full = np.zeros_like(table.value)
        np.add.at(full, idx, g)
        table.accumulate(full)

    out._backward = bwd
    return out


def _toposort(root: Node) -> list[Node]:
    order: list[Node] = []
    seen: set[int] = set()
    stack: list[tuple[Node, bool]] = [(root, False)]
    while stack:
        node, processed = stack.pop()
        if processed:
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


def backward(loss: Node) -> None:
    """Populate ``grad`` on every node reachable from a scalar-shaped loss."""
    if loss.value.shape not in ((), (1,)):
        raise ShapeError(f"backward: loss must be scalar-shaped, got {loss.value.shape}")
    order = _toposort(loss)
    loss.grad = np.ones_like(loss.value)
    for node in reversed(order):
        if node._backward is not None and node.grad is not None:
            node._backward(node.grad)


def zero_grads(nodes: Iterable[Node]) -> None:
    for n in nodes:
        n.zero_grad()
