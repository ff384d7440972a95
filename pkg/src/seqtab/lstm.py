"""LSTM parameters and the two ways the model runs them.

``lstm_step`` is composed from autodiff ops and drives the question-sequence
recurrence one position at a time. ``encode_sequences`` is the hot path: it
buckets many index sequences by length, runs the batched kernel on each
bucket, and exposes the whole thing to the graph as a single op with a
hand-written backward.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .autodiff import Node, add, matmul, mul, param, sigmoid, tanh

INIT_SCALE = 0.08


@dataclass(frozen=True)
class LstmParams:
    """One LSTM's trainable leaves; gate layout [i, f, g, o]."""

    Wx: Node
    Wh: Node
    b: Node
    h0: Node
    c0: Node

    @property
    def hidden_dim(self) -> int:
        return self.Wh.value.shape[0]

    def nodes(self) -> dict[str, Node]:
        return {n.name: n for n in (self.Wx, self.Wh, self.b, self.h0, self.c0)}


def init_lstm_params(
    input_dim: int,
    hidden_dim: int,
    rng: np.random.Generator,
    prefix: str,
    dtype=np.float32,
) -> LstmParams:
    """Weights uniform in [-0.08, 0.08]; initial states start at zero."""

    def init(shape):
        return rng.uniform(-INIT_SCALE, INIT_SCALE, size=shape).astype(dtype)

    return LstmParams(
        Wx=param(init((input_dim, 4 * hidden_dim)), f"{prefix}.Wx"),
        Wh=param(init((hidden_dim, 4 * hidden_dim)), f"{prefix}.Wh"),
        b=param(init((4 * hidden_dim,)), f"{prefix}.b"),
        h0=param(np.zeros(hidden_dim, dtype=dtype), f"{prefix}.h0"),
        c0=param(np.zeros(hidden_dim, dtype=dtype), f"{prefix}.c0"),
    )


def lstm_step(p: LstmParams, x: Node, h: Node, c: Node) -> tuple[Node, Node]:
    """One differentiable cell update on 1-D state vectors."""
    H = p.hidden_dim
    z = add(add(matmul(x, p.Wx), matmul(h, p.Wh)), p.b)
    i = sigmoid(z[:H])
    f = sigmoid(z[H : 2 * H])
    g = tanh(z[2 * H : 3 * H])
    o = sigmoid(z[3 * H :])
    c_next = add(mul(f, c), mul(i, g))
    h_next = mul(o, tanh(c_next))
    return h_next, c_next


def encode_sequences(p: LstmParams, embeddings: Node, index_lists: list[np.ndarray]) -> Node:
    """Encode N index sequences to their final hidden states, shape (N, H).

    Sequences are grouped by length so each group runs as one batched kernel
    call. Empty sequences encode to the initial state h0.
    """
    H = p.hidden_dim
    E = embeddings.value
    dtype = E.dtype
    n = len(index_lists)
    out_value = np.empty((n, H), dtype=dtype)

    buckets: dict[int, list[int]] = {}
    for row, idx in enumerate(index_lists):
        buckets.setdefault(len(idx), []).append(row)

    Wx, Wh, b = p.Wx.value, p.Wh.value, p.b.value
    work: list[tuple[list[int], np.ndarray, kernels.LstmCache]] = []
    for length, rows in buckets.items():
        if length == 0:
            out_value[rows] = p.h0.value
            continue
        idx_matrix = np.stack([np.asarray(index_lists[r], dtype=np.intp) for r in rows])
        B = len(rows)
        X = np.ascontiguousarray(E[idx_matrix].transpose(1, 0, 2))
        h0 = np.broadcast_to(p.h0.value, (B, H)).copy()
        c0 = np.broadcast_to(p.c0.value, (B, H)).copy()
        Hout, cache = kernels.lstm_forward(X, Wx, Wh, b, h0, c0)
        out_value[rows] = Hout[-1]
        work.append((rows, idx_matrix, cache))

    empty_rows = buckets.get(0, [])
    parents = (embeddings, p.Wx, p.Wh, p.b, p.h0, p.c0)
    out = Node(out_value, parents, op="lstm_encode")

    def bwd(g):
        dE = np.zeros_like(E)
        dWx = np.zeros_like(Wx)
        dWh = np.zeros_like(Wh)
        db = np.zeros_like(b)
        dh0 = np.zeros_like(p.h0.value)
        dc0 = np.zeros_like(p.c0.value)
        for rows, idx_matrix, cache in work:
            grads = kernels.lstm_backward(np.ascontiguousarray(g[rows]), cache)
            B, L = idx_matrix.shape
            dX = grads.dX.transpose(1, 0, 2).reshape(B * L, -1)
            np.add.at(dE, idx_matrix.reshape(-1), dX)
            dWx += grads.dWx
            dWh += grads.dWh
            db += grads.db
            dh0 += grads.dh0.sum(axis=0)
            dc0 += grads.dc0.sum(axis=0)
        for row in empty_rows:
            dh0 += g[row]
        embeddings.accumulate(dE)
        p.Wx.accumulate(dWx)
        p.Wh.accumulate(dWh)
        p.b.accumulate(db)
        p.h0.accumulate(dh0)
        p.c0.accumulate(dc0)

    out._backward = bwd
    return out
