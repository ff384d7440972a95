"""Character-level encoding of questions, headers, and cells.

One shared LSTM reads every string. Cell vectors get typed against their
column header, t_{i,j} = ReLU((h_j W1) * t1_{i,j}), and previous answers
feed back in through the scalar relevance gate p = ReLU(W3 p1 + W4 q),
scaling each cell vector by 1 + p.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .autodiff import Node, add, constant, dot, matmul, mul, relu, reshape
from .lstm import encode_sequences
from .tables import Table, ValidationError, normalize_cell

EMBEDDING_DIM = 100

# Stand-in character for empty cells so they still produce one LSTM step.
EMPTY_CELL_CHAR = "\x00"


@dataclass(frozen=True)
class Vocabulary:
    """Dense char-to-id map with a reserved unknown id."""

    char_to_id: Mapping[str, int]
    unknown_id: int
    embedding_dim: int = EMBEDDING_DIM

    @property
    def size(self) -> int:
        return max(self.char_to_id.values(), default=self.unknown_id) + 1

    def encode(self, text: str) -> np.ndarray:
        return np.array(
            [self.char_to_id.get(ch, self.unknown_id) for ch in text], dtype=np.intp
        )

    def encode_cell(self, text: str) -> np.ndarray:
        return self.encode(text if text else EMPTY_CELL_CHAR)


def build_vocabulary(strings, embedding_dim: int = EMBEDDING_DIM) -> Vocabulary:
    """Vocabulary over every character in ``strings``; id 0 is unknown."""
    chars = set()
    for s in strings:
        chars.update(s)
    chars.add(EMPTY_CELL_CHAR)
    char_to_id = {ch: i for i, ch in enumerate(sorted(chars), start=1)}
    return Vocabulary(char_to_id=char_to_id, unknown_id=0, embedding_dim=embedding_dim)


def corpus_vocabulary(split, embedding_dim: int = EMBEDDING_DIM) -> Vocabulary:
    """Vocabulary covering a corpus split's questions, headers, and cells."""
    strings = []
    for seq in split.sequences:
        strings.extend(entry.text for entry in seq.entries)
    for table in split.tables.values():
        strings.extend(table.headers)
        for row in table.cells:
            strings.extend(row)
    return build_vocabulary(strings, embedding_dim)


@dataclass(frozen=True)
class EncodedTable:
    """h: (c, d) header matrix; t1: (r, c, d) raw cells; t: typed cells."""

    table: Table
    h: Node
    t1: Node
    t: Node


def encode_question(text: str, params) -> Node:
    """Encode one question string to its d-vector q."""
    normalized = normalize_cell(text)
    if not normalized:
        raise ValidationError("question is empty after normalization")
    ids = params.vocab.encode(normalized)
    enc = encode_sequences(params.char_lstm, params.embeddings, [ids])
    return enc[0]


def typed_cells(h: Node, t1: Node, params) -> Node:
    """t_{i,j} = ReLU((h_j W1) * t1_{i,j}), elementwise over the d axis."""
    return relu(mul(t1, matmul(h, params.W1)))


def encode_table(table: Table, params) -> EncodedTable:
    """Encode headers and cells in one batched pass; t is typed, unconditioned."""
    vocab = params.vocab
    ids = [vocab.encode_cell(h) for h in table.headers]
    for row in table.cells:
        ids.extend(vocab.encode_cell(cell) for cell in row)
    enc = encode_sequences(params.char_lstm, params.embeddings, ids)
    c = table.n_cols
    d = params.d
    h = enc[:c]
    t1 = reshape(enc[c:], (table.n_rows, c, d))
    return EncodedTable(table=table, h=h, t1=t1, t=typed_cells(h, t1, params))


def condition_on_previous(encoded: EncodedTable, q: Node, p1: np.ndarray, params) -> EncodedTable:
    """Gate previous-answer indicators into the cell tensor.

    p = ReLU(W3 p1 + W4 q) with W3 a per-cell scalar weight and W4 q a
    scalar bias broadcast everywhere; then t <- t + p * t.
    """
    r, c = encoded.table.n_rows, encoded.table.n_cols
    if p1.shape != (r, c):
        raise ValidationError(f"p1 shape {p1.shape} does not match table ({r}, {c})")
    p1_node = constant(p1.astype(encoded.t.value.dtype, copy=False))
    p = relu(add(mul(params.W3, p1_node), dot(params.W4, q)))
    conditioned = add(encoded.t, mul(reshape(p, (r, c, 1)), encoded.t))
    return EncodedTable(table=encoded.table, h=encoded.h, t1=encoded.t1, t=conditioned)


def answer_indicators(coords, table: Table, dtype=np.float32) -> np.ndarray:
    """p1 matrix: 1.0 at answered cells, 0.0 elsewhere."""
    p1 = np.zeros((table.n_rows, table.n_cols), dtype=dtype)
    for row, col in coords:
        p1[row, col] = 1.0
    return p1
