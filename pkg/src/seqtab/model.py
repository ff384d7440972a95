"""Attention modules, answer scoring, loss, and sequential inference.

The three modules of Eq. 1 score columns, rows, and cells; Eq. 2 mixes them
with a question-conditioned attention over the modules themselves. A second
LSTM runs across the questions of a sequence and augments each question
vector by elementwise addition before any module sees it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import autodiff as ad
from .autodiff import Node, add, bilinear, clip, constant, log, matmul, mul, param, reduce_sum, reshape, sigmoid, softmax
from .checkpoint import load_checkpoint, save_checkpoint
from .encoder import (
    EncodedTable,
    Vocabulary,
    answer_indicators,
    condition_on_previous,
    typed_cells,
)
from .lstm import LstmParams, encode_sequences, init_lstm_params, lstm_step
from .tables import AnswerCoordinates, QuestionSequence, Table, ValidationError, normalize_cell

DEFAULT_D = 256
LOSS_CLIP = 1e-7


@dataclass
class ModelParams:
    """Every trainable array of the model plus its vocabulary.

    W2 never appears: the source equations skip that symbol, and no role
    exists for it.
    """

    vocab: Vocabulary
    d: int
    embeddings: Node
    char_lstm: LstmParams
    seq_lstm: LstmParams
    W1: Node
    W3: Node
    W4: Node
    W5: Node
    W6: Node
    W7: Node
    W8: Node

    def all_nodes(self) -> dict[str, Node]:
        nodes = {"embeddings": self.embeddings}
        nodes.update(self.char_lstm.nodes())
        nodes.update(self.seq_lstm.nodes())
        for name in ("W1", "W3", "W4", "W5", "W6", "W7", "W8"):
            nodes[name] = getattr(self, name)
        return nodes

    def copy_values(self) -> dict[str, np.ndarray]:
        return {name: node.value.copy() for name, node in self.all_nodes().items()}

    def load_values(self, values: dict[str, np.ndarray]) -> None:
        nodes = self.all_nodes()
        missing = set(nodes) - set(values)
        if missing:
            raise ValidationError(f"missing parameters: {sorted(missing)}")
        for name, node in nodes.items():
            arr = np.asarray(values[name], dtype=node.value.dtype).reshape(node.value.shape)
            node.value = arr.copy()


def init_model_params(
    vocab: Vocabulary, d: int = DEFAULT_D, seed: int = 0, dtype=np.float32
) -> ModelParams:
    rng = np.random.default_rng(seed)

    def init(shape, name):
        return param(rng.uniform(-0.08, 0.08, size=shape).astype(dtype), name)

    return ModelParams(
        vocab=vocab,
        d=d,
        embeddings=init((vocab.size, vocab.embedding_dim), "embeddings"),
        char_lstm=init_lstm_params(vocab.embedding_dim, d, rng, "char_lstm", dtype=dtype),
        seq_lstm=init_lstm_params(d, d, rng, "seq_lstm", dtype=dtype),
        W1=init((d, d), "W1"),
        W3=init((), "W3"),
        W4=init((d,), "W4"),
        W5=init((d, d), "W5"),
        W6=init((d, d), "W6"),
        W7=init((d, d), "W7"),
        W8=init((3, d), "W8"),
    )


@dataclass(frozen=True)
class ModuleOutputs:
    """m_col: (c,) softmax; m_row: (r,) sigmoid; m_cell: (r, c) sigmoid."""

    m_col: Node
    m_row: Node
    m_cell: Node

    def summary(self) -> dict:
        return {
            "m_col": [float(x) for x in self.m_col.value],
            "m_row": [float(x) for x in self.m_row.value],
            "m_cell": [[float(x) for x in row] for row in self.m_cell.value],
        }


def run_modules(q: Node, encoded: EncodedTable, params: ModelParams) -> ModuleOutputs:
    """Eq. 1: the three attention modules over columns, rows, and cells."""
    m_col = softmax(bilinear(encoded.h, params.W5, q))
    row_vectors = reduce_sum(encoded.t, axis=1)
    m_row = sigmoid(bilinear(row_vectors, params.W6, q))
    m_cell = sigmoid(bilinear(encoded.t, params.W7, q))
    return ModuleOutputs(m_col=m_col, m_row=m_row, m_cell=m_cell)


def attention_mix(q: Node, params: ModelParams) -> Node:
    """Softmax weights over the column, row, and cell modules."""
    return softmax(matmul(params.W8, q))


def mix_and_score(
    q: Node, modules: ModuleOutputs, params: ModelParams, m_att: Node | None = None
) -> Node:
    """Eq. 2: a_{i,j} = att_0 m_col_j + att_1 m_row_i + att_2 m_cell_{i,j}."""
    if m_att is None:
        m_att = attention_mix(q, params)
    r = modules.m_row.value.shape[0]
    c = modules.m_col.value.shape[0]
    col_part = mul(m_att[0], reshape(modules.m_col, (1, c)))
    row_part = mul(m_att[1], reshape(modules.m_row, (r, 1)))
    cell_part = mul(m_att[2], modules.m_cell)
    return add(add(col_part, row_part), cell_part)


def predict(scores: np.ndarray) -> AnswerCoordinates:
    """Cells above 0.5; if none, the row-major argmax cell."""
    rows, cols = np.nonzero(scores > 0.5)
    if rows.size:
        return AnswerCoordinates.of(zip(rows, cols))
    flat = int(np.argmax(scores))
    r, c = np.unravel_index(flat, scores.shape)
    return AnswerCoordinates.of([(int(r), int(c))])


def loss(scores: Node, gold: AnswerCoordinates, table: Table) -> Node:
    """Mean binary cross-entropy over all cells of the table."""
    targets = answer_indicators(gold, table, dtype=scores.value.dtype)
    y = constant(targets)
    one = constant(np.ones_like(targets))
    a = clip(scores, LOSS_CLIP, 1.0 - LOSS_CLIP)
    positive = mul(y, log(a))
    negative = mul(add(one, ad.scale(y, -1.0)), log(add(one, ad.scale(a, -1.0))))
    total = reduce_sum(add(positive, negative))
    return ad.scale(total, -1.0 / targets.size)


@dataclass(frozen=True)
class StepResult:
    position: int
    scores: Node
    predicted: AnswerCoordinates
    modules: ModuleOutputs
    m_att: Node


def _encode_sequence_bundle(
    texts: list[str], table: Table, params: ModelParams
) -> tuple[list[Node], EncodedTable]:
    """Encode all question texts plus the whole table in one batched call."""
    vocab = params.vocab
    ids = []
    for text in texts:
        normalized = normalize_cell(text)
        if not normalized:
            raise ValidationError("question is empty after normalization")
        ids.append(vocab.encode(normalized))
    ids.extend(vocab.encode_cell(h) for h in table.headers)
    for row in table.cells:
        ids.extend(vocab.encode_cell(cell) for cell in row)
    enc = encode_sequences(params.char_lstm, params.embeddings, ids)
    n, c, d = len(texts), table.n_cols, params.d
    questions = [enc[i] for i in range(n)]
    h = enc[n : n + c]
    t1 = reshape(enc[n + c :], (table.n_rows, c, d))
    encoded = EncodedTable(table=table, h=h, t1=t1, t=typed_cells(h, t1, params))
    return questions, encoded


def answer_question_chain(
    texts: list[str],
    table: Table,
    params: ModelParams,
    p1_sources: list[AnswerCoordinates | None] | None = None,
) -> list[StepResult]:
    """Run the model over a chain of question texts in order.

    ``p1_sources[k]``, when given and not None, replaces the model's own
    step k prediction as the previous-answer indicators fed to step k+1.
    Step 1 always sees all-zero indicators.
    """
    if p1_sources is not None and len(p1_sources) != len(texts):
        raise ValidationError("p1_sources must parallel the question texts")
    questions, encoded = _encode_sequence_bundle(texts, table, params)
    dtype = params.embeddings.value.dtype
    p1 = np.zeros((table.n_rows, table.n_cols), dtype=dtype)
    state_h: Node = params.seq_lstm.h0
    state_c: Node = params.seq_lstm.c0
    results: list[StepResult] = []
    for k, q0 in enumerate(questions):
        state_h, state_c = lstm_step(params.seq_lstm, q0, state_h, state_c)
        q = add(q0, state_h)
        conditioned = condition_on_previous(encoded, q, p1, params)
        modules = run_modules(q, conditioned, params)
        m_att = attention_mix(q, params)
        scores = mix_and_score(q, modules, params, m_att)
        predicted = predict(scores.value)
        results.append(
            StepResult(
                position=k + 1,
                scores=scores,
                predicted=predicted,
                modules=modules,
                m_att=m_att,
            )
        )
        source = predicted
        if p1_sources is not None and p1_sources[k] is not None:
            source = p1_sources[k]
        p1 = answer_indicators(source, table, dtype=dtype)
    return results


def answer_sequence(
    sequence: QuestionSequence,
    table: Table,
    params: ModelParams,
    teacher_forcing: bool = False,
) -> list[StepResult]:
    """Run the model across a question sequence in position order.

    With teacher forcing the previous-answer indicators come from gold
    answers; otherwise from the model's own step k-1 prediction.
    """
    texts = [entry.text for entry in sequence.entries]
    sources = [entry.gold for entry in sequence.entries] if teacher_forcing else None
    return answer_question_chain(texts, table, params, p1_sources=sources)


def sequence_loss(
    sequence: QuestionSequence,
    table: Table,
    params: ModelParams,
    teacher_forcing: bool = True,
) -> tuple[Node, list[StepResult]]:
    """Mean per-question loss over the sequence, as one graph."""
    results = answer_sequence(sequence, table, params, teacher_forcing=teacher_forcing)
    losses = [loss(res.scores, entry.gold, table) for res, entry in zip(results, sequence.entries)]
    total = losses[0]
    for extra in losses[1:]:
        total = add(total, extra)
    return ad.scale(total, 1.0 / len(losses)), results


def save_model(params: ModelParams, path: str | Path) -> None:
    """Write the checkpoint plus a JSON sidecar with vocab and dimensions."""
    path = Path(path)
    save_checkpoint(path, {k: n.value for k, n in params.all_nodes().items()})
    meta = {
        "d": params.d,
        "embedding_dim": params.vocab.embedding_dim,
        "unknown_id": params.vocab.unknown_id,
        "chars": sorted(params.vocab.char_to_id, key=params.vocab.char_to_id.get),
    }
    path.with_suffix(path.suffix + ".meta.json").write_text(
        json.dumps(meta, ensure_ascii=False), encoding="utf-8"
    )


def load_model(path: str | Path) -> ModelParams:
    path = Path(path)
    meta_path = path.with_suffix(path.suffix + ".meta.json")
    if not path.is_file():
        raise FileNotFoundError(f"checkpoint not found: {path}")
    if not meta_path.is_file():
        raise FileNotFoundError(f"checkpoint metadata not found: {meta_path}")
    meta = json.loads(meta_path.read_text(encoding="utf-8"))
    chars = meta["chars"]
    vocab = Vocabulary(
        char_to_id={ch: i for i, ch in enumerate(chars, start=1)},
        unknown_id=meta["unknown_id"],
        embedding_dim=meta["embedding_dim"],
    )
    params = init_model_params(vocab, d=meta["d"])
    params.load_values(load_checkpoint(path))
    return params
