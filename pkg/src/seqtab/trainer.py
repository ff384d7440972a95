"""Training loop with seeded shuffling and dev-based model selection.

Gradient updates happen once per sequence so the question-sequence LSTM
trains unrolled over the whole sequence. The dev split is carved out by
table, the best-dev parameters are what the run returns, and the same
seed, corpus, and config always produce byte-identical checkpoints.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .adam import Adam, NonFiniteGradient
from .autodiff import backward
from .corpus import CorpusSplit, split_dev
from .encoder import corpus_vocabulary
from .evaluation import score
from .model import (
    ModelParams,
    answer_sequence,
    init_model_params,
    save_model,
    sequence_loss,
)
from .tables import AnswerCoordinates, ValidationError

DEFAULT_CLIP_NORM = 5.0
CHECKPOINT_NAME = "best.ckpt"
LOG_NAME = "train_log.jsonl"


class TrainingError(RuntimeError):
    """Training aborted because a loss or gradient stopped being finite."""


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters and bookkeeping for one training run.

    ``clip_norm`` is off by default; set it (5.0 is the conventional value)
    only if a run diverges. ``early_stop_dev_accuracy`` ends the run once
    dev accuracy reaches the threshold, which keeps fixtures cheap without
    changing what a full run would select.
    """

    epochs: int = 100
    d: int = 256
    char_dim: int = 100
    alpha: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    seed: int = 0
    teacher_forcing: bool = True
    dev_fraction: float = 0.2
    checkpoint_dir: str | None = None
    clip_norm: float | None = None
    early_stop_dev_accuracy: float | None = None

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ValidationError(f"epochs must be >= 1, got {self.epochs}")
        if not 0 < self.dev_fraction < 1:
            raise ValidationError(
                f"dev_fraction must be in (0, 1), got {self.dev_fraction}"
            )
        if self.clip_norm is not None and self.clip_norm <= 0:
            raise ValidationError(f"clip_norm must be positive, got {self.clip_norm}")

    @classmethod
    def from_dict(cls, payload: dict) -> "TrainConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(payload) - known
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        return cls(**payload)

    @classmethod
    def from_json(cls, path: str | Path) -> "TrainConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class TrainLogEntry:
    epoch: int
    train_loss: float
    dev_accuracy: float


@dataclass(frozen=True)
class TrainResult:
    params: ModelParams
    log: tuple[TrainLogEntry, ...]
    best_epoch: int
    best_dev_accuracy: float
    checkpoint_path: Path | None


@dataclass(frozen=True)
class OverfitReport:
    """Loss trajectory of a tiny-slice capacity check."""

    losses: tuple[float, ...]

    @property
    def final_loss(self) -> float:
        return self.losses[-1]

    def tail_monotonic(self, window: int = 10, slack: float = 1e-6) -> bool:
        tail = self.losses[-window:]
        return all(b <= a + slack for a, b in zip(tail, tail[1:]))


def predict_corpus(
    params: ModelParams, corpus: CorpusSplit
) -> dict[tuple[str, int], AnswerCoordinates]:
    """Deployment-mode predictions: each step conditions on the model's own
    previous answer, never on gold."""
    predictions: dict[tuple[str, int], AnswerCoordinates] = {}
    for seq in corpus.sequences:
        table = corpus.tables[seq.table_id]
        for step in answer_sequence(seq, table, params, teacher_forcing=False):
            predictions[(seq.id, step.position)] = step.predicted
    return predictions


def _clip_gradients(nodes: dict, max_norm: float) -> None:
    total = 0.0
    for node in nodes.values():
        if node.grad is not None:
            g = np.asarray(node.grad, dtype=np.float64)
            total += float(np.sum(g * g))
    norm = math.sqrt(total)
    if norm > max_norm:
        scale = max_norm / norm
        for node in nodes.values():
            if node.grad is not None:
                node.grad = node.grad * scale


def _run_epoch(
    train_split: CorpusSplit,
    params: ModelParams,
    optimizer: Adam,
    rng: random.Random,
    config: TrainConfig,
    epoch: int,
) -> float:
    """One pass over the training sequences; returns the mean sequence loss."""
    order = sorted(train_split.sequences, key=lambda s: s.id)
    rng.shuffle(order)
    nodes = params.all_nodes()
    losses = []
    for seq in order:
        table = train_split.tables[seq.table_id]
        loss_node, _ = sequence_loss(
            seq, table, params, teacher_forcing=config.teacher_forcing
        )
        value = float(loss_node.value)
        if not math.isfinite(value):
            raise TrainingError(
                f"non-finite loss at epoch {epoch}, sequence {seq.id!r}"
            )
        backward(loss_node)
        if config.clip_norm is not None:
            _clip_gradients(nodes, config.clip_norm)
        try:
            optimizer.step()
        except NonFiniteGradient as exc:
            raise TrainingError(
                f"non-finite gradient at epoch {epoch}, sequence {seq.id!r}: {exc}"
            ) from exc
        losses.append(value)
    return sum(losses) / len(losses)


def train(corpus: CorpusSplit, config: TrainConfig) -> TrainResult:
    """Train on ``corpus`` and return the parameters that scored best on dev.

    The dev split is carved out by table (so dev tables are unseen), the
    character vocabulary comes from the training portion only, and the log
    gets one entry per epoch. A non-finite loss or gradient aborts the run
    naming the epoch and sequence.
    """
    train_split, dev_split = split_dev(corpus, config.dev_fraction, config.seed)
    if not train_split.sequences or not dev_split.sequences:
        raise ValidationError("train/dev split left one side empty")
    vocab = corpus_vocabulary(train_split, embedding_dim=config.char_dim)
    params = init_model_params(vocab, d=config.d, seed=config.seed)
    optimizer = Adam(
        params.all_nodes(),
        lr=config.alpha,
        beta1=config.beta1,
        beta2=config.beta2,
        eps=config.epsilon,
    )
    rng = random.Random(config.seed)

    checkpoint_dir = Path(config.checkpoint_dir) if config.checkpoint_dir else None
    log_fh = None
    if checkpoint_dir is not None:
        checkpoint_dir.mkdir(parents=True, exist_ok=True)
        log_fh = (checkpoint_dir / LOG_NAME).open("w", encoding="utf-8")

    log: list[TrainLogEntry] = []
    best_epoch = -1
    best_accuracy = -1.0
    best_values: dict[str, np.ndarray] = {}
    try:
        for epoch in range(1, config.epochs + 1):
            train_loss = _run_epoch(train_split, params, optimizer, rng, config, epoch)
            dev_report = score(predict_corpus(params, dev_split), dev_split)
            entry = TrainLogEntry(
                epoch=epoch,
                train_loss=train_loss,
                dev_accuracy=dev_report.overall_accuracy,
            )
            log.append(entry)
            if log_fh is not None:
                log_fh.write(json.dumps(asdict(entry)) + "\n")
                log_fh.flush()
            if entry.dev_accuracy > best_accuracy:
                best_accuracy = entry.dev_accuracy
                best_epoch = epoch
                best_values = params.copy_values()
            if (
                config.early_stop_dev_accuracy is not None
                and entry.dev_accuracy >= config.early_stop_dev_accuracy
            ):
                break
    finally:
        if log_fh is not None:
            log_fh.close()

    params.load_values(best_values)
    checkpoint_path = None
    if checkpoint_dir is not None:
        checkpoint_path = checkpoint_dir / CHECKPOINT_NAME
        save_model(params, checkpoint_path)
    return TrainResult(
        params=params,
        log=tuple(log),
        best_epoch=best_epoch,
        best_dev_accuracy=best_accuracy,
        checkpoint_path=checkpoint_path,
    )


def overfit_check(corpus: CorpusSplit, config: TrainConfig) -> OverfitReport:
    """Fit a tiny slice (no dev split) and report the loss trajectory.

    Divergence surfaces as a TrainingError naming where the loss or a
    gradient stopped being finite.
    """
    if len(corpus.sequences) > 5:
        raise ValidationError(
            f"overfit_check wants at most 5 sequences, got {len(corpus.sequences)}"
        )
    if not corpus.sequences:
        raise ValidationError("overfit_check: empty corpus")
    vocab = corpus_vocabulary(corpus, embedding_dim=config.char_dim)
    params = init_model_params(vocab, d=config.d, seed=config.seed)
    optimizer = Adam(
        params.all_nodes(),
        lr=config.alpha,
        beta1=config.beta1,
        beta2=config.beta2,
        eps=config.epsilon,
    )
    rng = random.Random(config.seed)
    losses = []
    for epoch in range(1, config.epochs + 1):
        losses.append(_run_epoch(corpus, params, optimizer, rng, config, epoch))
    return OverfitReport(losses=tuple(losses))


def initial_loss(corpus: CorpusSplit, config: TrainConfig) -> float:
    """Mean sequence loss under freshly initialized parameters."""
    vocab = corpus_vocabulary(corpus, embedding_dim=config.char_dim)
    params = init_model_params(vocab, d=config.d, seed=config.seed)
    values = []
    for seq in corpus.sequences:
        table = corpus.tables[seq.table_id]
        loss_node, _ = sequence_loss(
            seq, table, params, teacher_forcing=config.teacher_forcing
        )
        values.append(float(loss_node.value))
    return sum(values) / len(values)
