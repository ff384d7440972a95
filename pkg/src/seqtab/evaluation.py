"""Accuracy metrics over question sequences, plus report emitters.

A question is correct iff its predicted coordinate set equals the gold set
exactly; text never enters the comparison. Position buckets follow the
standard four-column layout: 1, 2, 3, and 4-or-later pooled.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

from .corpus import CorpusSplit, _parse_coordinates, format_coordinates
from .tables import AnswerCoordinates, ValidationError

POSITION_BUCKETS = 4

_BUCKET_NAMES = ("position_1", "position_2", "position_3", "position_4_plus")


class EvaluationError(ValidationError):
    """A prediction set does not line up with the corpus."""


@dataclass(frozen=True)
class EvalReport:
    overall_accuracy: float
    per_position: tuple[float, ...]
    per_position_counts: tuple[int, ...]
    sequence_accuracy: float
    n_questions: int
    n_sequences: int


def _bucket(position: int) -> int:
    return min(position, POSITION_BUCKETS) - 1


Predictions = Mapping[tuple[str, int], AnswerCoordinates]


def score(predictions: Predictions, corpus: CorpusSplit) -> EvalReport:
    """Exact-match accuracy overall, per position bucket, and per sequence."""
    hits = [0] * POSITION_BUCKETS
    counts = [0] * POSITION_BUCKETS
    perfect_sequences = 0
    for seq in corpus.sequences:
        sequence_ok = True
        for entry in seq.entries:
            key = (seq.id, entry.position)
            if key not in predictions:
                raise EvaluationError(
                    f"missing prediction for question {seq.id!r} position {entry.position}"
                )
            ok = predictions[key] == entry.gold
            b = _bucket(entry.position)
            counts[b] += 1
            hits[b] += ok
            sequence_ok = sequence_ok and ok
        perfect_sequences += sequence_ok
    n_questions = sum(counts)
    if n_questions == 0:
        raise EvaluationError("empty corpus")
    return EvalReport(
        overall_accuracy=sum(hits) / n_questions,
        per_position=tuple(
            h / c if c else 0.0 for h, c in zip(hits, counts)
        ),
        per_position_counts=tuple(counts),
        sequence_accuracy=perfect_sequences / len(corpus.sequences),
        n_questions=n_questions,
        n_sequences=len(corpus.sequences),
    )


CandidateDenotations = Mapping[tuple[str, int], Iterable[AnswerCoordinates]]


def oracle_score(candidate_sets: CandidateDenotations, corpus: CorpusSplit) -> float:
    """Fraction of questions with at least one exactly-correct denotation.

    A question absent from ``candidate_sets`` counts as an empty set.
    """
    hits = total = 0
    for seq in corpus.sequences:
        for entry in seq.entries:
            denotations = candidate_sets.get((seq.id, entry.position), ())
            hits += any(d == entry.gold for d in denotations)
            total += 1
    if total == 0:
        raise EvaluationError("empty corpus")
    return hits / total


def report_to_dict(report: EvalReport) -> dict:
    return {
        "overall_accuracy": report.overall_accuracy,
        "per_position": list(report.per_position),
        "per_position_counts": list(report.per_position_counts),
        "sequence_accuracy": report.sequence_accuracy,
        "n_questions": report.n_questions,
        "n_sequences": report.n_sequences,
        "notes": [
            "sequence_accuracy is an additional metric beyond the per-position table"
        ],
    }


def report_to_json(report: EvalReport) -> str:
    return json.dumps(report_to_dict(report), indent=2) + "\n"


def report_to_tsv(report: EvalReport) -> str:
    rows = [("metric", "value", "note")]
    rows.append(("overall_accuracy", f"{report.overall_accuracy:.6f}", ""))
    for name, acc, count in zip(
        _BUCKET_NAMES, report.per_position, report.per_position_counts
    ):
        rows.append((name, f"{acc:.6f}", f"n={count}"))
    rows.append(
        ("sequence_accuracy", f"{report.sequence_accuracy:.6f}", "additional metric")
    )
    rows.append(("n_questions", str(report.n_questions), ""))
    rows.append(("n_sequences", str(report.n_sequences), ""))
    return "".join("\t".join(row) + "\n" for row in rows)


def load_predictions(path: str | Path) -> dict[tuple[str, int], AnswerCoordinates]:
    """Read a prediction TSV with columns sequence_id, position, answer_coordinates.

    Extra columns are ignored, so scored dumps load unchanged. Unlike gold
    corpora, a prediction may be the empty set, written as ``[]``.
    """
    path = Path(path)
    predictions: dict[tuple[str, int], AnswerCoordinates] = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh, delimiter="\t")
        required = {"sequence_id", "position", "answer_coordinates"}
        missing = required - set(reader.fieldnames or ())
        if missing:
            raise EvaluationError(
                f"{path}: prediction file missing columns {sorted(missing)}"
            )
        for line_no, row in enumerate(reader, start=2):
            try:
                position = int(row["position"])
            except ValueError:
                raise EvaluationError(
                    f"{path}: line {line_no}: bad position {row['position']!r}"
                ) from None
            key = (row["sequence_id"], position)
            if key in predictions:
                raise EvaluationError(
                    f"{path}: line {line_no}: duplicate prediction for "
                    f"{key[0]!r} position {position}"
                )
            raw = row["answer_coordinates"].strip()
            if raw == "[]":
                predictions[key] = AnswerCoordinates.of(())
            else:
                predictions[key] = _parse_coordinates(raw, line_no)
    return predictions


def save_predictions(predictions: Predictions, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, delimiter="\t", lineterminator="\n")
        writer.writerow(["sequence_id", "position", "answer_coordinates"])
        for (seq_id, position), coords in sorted(predictions.items()):
            writer.writerow([seq_id, position, format_coordinates(coords)])
