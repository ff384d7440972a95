"""Corpus serialization: TSV question files, CSV tables, and dev splits.

File conventions:
  - corpus file: UTF-8 TSV with header
    ``id  annotator  position  question  table_file  answer_coordinates  answer_text``
    where answer_coordinates is a bracketed list of quoted "(r, c)" pairs and
    answer_text a bracketed list of quoted cell strings.
  - table file: UTF-8 CSV, first row headers, RFC-4180 quoting.
"""

from __future__ import annotations

import ast
import csv
import random
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Mapping

from .tables import (
    AnswerCoordinates,
    QuestionEntry,
    QuestionSequence,
    Table,
    ValidationError,
)

if TYPE_CHECKING:
    from .parser import LogicalForm

CORPUS_COLUMNS = (
    "id",
    "annotator",
    "position",
    "question",
    "table_file",
    "answer_coordinates",
    "answer_text",
)

_COORD_RE = re.compile(r"^\(\s*(\d+)\s*,\s*(\d+)\s*\)$")


@dataclass
class CorpusSplit:
    """A named split: question sequences plus the tables they reference.

    ``provenance`` is populated only by the synthetic generator: the logical
    form whose execution produced each gold answer, keyed by
    (sequence_id, position).
    """

    name: str
    sequences: list[QuestionSequence]
    tables: dict[str, Table]
    provenance: dict[tuple[str, int], "LogicalForm"] | None = field(
        default=None, compare=False
    )

    @property
    def n_questions(self) -> int:
        return sum(len(s) for s in self.sequences)

    def validate(self) -> None:
        seen_ids = set()
        for seq in self.sequences:
            if seq.id in seen_ids:
                raise ValidationError(f"duplicate sequence id {seq.id!r}")
            seen_ids.add(seq.id)
            if seq.table_id not in self.tables:
                raise ValidationError(
                    f"sequence {seq.id!r} references missing table {seq.table_id!r}"
                )
            table = self.tables[seq.table_id]
            for entry in seq.entries:
                entry.validate_against(table)


class CorpusLoadError(ValidationError):
    """Load failure; message carries the offending line number and sequence."""


def _parse_bracketed_list(raw: str, line_no: int, what: str) -> list[str]:
    try:
        value = ast.literal_eval(raw)
    except (ValueError, SyntaxError) as exc:
        raise CorpusLoadError(f"line {line_no}: cannot parse {what}: {raw!r}") from exc
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise CorpusLoadError(f"line {line_no}: {what} must be a list of strings: {raw!r}")
    return value


def _parse_coordinates(raw: str, line_no: int) -> AnswerCoordinates:
    pairs = []
    for item in _parse_bracketed_list(raw, line_no, "answer_coordinates"):
        m = _COORD_RE.match(item.strip())
        if not m:
            raise CorpusLoadError(f"line {line_no}: bad coordinate {item!r}")
        pairs.append((int(m.group(1)), int(m.group(2))))
    if not pairs:
        raise CorpusLoadError(f"line {line_no}: empty answer_coordinates")
    return AnswerCoordinates.of(pairs)


def load_table(path: Path, table_id: str) -> Table:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise ValidationError(f"table file {path}: needs a header row and at least one data row")
    return Table.build(table_id, rows[0], rows[1:])


def save_table(table: Table, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(table.headers)
        writer.writerows(table.cells)


def load_corpus(corpus_path: str | Path, tables_dir: str | Path, name: str = "train") -> CorpusSplit:
    """Load a TSV corpus and every table it references.

    Rows violating the data-model invariants (out-of-bounds coordinates,
    non-contiguous positions, answer text mismatching the named cells) are
    reported with their sequence id and line number.
    """
    corpus_path = Path(corpus_path)
    tables_dir = Path(tables_dir)
    tables: dict[str, Table] = {}
    # (source_id, annotator) -> position -> (line_no, row)
    grouped: dict[tuple[str, str], dict[int, tuple[int, dict[str, str]]]] = {}
    order: list[tuple[str, str]] = []

    with open(corpus_path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter="\t")
        try:
            header = next(reader)
        except StopIteration:
            raise CorpusLoadError(f"{corpus_path}: empty corpus file") from None
        if tuple(header) != CORPUS_COLUMNS:
            raise CorpusLoadError(
                f"{corpus_path}: bad header {header!r}, expected {list(CORPUS_COLUMNS)}"
            )
        for line_no, raw in enumerate(reader, start=2):
            if not raw or all(not f.strip() for f in raw):
                continue
            if len(raw) != len(CORPUS_COLUMNS):
                raise CorpusLoadError(
                    f"line {line_no}: expected {len(CORPUS_COLUMNS)} fields, got {len(raw)}"
                )
            row = dict(zip(CORPUS_COLUMNS, raw))
            try:
                position = int(row["position"])
            except ValueError:
                raise CorpusLoadError(f"line {line_no}: bad position {row['position']!r}") from None
            key = (row["id"], row["annotator"])
            if key not in grouped:
                grouped[key] = {}
                order.append(key)
            if position in grouped[key]:
                raise CorpusLoadError(
                    f"line {line_no}: duplicate position {position} for sequence id={key[0]!r} "
                    f"annotator={key[1]!r}"
                )
            grouped[key][position] = (line_no, row)

    sequences: list[QuestionSequence] = []
    for source_id, annotator in order:
        by_position = grouped[(source_id, annotator)]
        seq_id = f"{source_id}/{annotator}"
        positions = sorted(by_position)
        if positions != list(range(1, len(positions) + 1)):
            first_line = min(line for line, _ in by_position.values())
            raise CorpusLoadError(
                f"sequence {seq_id!r} (line {first_line}): positions {positions} "
                f"are not contiguous from 1"
            )
        entries = []
        table_id = None
        for position in positions:
            line_no, row = by_position[position]
            if table_id is None:
                table_id = row["table_file"]
            elif row["table_file"] != table_id:
                raise CorpusLoadError(
                    f"line {line_no}: sequence {seq_id!r} mixes tables "
                    f"{table_id!r} and {row['table_file']!r}"
                )
            if table_id not in tables:
                table_path = tables_dir / table_id
                if not table_path.is_file():
                    raise CorpusLoadError(
                        f"line {line_no}: sequence {seq_id!r}: missing table file {table_path}"
                    )
                tables[table_id] = load_table(table_path, table_id)
            table = tables[table_id]
            gold = _parse_coordinates(row["answer_coordinates"], line_no)
            gold_text = _parse_bracketed_list(row["answer_text"], line_no, "answer_text")
            entry = QuestionEntry(
                sequence_id=seq_id,
                position=position,
                text=row["question"],
                gold=gold,
                gold_text=tuple(gold_text),
            )
            try:
                entry.validate_against(table)
            except ValidationError as exc:
                raise CorpusLoadError(f"line {line_no}: {exc}") from None
            entries.append(entry)
        sequences.append(
            QuestionSequence(
                id=seq_id,
                table_id=table_id,
                entries=tuple(entries),
                source_id=source_id,
                annotator=annotator,
            )
        )

    split = CorpusSplit(name=name, sequences=sequences, tables=tables)
    split.validate()
    return split


def format_coordinates(coords: AnswerCoordinates) -> str:
    return repr([f"({r}, {c})" for r, c in coords.ordered()])


def save_corpus(split: CorpusSplit, corpus_path: str | Path, tables_dir: str | Path) -> None:
    """Write the TSV corpus and all referenced tables; inverse of load_corpus."""
    corpus_path = Path(corpus_path)
    tables_dir = Path(tables_dir)
    corpus_path.parent.mkdir(parents=True, exist_ok=True)
    with open(corpus_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, delimiter="\t", lineterminator="\n")
        writer.writerow(CORPUS_COLUMNS)
        for seq in split.sequences:
            for entry in seq.entries:
                writer.writerow(
                    [
                        seq.source_id,
                        seq.annotator,
                        str(entry.position),
                        entry.text,
                        seq.table_id,
                        format_coordinates(entry.gold),
                        repr(list(entry.gold_text)),
                    ]
                )
    for table_id, table in split.tables.items():
        save_table(table, tables_dir / table_id)


def split_dev(
    train: CorpusSplit, fraction: float, seed: int
) -> tuple[CorpusSplit, CorpusSplit]:
    """Carve a dev split out of ``train`` by table, so dev tables are unseen.

    The released fold files are not assumed to exist; the partition shuffles
    the sorted table ids with a seeded RNG, which keeps all sequences of a
    table together on one side.
    """
    if not 0 < fraction < 1:
        raise ValidationError(f"split fraction must be in (0, 1), got {fraction}")
    table_ids = sorted({seq.table_id for seq in train.sequences})
    if len(table_ids) < 2:
        raise ValidationError("split_dev: needs at least 2 distinct tables")
    rng = random.Random(seed)
    shuffled = list(table_ids)
    rng.shuffle(shuffled)
    n_dev = min(len(table_ids) - 1, max(1, round(fraction * len(table_ids))))
    dev_ids = set(shuffled[:n_dev])

    def take(ids: set[str], name: str) -> CorpusSplit:
        seqs = [s for s in train.sequences if s.table_id in ids]
        tabs = {tid: train.tables[tid] for tid in ids if tid in train.tables}
        return CorpusSplit(name=name, sequences=seqs, tables=tabs)

    train_ids = set(table_ids) - dev_ids
    return take(train_ids, train.name), take(dev_ids, "dev")
