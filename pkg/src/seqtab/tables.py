"""Table and answer data model: coordinate algebra and question-class derivation.

Everything here is immutable after construction and safe to share across
threads. Serialization lives in :mod:`seqtab.corpus`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from datetime import date, datetime
from enum import Enum
from typing import Iterable, Mapping


class ValidationError(ValueError):
    """Raised when input data violates a structural invariant."""


_WS_RE = re.compile(r"\s+")
_NUMBER_RE = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)$")
_CURRENCY_CHARS = "$€£,"

# Patterns tried in order by parse_date_string.
_DATE_FORMATS = ("%Y-%m-%d", "%m/%d/%Y", "%d %B %Y", "%B %d, %Y", "%Y-%m")


def normalize_cell(text: str) -> str:
    """Trim and collapse internal whitespace runs. No case folding."""
    return _WS_RE.sub(" ", text.strip())


def parse_number_string(text: str) -> float | None:
    """Parse a decimal number after stripping commas and currency symbols."""
    cleaned = text.strip()
    for ch in _CURRENCY_CHARS:
        cleaned = cleaned.replace(ch, "")
    cleaned = cleaned.strip()
    if _NUMBER_RE.match(cleaned):
        return float(cleaned)
    return None


def parse_date_string(text: str) -> date | None:
    cleaned = text.strip()
    for fmt in _DATE_FORMATS:
        try:
            return datetime.strptime(cleaned, fmt).date()
        except ValueError:
            continue
    return None


class ColumnKind(str, Enum):
    TEXT = "text"
    NUMBER = "number"
    DATE = "date"


class QuestionClass(str, Enum):
    SELECT_COLUMN = "select_column"
    SELECT_SUBSET = "select_subset"
    SELECT_ROW = "select_row"
    COMPLEX = "complex"


# A column is number/date when at least this share of non-empty cells parses.
KIND_THRESHOLD = 0.8


def infer_column_kind(cells: Iterable[str]) -> ColumnKind:
    values = [normalize_cell(c) for c in cells]
    values = [v for v in values if v]
    if not values:
        return ColumnKind.TEXT
    n = len(values)
    numbers = sum(1 for v in values if parse_number_string(v) is not None)
    if numbers / n >= KIND_THRESHOLD:
        return ColumnKind.NUMBER
    dates = sum(1 for v in values if parse_date_string(v) is not None)
    if dates / n >= KIND_THRESHOLD:
        return ColumnKind.DATE
    return ColumnKind.TEXT


@dataclass(frozen=True)
class Table:
    """Grid of normalized string cells with typed column headers."""

    id: str
    headers: tuple[str, ...]
    cells: tuple[tuple[str, ...], ...]
    column_kinds: tuple[ColumnKind, ...]

    @classmethod
    def build(cls, table_id: str, headers: Iterable[str], rows: Iterable[Iterable[str]]) -> "Table":
        """Normalize raw strings, infer column kinds, and validate the grid."""
        norm_headers = tuple(normalize_cell(h) for h in headers)
        norm_rows = tuple(tuple(normalize_cell(c) for c in row) for row in rows)
        if len(norm_headers) == 0:
            raise ValidationError(f"table {table_id!r}: needs at least one column")
        if len(norm_rows) == 0:
            raise ValidationError(f"table {table_id!r}: needs at least one row")
        c = len(norm_headers)
        for i, row in enumerate(norm_rows):
            if len(row) != c:
                raise ValidationError(
                    f"table {table_id!r}: row {i} has {len(row)} cells, expected {c}"
                )
        if len(set(norm_headers)) != c:
            raise ValidationError(f"table {table_id!r}: duplicate headers after normalization")
        kinds = tuple(
            infer_column_kind(row[j] for row in norm_rows) for j in range(c)
        )
        return cls(id=table_id, headers=norm_headers, cells=norm_rows, column_kinds=kinds)

    @property
    def n_rows(self) -> int:
        return len(self.cells)

    @property
    def n_cols(self) -> int:
        return len(self.headers)

    def cell(self, row: int, col: int) -> str:
        return self.cells[row][col]

    def column_values(self, col: int) -> tuple[str, ...]:
        return tuple(row[col] for row in self.cells)


@dataclass(frozen=True)
class AnswerCoordinates:
    """Set of (row, column) cell positions, 0-based.

    Empty sets are representable (execution of a logical form may denote
    nothing); gold answers are validated non-empty where they are built.
    """

    coords: frozenset[tuple[int, int]]

    @classmethod
    def of(cls, pairs: Iterable[tuple[int, int]]) -> "AnswerCoordinates":
        return cls(frozenset((int(r), int(c)) for r, c in pairs))

    @property
    def is_empty(self) -> bool:
        return not self.coords

    def rows(self) -> frozenset[int]:
        return frozenset(r for r, _ in self.coords)

    def cols(self) -> frozenset[int]:
        return frozenset(c for _, c in self.coords)

    def ordered(self) -> list[tuple[int, int]]:
        """Row-major ordering; the fixed ordering used for gold_text alignment."""
        return sorted(self.coords)

    def validate_in_bounds(self, table: Table, context: str = "") -> None:
        for r, c in self.ordered():
            if not (0 <= r < table.n_rows and 0 <= c < table.n_cols):
                where = f" in {context}" if context else ""
                raise ValidationError(
                    f"coordinate ({r}, {c}) out of bounds for table {table.id!r} "
                    f"({table.n_rows}x{table.n_cols}){where}"
                )

    def texts(self, table: Table) -> list[str]:
        return [table.cell(r, c) for r, c in self.ordered()]

    def __len__(self) -> int:
        return len(self.coords)

    def __iter__(self):
        return iter(self.ordered())

    def __contains__(self, pair: tuple[int, int]) -> bool:
        return pair in self.coords


@dataclass(frozen=True)
class QuestionEntry:
    sequence_id: str
    position: int
    text: str
    gold: AnswerCoordinates
    gold_text: tuple[str, ...]

    def validate_against(self, table: Table) -> None:
        if self.position < 1:
            raise ValidationError(f"{self.sequence_id} pos {self.position}: position must be >= 1")
        if self.gold.is_empty:
            raise ValidationError(f"{self.sequence_id} pos {self.position}: empty gold answer")
        self.gold.validate_in_bounds(table, context=f"{self.sequence_id} pos {self.position}")
        expected = tuple(self.gold.texts(table))
        if tuple(self.gold_text) != expected:
            raise ValidationError(
                f"{self.sequence_id} pos {self.position}: answer text {list(self.gold_text)!r} "
                f"does not match cells {list(expected)!r} (row-major order)"
            )


@dataclass(frozen=True)
class QuestionSequence:
    """Ordered questions sharing one table.

    ``id`` is unique within a corpus; ``source_id`` and ``annotator`` keep the
    original TSV identity so saving round-trips.
    """

    id: str
    table_id: str
    entries: tuple[QuestionEntry, ...]
    source_id: str = ""
    annotator: str = "0"

    def __post_init__(self) -> None:
        if len(self.entries) < 2:
            raise ValidationError(f"sequence {self.id!r}: needs at least two questions")
        positions = [e.position for e in self.entries]
        if positions != list(range(1, len(positions) + 1)):
            raise ValidationError(
                f"sequence {self.id!r}: positions {positions} are not contiguous from 1"
            )
        if not self.source_id:
            object.__setattr__(self, "source_id", self.id)

    def __len__(self) -> int:
        return len(self.entries)


def _full_column(coords: AnswerCoordinates, table: Table) -> bool:
    cols = coords.cols()
    if len(cols) != 1:
        return False
    (col,) = cols
    return coords.rows() == frozenset(range(table.n_rows))


def classify_question(
    current: AnswerCoordinates,
    previous: AnswerCoordinates | None,
    table: Table,
) -> QuestionClass:
    """Derive the question class from answer-coordinate geometry alone.

    Checks run in a fixed order: full-column answers always classify as
    SELECT_COLUMN, even when a previous answer exists.
    """
    current.validate_in_bounds(table, context="current answer")
    if previous is not None:
        previous.validate_in_bounds(table, context="previous answer")
    if _full_column(current, table):
        return QuestionClass.SELECT_COLUMN
    if previous is not None and not previous.is_empty:
        if current.coords <= previous.coords:
            return QuestionClass.SELECT_SUBSET
        if current.rows() <= previous.rows() and not (current.cols() & previous.cols()):
            return QuestionClass.SELECT_ROW
    return QuestionClass.COMPLEX


@dataclass(frozen=True)
class ClassDistribution:
    overall: Mapping[QuestionClass, float]
    per_position: Mapping[int, Mapping[QuestionClass, float]]
    n_questions: int
    counts: Mapping[QuestionClass, int] = field(default_factory=dict)


def class_distribution(
    sequences: Iterable[QuestionSequence],
    tables: Mapping[str, Table],
) -> ClassDistribution:
    """Fraction of each question class overall and at each sequence position."""
    counts: dict[QuestionClass, int] = {qc: 0 for qc in QuestionClass}
    by_position: dict[int, dict[QuestionClass, int]] = {}
    total = 0
    for seq in sequences:
        table = tables[seq.table_id]
        previous = None
        for entry in seq.entries:
            qc = classify_question(entry.gold, previous, table)
            counts[qc] += 1
            pos_counts = by_position.setdefault(entry.position, {c: 0 for c in QuestionClass})
            pos_counts[qc] += 1
            total += 1
            previous = entry.gold
    if total == 0:
        raise ValidationError("class_distribution: empty corpus")
    overall = {qc: counts[qc] / total for qc in QuestionClass}
    per_position = {
        pos: {qc: n / max(1, sum(pos_counts.values())) for qc, n in pos_counts.items()}
        for pos, pos_counts in sorted(by_position.items())
    }
    return ClassDistribution(
        overall=overall, per_position=per_position, n_questions=total, counts=counts
    )
