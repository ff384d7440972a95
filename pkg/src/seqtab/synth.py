"""Synthetic desk-scale corpora with executable provenance.

Every generated question embeds the header and value strings its generating
logical form refers to, and the gold answer is literally that form's
denotation. A deficit-driven planner steers the realized class mix toward
the requested fractions; position 1 can only realize SELECT_COLUMN or
COMPLEX (the other two classes are defined relative to a previous answer).
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from datetime import date

from .corpus import CorpusSplit
from .parser import (
    ArgExtreme,
    Filter,
    LogicalForm,
    ProjectRows,
    Scope,
    SelectColumn,
    comparable_value,
    execute,
)
from .tables import (
    AnswerCoordinates,
    ColumnKind,
    QuestionClass,
    QuestionEntry,
    QuestionSequence,
    Table,
    ValidationError,
    classify_question,
)

_KEY_HEADERS = ("name", "team", "country", "player", "city")
_NUMBER_HEADERS = ("gold", "points", "wins", "losses", "score", "total")
_DATE_HEADERS = ("debut", "founded", "first game", "last game")

_CLASS_ORDER = (
    QuestionClass.SELECT_COLUMN,
    QuestionClass.SELECT_SUBSET,
    QuestionClass.SELECT_ROW,
    QuestionClass.COMPLEX,
)


class SynthesisError(ValueError):
    """The requested spec cannot be realized."""


@dataclass(frozen=True)
class SyntheticSpec:
    n_tables: int
    rows_range: tuple[int, int] = (3, 6)
    cols_range: tuple[int, int] = (2, 4)
    sequence_length_range: tuple[int, int] = (2, 4)
    class_mix: dict[QuestionClass, float] = field(
        default_factory=lambda: {
            QuestionClass.SELECT_COLUMN: 0.25,
            QuestionClass.SELECT_SUBSET: 0.25,
            QuestionClass.SELECT_ROW: 0.25,
            QuestionClass.COMPLEX: 0.25,
        }
    )
    seed: int = 0
    sequences_per_table: int = 2
    key_alphabet: str = "abcdefghijklmnopqrstuvwxyz"
    value_length_range: tuple[int, int] = (3, 6)
    question_style: str = "english"  # english | terse

    @classmethod
    def from_dict(cls, payload: dict) -> "SyntheticSpec":
        """Build a spec from JSON-shaped data: lists for the range pairs and
        class-name strings (e.g. "select_column") for the mix keys."""
        known = set(cls.__dataclass_fields__)
        unknown = set(payload) - known
        if unknown:
            raise SynthesisError(f"unknown spec keys: {sorted(unknown)}")
        data = dict(payload)
        for key in ("rows_range", "cols_range", "sequence_length_range", "value_length_range"):
            if key in data:
                data[key] = tuple(data[key])
        if "class_mix" in data:
            try:
                data["class_mix"] = {
                    QuestionClass(name): float(fraction)
                    for name, fraction in data["class_mix"].items()
                }
            except ValueError as exc:
                raise SynthesisError(f"bad class_mix: {exc}") from None
        return cls(**data)

    def validate(self) -> None:
        if self.n_tables < 1:
            raise SynthesisError("n_tables must be >= 1")
        for name, (lo, hi) in (
            ("rows_range", self.rows_range),
            ("cols_range", self.cols_range),
            ("sequence_length_range", self.sequence_length_range),
            ("value_length_range", self.value_length_range),
        ):
            if lo < 1 or hi < lo:
                raise SynthesisError(f"bad {name}: ({lo}, {hi})")
        if self.sequence_length_range[0] < 2:
            raise SynthesisError("sequences need at least 2 questions")
        mix_total = sum(self.class_mix.values())
        if abs(mix_total - 1.0) > 1e-6:
            raise SynthesisError(f"class_mix must sum to 1, got {mix_total}")
        if any(f < 0 for f in self.class_mix.values()):
            raise SynthesisError("class_mix fractions must be nonnegative")
        if self.question_style not in ("english", "terse"):
            raise SynthesisError(f"unknown question_style {self.question_style!r}")

        def wants(qc: QuestionClass) -> bool:
            return self.class_mix.get(qc, 0.0) > 0

        if wants(QuestionClass.SELECT_ROW) and self.cols_range[1] < 2:
            raise SynthesisError("SELECT_ROW requires at least 2 columns")
        if wants(QuestionClass.SELECT_SUBSET) and self.rows_range[1] < 2:
            raise SynthesisError("SELECT_SUBSET requires at least 2 rows")
        if wants(QuestionClass.COMPLEX) and self.rows_range[1] < 2:
            raise SynthesisError("COMPLEX filters need at least 2 rows")
        if not wants(QuestionClass.SELECT_COLUMN) and not wants(QuestionClass.COMPLEX):
            raise SynthesisError(
                "position 1 can only realize SELECT_COLUMN or COMPLEX; "
                "give at least one of them a positive fraction"
            )


def _word(rng: random.Random, spec: SyntheticSpec) -> str:
    n = rng.randint(*spec.value_length_range)
    return "".join(rng.choice(spec.key_alphabet) for _ in range(n))


def _make_table(rng: random.Random, spec: SyntheticSpec, index: int) -> Table:
    n_rows = rng.randint(*spec.rows_range)
    n_cols = rng.randint(*spec.cols_range)
    headers = [rng.choice(_KEY_HEADERS)]
    kinds = [ColumnKind.TEXT]
    for _ in range(n_cols - 1):
        if rng.random() < 0.7:
            pool, kind = _NUMBER_HEADERS, ColumnKind.NUMBER
        else:
            pool, kind = _DATE_HEADERS, ColumnKind.DATE
        choices = [h for h in pool if h not in headers] or list(pool)
        headers.append(rng.choice(choices))
        kinds.append(kind)
    if len(set(headers)) != len(headers):
        headers = [f"{h} {i}" if headers.index(h) != i else h for i, h in enumerate(headers)]
    rows = []
    for _ in range(n_rows):
        row = [_word(rng, spec)]
        for kind in kinds[1:]:
            if kind is ColumnKind.NUMBER:
                row.append(str(rng.randint(0, 99)))
            else:
                row.append(f"{rng.randint(1950, 2020)}-{rng.randint(1, 12):02d}-{rng.randint(1, 28):02d}")
        rows.append(row)
    return Table.build(f"syn-{index}.csv", headers, rows)


def _templates(spec: SyntheticSpec):
    if spec.question_style == "terse":
        return {
            "column": ("{h}?",),
            "filter_eq": ("{h} {v}?",),
            "filter_gt": ("{h} most {v}?",),
            "filter_lt": ("{h} least {v}?",),
            "extreme_max": ("{p} most {h}?",),
            "extreme_min": ("{p} least {h}?",),
            "subset_eq": ("of those {h} {v}?",),
            "subset_extreme_max": ("of those most {h}?",),
            "subset_extreme_min": ("of those least {h}?",),
            "row_project": ("of those {h}?",),
        }
    return {
        "column": (
            "what are all of the {h}?",
            "show every {h} in the table.",
            "list each {h}.",
        ),
        "filter_eq": (
            "which {h} is {v}?",
            "which rows have {h} equal to {v}?",
        ),
        "filter_gt": (
            "which {h} is greater than {v}?",
            "which rows have {h} above {v}?",
        ),
        "filter_lt": (
            "which {h} is less than {v}?",
            "which rows have {h} below {v}?",
        ),
        "extreme_max": (
            "which {p} has the most {h}?",
            "which {p} has the highest {h}?",
        ),
        "extreme_min": (
            "which {p} has the least {h}?",
            "which {p} has the lowest {h}?",
        ),
        "subset_eq": (
            "which of them is {v}?",
            "of those, which {h} is {v}?",
        ),
        "subset_extreme_max": (
            "of those, which has the highest {h}?",
            "which of them has the most {h}?",
        ),
        "subset_extreme_min": (
            "of those, which has the lowest {h}?",
            "which of them has the least {h}?",
        ),
        "row_project": (
            "what is the {h} of those?",
            "of them, what is the {h}?",
        ),
    }


@dataclass
class _Planner:
    """Tracks realized class counts against target fractions."""

    targets: dict[QuestionClass, float]
    counts: dict[QuestionClass, int] = field(
        default_factory=lambda: {qc: 0 for qc in QuestionClass}
    )

    def deficit(self, qc: QuestionClass) -> float:
        total = sum(self.counts.values()) or 1
        return self.targets.get(qc, 0.0) - self.counts[qc] / total

    def record(self, realized: QuestionClass) -> None:
        self.counts[realized] += 1


def _number_columns(table: Table) -> list[int]:
    return [
        c
        for c in range(table.n_cols)
        if table.column_kinds[c] is not ColumnKind.TEXT
    ]


def _matching_rows(table: Table, col: int, value: str) -> frozenset[int]:
    """Rows whose cell equals ``value`` the way the equality filter compares."""
    want = value.casefold()
    return frozenset(
        r for r in range(table.n_rows) if table.cell(r, col).casefold() == want
    )


def _comparison_pivot(rng, table: Table, col: int, op: str) -> str | None:
    """A threshold for gt/lt that keeps the question answerable as asked.

    Three properties hold by construction: the pivot is a single clean token
    (the tokenizer would shred a decimal or a full date into fragments), no
    cell equals it (an equality filter on it denotes nothing instead of
    stealing the tie), and the asked-for side of the comparison is strictly
    smaller than the opposite side (the candidate ranker prefers smaller
    denotations among equal scores). Date columns are thresholded by a bare
    year strictly between two cell years.
    """
    kind = table.column_kinds[col]
    parsed = [
        v
        for v in (
            comparable_value(table.cell(r, col), kind) for r in range(table.n_rows)
        )
        if v is not None
    ]
    if kind is ColumnKind.NUMBER:
        uniq = sorted(set(parsed))
        candidates = [
            ((a + b) // 2, str((a + b) // 2))
            for a, b in zip(uniq, uniq[1:])
            if b - a >= 2
        ]
    else:
        years = sorted({v.year for v in parsed})
        candidates = [
            (date((y1 + y2) // 2, 1, 1), str((y1 + y2) // 2))
            for y1, y2 in zip(years, years[1:])
            if y2 - y1 >= 2
        ]
    pivots = []
    for mid, text in candidates:
        gt_size = sum(1 for v in parsed if v > mid)
        lt_size = sum(1 for v in parsed if v < mid)
        asked, opposite = (gt_size, lt_size) if op == "gt" else (lt_size, gt_size)
        if 1 <= asked < opposite:
            pivots.append(text)
    return rng.choice(pivots) if pivots else None


class _SequenceBuilder:
    def __init__(self, rng, spec, table, templates):
        self.rng = rng
        self.spec = spec
        self.table = table
        self.templates = templates

    def _fill(self, key: str, **kw) -> str:
        return self.rng.choice(self.templates[key]).format(**kw)

    def try_class(
        self, qc: QuestionClass, previous: AnswerCoordinates | None
    ) -> tuple[LogicalForm, str] | None:
        table, rng = self.table, self.rng
        for _ in range(12):
            if qc is QuestionClass.SELECT_COLUMN:
                # English openers target the entity column, the way crowd
                # questions do ("list all of the players"); the terse style
                # is a neural-training fixture, so it spreads over columns.
                if self.spec.question_style == "english":
                    c = 0
                else:
                    c = rng.randrange(table.n_cols)
                return SelectColumn(c), self._fill("column", h=table.headers[c])

            if qc is QuestionClass.COMPLEX:
                # Whole-table extremes and comparatives appear only at
                # position 1: once a previous answer exists, their
                # previous-answer-rows twin scores identically and wins the
                # scope tie-break, so deeper complex questions stick to
                # equality filters (whose twin denotes nothing and is skipped).
                pick = rng.random()
                ordered = _number_columns(table)
                first = previous is None
                pivot = None
                if first and pick < 0.45 and ordered:
                    c = rng.choice(ordered)
                    kind = rng.choice(["max", "min"])
                    form = ArgExtreme(Scope.WHOLE_TABLE, c, kind, 0)
                    text = self._fill(
                        f"extreme_{kind}", h=table.headers[c], p=table.headers[0]
                    )
                elif first and pick < 0.7 and ordered:
                    c = rng.choice(ordered)
                    op = rng.choice(["gt", "lt"])
                    pivot = _comparison_pivot(rng, table, c, op)
                    if pivot is None:
                        continue
                    form = Filter(Scope.WHOLE_TABLE, c, op, pivot)
                    text = self._fill(f"filter_{op}", h=table.headers[c], v=pivot)
                else:
                    # The value must pick out exactly one row, clear of the
                    # previous answer: a duplicated value hands the win to a
                    # smaller same-token comparison filter, and an overlap
                    # with the previous rows wakes its scoped twin.
                    c = rng.randrange(table.n_cols)
                    v = rng.choice(table.column_values(c))
                    matches = _matching_rows(table, c, v)
                    prev_rows = previous.rows() if previous is not None else frozenset()
                    if len(matches) != 1 or matches & prev_rows:
                        continue
                    form = Filter(Scope.WHOLE_TABLE, c, "eq", v)
                    text = self._fill("filter_eq", h=table.headers[c], v=v)

            elif qc is QuestionClass.SELECT_SUBSET:
                if previous is None or previous.is_empty:
                    return None
                prev_cols = previous.cols()
                if len(prev_cols) != 1:
                    return None
                (c_prev,) = prev_cols
                ordered = _number_columns(table)
                prev_rows = sorted(previous.rows())
                # The projection slot carries no tokens, so ties among
                # projections fall to column 0; extremes are only generated
                # when that is also the gold projection.
                if rng.random() < 0.5 and ordered and c_prev == 0:
                    c_num = rng.choice(ordered)
                    ex = rng.choice(["max", "min"])
                    form = ArgExtreme(Scope.PREVIOUS_ANSWER_ROWS, c_num, ex, c_prev)
                    text = self._fill(f"subset_extreme_{ex}", h=table.headers[c_num])
                else:
                    v = table.cell(rng.choice(prev_rows), c_prev)
                    if len(_matching_rows(table, c_prev, v) & previous.rows()) != 1:
                        continue
                    form = Filter(Scope.PREVIOUS_ANSWER_ROWS, c_prev, "eq", v)
                    text = self._fill("subset_eq", h=table.headers[c_prev], v=v)

            elif qc is QuestionClass.SELECT_ROW:
                if previous is None or previous.is_empty or table.n_cols < 2:
                    return None
                prev_cols = previous.cols()
                # A projection over several rows of a numeric column would be
                # outranked by that column's single-cell extreme, so those
                # slots only take text columns or single-row contexts.
                single = len(previous.rows()) == 1
                other = [
                    c
                    for c in range(table.n_cols)
                    if c not in prev_cols
                    and (single or table.column_kinds[c] is ColumnKind.TEXT)
                ]
                if not other:
                    return None
                c2 = rng.choice(other)
                form = ProjectRows(Scope.PREVIOUS_ANSWER_ROWS, c2)
                text = self._fill("row_project", h=table.headers[c2])
            else:
                return None

            gold = execute(form, table, previous)
            if gold.is_empty:
                continue
            if classify_question(gold, previous, table) is qc:
                return form, text
        return None


def generate_synthetic(spec: SyntheticSpec) -> CorpusSplit:
    """Build a seeded corpus whose gold answers are executed denotations."""
    spec.validate()
    rng = random.Random(spec.seed)
    templates = _templates(spec)
    planner = _Planner(dict(spec.class_mix))
    tables: dict[str, Table] = {}
    sequences: list[QuestionSequence] = []
    provenance: dict[tuple[str, int], LogicalForm] = {}

    for t in range(spec.n_tables):
        table = _make_table(rng, spec, t)
        tables[table.id] = table
        builder = _SequenceBuilder(rng, spec, table, templates)
        for s in range(spec.sequences_per_table):
            source_id = f"syn-{t}"
            annotator = str(s)
            seq_id = f"{source_id}/{annotator}"
            length = rng.randint(*spec.sequence_length_range)
            entries: list[QuestionEntry] = []
            previous: AnswerCoordinates | None = None
            for position in range(1, length + 1):
                feasible = [
                    qc
                    for qc in _CLASS_ORDER
                    if spec.class_mix.get(qc, 0.0) > 0 or qc is QuestionClass.SELECT_COLUMN
                ]
                if previous is None:
                    feasible = [
                        qc
                        for qc in feasible
                        if qc in (QuestionClass.SELECT_COLUMN, QuestionClass.COMPLEX)
                    ]
                made = None
                # Whole-column questions mid-sequence are dominated by the
                # previous-rows projection of the same column, so later slots
                # reach for SELECT_COLUMN only when nothing else fits.
                def slot_key(q: QuestionClass) -> tuple:
                    col_last = previous is not None and q is QuestionClass.SELECT_COLUMN
                    return (col_last, -planner.deficit(q))

                for qc in sorted(feasible, key=slot_key):
                    made = builder.try_class(qc, previous)
                    if made is not None:
                        break
                if made is None:
                    c = rng.randrange(table.n_cols)
                    made = (SelectColumn(c), builder._fill("column", h=table.headers[c]))
                form, text = made
                gold = execute(form, table, previous)
                realized = classify_question(gold, previous, table)
                planner.record(realized)
                entries.append(
                    QuestionEntry(
                        sequence_id=seq_id,
                        position=position,
                        text=text,
                        gold=gold,
                        gold_text=tuple(gold.texts(table)),
                    )
                )
                provenance[(seq_id, position)] = form
                previous = gold
            sequences.append(
                QuestionSequence(
                    id=seq_id,
                    table_id=table.id,
                    entries=tuple(entries),
                    source_id=source_id,
                    annotator=annotator,
                )
            )
    if not sequences:
        raise ValidationError("generated no sequences")
    return CorpusSplit(
        name="synthetic", sequences=sequences, tables=tables, provenance=provenance
    )
