"""Logical-form enumeration, scoring, and execution.

A deliberately small stand-in for a full semantic parser: four primitive
form types, exhaustive enumeration of well-typed instantiations, and a
token-overlap scorer. Denotations are coordinate sets; an empty set is a
legitimate outcome (EmptyDenotation) rather than an error, and callers
fall through to the next candidate when they see one.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import date
from enum import Enum
from typing import Union

from .tables import (
    AnswerCoordinates,
    ColumnKind,
    Table,
    normalize_cell,
    parse_date_string,
    parse_number_string,
)

DEFAULT_BEAM_LIMIT = 50
SUPERLATIVE_BONUS = 0.25
_MAX_WORDS = ("most", "highest")
_MIN_WORDS = ("least", "lowest")

_TOKEN_RE = re.compile(r"[0-9a-z]+")
_YEAR_RE = re.compile(r"^[12]\d{3}$")


class InvalidFormError(ValueError):
    """The form is not well-typed for the table it was applied to."""


class Scope(str, Enum):
    WHOLE_TABLE = "whole_table"
    PREVIOUS_ANSWER_ROWS = "previous_answer_rows"


@dataclass(frozen=True)
class SelectColumn:
    col: int


@dataclass(frozen=True)
class Filter:
    scope: Scope
    col: int
    op: str  # eq | gt | lt
    value: str


@dataclass(frozen=True)
class ArgExtreme:
    scope: Scope
    col: int
    kind: str  # max | min
    project_col: int


@dataclass(frozen=True)
class ProjectRows:
    scope: Scope
    col: int


LogicalForm = Union[SelectColumn, Filter, ArgExtreme, ProjectRows]

EMPTY_DENOTATION = AnswerCoordinates.of([])


def tokenize(text: str) -> list[str]:
    """Lowercase tokens split on non-alphanumerics; numbers kept as tokens."""
    return _TOKEN_RE.findall(text.lower())


def comparable_value(text: str, kind: ColumnKind) -> float | date | None:
    """Parse a string into the comparison domain of a column kind.

    Number columns compare as floats. Date columns compare as dates, with a
    bare four-digit year accepted as January 1st of that year so questions
    like "after 1960" stay executable. Text never compares.
    """
    if kind is ColumnKind.NUMBER:
        return parse_number_string(text)
    if kind is ColumnKind.DATE:
        parsed = parse_date_string(text)
        if parsed is not None:
            return parsed
        if _YEAR_RE.match(text.strip()):
            return date(int(text.strip()), 1, 1)
    return None


def _check_col(table: Table, col: int, role: str) -> None:
    if not 0 <= col < table.n_cols:
        raise InvalidFormError(f"{role} {col} out of bounds for {table.n_cols}-column table")


def _scope_rows(
    table: Table, scope: Scope, previous: AnswerCoordinates | None
) -> list[int]:
    if scope is Scope.WHOLE_TABLE:
        return list(range(table.n_rows))
    if previous is None or previous.is_empty:
        raise InvalidFormError("previous_answer_rows scope without a previous answer")
    rows = sorted(previous.rows())
    if rows and rows[-1] >= table.n_rows:
        raise InvalidFormError("previous answer rows out of bounds")
    return rows


def execute(
    form: LogicalForm, table: Table, previous: AnswerCoordinates | None = None
) -> AnswerCoordinates:
    """Evaluate a logical form to a coordinate set; empty means EmptyDenotation."""
    if isinstance(form, SelectColumn):
        _check_col(table, form.col, "column")
        return AnswerCoordinates.of((r, form.col) for r in range(table.n_rows))

    if isinstance(form, Filter):
        _check_col(table, form.col, "column")
        rows = _scope_rows(table, form.scope, previous)
        kind = table.column_kinds[form.col]
        if form.op == "eq":
            target = normalize_cell(form.value).casefold()
            hit = [r for r in rows if table.cell(r, form.col).casefold() == target]
        elif form.op in ("gt", "lt"):
            if kind is ColumnKind.TEXT:
                raise InvalidFormError(f"{form.op} on text column {form.col}")
            target = comparable_value(form.value, kind)
            if target is None:
                raise InvalidFormError(f"value {form.value!r} not comparable as {kind.value}")
            hit = []
            for r in rows:
                cell = comparable_value(table.cell(r, form.col), kind)
                if cell is None:
                    continue
                if (cell > target) if form.op == "gt" else (cell < target):
                    hit.append(r)
        else:
            raise InvalidFormError(f"unknown filter op {form.op!r}")
        return AnswerCoordinates.of((r, form.col) for r in hit)

    if isinstance(form, ArgExtreme):
        _check_col(table, form.col, "column")
        _check_col(table, form.project_col, "projection column")
        if form.kind not in ("max", "min"):
            raise InvalidFormError(f"unknown extreme kind {form.kind!r}")
        kind = table.column_kinds[form.col]
        if kind is ColumnKind.TEXT:
            raise InvalidFormError(f"{form.kind} over text column {form.col}")
        rows = _scope_rows(table, form.scope, previous)
        keyed = []
        for r in rows:
            value = comparable_value(table.cell(r, form.col), kind)
            if value is not None:
                keyed.append((r, value))
        if not keyed:
            return EMPTY_DENOTATION
        best = max(v for _, v in keyed) if form.kind == "max" else min(v for _, v in keyed)
        return AnswerCoordinates.of(
            (r, form.project_col) for r, v in keyed if v == best
        )

    if isinstance(form, ProjectRows):
        _check_col(table, form.col, "column")
        if form.scope is not Scope.PREVIOUS_ANSWER_ROWS:
            raise InvalidFormError("ProjectRows requires previous_answer_rows scope")
        rows = _scope_rows(table, form.scope, previous)
        return AnswerCoordinates.of((r, form.col) for r in rows)

    raise InvalidFormError(f"unknown form {form!r}")


@dataclass(frozen=True)
class CandidateSet:
    candidates: tuple[tuple[LogicalForm, float], ...]
    beam_limit: int
    denotation_size_cap: int | None

    def __len__(self) -> int:
        return len(self.candidates)

    def forms(self) -> list[LogicalForm]:
        return [form for form, _ in self.candidates]


def _question_values(question_tokens: list[str], table: Table) -> dict[int, list[str]]:
    """Per column, cell strings whose tokens all occur in the question."""
    qset = set(question_tokens)
    out: dict[int, list[str]] = {}
    for c in range(table.n_cols):
        seen = []
        for cell in table.column_values(c):
            toks = tokenize(cell)
            if toks and set(toks) <= qset and cell not in seen:
                seen.append(cell)
        out[c] = seen
    return out


def _stem(token: str) -> str:
    # Plural stripping only, so "teams" anchors to a "team" header.
    if token.endswith("s") and len(token) > 3:
        return token[:-1]
    return token


def _form_tokens(form: LogicalForm, table: Table) -> set[str]:
    # The ArgExtreme projection column is an output slot, not a lexical
    # anchor; counting its header would let every extreme form dominate
    # the plain column selection it projects into.
    tokens = set(tokenize(table.headers[form.col]))
    if isinstance(form, Filter):
        tokens.update(tokenize(form.value))
    return tokens


def score_form(form: LogicalForm, question: str, table: Table) -> float:
    q_tokens = tokenize(question)
    q_stems = {_stem(t) for t in q_tokens}
    form_stems = {_stem(t) for t in _form_tokens(form, table)}
    score = len(q_stems & form_stems) / (1 + len(q_tokens))
    if isinstance(form, ArgExtreme):
        words = _MAX_WORDS if form.kind == "max" else _MIN_WORDS
        if any(w in q_tokens for w in words):
            score += SUPERLATIVE_BONUS
    return score


def _enumerate_forms(
    table: Table, previous: AnswerCoordinates | None, question_tokens: list[str]
) -> list[LogicalForm]:
    scopes = [Scope.WHOLE_TABLE]
    if previous is not None and not previous.is_empty:
        scopes.append(Scope.PREVIOUS_ANSWER_ROWS)
    values = _question_values(question_tokens, table)
    numbers = [t for t in question_tokens if parse_number_string(t) is not None]

    forms: list[LogicalForm] = [SelectColumn(c) for c in range(table.n_cols)]
    for c in range(table.n_cols):
        kind = table.column_kinds[c]
        eq_values = list(values[c])
        ordered_values = list(eq_values)
        if kind is not ColumnKind.TEXT:
            for tok in numbers:
                if comparable_value(tok, kind) is not None and tok not in ordered_values:
                    ordered_values.append(tok)
                if tok not in eq_values:
                    eq_values.append(tok)
        for scope in scopes:
            for v in eq_values:
                forms.append(Filter(scope, c, "eq", v))
            if kind is not ColumnKind.TEXT:
                for v in ordered_values:
                    if comparable_value(v, kind) is None:
                        continue
                    forms.append(Filter(scope, c, "gt", v))
                    forms.append(Filter(scope, c, "lt", v))
                for extreme in ("max", "min"):
                    for p in range(table.n_cols):
                        forms.append(ArgExtreme(scope, c, extreme, p))
    if Scope.PREVIOUS_ANSWER_ROWS in scopes:
        forms.extend(ProjectRows(Scope.PREVIOUS_ANSWER_ROWS, c) for c in range(table.n_cols))
    return forms


def _order_key(form: LogicalForm) -> tuple:
    # ArgExtreme ranks last among score-and-size ties: a superlative
    # question lifts it with the bonus anyway, and an unmarked question
    # should fall to the plainer reading.
    if isinstance(form, SelectColumn):
        return (0, form.col)
    if isinstance(form, Filter):
        return (1, form.col, form.op, form.value, form.scope.value)
    if isinstance(form, ProjectRows):
        return (2, form.col, form.scope.value)
    return (3, form.col, form.kind, form.project_col, form.scope.value)


def generate_candidates(
    question: str,
    table: Table,
    previous: AnswerCoordinates | None = None,
    beam_limit: int = DEFAULT_BEAM_LIMIT,
    denotation_size_cap: int | None = None,
) -> CandidateSet:
    """Enumerate, score, cap, and rank logical forms for one question."""
    q_tokens = tokenize(question)
    scored = []
    for form in _enumerate_forms(table, previous, q_tokens):
        try:
            denotation = execute(form, table, previous)
        except InvalidFormError:
            continue
        if denotation_size_cap is not None and len(denotation) > denotation_size_cap:
            continue
        scored.append((form, score_form(form, question, table), len(denotation)))
    scored.sort(key=lambda item: (-item[1], item[2], _order_key(item[0])))
    top = tuple((form, score) for form, score, _ in scored[:beam_limit])
    return CandidateSet(
        candidates=top, beam_limit=beam_limit, denotation_size_cap=denotation_size_cap
    )


def parse_and_answer(
    question: str,
    table: Table,
    previous: AnswerCoordinates | None = None,
    beam_limit: int = DEFAULT_BEAM_LIMIT,
    denotation_size_cap: int | None = None,
) -> AnswerCoordinates:
    """Answer with the top non-empty candidate, else the best-scored column."""
    candidates = generate_candidates(
        question, table, previous, beam_limit, denotation_size_cap
    )
    for form, _ in candidates.candidates:
        denotation = execute(form, table, previous)
        if not denotation.is_empty:
            return denotation
    columns = [SelectColumn(c) for c in range(table.n_cols)]
    best = max(columns, key=lambda f: (score_form(f, question, table), -f.col))
    return execute(best, table, previous)
