"""Question and table rewriting, and the five evaluation policies.

Table rewriting restricts rows to the previous answer's rows so that
follow-up questions execute against an implicitly resolved context;
question rewriting substitutes referential expressions with noun-phrase
candidates from the previous question. Policies wire these into corpus
evaluation, always reporting coordinates in the original table frame.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

from .corpus import CorpusSplit
from .parser import (
    DEFAULT_BEAM_LIMIT,
    execute,
    generate_candidates,
    parse_and_answer,
    tokenize,
)
from .tables import AnswerCoordinates, QuestionClass, Table, classify_question

DEFAULT_EXPRESSIONS = ("ones", "them", "those", "that", "these", "of those", "of them")

_STOPWORDS = frozenset(
    """
    a an the of in on at to for with and or is are was were be been has have
    had what which who whom whose that this these those them ones it its how
    many much do does did all any each every by from as
    """.split()
)


class PolicyError(ValueError):
    """A policy was run without what it needs."""


class RewritePolicy(str, Enum):
    NEVER = "never"
    ALWAYS = "always"
    ROW_SUBSET = "row_subset"
    REFERENCE = "reference"
    UPPER_BOUND = "upper_bound"


@dataclass(frozen=True)
class ReferentialLexicon:
    expressions: tuple[str, ...] = DEFAULT_EXPRESSIONS

    def __post_init__(self) -> None:
        cleaned = tuple(" ".join(e.lower().split()) for e in self.expressions)
        object.__setattr__(self, "expressions", cleaned)


def _expression_pattern(expression: str) -> re.Pattern:
    return re.compile(rf"\b{re.escape(expression)}\b", re.IGNORECASE)


def has_referential_expression(
    question: str, lexicon: ReferentialLexicon | None = None
) -> bool:
    """Whether the question contains any of the lexicon's expressions.

    Live sessions have no gold question class, so this is the signal a
    service uses to decide that a question refers back to the previous
    answer.
    """
    lexicon = lexicon or ReferentialLexicon()
    return any(_expression_pattern(e).search(question) for e in lexicon.expressions)


def noun_phrase_candidates(previous: str) -> list[str]:
    """Contiguous non-stopword token spans of length 1 to 4, first-seen order."""
    tokens = tokenize(previous)
    runs: list[list[str]] = []
    current: list[str] = []
    for tok in tokens:
        if tok in _STOPWORDS:
            if current:
                runs.append(current)
            current = []
        else:
            current.append(tok)
    if current:
        runs.append(current)
    seen: list[str] = []
    for run in runs:
        for width in range(1, 5):
            for start in range(0, len(run) - width + 1):
                phrase = " ".join(run[start : start + width])
                if phrase not in seen:
                    seen.append(phrase)
    return seen


def rewrite_question_variants(
    current: str, previous: str, lexicon: ReferentialLexicon | None = None
) -> list[str]:
    """Variant 0 is the question itself; one more per (expression, phrase)."""
    lexicon = lexicon or ReferentialLexicon()
    found = [
        e for e in lexicon.expressions if _expression_pattern(e).search(current)
    ]
    phrases = noun_phrase_candidates(previous)
    variants = [current]
    for expression in found:
        pattern = _expression_pattern(expression)
        for phrase in phrases:
            variants.append(pattern.sub(phrase, current, count=1))
    return variants


@dataclass(frozen=True)
class RewrittenTable:
    table: Table
    row_map: tuple[int, ...]  # new row index -> original row index

    def to_original(self, coords: AnswerCoordinates) -> AnswerCoordinates:
        return AnswerCoordinates.of((self.row_map[r], c) for r, c in coords)


def rewrite_table(table: Table, previous: AnswerCoordinates) -> RewrittenTable:
    """Keep exactly the previous answer's rows, all columns, original order."""
    if previous is None or previous.is_empty:
        raise PolicyError("cannot rewrite a table from an empty previous answer")
    previous.validate_in_bounds(table, context="rewrite_table previous")
    keep = sorted(previous.rows())
    cells = tuple(table.cells[r] for r in keep)
    sub = Table(
        id=table.id,
        headers=table.headers,
        cells=cells,
        column_kinds=table.column_kinds,
    )
    return RewrittenTable(table=sub, row_map=tuple(keep))


Parser = Callable[..., AnswerCoordinates]


@dataclass(frozen=True)
class PolicyResult:
    policy: RewritePolicy
    accuracy: float
    oracle: float
    per_position: tuple[float, ...]
    n_questions: int


def _should_rewrite(
    policy: RewritePolicy,
    entry_gold: AnswerCoordinates,
    prev_gold: AnswerCoordinates | None,
    prev_pred: AnswerCoordinates | None,
    table: Table,
) -> bool:
    if prev_gold is None:
        return False
    if policy is RewritePolicy.NEVER:
        return False
    if policy is RewritePolicy.ALWAYS:
        return prev_pred is not None and not prev_pred.is_empty
    gold_class = classify_question(entry_gold, prev_gold, table)
    applicable = gold_class in (QuestionClass.SELECT_SUBSET, QuestionClass.SELECT_ROW)
    if not applicable:
        return False
    if policy is RewritePolicy.ROW_SUBSET:
        return prev_pred is not None and not prev_pred.is_empty
    if policy is RewritePolicy.REFERENCE:
        return prev_pred == prev_gold
    if policy is RewritePolicy.UPPER_BOUND:
        return True
    raise PolicyError(f"unknown policy {policy!r}")


def run_policy(
    corpus: CorpusSplit,
    policy: RewritePolicy,
    parser: Parser = parse_and_answer,
    gold_available: bool = True,
    beam_limit: int = DEFAULT_BEAM_LIMIT,
    denotation_size_cap: int | None = None,
) -> PolicyResult:
    """Evaluate one rewriting policy over a corpus with the primitive parser."""
    if policy in (RewritePolicy.REFERENCE, RewritePolicy.UPPER_BOUND) and not gold_available:
        raise PolicyError(f"policy {policy.value} requires gold answers")

    position_hits: dict[int, list[int]] = {}
    hits = oracle_hits = total = 0
    for seq in corpus.sequences:
        table = corpus.tables[seq.table_id]
        prev_gold: AnswerCoordinates | None = None
        prev_pred: AnswerCoordinates | None = None
        for entry in seq.entries:
            rewrite_source = prev_gold if policy is RewritePolicy.UPPER_BOUND else prev_pred
            do_rewrite = _should_rewrite(policy, entry.gold, prev_gold, prev_pred, table)
            do_rewrite = do_rewrite and rewrite_source is not None and not rewrite_source.is_empty
            if do_rewrite:
                rewritten = rewrite_table(table, rewrite_source)
                working, previous = rewritten.table, None
            else:
                rewritten = None
                working, previous = table, prev_pred
            predicted = parser(
                entry.text,
                working,
                previous,
                beam_limit=beam_limit,
                denotation_size_cap=denotation_size_cap,
            )
            candidates = generate_candidates(
                entry.text, working, previous, beam_limit, denotation_size_cap
            )
            if rewritten is not None:
                predicted = rewritten.to_original(predicted)
                denotations = [
                    rewritten.to_original(execute(f, working, previous))
                    for f, _ in candidates.candidates
                ]
            else:
                denotations = [
                    execute(f, working, previous) for f, _ in candidates.candidates
                ]
            correct = predicted == entry.gold
            hits += correct
            oracle_hits += any(d == entry.gold for d in denotations)
            total += 1
            position_hits.setdefault(entry.position, []).append(int(correct))
            prev_pred = predicted
            prev_gold = entry.gold
    if total == 0:
        raise PolicyError("empty corpus")
    per_position = tuple(
        sum(position_hits[p]) / len(position_hits[p]) for p in sorted(position_hits)
    )
    return PolicyResult(
        policy=policy,
        accuracy=hits / total,
        oracle=oracle_hits / total,
        per_position=per_position,
        n_questions=total,
    )


def run_all_policies(
    corpus: CorpusSplit,
    parser: Parser = parse_and_answer,
    gold_available: bool = True,
    **kwargs,
) -> dict[RewritePolicy, PolicyResult]:
    results = {}
    for policy in RewritePolicy:
        if not gold_available and policy in (
            RewritePolicy.REFERENCE,
            RewritePolicy.UPPER_BOUND,
        ):
            continue
        results[policy] = run_policy(
            corpus, policy, parser, gold_available=gold_available, **kwargs
        )
    return results


def question_rewrite_upper_bound(
    corpus: CorpusSplit,
    parser: Parser = parse_and_answer,
    lexicon: ReferentialLexicon | None = None,
) -> float:
    """Accuracy delta from counting any correct rewritten variant.

    The baseline chain is the parser's own sequential mode; every variant of
    a question is answered in that same context, so the delta isolates what
    question rewriting alone contributes.
    """
    lexicon = lexicon or ReferentialLexicon()
    base_hits = best_hits = total = 0
    for seq in corpus.sequences:
        table = corpus.tables[seq.table_id]
        prev_pred: AnswerCoordinates | None = None
        prev_text: str | None = None
        for entry in seq.entries:
            if prev_text is None:
                variants = [entry.text]
            else:
                variants = rewrite_question_variants(entry.text, prev_text, lexicon)
            answers = [parser(v, table, prev_pred) for v in variants]
            base_correct = answers[0] == entry.gold
            base_hits += base_correct
            best_hits += any(a == entry.gold for a in answers)
            total += 1
            prev_pred = answers[0]
            prev_text = entry.text
    if total == 0:
        raise PolicyError("empty corpus")
    return best_hits / total - base_hits / total
