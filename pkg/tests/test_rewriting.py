"""Tests for question/table rewriting and the evaluation policies."""

import pytest

from seqtab.parser import parse_and_answer
from seqtab.rewriting import (
    DEFAULT_EXPRESSIONS,
    PolicyError,
    PolicyResult,
    ReferentialLexicon,
    RewritePolicy,
    has_referential_expression,
    noun_phrase_candidates,
    question_rewrite_upper_bound,
    rewrite_question_variants,
    rewrite_table,
    run_all_policies,
    run_policy,
)
from seqtab.synth import SyntheticSpec, generate_synthetic
from seqtab.tables import (
    AnswerCoordinates,
    ColumnKind,
    QuestionClass,
    QuestionEntry,
    QuestionSequence,
    Table,
    ValidationError,
    classify_question,
)
from seqtab.corpus import CorpusSplit


def coords(*pairs):
    return AnswerCoordinates.of(pairs)


@pytest.fixture
def medals():
    return Table.build(
        "medals.csv",
        ["country", "gold", "first win"],
        [
            ["norway", "14", "1924-02-04"],
            ["germany", "14", "1928-03-01"],
            ["canada", "11", "1920-04-26"],
            ["latvia", "0", "2006-02-21"],
        ],
    )


class TestLexicon:
    def test_defaults(self):
        lex = ReferentialLexicon()
        assert lex.expressions == DEFAULT_EXPRESSIONS
        assert "of those" in lex.expressions

    def test_normalizes_case_and_whitespace(self):
        lex = ReferentialLexicon(("  Of   Those ", "THEM"))
        assert lex.expressions == ("of those", "them")

    def test_referential_hit_detection(self):
        assert has_referential_expression("what are the points of those?")
        assert has_referential_expression("which ONES are left?")
        assert not has_referential_expression("what are all points?")
        assert not has_referential_expression("was thatcher listed?")

    def test_referential_hit_with_custom_lexicon(self):
        lex = ReferentialLexicon(("the former",))
        assert has_referential_expression("who beat the former?", lex)
        assert not has_referential_expression("what are those?", lex)


class TestNounPhrases:
    def test_stopwords_are_dropped(self):
        phrases = noun_phrase_candidates(
            "what are all the countries that participated in the olympics?"
        )
        assert "countries" in phrases
        assert "olympics" in phrases
        assert "the" not in phrases
        assert "what" not in phrases

    def test_multiword_runs_give_subspans(self):
        phrases = noun_phrase_candidates("who won the first gold medal?")
        assert "first" in phrases
        assert "gold medal" in phrases
        assert "first gold medal" in phrases

    def test_span_length_capped_at_four(self):
        phrases = noun_phrase_candidates("alpha beta gamma delta epsilon")
        assert all(len(p.split()) <= 4 for p in phrases)
        assert "alpha beta gamma delta" in phrases
        assert "beta gamma delta epsilon" in phrases


class TestQuestionVariants:
    def test_substitutes_noun_phrase(self):
        variants = rewrite_question_variants(
            "which ones won more than two gold medals?",
            "what are all the countries that participated in the olympics?",
        )
        assert variants[0] == "which ones won more than two gold medals?"
        assert "which countries won more than two gold medals?" in variants

    def test_no_lexicon_hit_gives_singleton(self):
        variants = rewrite_question_variants(
            "who won the race?", "what are all the runners?"
        )
        assert variants == ["who won the race?"]

    def test_variant_count(self):
        lex = ReferentialLexicon(("ones", "them"))
        variants = rewrite_question_variants(
            "which ones beat them?", "list every team name", lex
        )
        phrases = noun_phrase_candidates("list every team name")
        assert len(variants) == 1 + 2 * len(phrases)

    def test_expression_matching_respects_word_boundaries(self):
        variants = rewrite_question_variants(
            "who won the thatcher award?", "what are all the winners?"
        )
        assert variants == ["who won the thatcher award?"]

    def test_only_first_occurrence_is_replaced(self):
        lex = ReferentialLexicon(("those",))
        variants = rewrite_question_variants(
            "are those bigger than those?", "list the cities"
        )
        assert "are cities bigger than those?" in variants


class TestRewriteTable:
    def test_keeps_exactly_previous_rows(self, medals):
        rewritten = rewrite_table(medals, coords((0, 1), (2, 1)))
        assert rewritten.row_map == (0, 2)
        assert rewritten.table.n_rows == 2
        assert rewritten.table.cells[0] == medals.cells[0]
        assert rewritten.table.cells[1] == medals.cells[2]
        assert rewritten.table.headers == medals.headers

    def test_all_rows_is_identity(self, medals):
        rewritten = rewrite_table(medals, coords((0, 0), (1, 0), (2, 0), (3, 0)))
        assert rewritten.table.cells == medals.cells
        assert rewritten.row_map == (0, 1, 2, 3)

    def test_empty_previous_rejected(self, medals):
        with pytest.raises(PolicyError, match="empty previous"):
            rewrite_table(medals, AnswerCoordinates.of([]))

    def test_out_of_bounds_previous_rejected(self, medals):
        with pytest.raises(ValidationError):
            rewrite_table(medals, coords((9, 0)))

    def test_column_kinds_survive_row_subsetting(self):
        table = Table.build(
            "t.csv",
            ["name", "debut"],
            [
                ["ann", "1990-01-02"],
                ["bo", "2001-03-04"],
                ["cy", "1988-07-19"],
                ["di", "1979-11-30"],
                ["ed", "unknown"],
            ],
        )
        assert table.column_kinds[1] is ColumnKind.DATE
        rewritten = rewrite_table(table, coords((4, 0)))
        assert rewritten.table.column_kinds[1] is ColumnKind.DATE

    def test_round_trip_to_original_frame(self, medals):
        rewritten = rewrite_table(medals, coords((1, 0), (3, 0)))
        back = rewritten.to_original(coords((0, 2), (1, 1)))
        assert back == coords((1, 2), (3, 1))


def _sequence(table_id, *questions):
    entries = tuple(
        QuestionEntry(
            sequence_id="s/0",
            position=i + 1,
            text=text,
            gold=gold,
            gold_text=tuple(),
        )
        for i, (text, gold) in enumerate(questions)
    )
    return QuestionSequence(id="s/0", table_id=table_id, entries=entries)


def _corpus(table, *questions):
    return CorpusSplit(
        name="t", sequences=[_sequence(table.id, *questions)], tables={table.id: table}
    )


class _StubParser:
    """Scripted parser that records the table shape it was shown."""

    def __init__(self, answers):
        self.answers = list(answers)
        self.seen_rows = []

    def __call__(self, question, table, previous=None, **kwargs):
        self.seen_rows.append(table.n_rows)
        return self.answers.pop(0)


class TestRunPolicy:
    def test_never_matches_plain_sequential_loop(self):
        spec = SyntheticSpec(n_tables=12, seed=5)
        corpus = generate_synthetic(spec)
        result = run_policy(corpus, RewritePolicy.NEVER)
        hits = total = 0
        for seq in corpus.sequences:
            table = corpus.tables[seq.table_id]
            prev = None
            for entry in seq.entries:
                pred = parse_and_answer(entry.text, table, prev)
                hits += pred == entry.gold
                total += 1
                prev = pred
        assert result.accuracy == hits / total
        assert result.n_questions == total

    def test_gold_policies_require_gold(self):
        spec = SyntheticSpec(n_tables=2, seed=1)
        corpus = generate_synthetic(spec)
        for policy in (RewritePolicy.REFERENCE, RewritePolicy.UPPER_BOUND):
            with pytest.raises(PolicyError, match="gold"):
                run_policy(corpus, policy, gold_available=False)

    def test_run_all_policies_skips_gold_without_gold(self):
        spec = SyntheticSpec(n_tables=2, seed=1)
        corpus = generate_synthetic(spec)
        results = run_all_policies(corpus, gold_available=False)
        assert set(results) == {
            RewritePolicy.NEVER,
            RewritePolicy.ALWAYS,
            RewritePolicy.ROW_SUBSET,
        }

    def test_accuracy_is_mean_of_position_buckets(self):
        spec = SyntheticSpec(n_tables=10, seed=3)
        corpus = generate_synthetic(spec)
        result = run_policy(corpus, RewritePolicy.ROW_SUBSET)
        weights = {}
        for seq in corpus.sequences:
            for entry in seq.entries:
                weights[entry.position] = weights.get(entry.position, 0) + 1
        recombined = sum(
            acc * weights[pos]
            for acc, pos in zip(result.per_position, sorted(weights))
        ) / sum(weights.values())
        assert recombined == pytest.approx(result.accuracy, abs=1e-12)

    def test_always_rewrite_can_strand_the_gold_rows(self, medals):
        gold1 = coords((0, 0))
        gold2 = coords((0, 1))
        corpus = _corpus(
            medals, ("who hosted?", gold1), ("how many gold for it?", gold2)
        )
        stub = _StubParser([coords((2, 0)), coords((0, 1)), coords((2, 0)), coords((0, 1))])
        never = run_policy(corpus, RewritePolicy.NEVER, parser=stub)
        assert never.accuracy == 0.5
        stub2 = _StubParser([coords((2, 0)), coords((0, 1))])
        always = run_policy(corpus, RewritePolicy.ALWAYS, parser=stub2)
        assert stub2.seen_rows == [4, 1]
        assert always.accuracy == 0.0
        assert always.oracle <= 0.5

    def test_reference_rewrites_only_after_correct_prediction(self, medals):
        gold1 = coords((0, 0), (1, 0))
        gold2 = coords((0, 0))
        wrong = _StubParser([coords((3, 0)), coords((0, 0))])
        run_policy(
            _corpus(medals, ("q1", gold1), ("q2", gold2)),
            RewritePolicy.REFERENCE,
            parser=wrong,
        )
        assert wrong.seen_rows == [4, 4]
        right = _StubParser([gold1, coords((0, 0))])
        run_policy(
            _corpus(medals, ("q1", gold1), ("q2", gold2)),
            RewritePolicy.REFERENCE,
            parser=right,
        )
        assert right.seen_rows == [4, 2]

    def test_upper_bound_rewrites_from_gold_even_when_prediction_wrong(self, medals):
        gold1 = coords((0, 0), (1, 0))
        gold2 = coords((0, 0))
        stub = _StubParser([coords((3, 0)), coords((0, 0))])
        result = run_policy(
            _corpus(medals, ("q1", gold1), ("q2", gold2)),
            RewritePolicy.UPPER_BOUND,
            parser=stub,
        )
        assert stub.seen_rows == [4, 2]
        assert result.accuracy == 0.5

    def test_predictions_are_reported_in_original_frame(self, medals):
        gold1 = coords((2, 0), (3, 0))
        gold2 = coords((3, 0))
        stub = _StubParser([gold1, coords((1, 0))])
        result = run_policy(
            _corpus(medals, ("q1", gold1), ("q2", gold2)),
            RewritePolicy.UPPER_BOUND,
            parser=stub,
        )
        assert stub.seen_rows == [4, 2]
        assert result.accuracy == 1.0


class TestGoldRowRetention:
    def test_rewriting_from_gold_previous_never_drops_gold_rows(self):
        spec = SyntheticSpec(n_tables=40, seed=11)
        corpus = generate_synthetic(spec)
        checked = 0
        for seq in corpus.sequences:
            table = corpus.tables[seq.table_id]
            previous = None
            for entry in seq.entries:
                qc = classify_question(entry.gold, previous, table)
                if qc in (QuestionClass.SELECT_SUBSET, QuestionClass.SELECT_ROW):
                    rewritten = rewrite_table(table, previous)
                    kept = set(rewritten.row_map)
                    assert entry.gold.rows() <= kept
                    checked += 1
                previous = entry.gold
        assert checked >= 30


@pytest.fixture(scope="module")
def results():
    spec = SyntheticSpec(n_tables=40, seed=7)
    corpus = generate_synthetic(spec)
    return run_all_policies(corpus)


class TestPolicyOrdering:

    def test_upper_bound_dominates_row_subset(self, results):
        assert (
            results[RewritePolicy.UPPER_BOUND].accuracy
            >= results[RewritePolicy.ROW_SUBSET].accuracy
        )

    def test_row_subset_does_not_trail_never(self, results):
        assert (
            results[RewritePolicy.ROW_SUBSET].accuracy
            >= results[RewritePolicy.NEVER].accuracy - 0.01
        )

    def test_upper_bound_oracle_dominates(self, results):
        assert (
            results[RewritePolicy.UPPER_BOUND].oracle
            >= results[RewritePolicy.NEVER].oracle
        )

    def test_oracle_bounds_accuracy(self, results):
        for result in results.values():
            assert result.oracle >= result.accuracy


class TestQuestionRewriteUpperBound:
    def test_delta_non_negative_on_synthetic_corpus(self):
        spec = SyntheticSpec(n_tables=15, seed=9)
        corpus = generate_synthetic(spec)
        delta = question_rewrite_upper_bound(corpus)
        assert delta >= 0.0

    def test_substitution_can_rescue_a_vague_question(self):
        table = Table.build(
            "pts.csv",
            ["team", "points"],
            [["ants", "7"], ["bees", "3"], ["cats", "9"]],
        )
        gold_col = coords((0, 0), (1, 0), (2, 0))
        corpus = _corpus(
            table,
            ("what are all of the teams?", gold_col),
            ("what are those?", gold_col),
        )
        base = run_policy(corpus, RewritePolicy.NEVER)
        assert base.accuracy == 0.5
        delta = question_rewrite_upper_bound(corpus)
        assert delta == pytest.approx(0.5)
