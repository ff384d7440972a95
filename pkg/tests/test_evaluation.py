"""Scoring arithmetic, position pooling, and report emitters."""

import json
import random

import pytest

from seqtab.corpus import CorpusSplit
from seqtab.evaluation import (
    EvaluationError,
    load_predictions,
    oracle_score,
    report_to_dict,
    report_to_json,
    report_to_tsv,
    save_predictions,
    score,
)
from seqtab.tables import AnswerCoordinates, QuestionEntry, QuestionSequence, Table


def coords(*pairs):
    return AnswerCoordinates.of(pairs)


@pytest.fixture
def grid():
    return Table.build(
        "grid.csv",
        ["name", "score"],
        [["ants", "7"], ["bees", "3"], ["cats", "9"], ["dogs", "5"]],
    )


def make_sequence(seq_id, table_id, golds):
    entries = tuple(
        QuestionEntry(
            sequence_id=seq_id,
            position=i + 1,
            text=f"question {i + 1}?",
            gold=gold,
            gold_text=tuple(),
        )
        for i, gold in enumerate(golds)
    )
    return QuestionSequence(id=seq_id, table_id=table_id, entries=entries)


def make_corpus(table, golds_by_seq):
    sequences = [
        make_sequence(seq_id, table.id, golds) for seq_id, golds in golds_by_seq
    ]
    return CorpusSplit(name="t", sequences=sequences, tables={table.id: table})


def exact_predictions(corpus):
    return {
        (seq.id, entry.position): entry.gold
        for seq in corpus.sequences
        for entry in seq.entries
    }


class TestScore:
    def test_all_correct(self, grid):
        corpus = make_corpus(
            grid,
            [
                ("a", [coords((0, 0)), coords((0, 1))]),
                ("b", [coords((1, 0)), coords((2, 1))]),
            ],
        )
        report = score(exact_predictions(corpus), corpus)
        assert report.overall_accuracy == 1.0
        assert report.sequence_accuracy == 1.0
        assert report.per_position == (1.0, 1.0, 0.0, 0.0)
        assert report.per_position_counts == (2, 2, 0, 0)
        assert report.n_questions == 4
        assert report.n_sequences == 2

    def test_single_hit_among_four(self, grid):
        corpus = make_corpus(
            grid,
            [
                ("a", [coords((0, 0)), coords((0, 1))]),
                ("b", [coords((1, 0)), coords((2, 1))]),
            ],
        )
        predictions = {
            ("a", 1): coords((3, 0)),
            ("a", 2): coords((0, 1)),
            ("b", 1): coords((3, 0)),
            ("b", 2): coords((3, 1)),
        }
        report = score(predictions, corpus)
        assert report.overall_accuracy == 0.25
        assert report.per_position[0] == 0.0
        assert report.per_position[1] == 0.5
        assert report.sequence_accuracy == 0.0

    def test_missing_prediction_names_the_question(self, grid):
        corpus = make_corpus(grid, [("a", [coords((0, 0)), coords((0, 1))])])
        predictions = {("a", 1): coords((0, 0))}
        with pytest.raises(EvaluationError, match=r"'a' position 2"):
            score(predictions, corpus)

    def test_empty_corpus_rejected(self, grid):
        corpus = CorpusSplit(name="t", sequences=[], tables={grid.id: grid})
        with pytest.raises(EvaluationError, match="empty"):
            score({}, corpus)

    def test_positions_past_four_pool_into_last_bucket(self, grid):
        golds = [coords((i % 4, i % 2)) for i in range(5)]
        corpus = make_corpus(grid, [("long", golds)])
        predictions = exact_predictions(corpus)
        predictions[("long", 4)] = coords((0, 1))
        report = score(predictions, corpus)
        assert report.per_position_counts == (1, 1, 1, 2)
        assert report.per_position[3] == 0.5
        assert report.overall_accuracy == 0.8

    def test_extra_predictions_ignored(self, grid):
        corpus = make_corpus(grid, [("a", [coords((0, 0)), coords((0, 1))])])
        predictions = exact_predictions(corpus)
        predictions[("ghost", 1)] = coords((1, 1))
        assert score(predictions, corpus).overall_accuracy == 1.0

    def _random_corpus_and_predictions(self, grid, seed):
        rng = random.Random(seed)
        golds_by_seq = []
        for i in range(12):
            length = rng.randint(2, 6)
            golds = [
                coords((rng.randrange(4), rng.randrange(2))) for _ in range(length)
            ]
            golds_by_seq.append((f"s{i}", golds))
        corpus = make_corpus(grid, golds_by_seq)
        predictions = {}
        for seq in corpus.sequences:
            for entry in seq.entries:
                if rng.random() < 0.6:
                    predictions[(seq.id, entry.position)] = entry.gold
                else:
                    predictions[(seq.id, entry.position)] = coords(
                        (rng.randrange(4), rng.randrange(2)),
                        (rng.randrange(4), rng.randrange(2)),
                    )
        return corpus, predictions

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_overall_is_count_weighted_mean_of_buckets(self, grid, seed):
        corpus, predictions = self._random_corpus_and_predictions(grid, seed)
        report = score(predictions, corpus)
        weighted = sum(
            acc * count
            for acc, count in zip(report.per_position, report.per_position_counts)
        )
        assert report.overall_accuracy == pytest.approx(weighted / report.n_questions)
        assert report.n_questions == sum(report.per_position_counts)

    def test_sequence_order_does_not_matter(self, grid):
        corpus, predictions = self._random_corpus_and_predictions(grid, 3)
        reversed_corpus = CorpusSplit(
            name="t", sequences=list(reversed(corpus.sequences)), tables=corpus.tables
        )
        assert score(predictions, corpus) == score(predictions, reversed_corpus)


class TestOracleScore:
    def test_gold_anywhere_in_candidates_counts(self, grid):
        corpus = make_corpus(grid, [("a", [coords((0, 0)), coords((0, 1))])])
        candidates = {
            ("a", 1): [coords((1, 1)), coords((0, 0))],
            ("a", 2): [coords((1, 1))],
        }
        assert oracle_score(candidates, corpus) == 0.5

    def test_empty_candidate_sets_score_zero(self, grid):
        corpus = make_corpus(grid, [("a", [coords((0, 0)), coords((0, 1))])])
        assert oracle_score({}, corpus) == 0.0
        assert oracle_score({("a", 1): []}, corpus) == 0.0

    def test_oracle_bounds_top_one(self, grid):
        rng = random.Random(9)
        corpus = make_corpus(
            grid,
            [
                (
                    f"s{i}",
                    [
                        coords((rng.randrange(4), rng.randrange(2)))
                        for _ in range(rng.randint(2, 4))
                    ],
                )
                for i in range(10)
            ],
        )
        predictions = {}
        candidates = {}
        for seq in corpus.sequences:
            for entry in seq.entries:
                key = (seq.id, entry.position)
                pool = [coords((rng.randrange(4), rng.randrange(2)))]
                if rng.random() < 0.5:
                    pool.append(entry.gold)
                rng.shuffle(pool)
                predictions[key] = pool[0]
                candidates[key] = pool
        report = score(predictions, corpus)
        assert oracle_score(candidates, corpus) >= report.overall_accuracy


class TestEmitters:
    @pytest.fixture
    def report(self, grid):
        corpus = make_corpus(
            grid,
            [
                ("a", [coords((0, 0)), coords((0, 1))]),
                ("b", [coords((1, 0)), coords((2, 1))]),
            ],
        )
        predictions = exact_predictions(corpus)
        predictions[("b", 2)] = coords((0, 0))
        return score(predictions, corpus)

    def test_json_round_trips(self, report):
        payload = json.loads(report_to_json(report))
        assert payload["overall_accuracy"] == 0.75
        assert payload["per_position"] == [1.0, 0.5, 0.0, 0.0]
        assert payload["per_position_counts"] == [2, 2, 0, 0]
        assert payload["sequence_accuracy"] == 0.5
        assert payload["n_questions"] == 4
        assert payload["n_sequences"] == 2

    def test_json_marks_sequence_accuracy_as_additional(self, report):
        payload = json.loads(report_to_json(report))
        assert any("sequence_accuracy" in note for note in payload["notes"])
        assert any("additional" in note for note in payload["notes"])

    def test_dict_matches_report_fields(self, report):
        payload = report_to_dict(report)
        assert payload["overall_accuracy"] == report.overall_accuracy
        assert tuple(payload["per_position"]) == report.per_position

    def test_tsv_layout(self, report):
        lines = report_to_tsv(report).splitlines()
        assert lines[0] == "metric\tvalue\tnote"
        table = {line.split("\t")[0]: line.split("\t")[1:] for line in lines[1:]}
        assert table["overall_accuracy"][0] == "0.750000"
        assert table["position_2"] == ["0.500000", "n=2"]
        assert table["position_4_plus"] == ["0.000000", "n=0"]
        assert table["sequence_accuracy"] == ["0.500000", "additional metric"]
        assert table["n_questions"][0] == "4"


class TestPredictionsIO:
    def test_round_trip(self, tmp_path):
        predictions = {
            ("a", 1): coords((0, 0)),
            ("a", 2): coords((0, 1), (2, 1)),
            ("b", 1): AnswerCoordinates.of(()),
        }
        path = tmp_path / "pred.tsv"
        save_predictions(predictions, path)
        assert load_predictions(path) == predictions

    def test_extra_columns_tolerated(self, tmp_path):
        path = tmp_path / "pred.tsv"
        path.write_text(
            "sequence_id\tposition\tanswer_coordinates\tcorrect\n"
            "a\t1\t['(0, 0)']\t1\n"
        )
        assert load_predictions(path) == {("a", 1): coords((0, 0))}

    def test_missing_column_rejected(self, tmp_path):
        path = tmp_path / "pred.tsv"
        path.write_text("sequence_id\tposition\na\t1\n")
        with pytest.raises(EvaluationError, match="answer_coordinates"):
            load_predictions(path)

    def test_bad_position_rejected(self, tmp_path):
        path = tmp_path / "pred.tsv"
        path.write_text(
            "sequence_id\tposition\tanswer_coordinates\na\tfirst\t['(0, 0)']\n"
        )
        with pytest.raises(EvaluationError, match="line 2"):
            load_predictions(path)

    def test_duplicate_key_rejected(self, tmp_path):
        path = tmp_path / "pred.tsv"
        path.write_text(
            "sequence_id\tposition\tanswer_coordinates\n"
            "a\t1\t['(0, 0)']\n"
            "a\t1\t['(1, 1)']\n"
        )
        with pytest.raises(EvaluationError, match="duplicate"):
            load_predictions(path)
