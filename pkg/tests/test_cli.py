"""End-to-end runs of every subcommand against small fixtures."""

import json

import pytest

from seqtab.cli import main
from seqtab.corpus import load_corpus
from seqtab.evaluation import save_predictions
from seqtab.rewriting import RewritePolicy

COL_SPEC = {
    "n_tables": 4,
    "rows_range": [3, 4],
    "cols_range": [2, 3],
    "sequence_length_range": [2, 2],
    "class_mix": {"select_column": 1.0},
    "seed": 5,
    "sequences_per_table": 1,
    "key_alphabet": "abc",
    "question_style": "terse",
}


@pytest.fixture(scope="module")
def corpus_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("gen")
    spec_path = out / "spec.json"
    spec_path.write_text(json.dumps(COL_SPEC))
    assert main(["gen", "--spec", str(spec_path), "--out", str(out)]) == 0
    return out


def corpus_args(corpus_dir):
    return [
        "--corpus",
        str(corpus_dir / "corpus.tsv"),
        "--tables",
        str(corpus_dir / "tables"),
    ]


class TestGen:
    def test_writes_a_loadable_corpus(self, corpus_dir, capsys):
        split = load_corpus(corpus_dir / "corpus.tsv", corpus_dir / "tables")
        assert len(split.sequences) == 4
        assert split.n_questions == 8

    def test_reports_counts_and_mix(self, tmp_path, capsys):
        spec_path = tmp_path / "spec.json"
        spec_path.write_text(json.dumps(COL_SPEC))
        assert main(["gen", "--spec", str(spec_path), "--out", str(tmp_path)]) == 0
        out = capsys.readouterr().out
        assert "4 sequences / 8 questions" in out
        assert "select_column: 1.000" in out

    def test_unknown_spec_key_fails(self, tmp_path, capsys):
        spec_path = tmp_path / "spec.json"
        spec_path.write_text(json.dumps({"n_tables": 2, "style": "terse"}))
        assert main(["gen", "--spec", str(spec_path), "--out", str(tmp_path)]) == 1
        assert "error:" in capsys.readouterr().err


class TestValidate:
    def test_valid_corpus(self, corpus_dir, capsys):
        assert main(["validate", *corpus_args(corpus_dir)]) == 0
        assert capsys.readouterr().out.startswith("ok:")

    def test_corrupt_corpus(self, corpus_dir, tmp_path, capsys):
        bad = tmp_path / "bad.tsv"
        lines = (corpus_dir / "corpus.tsv").read_text().splitlines()
        lines[1] = lines[1].replace("\t1\t", "\t7\t", 1)
        bad.write_text("\n".join(lines) + "\n")
        rc = main(
            ["validate", "--corpus", str(bad), "--tables", str(corpus_dir / "tables")]
        )
        assert rc == 1
        assert "error:" in capsys.readouterr().err


class TestParse:
    @pytest.fixture
    def table_path(self, tmp_path):
        path = tmp_path / "teams.csv"
        path.write_text("team,points\nants,7\nbees,3\ncats,9\n")
        return path

    def test_ranks_candidates(self, table_path, capsys):
        rc = main(
            ["parse", "--question", "what are all of the teams?", "--table", str(table_path)]
        )
        assert rc == 0
        out = capsys.readouterr().out
        assert out.startswith("1. score=")
        assert "SelectColumn" in out
        assert "->" in out

    def test_prev_scopes_candidates(self, table_path, capsys):
        rc = main(
            [
                "parse",
                "--question",
                "points of those?",
                "--table",
                str(table_path),
                "--prev",
                "0,0;2,0",
                "--beam",
                "10",
            ]
        )
        assert rc == 0
        assert "previous_answer_rows" in capsys.readouterr().out

    def test_bad_prev_fails(self, table_path, capsys):
        rc = main(
            ["parse", "--question", "q?", "--table", str(table_path), "--prev", "zero"]
        )
        assert rc == 1
        assert "--prev" in capsys.readouterr().err


class TestPolicyStudy:
    def test_single_policy_report(self, corpus_dir, tmp_path, capsys):
        report_path = tmp_path / "report.json"
        rc = main(
            [
                "policy-study",
                *corpus_args(corpus_dir),
                "--policy",
                "never",
                "--report",
                str(report_path),
            ]
        )
        assert rc == 0
        payload = json.loads(report_path.read_text())
        assert set(payload) == {"never"}
        entry = payload["never"]
        assert set(entry) == {"accuracy", "oracle", "per_position", "n_questions"}
        assert entry["oracle"] >= entry["accuracy"]

    def test_all_policies_report(self, corpus_dir, tmp_path):
        report_path = tmp_path / "report.json"
        rc = main(
            ["policy-study", *corpus_args(corpus_dir), "--report", str(report_path)]
        )
        assert rc == 0
        payload = json.loads(report_path.read_text())
        assert set(payload) == {p.value for p in RewritePolicy}


class TestTrainAndEval:
    def test_train_writes_checkpoint_and_log(self, corpus_dir, tmp_path, capsys):
        config_path = tmp_path / "train.json"
        config_path.write_text(
            json.dumps({"epochs": 1, "d": 8, "char_dim": 4, "dev_fraction": 0.3})
        )
        out = tmp_path / "ckpt"
        rc = main(
            [
                "train",
                *corpus_args(corpus_dir),
                "--config",
                str(config_path),
                "--out",
                str(out),
            ]
        )
        assert rc == 0
        assert (out / "best.ckpt").is_file()
        assert (out / "train_log.jsonl").is_file()
        assert "best dev accuracy" in capsys.readouterr().out

    def test_eval_scores_exact_predictions(self, corpus_dir, tmp_path, capsys):
        split = load_corpus(corpus_dir / "corpus.tsv", corpus_dir / "tables")
        predictions = {
            (seq.id, entry.position): entry.gold
            for seq in split.sequences
            for entry in seq.entries
        }
        pred_path = tmp_path / "pred.tsv"
        save_predictions(predictions, pred_path)
        report_path = tmp_path / "report.json"
        rc = main(
            [
                "eval",
                *corpus_args(corpus_dir),
                "--pred",
                str(pred_path),
                "--out",
                str(report_path),
            ]
        )
        assert rc == 0
        payload = json.loads(report_path.read_text())
        assert payload["overall_accuracy"] == 1.0
        out = capsys.readouterr().out
        assert "overall_accuracy\t1.000000" in out

    def test_eval_missing_prediction_fails(self, corpus_dir, tmp_path, capsys):
        pred_path = tmp_path / "pred.tsv"
        pred_path.write_text("sequence_id\tposition\tanswer_coordinates\n")
        rc = main(
            [
                "eval",
                *corpus_args(corpus_dir),
                "--pred",
                str(pred_path),
                "--out",
                str(tmp_path / "report.json"),
            ]
        )
        assert rc == 1
        assert "missing prediction" in capsys.readouterr().err


class TestServe:
    def test_wires_service_and_app(self, corpus_dir, monkeypatch):
        captured = {}

        def fake_run(app, host, port):
            captured["app"] = app
            captured["host"] = host
            captured["port"] = port

        monkeypatch.setattr("uvicorn.run", fake_run)
        rc = main(
            [
                "serve",
                "--tables",
                str(corpus_dir / "tables"),
                "--port",
                "9001",
            ]
        )
        assert rc == 0
        assert captured["port"] == 9001
        paths = {route.path for route in captured["app"].routes}
        assert "/sessions" in paths
        assert "/tables" in paths

    def test_missing_tables_dir_fails(self, tmp_path, capsys):
        rc = main(["serve", "--tables", str(tmp_path / "absent")])
        assert rc == 1
        assert "tables directory" in capsys.readouterr().err


def test_unknown_command_exits_with_usage():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
