"""Command-line interface: exit codes, outputs, small end-to-end runs."""
import json

import pytest

from boxlens.cli import build_parser, run


@pytest.fixture()
def small_jsonl(tmp_path):
    """Tiny strongly-signalled dataset for fast CLI runs."""
    path = tmp_path / "data.jsonl"
    run([
        "synth-data", "--n-docs", "160", "--vocab-size", "40",
        "--n-signal", "4", "--signal-low", "0.05", "--signal-high", "0.9",
        "--seed", "3", "--out", str(tmp_path),
    ])
    (tmp_path / "synth.jsonl").rename(path)
    return path


class TestParser:
    def test_requires_command(self, capsys):
        with pytest.raises(SystemExit) as exc:
            build_parser().parse_args([])
        assert exc.value.code == 2

    def test_unknown_command(self):
        with pytest.raises(SystemExit) as exc:
            build_parser().parse_args(["frobnicate"])
        assert exc.value.code == 2

    def test_bad_model_kind(self):
        with pytest.raises(SystemExit) as exc:
            build_parser().parse_args(["train", "--kind", "svm"])
        assert exc.value.code == 2


class TestSynthData:
    def test_writes_jsonl(self, tmp_path, capsys):
        code = run([
            "synth-data", "--n-docs", "60", "--vocab-size", "30",
            "--out", str(tmp_path),
        ])
        assert code == 0
        lines = (tmp_path / "synth.jsonl").read_text().splitlines()
        assert len(lines) == 60
        row = json.loads(lines[0])
        assert set(row) == {"text", "label"}
        assert "synth-data: wrote 60 docs" in capsys.readouterr().out


class TestTrain:
    def test_train_on_file(self, small_jsonl, tmp_path, capsys):
        out = tmp_path / "out"
        code = run([
            "train", "--dataset", str(small_jsonl), "--kind", "logreg",
            "--out", str(out),
        ])
        assert code == 0
        report = json.loads((out / "train.json").read_text())
        assert report["metrics"]["test_acc"] >= 0.8
        assert "test_acc=" in capsys.readouterr().out

    def test_missing_file_is_exit_1(self, tmp_path):
        code = run([
            "train", "--dataset", str(tmp_path / "nope.jsonl"),
            "--out", str(tmp_path / "out"),
        ])
        assert code == 1

    def test_malformed_file_is_exit_1(self, tmp_path):
        bad = tmp_path / "bad.jsonl"
        bad.write_text("{not json\n")
        code = run([
            "train", "--dataset", str(bad), "--out", str(tmp_path / "out")
        ])
        assert code == 1


class TestExplain:
    def test_writes_explanation(self, small_jsonl, tmp_path):
        out = tmp_path / "out"
        code = run([
            "explain", "--dataset", str(small_jsonl), "--k", "5",
            "--n-samples", "300", "--instance", "1", "--out", str(out),
        ])
        assert code == 0
        exp = json.loads((out / "explanation.json").read_text())
        assert len(exp["features"]) <= 5
        assert exp["config"]["k"] == 5


class TestPick:
    def test_writes_selection(self, small_jsonl, tmp_path):
        out = tmp_path / "out"
        code = run([
            "pick", "--dataset", str(small_jsonl), "--k", "4",
            "--n-samples", "200", "--budget", "3", "--pool", "8",
            "--out", str(out),
        ])
        assert code == 0
        result = json.loads((out / "pick.json").read_text())
        assert len(result["selected"]) == 3
        trace = result["coverage_trace"]
        assert all(b >= a - 1e-9 for a, b in zip(trace, trace[1:]))


class TestEvalFaithfulness:
    def test_writes_csv(self, small_jsonl, tmp_path, capsys):
        out = tmp_path / "out"
        code = run([
            "eval-faithfulness", "--dataset", str(small_jsonl),
            "--k", "5", "--n-samples", "300", "--out", str(out),
        ])
        assert code == 0
        text = (out / "faithfulness.csv").read_text()
        assert "surrogate" in text and "greedy" in text and "random" in text
        assert "eval-faithfulness" in capsys.readouterr().out
