import json

import pytest

from temprel.cli import EXIT_CONFIG, EXIT_DATA, EXIT_IO, EXIT_OK, main

SMALL = {
    "gen": {"n_docs": 44, "seed": 0},
    "seeds": [0, 1],
    "epochs_grid": [1, 2],
    "criteria": {"max_iterations": 3, "change_threshold": 0.02},
    "report": "report.jsonl",
}


def write_config(path, **changes):
    path.write_text(json.dumps({**SMALL, **changes}))
    return str(path)


def test_table_prints_all_rows(capsys):
    assert main(["table"]) == EXIT_OK
    out = capsys.readouterr().out
    for name in ("before", "after", "includes", "is_included", "simultaneous", "vague"):
        assert name in out


def test_gen_is_deterministic(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.json")
    assert main(["gen", "--config", cfg, "--out", str(tmp_path / "a")]) == EXIT_OK
    assert main(["gen", "--config", cfg, "--out", str(tmp_path / "b")]) == EXIT_OK
    for name in ("F", "P", "test"):
        assert (tmp_path / "a" / f"{name}.jsonl").read_bytes() == (tmp_path / "b" / f"{name}.jsonl").read_bytes()
    assert "ratio" in capsys.readouterr().out


def test_train_infer_eval_round_trip(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.json")
    data = tmp_path / "data"
    assert main(["gen", "--config", cfg, "--out", str(data)]) == EXIT_OK
    model = tmp_path / "m.json"
    assert main(["train", "--config", cfg, "--data", str(data), "--system", "5", "--epochs", "2", "--out", str(model)]) == EXIT_OK
    pred = tmp_path / "pred.jsonl"
    assert main(["infer", "--model", str(model), "--corpus", str(data / "test.jsonl"), "--out", str(pred)]) == EXIT_OK
    capsys.readouterr()
    assert main(["eval", "--pred", str(pred), "--gold", str(data / "test.jsonl")]) == EXIT_OK
    assert "Awareness" in capsys.readouterr().out
    assert main(["mcnemar", "--a", str(pred), "--b", str(pred), "--gold", str(data / "test.jsonl")]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["p"] == 1.0


def test_mcnemar_counts(capsys):
    assert main(["mcnemar", "--counts", "10", "2"]) == EXIT_OK
    rec = json.loads(capsys.readouterr().out)
    assert rec["p"] == pytest.approx(0.0433, abs=1e-3)


def test_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"bogus": 1}))
    assert main(["experiment", "--config", str(bad)]) == EXIT_CONFIG
    assert main(["experiment", "--config", str(tmp_path / "missing.json")]) == EXIT_CONFIG
    assert main(["mcnemar"]) == EXIT_CONFIG
    garbage = tmp_path / "g.jsonl"
    garbage.write_text("{not json\n")
    assert main(["eval", "--pred", str(garbage), "--gold", str(garbage)]) == EXIT_DATA
    assert main(["eval", "--pred", str(tmp_path / "nope.jsonl"), "--gold", str(garbage)]) == EXIT_IO
    assert "error" in capsys.readouterr().err


def _run_experiment(tmp_path, monkeypatch, name):
    run_dir = tmp_path / name
    run_dir.mkdir()
    monkeypatch.chdir(run_dir)
    cfg = write_config(run_dir / "c.json", seeds=[0], systems=[1, 5, 9])
    assert main(["experiment", "--config", cfg]) == EXIT_OK
    return run_dir


def test_experiment_reports_and_figures(tmp_path, monkeypatch, capsys):
    a = _run_experiment(tmp_path, monkeypatch, "a")
    b = _run_experiment(tmp_path, monkeypatch, "b")
    assert (a / "report.jsonl").read_bytes() == (b / "report.jsonl").read_bytes()
    records = [json.loads(line) for line in (a / "report.jsonl").read_text().splitlines()]
    kinds = [r["kind"] for r in records]
    assert kinds[0] == "config"
    assert kinds.count("cell") == 3 and kinds.count("mean") == 12
    assert {tuple(r["pair"]) for r in records if r["kind"] == "mcnemar"} == {(9, 1), (9, 5)}
    assert (a / "report.txt").exists()
    for stem in ("f_by_system", "precision_recall", "convergence"):
        assert (a / f"report_{stem}.png").stat().st_size > 0
    assert "McNemar 9 vs 1" in capsys.readouterr().out
