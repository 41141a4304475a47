import json
import subprocess
import sys

import pytest

from focusline import __version__
from focusline.cli import main


def run(args, capsys):
    code = main([str(a) for a in args])
    out, err = capsys.readouterr()
    return code, out, err


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    out = capsys.readouterr().out.strip()
    assert out == f"focusline {__version__} (config schema 1)"


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "focusline", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and __version__ in proc.stdout


def test_stage_by_stage(tmp_path, capsys):
    sessions = tmp_path / "sessions"
    code, out, _ = run(["synth", "--preset", "easy", "--seed", 3, "--out", sessions], capsys)
    assert code == 0 and "6 sessions" in out
    manifest = json.loads((sessions / "manifest.json").read_text())
    recs = []
    for i, entry in enumerate(manifest):
        dst = tmp_path / f"rec{i}.json"
        code, out, _ = run(["ingest-csv", "--file", sessions / entry["file"], "--label", entry["label"],
                            "--modality", "non-vr", "--out", dst], capsys)
        assert code == 0 and "3000 samples" in out
        recs.append(dst)
    code, _, _ = run(["preprocess", "--in", *recs, "--out", tmp_path / "series"], capsys)
    assert code == 0
    series = sorted((tmp_path / "series").glob("*.csv"))
    assert len(series) == 6
    code, out, _ = run(["features", "--in", *series, "--out", tmp_path / "table.csv", "--hop", 2.0], capsys)
    assert code == 0 and "x 50 features" in out
    code, out, _ = run(["split", "--in", tmp_path / "table.csv", "--seed", 1, "--out-prefix", tmp_path / "split"],
                       capsys)
    assert code == 0
    train, val, test = (tmp_path / "split" / f"{n}.csv" for n in ("train", "val", "test"))

    (tmp_path / "params.yaml").write_text("n_trees: 20\n")
    code, out, _ = run(["sweep-k", "--model", "random_forest", "--train", train, "--val", val,
                        "--params", tmp_path / "params.yaml", "--out", tmp_path / "sweep.csv"], capsys)
    assert code == 0
    assert (tmp_path / "sweep.csv").read_text().splitlines()[0] == "k,accuracy"
    assert len((tmp_path / "sweep.csv").read_text().splitlines()) == 11

    (tmp_path / "grid.yaml").write_text("n_trees: [10, 20]\nmax_depth: [null]\n")
    code, out, _ = run(["tune", "--model", "random_forest", "--train", train, "--val", val, "--k", 10,
                        "--grid", tmp_path / "grid.yaml", "--out", tmp_path / "tune.json"], capsys)
    assert code == 0 and "chosen" in out
    assert len(json.loads((tmp_path / "tune.json").read_text())["points"]) == 2

    code, out, _ = run(["train", "--model", "gbt", "--train", train, "--k", 10, "--out", tmp_path / "model.bin"],
                       capsys)
    assert code == 0
    code, out, _ = run(["evaluate", "--model", tmp_path / "model.bin", "--test", test,
                        "--out", tmp_path / "report"], capsys)
    assert code == 0 and out.startswith("accuracy=")
    assert (tmp_path / "report" / "report.json").exists()


def test_errors_go_to_stderr(tmp_path, capsys):
    code, out, err = run(["ingest-csv", "--file", tmp_path / "missing.csv", "--label", 0,
                          "--modality", "vr"], capsys)
    assert code != 0 and err.startswith("error:") and not out
    (tmp_path / "bad.csv").write_text("TimeStamp\n")
    code, _, err = run(["ingest-csv", "--file", tmp_path / "bad.csv", "--label", 0, "--modality", "vr"], capsys)
    assert code != 0 and "Delta_TP9" in err
    with pytest.raises(SystemExit) as exc:
        main(["ingest-csv", "--file", "x.csv", "--label", "7", "--modality", "vr"])
    assert exc.value.code == 2


def test_pipeline_stage_failure_names_stage(tmp_path, capsys):
    (tmp_path / "bad.csv").write_text("TimeStamp,Delta_TP9\n")
    (tmp_path / "c.yaml").write_text("out_dir: out\nsessions:\n  - {file: bad.csv, label: 0}\n")
    code, _, err = run(["pipeline", "--config", tmp_path / "c.yaml"], capsys)
    assert code != 0 and "stage 'ingest'" in err


def test_pipeline_seed_priority(tmp_path, capsys, monkeypatch):
    captured = {}

    def fake_run(cfg, echo=None):
        captured["seed"] = cfg.seed
        raise SystemExit(0)

    monkeypatch.setattr("focusline.cli.run_pipeline", fake_run)
    (tmp_path / "c.yaml").write_text("seed: 5\n")
    monkeypatch.setenv("FOCUSLINE_SEED", "11")
    with pytest.raises(SystemExit):
        main(["pipeline", "--config", str(tmp_path / "c.yaml"), "--seed", "3"])
    assert captured["seed"] == 3
    with pytest.raises(SystemExit):
        main(["pipeline", "--config", str(tmp_path / "c.yaml")])
    assert captured["seed"] == 11
    monkeypatch.delenv("FOCUSLINE_SEED")
    with pytest.raises(SystemExit):
        main(["pipeline", "--config", str(tmp_path / "c.yaml")])
    assert captured["seed"] == 5
