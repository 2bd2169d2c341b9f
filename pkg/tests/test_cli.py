import csv
import json
import shutil
import subprocess
import sys

import numpy as np
import pytest

from rainpipe.cli import main
from rainpipe.errors import ConfigError, LeakageError
from rainpipe.experiment import ExperimentConfig, default_roster, explore, load_config, preset
from rainpipe.models import KINDS

from conftest import HEADER, weather_row, write_rows


@pytest.fixture(scope="module")
def small_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "s600.csv"
    assert main(["synth", "--out", str(path), "--rows", "600", "--seed", "5"]) == 0
    return path


@pytest.fixture(scope="module")
def run_dir(small_csv, tmp_path_factory):
    out = tmp_path_factory.mktemp("runs") / "exp2"
    assert main(["run", "--preset", "experiment2", "--data", str(small_csv), "--seed", "42",
                 "--out", str(out)]) == 0
    return out


def write_config(path, **fields):
    path.write_text(json.dumps(fields))
    return str(path)


# -- presets and config -----------------------------------------------------------


def test_presets_cover_three_arms():
    modes = {name: preset(name, "x.csv").resample.mode for name in ("experiment1", "experiment2", "experiment3")}
    assert modes == {"experiment1": "none", "experiment2": "undersample_random", "experiment3": "smote"}
    roster = default_roster()
    assert {m.kind for m in roster} == set(KINDS)
    assert [m.hyperparameters["k"] for m in roster if m.kind == "knn"] == [25, 27, 29]
    assert [m.hyperparameters["learning_rate"] for m in roster if m.kind == "gbm"] == [0.05, 0.1, 0.25]
    rf = next(m for m in roster if m.kind == "random_forest")
    assert rf.hyperparameters == {"n_estimators": 100, "max_depth": 4}
    with pytest.raises(ConfigError):
        preset("experiment4", "x.csv")


def test_config_round_trip_and_validation(tmp_path):
    cfg = preset("experiment3", "d.csv", seed=3)
    again = ExperimentConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert again.to_dict() == cfg.to_dict()
    for bad, msg in [({"models": []}, "models must be nonempty"),
                     ({"split_ratio": 1.0}, "split_ratio"),
                     ({"cv_k": 1}, "cv_k"),
                     ({"hash_width": 0}, "hash_width")]:
        c = ExperimentConfig.from_dict({"data_path": "d.csv", **bad})
        with pytest.raises(ConfigError, match=msg):
            c.validate()
    with pytest.raises(ConfigError, match="unknown config"):
        ExperimentConfig.from_dict({"data_path": "d.csv", "colour": 1})
    with pytest.raises(ConfigError, match="data_path"):
        ExperimentConfig.from_dict({})
    with pytest.raises(LeakageError):
        ExperimentConfig.from_dict({"data_path": "d.csv", "features": ["RISK_MM"]}).validate()
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.json")


# -- run outputs ----------------------------------------------------------------


def test_run_writes_every_artifact(run_dir):
    names = {p.name for p in run_dir.iterdir()}
    assert {"metrics.csv", "report.md", "selected_features.txt", "config.json", "pipeline.json",
            "ttests.csv", "models"} <= names
    assert {f"roc_{m.label}.csv" for m in default_roster()} <= names
    assert len(list((run_dir / "models").glob("*.json"))) == 11
    feats = (run_dir / "selected_features.txt").read_text().split()
    assert len(feats) == 4


def test_metrics_csv_layout(run_dir):
    rows = list(csv.DictReader(open(run_dir / "metrics.csv", newline="")))
    assert len(rows) == 11 * 11  # holdout + 10 folds per model
    assert {r["split"] for r in rows} == {"holdout"} | {f"fold{i}" for i in range(10)}
    for r in rows:
        assert 0 <= float(r["accuracy"]) <= 1


def test_report_content(run_dir):
    text = (run_dir / "report.md").read_text()
    assert "after resampling (undersample_random)" in text
    line = next(l for l in text.splitlines() if "after resampling" in l)
    counts = line.split("after resampling (undersample_random):")[1]
    no, yes = [int(part.split("=")[1].strip(" ;")) for part in counts.split(",")]
    assert no == yes
    for m in default_roster():
        assert f"| {m.label} |" in text
    assert "leakage: RISK_MM" in text
    assert "independence assumption" in text
    assert "reference ranking for this arm" in text


def test_rerun_is_byte_identical(run_dir, small_csv, tmp_path):
    out = tmp_path / "again"
    assert main(["run", "--preset", "experiment2", "--data", str(small_csv), "--seed", "42",
                 "--out", str(out)]) == 0
    for p in run_dir.rglob("*"):
        if p.is_file() and p.name != "config.json":
            assert (out / p.relative_to(run_dir)).read_bytes() == p.read_bytes(), p.name


def test_resolved_config_reproduces_outputs(run_dir, tmp_path):
    cfg = json.loads((run_dir / "config.json").read_text())
    cfg["report_dir"] = str(tmp_path / "from_config")
    cfg["models"] = cfg["models"][:2]
    path = write_config(tmp_path / "c.json", **cfg)
    assert main(["run", "--config", path]) == 0
    got = (tmp_path / "from_config" / "metrics.csv").read_text().splitlines()
    ref = (run_dir / "metrics.csv").read_text().splitlines()
    names = {m["name"] for m in cfg["models"]}
    assert got[1:] == [r for r in ref[1:] if r.split(",")[0] in names]


def test_no_leakage_note_without_risk_column(synth_csv_no_risk, tmp_path):
    cfg = preset("experiment1", str(synth_csv_no_risk), report_dir=str(tmp_path / "r"), cv_k=3,
                 models=[m for m in default_roster() if m.kind == "tree"])
    path = write_config(tmp_path / "c.json", **cfg.to_dict())
    assert main(["run", "--config", path]) == 0
    assert "leakage" not in (tmp_path / "r" / "report.md").read_text()


def test_evaluate_saved_run(run_dir, small_csv, capsys):
    assert main(["evaluate", "--run", str(run_dir), "--data", str(small_csv)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert set(out) == {m.label for m in default_roster()}
    assert all(0 <= r["accuracy"] <= 1 for r in out.values())


# -- exit codes ---------------------------------------------------------------------


def test_empty_models_exit_2(small_csv, tmp_path, capsys):
    path = write_config(tmp_path / "c.json", data_path=str(small_csv), models=[])
    assert main(["run", "--config", path]) == 2
    assert "models must be nonempty" in capsys.readouterr().err


def test_config_errors_exit_2(small_csv, tmp_path):
    leak = write_config(tmp_path / "a.json", data_path=str(small_csv), features=["RISK_MM"])
    assert main(["run", "--config", leak]) == 2
    nocol = write_config(tmp_path / "b.json", data_path=str(small_csv), hash_columns=["Nope"])
    assert main(["run", "--config", nocol]) == 2
    assert main(["run", "--preset", "experiment1"]) == 2


def test_data_errors_exit_3(tmp_path):
    bad = write_rows(tmp_path / "bad.csv", [weather_row(MinTemp="oops")])
    assert main(["explore", "--data", str(bad)]) == 3
    assert main(["run", "--preset", "experiment1", "--data", str(tmp_path / "none.csv")]) == 3


def test_numeric_failure_exit_4(small_csv, tmp_path, capsys):
    path = write_config(tmp_path / "c.json", data_path=str(small_csv), cv_k=2,
                        report_dir=str(tmp_path / "r"),
                        models=[{"kind": "logreg", "hyperparameters": {"learning_rate": 1e308, "n_iters": 20}}])
    assert main(["run", "--config", path]) == 4
    assert "non-finite" in capsys.readouterr().err


def test_console_script_entry_point(small_csv, tmp_path):
    exe = shutil.which("rainpipe")
    cmd = [exe] if exe else [sys.executable, "-m", "rainpipe.cli"]
    res = subprocess.run(cmd + ["explore", "--data", str(small_csv)], capture_output=True, text=True)
    assert res.returncode == 0 and "Sunshine" in res.stdout


# -- explore ------------------------------------------------------------------------


def test_explore_summary_and_correlation(small_csv, tmp_path):
    res = explore(small_csv, tmp_path / "ex")
    rows = {r["column"]: r for r in res["summary"]}
    assert rows["RainTomorrow"]["count"] == 600
    assert 0 < rows["Sunshine"]["missing_pct"] < 100
    assert sum(res["class_counts"].values()) == 600
    corr = list(csv.reader(open(tmp_path / "ex" / "correlation.csv", newline="")))
    assert corr[0][-1] == "RainTomorrow"
    assert float(corr[-1][-1]) == 1.0


def test_explore_empty_table(tmp_path, capsys):
    path = write_rows(tmp_path / "e.csv", [])
    assert main(["explore", "--data", str(path), "--out", str(tmp_path / "ex")]) == 0
    rows = list(csv.DictReader(open(tmp_path / "ex" / "summary.csv", newline="")))
    assert all(r[k] == "" for r in rows for k in ("missing_pct", "mean", "std", "min", "max"))
    corr = list(csv.reader(open(tmp_path / "ex" / "correlation.csv", newline="")))
    assert all(cell == "" for row in corr[1:] for cell in row[1:])


def test_explore_column_equal_to_target(tmp_path):
    rows = [weather_row(RISK_MM=v, RainTomorrow="Yes" if v else "No") for v in (0, 1, 1, 0, 1)]
    res = explore(write_rows(tmp_path / "t.csv", rows))
    names = res["correlation_columns"]
    assert res["correlation"][names.index("RISK_MM"), names.index("RainTomorrow")] == 1.0
