import csv
import json
import math
import subprocess
import sys

import pytest

from driftwatch.cli import main


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def snapshot(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


@pytest.fixture(scope="module")
def fixtures(tmp_path_factory):
    root = tmp_path_factory.mktemp("fixtures")
    assert main(["gen-fixtures", "--out", str(root)]) == 0
    return root


@pytest.fixture(scope="module")
def synthetic_run(fixtures, tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    assert main(["run", "--config", str(fixtures / "synthetic.json"), "--out", str(out)]) == 0
    return out


def test_gen_fixtures_writes_everything(fixtures):
    for name in ("finance.csv", "pageviews.csv", "synthetic.json", "finance.json", "pageviews.json", "entropy_ou.json"):
        assert (fixtures / name).stat().st_size > 0
    assert read_rows(fixtures / "finance.csv")[0] == ["date", "close"]
    assert read_rows(fixtures / "pageviews.csv")[0] == ["date", "views"]


def test_run_outputs(synthetic_run):
    summary = json.loads((synthetic_run / "summary.json").read_text())
    pol = summary["policies"]
    assert set(pol) == {"never", "every_step", "entropy", "performance"}
    assert pol["every_step"]["retrain_fraction"] == 1.0
    assert pol["never"]["retrain_count"] == 0
    pareto = read_rows(synthetic_run / "pareto.csv")
    assert pareto[0] == ["policy", "retrain_count", "retrain_fraction", "avg_loss"]
    assert len(pareto) == 5
    for name in pol:
        rows = read_rows(synthetic_run / name / "loss_series.csv")
        assert rows[0] == ["step", "loss"]
        steps = [int(r[0]) for r in rows[1:]]
        assert steps == sorted(steps) and len(set(steps)) == len(steps)
        assert all(math.isfinite(float(r[1])) for r in rows[1:])
        counts = [int(r[1]) for r in read_rows(synthetic_run / name / "cumulative_retrains.csv")[1:]]
        assert counts == sorted(counts) and counts[-1] == pol[name]["retrain_count"]
    assert not (synthetic_run / "never" / "signal_series.csv").exists()
    sig = read_rows(synthetic_run / "entropy" / "signal_series.csv")
    assert sig[0] == ["step", "signal", "z", "triggered"]
    assert sum(int(r[3]) for r in sig[1:]) == pol["entropy"]["retrain_count"]


def test_rerun_is_byte_identical(fixtures, synthetic_run, tmp_path):
    assert main(["run", "--config", str(fixtures / "synthetic.json"), "--out", str(tmp_path)]) == 0
    assert snapshot(tmp_path) == snapshot(synthetic_run)


def test_resolved_config_replays(synthetic_run, tmp_path):
    cfg = json.loads((synthetic_run / "summary.json").read_text())["config"]
    (tmp_path / "replay.json").write_text(json.dumps(cfg))
    out = tmp_path / "out"
    assert main(["run", "--config", str(tmp_path / "replay.json"), "--out", str(out)]) == 0
    assert snapshot(out) == snapshot(synthetic_run)


def test_seed_override_changes_results(fixtures, synthetic_run, tmp_path):
    assert main(["run", "--config", str(fixtures / "synthetic.json"), "--out", str(tmp_path), "--seed", "7"]) == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["config"]["seed"] == 7
    assert (tmp_path / "pareto.csv").read_bytes() != (synthetic_run / "pareto.csv").read_bytes()


@pytest.mark.parametrize("name", ["finance", "pageviews"])
def test_csv_stream_runs(fixtures, tmp_path, name):
    assert main(["run", "--config", str(fixtures / f"{name}.json"), "--out", str(tmp_path)]) == 0
    pol = json.loads((tmp_path / "summary.json").read_text())["policies"]
    assert pol["every_step"]["retrain_fraction"] == 1.0
    assert all(math.isfinite(p["avg_loss"]) for p in pol.values())


@pytest.mark.parametrize(
    "patch,field",
    [
        ({"stream": {"kind": "synthetic", "batch_sise": 3}}, "batch_sise"),
        ({"defaults": {"window_steps": 0}}, "window_steps"),
        ({"policies": ["sometimes"]}, "policy"),
        ({"emit": ["everything"]}, "emit"),
        ({"seed": -1}, "seed"),
        ({"defaults": {"ewma": {"half_life": -3}}}, "half_life"),
    ],
)
def test_bad_config_exits_2(tmp_path, capsys, patch, field):
    (tmp_path / "bad.json").write_text(json.dumps(patch))
    assert main(["run", "--config", str(tmp_path / "bad.json"), "--out", str(tmp_path / "o")]) == 2
    assert field in capsys.readouterr().err


def test_missing_config_exits_2(tmp_path):
    assert main(["run", "--config", str(tmp_path / "nope.json")]) == 2


def test_missing_csv_exits_nonzero(tmp_path):
    (tmp_path / "c.json").write_text(json.dumps({"stream": {"kind": "csv", "path": "absent.csv"}}))
    assert main(["run", "--config", str(tmp_path / "c.json"), "--out", str(tmp_path / "o")]) in (1, 2)


def test_verify_entropy_passes_on_ou(fixtures, tmp_path, capsys):
    assert main(["verify-entropy", "--config", str(fixtures / "entropy_ou.json"), "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 4 and "FAIL" not in out
    rows = read_rows(tmp_path / "entropy_diagnostics.csv")
    assert rows[0] == ["t", "D_kl", "dDdt_flux", "sigma_tot", "q_hk", "mass"]
    t = [float(r[0]) for r in rows[1:]]
    assert t == sorted(t) and t[-1] == pytest.approx(8.0)
    summary = json.loads((tmp_path / "verify_summary.json").read_text())
    assert all(c["passed"] for c in summary["checks"].values())
    assert summary["nonequilibrium"]["D_kl_increases"]


def test_verify_entropy_flags_reversed_drift(tmp_path, capsys):
    (tmp_path / "rev.json").write_text(json.dumps({"preset": "reversed", "n_cells": 100, "t_end": 0.5}))
    assert main(["verify-entropy", "--config", str(tmp_path / "rev.json"), "--out", str(tmp_path / "o")]) == 1
    assert "FAIL  lyapunov_decay" in capsys.readouterr().out


def test_verify_entropy_rejects_unstable_dt(tmp_path, capsys):
    (tmp_path / "dt.json").write_text(json.dumps({"n_cells": 100, "dt": 0.1}))
    assert main(["verify-entropy", "--config", str(tmp_path / "dt.json"), "--out", str(tmp_path / "o")]) == 2
    assert "'dt'" in capsys.readouterr().err


def test_verify_entropy_is_byte_identical(tmp_path):
    cfg = tmp_path / "e.json"
    cfg.write_text(json.dumps({"n_cells": 100, "t_end": 1.0}))
    for sub in ("a", "b"):
        assert main(["verify-entropy", "--config", str(cfg), "--out", str(tmp_path / sub)]) == 0
    assert snapshot(tmp_path / "a") == snapshot(tmp_path / "b")


def test_console_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "driftwatch.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    for cmd in ("run", "verify-entropy", "gen-fixtures"):
        assert cmd in res.stdout
