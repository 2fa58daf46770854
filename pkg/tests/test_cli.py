import csv
import json
import math

import numpy as np
import pytest

from decobath import runner
from decobath.cli import main

GAMMA = 0.01


def base_config(tmp_path, **overrides):
    cfg = {
        "units": "dimensionless-hbar1",
        "bath": {"spectrum": "flat", "density": 1.0, "coupling": math.sqrt(GAMMA / (2 * math.pi)),
                 "omega_min": 0.5, "omega_max": 1.5, "n_modes": 400, "temperature_ratio": 0.0},
        "cat": {"alpha_mag": 1.0, "delta_phi": math.pi, "c1": [1, 0], "c2": [1, 0]},
        "time": {"t_max": 3 / GAMMA, "n_steps": 31},
        "paths": ["ww", "exact"],
        "output": {"series_path": str(tmp_path / "series.csv"), "summary_path": str(tmp_path / "summary.json")},
    }
    for key, value in overrides.items():
        section, _, field = key.partition(".")
        if field:
            cfg[section][field] = value
        else:
            cfg[section] = value
    return cfg


def write_config(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def read_series(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_uncoupled_run(tmp_path):
    cfg = base_config(tmp_path, **{"bath.coupling": 0.0, "bath.n_modes": 20, "paths": ["exact", "ww", "ode"],
                                   "time": {"t_max": 20.0, "n_steps": 5}})
    assert main(["run", "--config", write_config(tmp_path, cfg)]) == 0
    rows = read_series(tmp_path / "series.csv")
    assert len(rows) == 15
    for r in rows:
        # fixed-step RK4 leaves a phase-error residue of order 1e-12
        tol = 1e-9 if r["path"] == "ode" else 1e-12
        assert float(r["abs_u"]) == pytest.approx(1.0, abs=tol)
        assert float(r["abs_F"]) == pytest.approx(1.0, abs=tol)
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["tau_d_formula"] == math.inf
    assert any("gamma is zero" in w for w in summary["warnings"])


def test_flat_vacuum_run_follows_cat_decay(tmp_path):
    assert main(["run", "--config", write_config(tmp_path, base_config(tmp_path))]) == 0
    rows = read_series(tmp_path / "series.csv")
    assert list(rows[0].keys()) == list(runner.CSV_COLUMNS)
    ww = [r for r in rows if r["path"] == "ww"]
    for r in ww:
        expected = math.exp(-2 * (1 - math.exp(-GAMMA * float(r["t"]))))
        assert float(r["abs_F"]) == pytest.approx(expected, rel=0.05)
        assert r["abs_F_thermal"] == "" and r["mc_abs_F"] == "" and r["mc_stderr"] == ""
    exact = [r for r in rows if r["path"] == "exact"]
    assert max(float(r["sum_rule_residual"]) for r in exact) < 1e-10
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["tau_d_fitted"] == pytest.approx(summary["tau_d_formula"], rel=0.05)
    assert summary["tau_d_formula"] == pytest.approx(50.0)
    assert summary["recurrence_flagged"] is False and summary["warnings"] == []
    assert set(runner.SUMMARY_FIELDS) <= set(summary)


def test_numbers_use_17_significant_digits(tmp_path):
    main(["run", "--config", write_config(tmp_path, base_config(tmp_path, **{"bath.n_modes": 32}))])
    text = (tmp_path / "series.csv").read_text()
    row = text.splitlines()[2].split(",")
    assert row[2] == format(float(row[2]), ".17g")
    assert float(row[4]) == float(format(float(row[4]), ".17g"))


def test_thermal_and_monte_carlo_columns(tmp_path):
    cfg = base_config(tmp_path, **{"bath.n_modes": 64, "bath.temperature_ratio": 1.0,
                                   "thermal_mc": {"n_samples": 2000, "seed": 3},
                                   "time": {"t_max": 100.0, "n_steps": 5}})
    assert main(["run", "--config", write_config(tmp_path, cfg)]) == 0
    for r in read_series(tmp_path / "series.csv"):
        assert float(r["abs_F_thermal"]) <= float(r["abs_F"]) + 1e-15
        assert float(r["mc_stderr"]) >= 0
        if r["path"] == "exact":
            assert abs(float(r["mc_abs_F"]) - float(r["abs_F_thermal"])) < 5 * float(r["mc_stderr"]) + 1e-12


def test_recurrence_warning(tmp_path):
    cfg = base_config(tmp_path, **{"bath.n_modes": 20, "time": {"t_max": 200.0, "n_steps": 5}})
    main(["run", "--config", write_config(tmp_path, cfg)])
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["recurrence_time"] == pytest.approx(2 * math.pi / 0.05)
    assert summary["recurrence_flagged"] is True
    assert any(w.startswith("recurrence") for w in summary["warnings"])


def test_deterministic_output(tmp_path, monkeypatch):
    cfg = base_config(tmp_path, **{"bath.n_modes": 64, "bath.temperature_ratio": 2.0,
                                   "thermal_mc": {"n_samples": 1000, "seed": 9}})
    path = write_config(tmp_path, cfg)
    main(["run", "--config", path])
    first = (tmp_path / "series.csv").read_bytes()
    monkeypatch.setenv("DECOBATH_THREADS", "1")
    main(["run", "--config", path])
    assert (tmp_path / "series.csv").read_bytes() == first


@pytest.mark.parametrize("mutate", [
    lambda c: c.update(units="SI"),
    lambda c: c["time"].update(n_steps=1),
    lambda c: c["time"].update(t_max=-1),
    lambda c: c.update(paths=[]),
    lambda c: c.update(paths=["exact", "magic"]),
    lambda c: c["bath"].update(n_modes=0),
    lambda c: c["bath"].update(omega_min=2.0),
    lambda c: c["cat"].update(c1=0, c2=0),
    lambda c: c.pop("time"),
])
def test_invalid_config_exit_code(tmp_path, mutate):
    cfg = base_config(tmp_path)
    mutate(cfg)
    assert main(["run", "--config", write_config(tmp_path, cfg)]) == 2


def test_malformed_json_exit_code(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    assert main(["run", "--config", str(path)]) == 2


def test_missing_config_is_io_error(tmp_path):
    assert main(["run", "--config", str(tmp_path / "absent.json")]) == 4


def test_unwritable_output_is_io_error(tmp_path):
    cfg = base_config(tmp_path, **{"bath.n_modes": 8, "output": {"series_path": str(tmp_path / "no" / "s.csv")}})
    assert main(["run", "--config", write_config(tmp_path, cfg)]) == 4


def test_numerical_failure_exit_code(tmp_path):
    cfg = base_config(tmp_path, **{"bath.n_modes": 4, "bath.coupling": 1e6, "paths": ["ode"],
                                   "time": {"t_max": 2.0, "n_steps": 3}})
    assert main(["run", "--config", write_config(tmp_path, cfg)]) == 3


@pytest.mark.parametrize("suite", runner.SUITES)
def test_verify_suites_pass(suite, capsys):
    assert main(["verify", "--suite", suite]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and f"suite {suite}: PASS" in out


def test_verify_unknown_suite():
    assert main(["verify", "--suite", "nope"]) == 2


def test_verify_reports_failure(monkeypatch, capsys):
    monkeypatch.setattr(runner, "_suite_gaussian", lambda: [runner.Check("forced", 1.0, 0.5)])
    assert main(["verify", "--suite", "gaussian"]) == 1
    assert "FAIL" in capsys.readouterr().out


def _sweep(tmp_path, cfg, param, values):
    table = tmp_path / f"sweep_{param}.csv"
    rc = main(["sweep", "--config", write_config(tmp_path, cfg), "--param", param,
               "--values", ",".join(repr(v) for v in values), "--table", str(table)])
    assert rc == 0
    return read_series(table)


def test_sweep_delta_phi_scaling(tmp_path):
    values = [math.pi / 4, math.pi / 2, math.pi]
    rows = _sweep(tmp_path, base_config(tmp_path), "delta_phi", values)
    rates = [1 / float(r["tau_d_fitted"]) for r in rows]
    for (v, rate) in zip(values[:-1], rates[:-1]):
        expected = math.sin(v / 2) ** 2 / math.sin(values[-1] / 2) ** 2
        assert rate / rates[-1] == pytest.approx(expected, rel=0.05)


def test_sweep_n_modes_residual_decreases(tmp_path):
    cfg = base_config(tmp_path, paths=["ww"])
    rows = _sweep(tmp_path, cfg, "n_modes", [50, 100, 200, 400])
    residuals = [float(r["max_sum_rule_residual"]) for r in rows]
    assert all(a > b for a, b in zip(residuals, residuals[1:]))


def test_sweep_temperature_scaling(tmp_path):
    cfg = base_config(tmp_path, **{"bath.occupation": "classical"})
    rows = _sweep(tmp_path, cfg, "temperature_ratio", [0.0, 1.0, 2.0])
    taus = [float(r["tau_d_fitted"]) for r in rows]
    # (1 + kT/2w) doubles from T = 0 to T = 2
    assert taus[0] / taus[2] == pytest.approx(2.0, rel=0.05)
    assert taus[0] / taus[1] == pytest.approx(1.5, rel=0.05)


def test_sweep_unknown_param(tmp_path):
    path = write_config(tmp_path, base_config(tmp_path))
    assert main(["sweep", "--config", path, "--param", "gamma", "--values", "1,2"]) == 2
    assert main(["sweep", "--config", path, "--param", "n_modes", "--values", "a,b"]) == 2


def test_run_without_output_paths_prints(tmp_path, capsys):
    cfg = base_config(tmp_path, **{"bath.n_modes": 8, "output": {}, "time": {"t_max": 10.0, "n_steps": 3}})
    assert main(["run", "--config", write_config(tmp_path, cfg)]) == 0
    out = capsys.readouterr().out
    assert '"gamma"' in out and "path,t,re_u" in out


def test_complex_coupling_and_weights(tmp_path):
    cfg = base_config(tmp_path, **{"bath.n_modes": 16, "bath.coupling": {"re": 0.02, "im": 0.03},
                                   "cat": {"alpha_mag": 1.0, "delta_phi": 1.0, "c1": [1, 1], "c2": 0.5},
                                   "time": {"t_max": 50.0, "n_steps": 4}})
    assert main(["run", "--config", write_config(tmp_path, cfg)]) == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["gamma"] == pytest.approx(2 * math.pi * (0.02**2 + 0.03**2))
    w = np.array([complex(*x) for x in summary["normalized_weights"]])
    assert w[0] / w[1] == pytest.approx(2 * (1 + 1j))
