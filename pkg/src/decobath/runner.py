"""Configuration-driven experiments: ``run``, ``sweep`` and the ``verify`` suites."""
from __future__ import annotations

import csv
import io
import itertools
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import decoherence as dec
from .bath import BathSpec, DiscreteBath, discretize, reference_flat_spec
from .errors import ConfigError
from .evolution import CoherentLabels, SuperpositionState, evolve_labels, normalize, sum_rule_residual
from .propagator import (HermitianPropagator, PropagatorSlice, coefficients_to_slice,
                         integrate_coefficients, unitarity_residual, ww_slice)

UNITS = "dimensionless-hbar1"
PATHS = ("exact", "ode", "ww")
CSV_COLUMNS = ("path", "t", "re_u", "im_u", "abs_u", "sum_rule_residual", "re_F", "im_F",
               "abs_F", "abs_F_thermal", "mc_abs_F", "mc_stderr")
SUMMARY_FIELDS = ("gamma", "lamb_shift", "omega_tilde", "tau_d_formula", "tau_d_fitted",
                  "max_sum_rule_residual", "recurrence_time")
SWEEP_PARAMS = ("delta_phi", "alpha_mag", "temperature_ratio", "n_modes")
SUITES = ("sumrules", "ww_agreement", "thermal", "gaussian")


def _complex(value, name) -> complex:
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, dict):
        return complex(float(value.get("re", 0.0)), float(value.get("im", 0.0)))
    if isinstance(value, (int, float)):
        return complex(value)
    raise ConfigError(f"{name}: expected a number, [re, im] or {{'re', 'im'}}, got {value!r}")


@dataclass(frozen=True)
class RunConfig:
    bath: BathSpec
    alpha_mag: float = 1.0
    delta_phi: float = math.pi
    c1: complex = 1.0
    c2: complex = 1.0
    t_max: float = 300.0
    n_steps: int = 61
    paths: tuple[str, ...] = ("exact", "ww")
    mc_samples: int | None = None
    mc_seed: int = 0
    series_path: str | None = None
    summary_path: str | None = None
    system_omega: float = 1.0

    def __post_init__(self):
        if not self.t_max > 0:
            raise ConfigError("time.t_max must be positive")
        if int(self.n_steps) != self.n_steps or self.n_steps < 2:
            raise ConfigError("time.n_steps must be an integer >= 2")
        if not self.paths:
            raise ConfigError("paths must be non-empty")
        bad = [p for p in self.paths if p not in PATHS]
        if bad or len(set(self.paths)) != len(self.paths):
            raise ConfigError(f"paths must be distinct entries of {PATHS}, got {list(self.paths)}")
        if self.mc_samples is not None and self.mc_samples < 1:
            raise ConfigError("thermal_mc.n_samples must be >= 1")
        if self.alpha_mag < 0:
            raise ConfigError("cat.alpha_mag must be non-negative")
        try:
            normalize(self.superposition())
        except ValueError as exc:
            raise ConfigError(f"cat weights: {exc}") from exc

    @property
    def cat(self) -> dec.CatParams:
        return dec.CatParams(self.alpha_mag, self.delta_phi)

    def superposition(self) -> SuperpositionState:
        cat = self.cat
        return SuperpositionState([self.c1, self.c2], [cat.alpha1, cat.alpha2])

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        if d.get("units") != UNITS:
            raise ConfigError(f"config field 'units' must read {UNITS!r}")
        try:
            b = dict(d["bath"])
            if "coupling" in b:
                b["coupling"] = _complex(b["coupling"], "bath.coupling")
            bath = BathSpec(**b)
            cat = d.get("cat", {})
            time = d["time"]
            mc = d.get("thermal_mc")
            out = d.get("output", {})
            return cls(
                bath=bath,
                alpha_mag=float(cat.get("alpha_mag", 1.0)),
                delta_phi=float(cat.get("delta_phi", math.pi)),
                c1=_complex(cat.get("c1", 1.0), "cat.c1"),
                c2=_complex(cat.get("c2", 1.0), "cat.c2"),
                t_max=float(time["t_max"]),
                n_steps=time["n_steps"],
                paths=tuple(d.get("paths", ("exact", "ww"))),
                mc_samples=None if mc is None else int(mc["n_samples"]),
                mc_seed=0 if mc is None else int(mc.get("seed", 0)),
                series_path=out.get("series_path"),
                summary_path=out.get("summary_path"),
                system_omega=float(d.get("system_omega", 1.0)),
            )
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid config: {exc}") from exc

    @classmethod
    def load(cls, path) -> "RunConfig":
        text = Path(path).read_text(encoding="utf-8")
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
        return cls.from_dict(data)


@dataclass
class RunResult:
    summary: dict
    rows: list[dict] = field(default_factory=list)

    def csv_text(self) -> str:
        return rows_to_csv(self.rows)


def _workers() -> int:
    env = os.environ.get("DECOBATH_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError("DECOBATH_THREADS must be an integer") from None
    return min(8, os.cpu_count() or 1)


def _map(fn, items):
    items = list(items)
    n = _workers()
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def path_slices(bath: DiscreteBath, path: str, times) -> list[PropagatorSlice]:
    times = np.asarray(times, dtype=float)
    if path == "exact":
        prop = HermitianPropagator(bath)
        return _map(prop.slice, times)
    if path == "ode":
        return [coefficients_to_slice(cs) for cs in integrate_coefficients(bath, times)]
    if path == "ww":
        return _map(lambda t: ww_slice(bath.gamma, bath.omega_tilde, bath, t), times)
    raise ValueError(f"unknown path {path!r}")


def _fmt(x) -> str:
    if x is None:
        return ""
    return format(float(x), ".17g")


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in rows:
        writer.writerow([r["path"]] + [_fmt(r[c]) for c in CSV_COLUMNS[1:]])
    return buf.getvalue()


def _factor(cfg: RunConfig, bath: DiscreteBath, path: str, s: PropagatorSlice, thermal: bool) -> complex:
    """Decoherence factor on one path.

    The ww path uses the closed forms built on |u|^2 + sum_j |u_j|^2 = 1 and on
    sum_j |v_j|^2 n_j = nbar (1 - e^{-gamma t}); the exact and ode paths take
    the bath weights from their own amplitudes.
    """
    a1, a2 = cfg.cat.alpha1, cfg.cat.alpha2
    if path == "ww":
        if thermal:
            nbar = bath.mean_occupation(bath.omega_tilde)
            return dec.factor_thermal(a1, a2, s.u, nbar, bath.gamma, s.t)
        return dec.factor_zero_T(a1, a2, s.u)
    if thermal:
        return dec.factor_thermal_modes(a1, a2, s, bath.occupations)
    return dec.factor_product(a1, a2, s.u_arr)


def _row(cfg: RunConfig, bath: DiscreteBath, path: str, s: PropagatorSlice) -> dict:
    cat = cfg.cat
    init = CoherentLabels.vacuum(cat.alpha1, bath.n_modes)
    residual = sum_rule_residual(init, evolve_labels(s, init))
    F = _factor(cfg, bath, path, s, thermal=False)
    thermal = bath.temperature_ratio > 0
    row = {
        "path": path, "t": s.t, "re_u": s.u.real, "im_u": s.u.imag, "abs_u": abs(s.u),
        "sum_rule_residual": residual, "re_F": F.real, "im_F": F.imag, "abs_F": abs(F),
        "abs_F_thermal": abs(_factor(cfg, bath, path, s, thermal=True)) if thermal else None,
        "mc_abs_F": None, "mc_stderr": None,
    }
    if cfg.mc_samples is not None:
        est = dec.thermal_factor_monte_carlo(cat, bath, s, cfg.mc_samples, cfg.mc_seed)
        row["mc_abs_F"] = abs(est.value)
        row["mc_stderr"] = est.stderr
    return row


def formula_tau_d(cfg: RunConfig, gamma: float) -> float:
    if gamma <= 0:
        return math.inf
    if cfg.bath.temperature_ratio > 0:
        return dec.tau_d_thermal(cfg.cat, gamma, cfg.bath.temperature_ratio)
    return dec.tau_d_zero_T(cfg.cat, gamma)


def fitted_tau_d(cfg: RunConfig, bath: DiscreteBath, path: str) -> float:
    """Fit on a dedicated short-time grid (20 samples up to gamma t = 0.1) of ``path``."""
    if bath.gamma <= 0 or cfg.cat.distance == 0:
        return math.inf
    times = dec.short_time_grid(bath.gamma)
    thermal = bath.temperature_ratio > 0
    F = [_factor(cfg, bath, path, s, thermal) for s in path_slices(bath, path, times)]
    return dec.fit_tau_d(times, F, bath.gamma)


def run(cfg: RunConfig, write: bool = True) -> RunResult:
    """Evaluate every requested path on the time grid and summarize.

    Rows are ordered by (path in config order, t). The fitted decoherence
    time uses the first requested path.
    """
    bath = discretize(cfg.bath, cfg.system_omega)
    times = np.linspace(0.0, cfg.t_max, int(cfg.n_steps))
    warnings = []
    if cfg.t_max > bath.recurrence_time:
        warnings.append(f"recurrence: t_max={cfg.t_max:.6g} exceeds recurrence time "
                        f"2*pi/delta={bath.recurrence_time:.6g}; finite-bath results revive")
    if bath.gamma == 0:
        warnings.append("gamma is zero: the system is not damped")

    rows = []
    for path in cfg.paths:
        slices = path_slices(bath, path, times)
        rows.extend(_map(lambda s: _row(cfg, bath, path, s), slices))

    summary = {
        "gamma": bath.gamma,
        "lamb_shift": bath.lamb_shift,
        "omega_tilde": bath.omega_tilde,
        "tau_d_formula": formula_tau_d(cfg, bath.gamma),
        "tau_d_fitted": fitted_tau_d(cfg, bath, cfg.paths[0]),
        "tau_d_fit_path": cfg.paths[0],
        "max_sum_rule_residual": max(r["sum_rule_residual"] for r in rows),
        "max_sum_rule_residual_by_path": {
            p: max(r["sum_rule_residual"] for r in rows if r["path"] == p) for p in cfg.paths
        },
        "recurrence_time": bath.recurrence_time,
        "normalized_weights": [[c.real, c.imag] for c in normalize(cfg.superposition()).weights],
        "recurrence_flagged": cfg.t_max > bath.recurrence_time,
        "warnings": warnings,
    }
    result = RunResult(summary=summary, rows=rows)
    if write:
        if cfg.series_path:
            Path(cfg.series_path).write_text(result.csv_text(), encoding="utf-8")
        if cfg.summary_path:
            Path(cfg.summary_path).write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    return result


def with_param(cfg: RunConfig, param: str, value: float) -> RunConfig:
    if param == "delta_phi":
        return replace(cfg, delta_phi=float(value))
    if param == "alpha_mag":
        return replace(cfg, alpha_mag=float(value))
    if param == "temperature_ratio":
        return replace(cfg, bath=replace(cfg.bath, temperature_ratio=float(value)))
    if param == "n_modes":
        if float(value) != int(value):
            raise ConfigError(f"n_modes must be an integer, got {value}")
        return replace(cfg, bath=replace(cfg.bath, n_modes=int(value)))
    raise ConfigError(f"unknown sweep parameter {param!r}; expected one of {SWEEP_PARAMS}")


def sweep(cfg: RunConfig, param: str, values) -> list[tuple[float, dict]]:
    if param not in SWEEP_PARAMS:
        raise ConfigError(f"unknown sweep parameter {param!r}; expected one of {SWEEP_PARAMS}")
    return [(v, run(with_param(cfg, param, v), write=False).summary) for v in values]


def sweep_table(param: str, results) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow((param,) + SUMMARY_FIELDS)
    for value, summary in results:
        writer.writerow([_fmt(value)] + [_fmt(summary[k]) for k in SUMMARY_FIELDS])
    return buf.getvalue()


@dataclass(frozen=True)
class Check:
    name: str
    measured: float
    threshold: float

    @property
    def passed(self) -> bool:
        return bool(self.measured < self.threshold)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name:<44s} measured={self.measured:.3e}  threshold={self.threshold:.1e}"


def _suite_sumrules() -> list[Check]:
    rng = np.random.default_rng(2024)
    checks = []
    for n in (16, 64, 256):
        bath = discretize(reference_flat_spec(n_modes=n))
        prop = HermitianPropagator(bath)
        worst = unit = 0.0
        for gt in np.linspace(0, 3, 7):
            s = prop.slice(gt / bath.gamma)
            unit = max(unit, unitarity_residual(s.exact_unitary))
            for _ in range(3):
                z = rng.normal(size=n + 1) + 1j * rng.normal(size=n + 1)
                init = CoherentLabels.from_vector(z)
                worst = max(worst, sum_rule_residual(init, evolve_labels(s, init)))
        checks.append(Check(f"exact label weight, N={n}", worst, 1e-10))
        checks.append(Check(f"exact unitarity, N={n}", unit, 1e-10))
    return checks


def ww_agreement_errors(bath: DiscreteBath, gt_min: float = 0.1, gt_max: float = 3.0,
                        n: int = 300) -> tuple[float, float]:
    """Max relative amplitude and accumulated-phase errors of the exact u against WW.

    The residual phase arg(u e^{i omega_tilde t}) is unwrapped along a dense
    grid from t = 0 so multiples of 2 pi are not hidden.
    """
    prop = HermitianPropagator(bath)
    gts = np.linspace(0.0, gt_max, n + 1)
    times = gts / bath.gamma
    u = np.array([prop.slice(t).u for t in times])
    resid = np.unwrap(np.angle(u * np.exp(1j * bath.omega_tilde * times)))
    sel = gts >= gt_min
    amp = np.max(np.abs(np.abs(u[sel]) / np.exp(-0.5 * gts[sel]) - 1))
    phase = np.max(np.abs(resid[sel]) / (bath.omega_tilde * times[sel]))
    return float(amp), float(phase)


def _suite_ww_agreement() -> list[Check]:
    amp, phase = ww_agreement_errors(discretize(reference_flat_spec(n_modes=400)))
    return [Check("|u_exact| vs exp(-gamma t/2), rel", amp, 0.05),
            Check("arg u_exact vs -omega_tilde t, rel", phase, 0.05)]


def _suite_thermal() -> list[Check]:
    bath = discretize(reference_flat_spec(n_modes=400, temperature_ratio=2.0))
    prop = HermitianPropagator(bath)
    worst = 0.0
    for gt in np.linspace(0.2, 2, 10):
        lhs, rhs = dec.thermal_sum_check(bath, prop.slice(gt / bath.gamma))
        worst = max(worst, abs(lhs - rhs) / rhs)
    return [Check("sum |v_j|^2 n_j vs nbar(1-e^{-gamma t}), rel", worst, 0.05)]


def _suite_gaussian() -> list[Check]:
    worst = 0.0
    for lam, mu, nu in itertools.product((0.5, 1.5 + 0.5j, 4 - 1j), (0, 1 + 0.5j, -0.7j), (0, 0.3 - 1j, 2)):
        closed, quad = dec.gaussian_identity_check(lam, mu, nu)
        worst = max(worst, abs(closed - quad))
    return [Check("Gaussian identity closed vs quadrature", worst, 1e-6)]


def verify(suite: str) -> list[Check]:
    suites = {"sumrules": _suite_sumrules, "ww_agreement": _suite_ww_agreement,
              "thermal": _suite_thermal, "gaussian": _suite_gaussian}
    if suite not in suites:
        raise ConfigError(f"unknown suite {suite!r}; expected one of {SUITES}")
    return suites[suite]()
