"""Decoherence factor of two-component cat states, at zero and finite temperature.

Every factor is assembled as a single complex exponent before exponentiation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bath import DiscreteBath
from .propagator import PropagatorSlice

FIT_WINDOW = 0.1
FIT_MIN_SAMPLES = 8


@dataclass(frozen=True)
class CatParams:
    """alpha_1 = alpha, alpha_2 = alpha e^{i delta_phi}."""

    alpha: complex
    delta_phi: float

    @property
    def alpha1(self) -> complex:
        return complex(self.alpha)

    @property
    def alpha2(self) -> complex:
        return complex(self.alpha) * np.exp(1j * self.delta_phi)

    @property
    def mean_number(self) -> float:
        return abs(self.alpha) ** 2

    @property
    def distance(self) -> float:
        """D = |alpha_1 - alpha_2| = 2 |alpha| |sin(delta_phi / 2)|."""
        return 2 * abs(self.alpha) * abs(math.sin(0.5 * self.delta_phi))


@dataclass(frozen=True)
class DecoherenceSeries:
    times: np.ndarray
    F: np.ndarray
    F_norm: np.ndarray
    tau_d_fitted: float
    tau_d_formula: float
    recurrence_flagged: bool = False


@dataclass(frozen=True)
class MonteCarloEstimate:
    value: complex
    stderr: float
    n_samples: int


def _overlap_exponent(alpha1, alpha2):
    return -0.5 * abs(alpha1) ** 2 - 0.5 * abs(alpha2) ** 2 + np.conj(alpha1) * alpha2


def factor_product(alpha1: complex, alpha2: complex, u_arr) -> complex:
    """prod_j <alpha1 u_j | alpha2 u_j>, evaluated as one exponential."""
    weight = float(np.sum(np.abs(np.asarray(u_arr)) ** 2))
    return complex(np.exp(_overlap_exponent(alpha1, alpha2) * weight))


def factor_zero_T(alpha1: complex, alpha2: complex, u: complex) -> complex:
    """Vacuum-bath factor with the bath weight replaced by 1 - |u|^2."""
    if abs(u) > 1 + 1e-9:
        raise ValueError(f"|u| = {abs(u)} exceeds 1; amplitude is unphysical")
    return complex(np.exp(_overlap_exponent(alpha1, alpha2) * (1 - abs(u) ** 2)))


def cat_norm_decay(alpha_mag2: float, gamma: float, t: float) -> float:
    """|F| = exp(-2 |alpha|^2 (1 - e^{-gamma t})) for opposite-phase cats."""
    if gamma < 0 or t < 0:
        raise ValueError("gamma and t must be non-negative")
    return math.exp(2 * alpha_mag2 * math.expm1(-gamma * t))


def tau_d_zero_T(cat: CatParams, gamma: float) -> float:
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    rate = 2 * cat.mean_number * gamma * math.sin(0.5 * cat.delta_phi) ** 2
    return math.inf if rate == 0 else 1.0 / rate


def tau_d_from_distance(distance: float, lifetime: float) -> float:
    """2 tau_p / D^2, with tau_p = 1/gamma the oscillator lifetime."""
    return math.inf if distance == 0 else 2 * lifetime / distance**2


def tau_d_thermal(cat: CatParams, gamma: float, temperature_ratio: float) -> float:
    """High-temperature decoherence time, rate 2|a|^2 gamma (1 + kT/2w) sin^2(dphi/2)."""
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    if temperature_ratio < 0:
        raise ValueError("temperature_ratio must be non-negative")
    rate = 2 * cat.mean_number * gamma * (1 + 0.5 * temperature_ratio) * math.sin(0.5 * cat.delta_phi) ** 2
    return math.inf if rate == 0 else 1.0 / rate


def _thermal_log_factor(alpha1, alpha2, u, v_j, n_occ_j):
    return -0.25 * abs(alpha2 - alpha1) ** 2 * abs(u) ** 2 * np.abs(v_j) ** 2 * np.asarray(n_occ_j, dtype=float)


def thermal_mode_factor(alpha1: complex, alpha2: complex, u: complex, v_j, n_occ_j):
    """Gaussian average over one thermal mode: exp(-|a2-a1|^2 |u|^2 |v_j|^2 <n_j> / 4)."""
    if np.any(np.asarray(n_occ_j) < 0):
        raise ValueError("occupations must be non-negative")
    f = np.exp(_thermal_log_factor(alpha1, alpha2, u, v_j, n_occ_j))
    return float(f) if np.ndim(f) == 0 else f


def factor_thermal(alpha1: complex, alpha2: complex, u: complex, nbar: float, gamma: float, t: float) -> complex:
    """Zero-temperature factor times exp(-|a2-a1|^2 |u|^2 nbar (1 - e^{-gamma t}) / 4)."""
    if nbar < 0:
        raise ValueError("nbar must be non-negative")
    base = factor_zero_T(alpha1, alpha2, u)
    extra = 0.25 * abs(alpha2 - alpha1) ** 2 * abs(u) ** 2 * nbar * math.expm1(-gamma * t)
    return base * math.exp(extra)


def factor_thermal_modes(alpha1: complex, alpha2: complex, slice: PropagatorSlice, occupations) -> complex:
    """Bath-product factor of the slice times the per-mode thermal factors."""
    expo = _overlap_exponent(alpha1, alpha2) * float(np.sum(np.abs(slice.u_arr) ** 2))
    expo += float(np.sum(_thermal_log_factor(alpha1, alpha2, slice.u, slice.v_arr, occupations)))
    return complex(np.exp(expo))


def thermal_sum_check(bath: DiscreteBath, slice: PropagatorSlice) -> tuple[float, float]:
    """(sum_j |v_j|^2 <n_j>, nbar(omega_tilde) (1 - e^{-gamma t}))."""
    lhs = float(np.sum(np.abs(slice.v_arr) ** 2 * bath.occupations))
    if bath.temperature_ratio == 0:
        return lhs, 0.0
    nbar = bath.mean_occupation(bath.omega_tilde)
    return lhs, -nbar * math.expm1(-bath.gamma * slice.t)


def gaussian_integral_2d(lam: complex, mu: complex, nu: complex, n: int = 801) -> complex:
    """(1/pi) int d^2 beta exp(-lam|beta|^2 + mu beta + nu beta*) by the trapezoid rule.

    The grid is centred on the maximum of the integrand's modulus and spans
    exp(-40) of its Gaussian envelope.
    """
    a = lam.real
    if not a > 0:
        raise ValueError("Re(lambda) must be positive")
    x0 = (mu + nu).real / (2 * a)
    y0 = -(mu - nu).imag / (2 * a)
    half = math.sqrt(40.0 / a)
    x = x0 + np.linspace(-half, half, n)
    y = y0 + np.linspace(-half, half, n)
    h = x[1] - x[0]
    beta = x[:, None] + 1j * y[None, :]
    vals = np.exp(-lam * np.abs(beta) ** 2 + mu * beta + nu * np.conj(beta))
    return complex(np.sum(vals) * h * h / math.pi)


def gaussian_identity_check(lam: complex, mu: complex, nu: complex) -> tuple[complex, complex]:
    """Closed form (1/lam) exp(mu nu / lam) and its 2-D quadrature."""
    lam, mu, nu = complex(lam), complex(mu), complex(nu)
    if not lam.real > 0:
        raise ValueError("Re(lambda) must be positive")
    closed = np.exp(mu * nu / lam) / lam
    return complex(closed), gaussian_integral_2d(lam, mu, nu)


def _philox(seed: int, mode: int) -> np.random.Generator:
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, mode], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def thermal_factor_monte_carlo(cat: CatParams, bath: DiscreteBath, slice: PropagatorSlice,
                               n_samples: int, seed: int = 0) -> MonteCarloEstimate:
    """Sample thermal bath labels and average the Brownian phase.

    Each beta_j is drawn from the complex Gaussian of variance <n_j>. The
    displacement sum_j beta_j v_j shifts both system components alike and
    leaves the relative phase exp(i Im[(a2* - a1*) u* v_j beta_j]) on the
    off-diagonal element; the average is multiplied by the zero-temperature
    factor. Draws for mode j come from a Philox stream keyed by (seed, j), so
    sample i of mode j does not depend on evaluation order.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    a1, a2 = cat.alpha1, cat.alpha2
    base = factor_zero_T(a1, a2, slice.u)
    kappa = (np.conj(a2) - np.conj(a1)) * np.conj(slice.u) * slice.v_arr
    phase = np.zeros(n_samples)
    for j in np.flatnonzero(bath.occupations > 0):
        z = _philox(seed, int(j)).standard_normal((2, n_samples))
        beta = math.sqrt(0.5 * bath.occupations[j]) * (z[0] + 1j * z[1])
        phase += np.imag(kappa[j] * beta)
    samples = np.exp(1j * phase)
    mean = np.mean(samples)
    if n_samples > 1:
        var = np.var(samples.real, ddof=1) + np.var(samples.imag, ddof=1)
        stderr = math.sqrt(var / n_samples)
    else:
        stderr = 0.0
    return MonteCarloEstimate(value=complex(base * mean), stderr=abs(base) * stderr, n_samples=n_samples)


def short_time_grid(gamma: float, window: float = FIT_WINDOW, n: int = 20) -> np.ndarray:
    """n + 1 uniform times covering gamma t in [0, window]."""
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    return np.linspace(0.0, window / gamma, n + 1)


def fit_tau_d(times, F, gamma: float, window: float = FIT_WINDOW, min_samples: int = FIT_MIN_SAMPLES) -> float:
    """Decoherence time from the initial slope of ln|F|.

    Least squares of ln|F| against ``a t + b t^2`` (no intercept, F(0) = 1)
    over samples with 0 < gamma t <= window; returns -1/a. The quadratic term
    absorbs the curvature that biases a straight-line slope across the window.
    """
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    times = np.asarray(times, dtype=float)
    logs = np.log(np.abs(np.asarray(F)))
    sel = (times > 0) & (gamma * times <= window * (1 + 1e-12))
    if np.count_nonzero(sel) < min_samples:
        raise ValueError(f"need at least {min_samples} samples with 0 < gamma t <= {window}")
    t = times[sel]
    design = np.column_stack((t, t * t))
    (slope, _), *_ = np.linalg.lstsq(design, logs[sel], rcond=None)
    return math.inf if slope >= 0 else -1.0 / slope


def decoherence_series(times, F, gamma: float, tau_d_formula: float,
                       recurrence_time: float = math.inf) -> DecoherenceSeries:
    times = np.asarray(times, dtype=float)
    F = np.asarray(F, dtype=complex)
    return DecoherenceSeries(
        times=times,
        F=F,
        F_norm=np.abs(F),
        tau_d_fitted=fit_tau_d(times, F, gamma),
        tau_d_formula=tau_d_formula,
        recurrence_flagged=bool(times.size and times[-1] > recurrence_time),
    )
