"""Continuum bath models, their finite-mode discretization and derived constants.

Units are dimensionless with hbar = 1; frequencies and temperatures are quoted
relative to the system frequency (``system_omega = 1`` by default).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import ConvergenceError

MAX_MODES = 1024
SPECTRA = ("flat", "lorentzian", "ohmic")
OCCUPATIONS = ("bose", "classical")


def _frozen(a, dtype) -> np.ndarray:
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class BathSpec:
    """Continuum description of the oscillator bath.

    The density of states is ``density * shape(omega)`` on
    ``[omega_min, omega_max]`` and zero outside, where ``shape`` is 1 for
    ``flat``, a unit-peak Lorentzian for ``lorentzian`` and
    ``(w/cutoff) exp(1 - w/cutoff)`` for ``ohmic``. The coupling amplitude
    ``g(omega)`` is the constant ``coupling``.
    """

    spectrum: str = "flat"
    density: float = 1.0
    coupling: complex = 0.0
    omega_min: float = 0.5
    omega_max: float = 1.5
    n_modes: int = 400
    temperature_ratio: float = 0.0
    center: float | None = None
    width: float | None = None
    cutoff: float | None = None
    occupation: str = "bose"

    def __post_init__(self):
        if self.spectrum not in SPECTRA:
            raise ValueError(f"unknown spectrum {self.spectrum!r}; expected one of {SPECTRA}")
        if self.occupation not in OCCUPATIONS:
            raise ValueError(f"unknown occupation model {self.occupation!r}")
        if not (0 < self.omega_min < self.omega_max) or not math.isfinite(self.omega_max):
            raise ValueError(f"invalid band [{self.omega_min}, {self.omega_max}]")
        if int(self.n_modes) != self.n_modes or self.n_modes < 1:
            raise ValueError(f"n_modes must be a positive integer, got {self.n_modes}")
        if not self.density >= 0:
            raise ValueError(f"density must be non-negative, got {self.density}")
        if not self.temperature_ratio >= 0:
            raise ValueError(f"temperature_ratio must be >= 0, got {self.temperature_ratio}")
        if not np.isfinite(complex(self.coupling)):
            raise ValueError("coupling must be finite")
        if self.spectrum == "lorentzian":
            if self.center is None or self.width is None or not self.width > 0:
                raise ValueError("lorentzian spectrum needs center and width > 0")
        if self.spectrum == "ohmic" and (self.cutoff is None or not self.cutoff > 0):
            raise ValueError("ohmic spectrum needs cutoff > 0")

    def rho(self, omega):
        """Density of states per unit angular frequency."""
        w = np.asarray(omega, dtype=float)
        if self.spectrum == "flat":
            shape = np.ones_like(w)
        elif self.spectrum == "lorentzian":
            hw = 0.5 * self.width
            shape = hw**2 / ((w - self.center) ** 2 + hw**2)
        else:
            x = w / self.cutoff
            shape = x * np.exp(1.0 - x)
        inside = (w >= self.omega_min) & (w <= self.omega_max)
        return np.where(inside, self.density * shape, 0.0)

    def g(self, omega):
        return np.full(np.shape(omega), complex(self.coupling))

    def coupling_density(self, omega):
        """rho(omega) |g(omega)|^2, the weight entering damping and Lamb shift."""
        return self.rho(omega) * np.abs(self.g(omega)) ** 2


@dataclass(frozen=True)
class DiscreteBath:
    """A finite set of bath modes plus the continuum-derived constants."""

    omegas: np.ndarray
    couplings: np.ndarray
    occupations: np.ndarray
    system_omega: float = 1.0
    gamma: float = 0.0
    lamb_shift: float = 0.0
    temperature_ratio: float = 0.0
    occupation: str = "bose"
    spacing: float | None = None

    def __post_init__(self):
        omegas = _frozen(self.omegas, float)
        couplings = _frozen(self.couplings, complex)
        occ = _frozen(self.occupations, float)
        if omegas.ndim != 1 or couplings.shape != omegas.shape or occ.shape != omegas.shape:
            raise ValueError("omegas, couplings and occupations must be 1-D arrays of equal length")
        if omegas.size > 1 and not np.all(np.diff(omegas) > 0):
            raise ValueError("mode frequencies must be strictly increasing")
        if not (np.all(np.isfinite(omegas)) and np.all(np.isfinite(couplings))):
            raise ValueError("mode frequencies and couplings must be finite")
        if np.any(occ < 0):
            raise ValueError("occupations must be non-negative")
        object.__setattr__(self, "omegas", omegas)
        object.__setattr__(self, "couplings", couplings)
        object.__setattr__(self, "occupations", occ)
        if self.spacing is None:
            spacing = float(np.min(np.diff(omegas))) if omegas.size > 1 else math.inf
            object.__setattr__(self, "spacing", spacing)

    @classmethod
    def from_modes(cls, omegas, couplings, system_omega=1.0, gamma=0.0, lamb_shift=0.0,
                   occupations=None, **kwargs) -> "DiscreteBath":
        omegas = np.atleast_1d(np.asarray(omegas, dtype=float))
        if occupations is None:
            occupations = np.zeros_like(omegas)
        return cls(omegas, np.atleast_1d(couplings), np.atleast_1d(occupations),
                   system_omega=system_omega, gamma=gamma, lamb_shift=lamb_shift, **kwargs)

    @property
    def n_modes(self) -> int:
        return self.omegas.size

    @property
    def omega_tilde(self) -> float:
        return self.system_omega + self.lamb_shift

    @property
    def recurrence_time(self) -> float:
        """2 pi / mode spacing; beyond it the finite bath revives."""
        return 2 * math.pi / self.spacing if self.spacing > 0 else math.inf

    def mean_occupation(self, omega) -> float:
        """Occupation of a bath mode at ``omega`` under this bath's occupation model."""
        return occupation_for(self.occupation, omega, self.temperature_ratio, self.system_omega)


def thermal_occupation(omega, temperature_ratio, system_omega=1.0):
    """Bose-Einstein occupation ``1/(exp(omega/(r*system_omega)) - 1)``.

    ``temperature_ratio`` is k_B T / (hbar system_omega); zero gives the vacuum.
    """
    w = np.asarray(omega, dtype=float)
    if np.any(w <= 0):
        raise ValueError("omega must be positive")
    if temperature_ratio == 0:
        n = np.zeros_like(w)
    else:
        with np.errstate(over="ignore"):
            n = 1.0 / np.expm1(w / (temperature_ratio * system_omega))
    return float(n) if n.ndim == 0 else n


def classical_occupation(omega, temperature_ratio, system_omega=1.0):
    """High-temperature occupation k_B T / (hbar omega)."""
    w = np.asarray(omega, dtype=float)
    if np.any(w <= 0):
        raise ValueError("omega must be positive")
    n = temperature_ratio * system_omega / w
    return float(n) if n.ndim == 0 else n


def occupation_for(model: str, omega, temperature_ratio, system_omega=1.0):
    if model == "bose":
        return thermal_occupation(omega, temperature_ratio, system_omega)
    if model == "classical":
        return classical_occupation(omega, temperature_ratio, system_omega)
    raise ValueError(f"unknown occupation model {model!r}")


def _quad(f, a, b):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, _ = integrate.quad(f, a, b, epsabs=1e-13, epsrel=1e-11, limit=400)
        except integrate.IntegrationWarning as exc:
            raise ConvergenceError(f"quadrature on [{a}, {b}] did not converge: {exc}") from exc
    return val


def lamb_shift(spec: BathSpec, system_omega: float = 1.0) -> float:
    """Principal-value frequency shift ``-P int rho|g|^2 / (w - system_omega) dw``.

    When the system frequency lies inside the band the pole is removed by
    pairing nodes ``system_omega +/- s`` over the largest symmetric interval;
    the remaining one-sided piece is regular.
    """
    f = spec.coupling_density
    a, b, w0 = spec.omega_min, spec.omega_max, system_omega
    ends = f(np.array([a, b]))
    if not np.all(np.isfinite(ends)):
        raise ConvergenceError("coupling density is unbounded at the band edges")
    if w0 in (a, b):
        if f(w0) != 0:
            raise ConvergenceError("system frequency sits on a band edge; the principal value diverges")
    if a < w0 < b:
        h = min(w0 - a, b - w0)
        pv = _quad(lambda s: (f(w0 + s) - f(w0 - s)) / s, 0.0, h)
        if w0 + h < b:
            pv += _quad(lambda x: f(x) / (x - w0), w0 + h, b)
        elif w0 - h > a:
            pv += _quad(lambda x: f(x) / (x - w0), a, w0 - h)
    else:
        pv = _quad(lambda x: f(x) / (x - w0), a, b)
    return -pv


def damping_rate(spec: BathSpec, omega: float) -> float:
    """gamma = 2 pi rho(omega) |g(omega)|^2."""
    return float(2 * math.pi * spec.coupling_density(omega))


def discretize(spec: BathSpec, system_omega: float = 1.0, max_modes: int = MAX_MODES) -> DiscreteBath:
    """Sample ``spec`` on a uniform midpoint grid.

    Mode ``j`` sits at ``omega_min + (j + 1/2) delta`` with coupling
    ``g(w_j) sqrt(rho(w_j) delta)``, so sums ``sum_j |g_j|^2 f(w_j)`` are the
    midpoint rule for ``int rho |g|^2 f``.
    """
    n = int(spec.n_modes)
    if n > max_modes:
        raise ValueError(f"n_modes={n} exceeds the cap of {max_modes}; raise max_modes to override")
    if not system_omega > 0:
        raise ValueError("system_omega must be positive")
    delta = (spec.omega_max - spec.omega_min) / n
    omegas = spec.omega_min + (np.arange(n) + 0.5) * delta
    couplings = spec.g(omegas) * np.sqrt(spec.rho(omegas) * delta)
    shift = lamb_shift(spec, system_omega)
    gamma = damping_rate(spec, system_omega + shift)
    occ = occupation_for(spec.occupation, omegas, spec.temperature_ratio, system_omega)
    return DiscreteBath(
        omegas=omegas,
        couplings=couplings,
        occupations=occ,
        system_omega=system_omega,
        gamma=gamma,
        lamb_shift=shift,
        temperature_ratio=spec.temperature_ratio,
        occupation=spec.occupation,
        spacing=delta,
    )


def reference_flat_spec(n_modes: int = 400, gamma: float = 0.01, half_width: float = 0.5,
                        temperature_ratio: float = 0.0, occupation: str = "bose") -> BathSpec:
    """Flat band centred on the system frequency with damping rate ``gamma``.

    The defaults give a bandwidth of 100 gamma and, at 400 modes, a
    recurrence time well beyond gamma t = 3.
    """
    return BathSpec(
        spectrum="flat",
        density=1.0,
        coupling=math.sqrt(gamma / (2 * math.pi)),
        omega_min=1.0 - half_width,
        omega_max=1.0 + half_width,
        n_modes=n_modes,
        temperature_ratio=temperature_ratio,
        occupation=occupation,
    )
