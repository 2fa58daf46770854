"""Single-excitation amplitudes of the system + bath model, computed three ways.

* ``HermitianPropagator`` / ``exact_propagator``: exp(-iMt) of the
  (N+1)x(N+1) one-particle Hamiltonian, used as the oracle.
* ``integrate_coefficients``: RK4 integration of the normal-ordered
  coefficient equations for A, B_j, C_j, D_j and B_{j,j'}.
* ``ww_slice``: the Wigner-Weisskopf closed forms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bath import DiscreteBath
from .errors import IntegrationError, PropagatorError

SERIES_THRESHOLD = 1e-8
DEFAULT_STEP_FACTOR = 0.01
MAX_STEP_FACTOR = 0.05


@dataclass(frozen=True)
class CoefficientState:
    t: float
    A: complex
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    B_offdiag: np.ndarray


@dataclass(frozen=True)
class PropagatorSlice:
    """Amplitudes at time ``t``.

    ``bath_phases`` holds the free bath evolution ``e^{-i w_j t}`` (``1 + B_j``
    for the coefficient path). ``v_offdiag`` follows the bath-label
    decomposition ``beta_j(t) = beta_j phase_j + alpha u_j + sum_j' v_{jj'} beta_j'``,
    so its diagonal is zero except on the exact path.
    """

    t: float
    u: complex
    u_arr: np.ndarray
    v_arr: np.ndarray
    v_offdiag: np.ndarray
    bath_phases: np.ndarray
    exact_unitary: np.ndarray | None = None

    @property
    def n_modes(self) -> int:
        return self.u_arr.size

    def vacuum_sum_rule(self) -> float:
        """|u|^2 + sum_j |u_j|^2, which is 1 for an exact evolution."""
        return abs(self.u) ** 2 + float(np.sum(np.abs(self.u_arr) ** 2))


def coupling_matrix(bath: DiscreteBath) -> np.ndarray:
    n = bath.n_modes
    m = np.zeros((n + 1, n + 1), dtype=complex)
    m[0, 0] = bath.system_omega
    m[0, 1:] = bath.couplings
    m[1:, 0] = np.conj(bath.couplings)
    m[np.arange(1, n + 1), np.arange(1, n + 1)] = bath.omegas
    return m


class HermitianPropagator:
    """exp(-iMt) for one bath, factorized once and evaluated at any t."""

    def __init__(self, bath: DiscreteBath):
        self.bath = bath
        m = coupling_matrix(bath)
        try:
            self.eigvals, self.eigvecs = np.linalg.eigh(m)
        except np.linalg.LinAlgError as exc:
            herm = float(np.max(np.abs(m - m.conj().T)))
            raise PropagatorError(
                f"eigendecomposition failed ({exc}); size={m.shape[0]}, "
                f"max|M|={np.max(np.abs(m)):.3e}, hermiticity residual={herm:.3e}"
            ) from exc
        if not np.all(np.isfinite(self.eigvals)):
            raise PropagatorError("eigendecomposition returned non-finite eigenvalues")

    def unitary(self, t: float) -> np.ndarray:
        if t < 0:
            raise ValueError("t must be non-negative")
        v = self.eigvecs
        return (v * np.exp(-1j * self.eigvals * t)) @ v.conj().T

    def slice(self, t: float) -> PropagatorSlice:
        u_full = self.unitary(t)
        u_full.setflags(write=False)
        phases = np.exp(-1j * self.bath.omegas * t)
        block = u_full[1:, 1:] - np.diag(phases)
        return PropagatorSlice(
            t=float(t),
            u=complex(u_full[0, 0]),
            u_arr=u_full[1:, 0],
            v_arr=u_full[0, 1:],
            v_offdiag=block,
            bath_phases=phases,
            exact_unitary=u_full,
        )


def exact_propagator(bath: DiscreteBath, t: float) -> PropagatorSlice:
    return HermitianPropagator(bath).slice(t)


def unitarity_residual(u: np.ndarray) -> float:
    """max |U^dagger U - I|."""
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))


class _Layout:
    """Views into the flat RK4 state vector [A, B, C, D, Boff]."""

    def __init__(self, n: int):
        self.n = n
        self.size = 1 + 3 * n + n * n

    def split(self, y):
        n = self.n
        return (y[0], y[1:1 + n], y[1 + n:1 + 2 * n], y[1 + 2 * n:1 + 3 * n],
                y[1 + 3 * n:].reshape(n, n))


def _coefficient_rhs(bath: DiscreteBath, layout: _Layout):
    w = bath.omegas
    ws = bath.system_omega
    g = bath.couplings
    gc = np.conj(g)
    diag = np.arange(layout.n)

    def rhs(y):
        a, b, c, d, boff = layout.split(y)
        out = np.empty_like(y)
        _, db, dc, dd, dboff = layout.split(out)
        db[:] = -1j * w * (1 + b)
        dc[:] = -1j * w * c - 1j * gc * (1 + a)
        # sum over j' != j of g_j' B_{j',j}; the diagonal of boff is held at zero
        dd[:] = -1j * ws * d - 1j * g * (1 + b) - 1j * (g @ boff)
        out[0] = -1j * ws * (1 + a) - 1j * np.dot(g, c)
        dboff[:] = -1j * w[:, None] * boff - 1j * gc[:, None] * d[None, :]
        dboff[diag, diag] = 0
        return out

    return rhs


def integrate_coefficients(bath: DiscreteBath, t_grid, max_step: float | None = None) -> list[CoefficientState]:
    """Integrate the coefficient equations with fixed-step classical RK4.

    Each grid interval is split into equal steps no longer than ``max_step``,
    which defaults to ``0.01 / max(omega_max, system_omega)`` and may not exceed
    ``0.05 / max(omega_max, system_omega)``.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size == 0 or t_grid[0] != 0:
        raise ValueError("t_grid must be a 1-D array starting at 0")
    if np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be strictly increasing")
    w_max = max(float(np.max(bath.omegas)) if bath.n_modes else 0.0, bath.system_omega)
    bound = MAX_STEP_FACTOR / w_max
    h_max = DEFAULT_STEP_FACTOR / w_max if max_step is None else min(max_step, bound)
    if not h_max > 0:
        raise IntegrationError("step size must be positive")

    layout = _Layout(bath.n_modes)
    rhs = _coefficient_rhs(bath, layout)
    y = np.zeros(layout.size, dtype=complex)
    states = [_state(0.0, y, layout)]
    for t0, t1 in zip(t_grid[:-1], t_grid[1:]):
        n_steps = max(1, math.ceil((t1 - t0) / h_max - 1e-9))
        h = (t1 - t0) / n_steps
        if h == 0 or t0 + h == t0:
            raise IntegrationError(f"step size underflow at t={t0}")
        with np.errstate(over="ignore", invalid="ignore"):
            for _ in range(n_steps):
                k1 = rhs(y)
                k2 = rhs(y + 0.5 * h * k1)
                k3 = rhs(y + 0.5 * h * k2)
                k4 = rhs(y + h * k3)
                y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise IntegrationError(f"non-finite coefficients at t={t1}")
        states.append(_state(float(t1), y, layout))
    return states


def _state(t: float, y: np.ndarray, layout: _Layout) -> CoefficientState:
    a, b, c, d, boff = layout.split(y.copy())
    return CoefficientState(t=t, A=complex(a), B=b, C=c, D=d, B_offdiag=boff)


def coefficients_to_slice(cs: CoefficientState) -> PropagatorSlice:
    """Relabel coefficients as amplitudes: u = 1 + A, u_j = C_j, v_j = D_j, v_jj' = B_jj'."""
    return PropagatorSlice(
        t=cs.t,
        u=1 + cs.A,
        u_arr=cs.C,
        v_arr=cs.D,
        v_offdiag=cs.B_offdiag,
        bath_phases=1 + cs.B,
    )


def _phi(x, t):
    """(e^{ixt} - 1)/x, with the first-order series near x = 0."""
    x = np.asarray(x, dtype=complex)
    small = np.abs(x) < SERIES_THRESHOLD
    safe = np.where(small, 1.0, x)
    return np.where(small, 1j * t - 0.5 * x * t**2, np.expm1(1j * safe * t) / safe)


def _dphi(x, t):
    """d/dx of ``_phi``."""
    x = np.asarray(x, dtype=complex)
    small = np.abs(x) < 1e-4
    safe = np.where(small, 1.0, x)
    e = np.exp(1j * safe * t)
    full = (1j * t * e * safe - (e - 1)) / safe**2
    return np.where(small, -0.5 * t**2 - (1j / 3) * x * t**3, full)


def ww_slice(gamma: float, omega_tilde: float, bath: DiscreteBath, t: float) -> PropagatorSlice:
    """Wigner-Weisskopf closed forms for u, u_j, v_j and v_{j,j'} at time ``t``."""
    if gamma < 0:
        raise ValueError("gamma must be non-negative")
    if t < 0:
        raise ValueError("t must be non-negative")
    w = bath.omegas
    g = bath.couplings
    x = w - omega_tilde + 0.5j * gamma
    phases = np.exp(-1j * w * t)
    phi = _phi(x, t)
    u = np.exp(-1j * omega_tilde * t - 0.5 * gamma * t)
    u_arr = -np.conj(g) * phases * phi
    v_arr = -g * phases * phi

    # (phi(x_j) - phi(w_j - w_j')) / x_j' ; note w_j - w_j' = x_j - x_j'
    xj = x[:, None]
    xk = x[None, :]
    diff = w[:, None] - w[None, :]
    small = np.abs(xk) < SERIES_THRESHOLD
    xk_safe = np.where(small, 1.0, xk)
    ratio = np.where(small, _dphi(xj, t), (phi[:, None] - _phi(diff, t)) / xk_safe)
    v_off = (np.conj(g) * phases)[:, None] * g[None, :] * ratio
    np.fill_diagonal(v_off, 0)
    return PropagatorSlice(
        t=float(t),
        u=complex(u),
        u_arr=u_arr,
        v_arr=v_arr,
        v_offdiag=v_off,
        bath_phases=phases,
    )
