"""Coherent-state labels and their evolution under a propagator slice."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .propagator import PropagatorSlice


@dataclass(frozen=True)
class CoherentLabels:
    alpha: complex
    betas: np.ndarray

    def __post_init__(self):
        betas = np.array(self.betas, dtype=complex).reshape(-1)
        betas.setflags(write=False)
        object.__setattr__(self, "alpha", complex(self.alpha))
        object.__setattr__(self, "betas", betas)

    @classmethod
    def vacuum(cls, alpha: complex, n_modes: int) -> "CoherentLabels":
        return cls(alpha, np.zeros(n_modes, dtype=complex))

    @property
    def weight(self) -> float:
        """|alpha|^2 + sum_j |beta_j|^2."""
        return abs(self.alpha) ** 2 + float(np.sum(np.abs(self.betas) ** 2))

    def as_vector(self) -> np.ndarray:
        return np.concatenate(([self.alpha], self.betas))

    @classmethod
    def from_vector(cls, z) -> "CoherentLabels":
        return cls(z[0], z[1:])


def evolve_labels(slice: PropagatorSlice, init: CoherentLabels, brownian: bool = True) -> CoherentLabels:
    """Evolve the labels of a product coherent state.

    Uses the full unitary when the slice carries one; otherwise
    ``alpha(t) = alpha u + sum_j beta_j v_j`` and
    ``beta_j(t) = beta_j e^{-i w_j t} + alpha u_j + sum_j' v_{jj'} beta_j'``.
    With ``brownian=False`` the bath-to-system term ``sum_j beta_j v_j`` is
    dropped (partial factorization), for comparison only.
    """
    if init.betas.size != slice.n_modes:
        raise ValueError(f"labels have {init.betas.size} bath modes, slice has {slice.n_modes}")
    beta = init.betas
    if slice.exact_unitary is not None:
        z = slice.exact_unitary @ init.as_vector()
        if not brownian:
            z[0] -= np.dot(slice.v_arr, beta)
        return CoherentLabels.from_vector(z)
    alpha_t = init.alpha * slice.u
    if brownian:
        alpha_t += np.dot(slice.v_arr, beta)
    beta_t = beta * slice.bath_phases + init.alpha * slice.u_arr + slice.v_offdiag @ beta
    return CoherentLabels(alpha_t, beta_t)


def sum_rule_residual(init: CoherentLabels, evolved: CoherentLabels) -> float:
    if init.betas.size != evolved.betas.size:
        raise ValueError("label sets have different numbers of bath modes")
    return abs(evolved.weight - init.weight)


def coherent_overlap(a: complex, b: complex) -> complex:
    """<a|b> = exp(-|a|^2/2 - |b|^2/2 + a* b)."""
    return np.exp(-0.5 * abs(a) ** 2 - 0.5 * abs(b) ** 2 + np.conj(a) * b)


@dataclass(frozen=True)
class SuperpositionState:
    """sum_k C_k |alpha_k> for the system; the bath is either coherent labels or thermal."""

    weights: np.ndarray
    alphas: np.ndarray
    bath: CoherentLabels | None = None
    thermal: bool = False

    def __post_init__(self):
        w = np.array(self.weights, dtype=complex).reshape(-1)
        a = np.array(self.alphas, dtype=complex).reshape(-1)
        if w.shape != a.shape or w.size == 0:
            raise ValueError("weights and alphas must be non-empty and of equal length")
        w.setflags(write=False)
        a.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "alphas", a)

    def norm2(self) -> float:
        gram = coherent_overlap(self.alphas[:, None], self.alphas[None, :])
        return float(np.real(np.conj(self.weights) @ gram @ self.weights))


def normalize(sup: SuperpositionState) -> SuperpositionState:
    if not np.any(sup.weights != 0):
        raise ValueError("superposition has no nonzero weight")
    n2 = sup.norm2()
    if not n2 > 1e-300:
        raise ValueError("superposition has zero norm (components cancel)")
    return SuperpositionState(sup.weights / np.sqrt(n2), sup.alphas, sup.bath, sup.thermal)
