"""Damped harmonic oscillator in a discretized boson bath and the decoherence of cat states."""
from .bath import BathSpec, DiscreteBath, discretize, lamb_shift, thermal_occupation
from .decoherence import CatParams, DecoherenceSeries
from .evolution import CoherentLabels, SuperpositionState, evolve_labels, normalize, sum_rule_residual
from .propagator import (CoefficientState, HermitianPropagator, PropagatorSlice, coefficients_to_slice,
                         exact_propagator, integrate_coefficients, ww_slice)

__version__ = "0.1.0"

__all__ = [
    "BathSpec", "DiscreteBath", "discretize", "lamb_shift", "thermal_occupation",
    "CatParams", "DecoherenceSeries",
    "CoherentLabels", "SuperpositionState", "evolve_labels", "normalize", "sum_rule_residual",
    "CoefficientState", "HermitianPropagator", "PropagatorSlice", "coefficients_to_slice",
    "exact_propagator", "integrate_coefficients", "ww_slice",
]
