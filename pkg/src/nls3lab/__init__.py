"""Numerical laboratory for the cubic NLS with third-order dispersion on the circle.

Gauges, interaction representations, normal-form identities and Gaussian-measure
diagnostics on Galerkin truncations |n| <= N.
"""
from .params import ModelParams, parse_beta
from .spectral import (FrequencyGrid, Rep, SpectralState, analytic_state, cubic_terms_direct, cubic_terms_fft,
                       make_state, random_state, read_snapshot, single_mode, sobolev_norm, write_snapshot,
                       zero_state)
from .propagators import Direction, gauge_G, gauge_J, interaction_map, linear_propagator
from .resonance import FrequencyTuple, phase_bounds, phi, psi, split_N123
from .dynamics import EquationKind, Trajectory, conserved_quantities, evolve, rhs, step
from .normal_form import nf_decompose_v, nf_decompose_w, remainder_K, xi
from .measure import MeasureSpec, invariance_test, ramer_diagnostic, sample_mu, smoothing_diagnostic

__version__ = "0.1.0"

__all__ = [
    "ModelParams", "parse_beta",
    "FrequencyGrid", "Rep", "SpectralState", "analytic_state", "cubic_terms_direct", "cubic_terms_fft",
    "make_state", "random_state", "read_snapshot", "single_mode", "sobolev_norm", "write_snapshot", "zero_state",
    "Direction", "gauge_G", "gauge_J", "interaction_map", "linear_propagator",
    "FrequencyTuple", "phase_bounds", "phi", "psi", "split_N123",
    "EquationKind", "Trajectory", "conserved_quantities", "evolve", "rhs", "step",
    "nf_decompose_v", "nf_decompose_w", "remainder_K", "xi",
    "MeasureSpec", "invariance_test", "ramer_diagnostic", "sample_mu", "smoothing_diagnostic",
]
