"""Boundary control synthesis for coupled 1-D wave systems

    u_tt - u_xx + A u = 0 on (0, a) x (0, T),
    alpha1 u(0, t) + beta1 u(a, t) = b f(t),  alpha2 u(0, t) + beta2 u(a, t) = 0,

by expansion in the product eigenbasis and a moment problem over the
exponentials exp(i omega_kl t).
"""
from . import coupling, lattice, moments, pipeline, simulator, spectral_bvp
from .coupling import CouplingOperator, decompose, kalman_rank, normalize_moments
from .lattice import build_lattice, encode_state, gap_statistics
from .moments import ExponentialFamily, gram, solve, target_moments
from .pipeline import ControlTask
from .spectral_bvp import build_boundary, spatial_mode

__version__ = "0.1.0"
