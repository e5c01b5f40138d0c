"""Moment-matched Hamiltonian reduction for central spin problems."""

from .combinatorics import SymmetryBlock, enumerate_blocks, multiplicity
from .dynamics import CorrelationTensor, DynamicsConfig, correlation_tensor
from .hyperfine import HyperfineDistribution, exponential_couplings, moment, uniform_couplings
from .moments import ReducedModel, reduce_model, stieltjes_quadrature
from .sw import SWConfig, sw_correlation

__version__ = "0.1.0"

__all__ = [
    "CorrelationTensor",
    "DynamicsConfig",
    "HyperfineDistribution",
    "ReducedModel",
    "SWConfig",
    "SymmetryBlock",
    "correlation_tensor",
    "enumerate_blocks",
    "exponential_couplings",
    "moment",
    "multiplicity",
    "reduce_model",
    "stieltjes_quadrature",
    "sw_correlation",
    "uniform_couplings",
]
