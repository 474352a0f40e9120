"""Hamiltonian and Markovian zigzag samplers for truncated Gaussian targets."""

from .model import (
    TruncatedGaussianTarget,
    ar1_target,
    base_integration_time,
    compound_symmetric_target,
    dense_target,
    min_eigenvalue,
)
from .io import load_target, save_target

__version__ = "0.1.0"
