"""Spectral checks for rank-3 Killing tensors on conformally flat 2-tori."""

__version__ = "0.1.0"

from .lattice import (  # noqa: F401
    Lattice, DualLattice, ThreeLineConfig, LatticeError, dual_basis, normalize_basis, pq_config, HONEYCOMB,
)
from .field import FourierField, ParityError, diff_ops, convolve, spectrum_analysis  # noqa: F401
from .killing import (  # noqa: F401
    KillingConstants, ResidualReport, system_residual, pde_residual, integer_system_residual,
    best_constants, cubic_analysis, shift_test,
)
