"""Discrete p-Hodge Laplacian eigenvalues on closed simplicial surfaces."""

__version__ = "0.1.0"

from .bounds import BoundReport, bound_report, compare, constant_C, gallot_meyer_bound, lower_bound, weitzenbock_constant
from .dec import (
    Cochain,
    apply_p_laplacian,
    codifferential,
    d,
    inner2,
    laplacian2_matrix,
    lp_norm,
    p_energy,
    p_energy_gradient,
)
from .hodge import HarmonicBasis, harmonic_basis, project_to_constraint, weighted_orthogonality_residual
from .mesh import SimplicialMesh, build_flat_torus, build_icosphere, load_off, save_off
from .spectrum import SolverOptions, SpectrumResult, continuation_study, solve_p, solve_p2, weak_residual
