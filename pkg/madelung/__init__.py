"""Самозахваченные волновые функции максимальной энтропии: решатели, пределы T=0 и проверки."""

from .analytic_limits import cos_limit, eigen_residual, sinc_limit
from .errors import MadelungError
from .kg_verifier import build_product_state, kg_residual, potential_roundtrip, translate_state
from .mass_spectrum import compute_mass, energy_momentum_check, time_uncertainty
from .schemas import PhysicalConstants, RunConfig, SpatialSolveInput, TemporalSolveInput
from .spatial_solver import density_from_potential, solve_spatial
from .temporal_solver import solve_temporal, symmetrize

__all__ = [
    "MadelungError",
    "PhysicalConstants",
    "RunConfig",
    "SpatialSolveInput",
    "TemporalSolveInput",
    "build_product_state",
    "compute_mass",
    "cos_limit",
    "density_from_potential",
    "eigen_residual",
    "energy_momentum_check",
    "kg_residual",
    "potential_roundtrip",
    "sinc_limit",
    "solve_spatial",
    "solve_temporal",
    "symmetrize",
    "time_uncertainty",
    "translate_state",
]
