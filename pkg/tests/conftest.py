"""Общие фикстуры тестов."""

import pytest

from madelung.schemas import PhysicalConstants, SpatialSolveInput, TemporalSolveInput
from madelung.spatial_solver import solve_spatial
from madelung.temporal_solver import solve_temporal


@pytest.fixture(scope="session")
def spatial_solution():
    """Пространственное решение при T=0.05, U_s0=1."""
    return solve_spatial(SpatialSolveInput(constants=PhysicalConstants(T=0.05), U_s0=1.0))


@pytest.fixture(scope="session")
def temporal_solution():
    """Временное решение при T=0.05, U_t0=-1."""
    return solve_temporal(TemporalSolveInput(constants=PhysicalConstants(T=0.05), U_t0=-1.0))
