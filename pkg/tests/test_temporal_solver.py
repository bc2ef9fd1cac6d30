"""Тесты временного решателя."""

import math

import numpy as np
import pytest

from madelung.core_numerics import quadrature
from madelung.errors import NoBlowup, WrongSign
from madelung.schemas import GridFunction, PhysicalConstants, TemporalSolveInput
from madelung.temporal_solver import frozen_half_width, ode_defect, solve_temporal, symmetrize


def solve(T: float, U_t0: float = -1.0):
    return solve_temporal(TemporalSolveInput(constants=PhysicalConstants(T=T), U_t0=U_t0))


class TestSymmetrize:
    """Чётное отражение."""

    def test_three_nodes(self):
        full = symmetrize(GridFunction(nodes=[0.0, 1.0, 2.0], values=[1.0, 0.5, 0.25]))

        assert full.nodes.tolist() == [-2.0, -1.0, 0.0, 1.0, 2.0]
        assert full.values.tolist() == [0.25, 0.5, 1.0, 0.5, 0.25]

    def test_cosine_matches_closed_form(self):
        t = np.linspace(0.0, 1.0, 33)
        full = symmetrize(GridFunction(nodes=t, values=np.cos(t)))
        assert np.array_equal(full.values, np.cos(full.nodes))

    def test_requires_origin(self):
        with pytest.raises(ValueError):
            symmetrize(GridFunction(nodes=[0.5, 1.0, 2.0], values=[1.0, 0.5, 0.25]))


class TestSolveTemporal:
    """Решение до расходимости и отражённая плотность."""

    def test_small_T_approaches_frozen_half_width(self):
        solution = solve(1e-4)
        assert solution.t_a == pytest.approx(math.pi / (2 * math.sqrt(2)), rel=0.01)

    def test_positive_center_is_wrong_sign(self):
        with pytest.raises(WrongSign):
            solve(0.05, U_t0=1.0)

    def test_large_T_does_not_trap(self):
        with pytest.raises(NoBlowup):
            solve(2.0, U_t0=-1.0)

    def test_half_width_grows_with_T(self, temporal_solution):
        assert temporal_solution.t_a < solve(0.2).t_a

    def test_density_is_exactly_even(self, temporal_solution):
        rho = temporal_solution.density.grid.values
        assert np.array_equal(rho, rho[::-1])
        assert np.array_equal(temporal_solution.density.grid.nodes, -temporal_solution.density.grid.nodes[::-1])

    def test_density_is_normalized(self, temporal_solution):
        density = temporal_solution.density
        assert quadrature(density.grid, density.weight) == pytest.approx(1.0, abs=1e-10)

    def test_ode_defect_within_tolerance(self, temporal_solution):
        assert ode_defect(temporal_solution) < 10 * TemporalSolveInput.model_fields["rel_tol"].default

    def test_ode_defect_detects_wrong_T(self, temporal_solution):
        wrong = temporal_solution.model_copy(update={"constants": PhysicalConstants(T=0.06)})
        assert ode_defect(wrong) > 1e-3

    @pytest.mark.parametrize("U_t0", [-0.5, -1.0, -2.0])
    def test_traps_beyond_frozen_half_width(self, U_t0):
        solution = solve(0.05, U_t0=U_t0)
        assert solution.t_a > frozen_half_width(U_t0, PhysicalConstants())
