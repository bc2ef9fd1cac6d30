"""Тесты произведения I_s I_t: Клейн-Гордон, восстановление потенциала, сдвиги."""

import numpy as np
import pytest

from madelung.analytic_limits import cos_limit, sinc_limit
from madelung.errors import DensityFloorReached, NonNegativeUtot
from madelung.kg_verifier import (
    average_quantum_potential,
    boundary_slices,
    build_product_state,
    kg_residual,
    potential_roundtrip,
    reconstruct_potential,
    translate_state,
)
from madelung.schemas import (
    GridFunction,
    PhysicalConstants,
    SpatialSolveInput,
    StencilKind,
    TemporalSolveInput,
)
from madelung.spatial_solver import solve_spatial
from madelung.temporal_solver import solve_temporal

UNITS = PhysicalConstants()


def product(points: int):
    return build_product_state(sinc_limit(1.0), cos_limit(-2.0), (points, points), UNITS)


@pytest.fixture(scope="module")
def fine_product():
    return product(513)


class TestBuildProductState:
    """Сборка произведения на сетке."""

    def test_joint_normalization(self):
        assert product(257).normalization == pytest.approx(1.0, abs=1e-6)

    def test_mass_from_flat_potential(self, fine_product):
        assert fine_product.mass == pytest.approx(np.sqrt(2))

    def test_boundary_slices_vanish(self, fine_product):
        for piece in boundary_slices(fine_product):
            assert np.all(piece == 0.0)

    def test_amplitudes_are_non_negative(self, fine_product):
        assert np.all(fine_product.spatial_amplitude.values >= 0)
        assert np.all(fine_product.temporal_amplitude.values >= 0)

    def test_small_grid(self):
        with pytest.raises(ValueError):
            product(33)

    def test_non_negative_total(self):
        with pytest.raises(NonNegativeUtot):
            build_product_state(sinc_limit(1.0), cos_limit(-0.5), (129, 129), UNITS)


class TestKgResidual:
    """Невязка уравнения Клейна-Гордона."""

    def test_residual_is_small(self, fine_product):
        assert kg_residual(fine_product) < 1e-3

    def test_second_order_convergence(self, fine_product):
        ratio = kg_residual(product(257)) / kg_residual(fine_product)
        assert 3.5 <= ratio <= 4.5

    def test_wrong_mass_is_detected(self, fine_product):
        correct = kg_residual(fine_product)
        wrong = kg_residual(fine_product, mass=1.1 * fine_product.mass)
        assert wrong >= 100 * correct


class TestTranslation:
    """Сдвиги носителя в пространстве-времени."""

    def test_zero_shift(self, fine_product):
        moved = translate_state(fine_product, (0.0, 0.0, 0.0, 0.0))

        assert moved.origin == fine_product.origin
        assert moved.spatial_amplitude is fine_product.spatial_amplitude

    def test_residual_unchanged(self, fine_product):
        moved = translate_state(fine_product, (1.0, 0.3, 0.0, 0.0))

        assert kg_residual(moved) == kg_residual(fine_product)
        assert np.array_equal(moved.spatial_amplitude.values, fine_product.spatial_amplitude.values)
        assert moved.center() == (0.3, 0.0, 0.0)

    def test_time_nodes_follow_shift(self, fine_product):
        moved = translate_state(fine_product, (2.0, 0.0, 0.0, 0.0))
        np.testing.assert_allclose(moved.time_nodes(), fine_product.time_nodes() + 2.0)

    def test_shifts_compose(self, fine_product):
        twice = translate_state(translate_state(fine_product, (1.0, 0.25, 0.0, 0.0)), (0.5, 0.5, 0.0, 0.0))
        once = translate_state(fine_product, (1.5, 0.75, 0.0, 0.0))
        assert twice.origin == once.origin


class TestPotentialRoundtrip:
    """Потенциал ОДУ против восстановленного по плотности."""

    def test_constant_density_has_no_potential(self):
        flat = GridFunction(nodes=np.linspace(0.0, 1.0, 65), values=np.full(65, 0.7))
        for kind in StencilKind:
            np.testing.assert_allclose(reconstruct_potential(flat, kind, UNITS).values, 0.0, atol=1e-10)

    def test_gaussian_tail_is_exact(self):
        # ln I = -x^2/2 квадратична, шаблоны на ней точны даже там, где rho ~ 1e-31
        x = np.linspace(-8.5, 8.5, 341)
        density = GridFunction(nodes=x, values=np.exp(-(x**2)))
        potential = reconstruct_potential(density, StencilKind.CARTESIAN_1D, UNITS)
        np.testing.assert_allclose(potential.values, 0.5 * (x**2 - 1.0), atol=1e-9)

    def test_spatial_roundtrip(self, spatial_solution):
        assert potential_roundtrip(spatial_solution, UNITS) < 1e-3

    def test_temporal_roundtrip(self, temporal_solution):
        assert potential_roundtrip(temporal_solution, UNITS) < 1e-3

    @pytest.mark.slow
    @pytest.mark.parametrize("coarse", [512, 1024])
    def test_spatial_roundtrip_is_second_order(self, coarse):
        errors = [
            potential_roundtrip(
                solve_spatial(
                    SpatialSolveInput(
                        constants=PhysicalConstants(T=0.05), U_s0=1.0, grid_points=points
                    )
                ),
                UNITS,
            )
            for points in (coarse, 2 * coarse)
        ]
        assert 3.5 <= errors[0] / errors[1] <= 4.5

    @pytest.mark.slow
    @pytest.mark.parametrize("coarse", [512, 1024])
    def test_temporal_roundtrip_is_second_order(self, coarse):
        errors = [
            potential_roundtrip(
                solve_temporal(
                    TemporalSolveInput(
                        constants=PhysicalConstants(T=0.05), U_t0=-1.0, grid_points=points
                    )
                ),
                UNITS,
            )
            for points in (coarse, 2 * coarse)
        ]
        assert 3.5 <= errors[0] / errors[1] <= 4.5

    @pytest.mark.slow
    def test_fine_grids_keep_improving(self):
        errors = [
            potential_roundtrip(
                solve_spatial(
                    SpatialSolveInput(
                        constants=PhysicalConstants(T=0.05), U_s0=1.0, grid_points=points
                    )
                ),
                UNITS,
            )
            for points in (4096, 8192)
        ]
        assert errors[1] < errors[0] < 1e-6

    def test_window_in_floor_zone(self):
        solution = solve_spatial(
            SpatialSolveInput(constants=PhysicalConstants(T=0.05), U_s0=1.0, rho_floor=1e-4)
        )
        with pytest.raises(DensityFloorReached):
            potential_roundtrip(solution, UNITS)


class TestAverageQuantumPotential:
    def test_sum_of_means(self, spatial_solution, temporal_solution):
        value = average_quantum_potential(spatial_solution, temporal_solution)
        assert np.isfinite(value)
        # U_s растёт от центра, U_t растёт от дна ямы
        assert value > spatial_solution.U_s0 + temporal_solution.U_t0
