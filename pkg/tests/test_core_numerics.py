"""Тесты численного ядра."""

import math

import numpy as np
import pytest

from madelung.core_numerics import (
    integrate_ivp,
    interior_mask,
    quadrature,
    refine_blowup,
    richardson_derivative,
    second_derivative,
    step_doubling_defect,
    window_mask,
)
from madelung.errors import FitFailed, NonFiniteRhs, NonUniformGrid
from madelung.schemas import (
    GridFunction,
    IvpProblem,
    IvpResult,
    LogDivergence,
    StencilKind,
    Termination,
    Weight,
)


def exponential(x, y):
    return np.array([y[1], y[0]])


def log_divergent_result(nodes: np.ndarray, T: float) -> IvpResult:
    values = -2 * T * np.log(1.0 - nodes) + 5.0
    slopes = 2 * T / (1.0 - nodes)
    return IvpResult(
        value=GridFunction(nodes=nodes, values=values),
        derivative=GridFunction(nodes=nodes, values=slopes),
        terminated_by=Termination.BLOWUP_DETECTED,
        threshold_crossing=float(nodes[-1]),
        blowup_estimate=1.0,
    )


class TestGridFunction:
    """Инварианты сеточной функции."""

    def test_rejects_unsorted_nodes(self):
        with pytest.raises(ValueError):
            GridFunction(nodes=[0.0, 2.0, 1.0], values=[1.0, 1.0, 1.0])

    def test_rejects_non_finite_values(self):
        with pytest.raises(ValueError):
            GridFunction(nodes=[0.0, 1.0, 2.0], values=[1.0, np.nan, 1.0])

    def test_rejects_two_nodes(self):
        with pytest.raises(ValueError):
            GridFunction(nodes=[0.0, 1.0], values=[1.0, 1.0])

    def test_arrays_are_read_only(self):
        f = GridFunction(nodes=np.linspace(0, 1, 5), values=np.ones(5))
        with pytest.raises(ValueError):
            f.values[0] = 2.0

    def test_spacing_rejects_geometric_grid(self):
        f = GridFunction(nodes=np.geomspace(1, 100, 10), values=np.ones(10))
        with pytest.raises(NonUniformGrid):
            f.spacing()


class TestIntegrateIvp:
    """Адаптивное интегрирование задачи Коши."""

    def test_zero_field_keeps_constant(self):
        problem = IvpProblem(
            rhs=lambda x, y: np.array([y[1], 0.0]), initial_point=0.0, initial_state=(1.0, 0.0)
        )
        result = integrate_ivp(problem, 1.0)

        assert result.terminated_by is Termination.REACHED_END
        np.testing.assert_allclose(result.value.values, 1.0, atol=1e-14)
        assert result.blowup_estimate is None

    def test_exponential_reaches_e(self):
        problem = IvpProblem(
            rhs=exponential,
            initial_point=0.0,
            initial_state=(1.0, 1.0),
            rel_tol=1e-10,
            method="DOP853",
        )
        result = integrate_ivp(problem, 1.0)

        assert result.last_point == 1.0
        assert abs(result.value.values[-1] - math.e) / math.e < 10 * problem.rel_tol

    def test_backward_direction_returns_increasing_nodes(self):
        problem = IvpProblem(
            rhs=exponential, initial_point=0.0, initial_state=(1.0, 1.0), direction=-1
        )
        result = integrate_ivp(problem, -1.0)

        assert np.all(np.diff(result.value.nodes) > 0)
        assert result.last_point == -1.0
        assert result.value.values[0] == pytest.approx(math.exp(-1.0), rel=1e-8)

    def test_pole_is_detected_and_extrapolated(self):
        # w' = w^2, w(0) = 1: w'' = 2 w w', полюс в x = 1
        problem = IvpProblem(
            rhs=lambda x, y: np.array([y[1], 2.0 * y[0] * y[1]]),
            initial_point=0.0,
            initial_state=(1.0, 1.0),
            blowup_threshold=1e6,
        )
        result = integrate_ivp(problem, 2.0)

        assert result.terminated_by is Termination.BLOWUP_DETECTED
        assert result.threshold_crossing < 1.0
        assert result.blowup_estimate == pytest.approx(1.0, abs=1e-3)
        assert result.blowup_estimate > result.last_point

    def test_non_finite_rhs_at_start(self):
        problem = IvpProblem(
            rhs=lambda x, y: np.array([y[1], np.nan]), initial_point=0.0, initial_state=(1.0, 0.0)
        )
        with pytest.raises(NonFiniteRhs):
            integrate_ivp(problem, 1.0)

    def test_end_on_wrong_side(self):
        problem = IvpProblem(rhs=exponential, initial_point=0.0, initial_state=(1.0, 1.0))
        with pytest.raises(ValueError):
            integrate_ivp(problem, -1.0)

    def test_threshold_must_exceed_initial_value(self):
        with pytest.raises(ValueError):
            IvpProblem(
                rhs=exponential, initial_point=0.0, initial_state=(5.0, 0.0), blowup_threshold=2.0
            )

    def test_tighter_tolerance_reduces_error(self):
        x = np.linspace(0.0, 10.0, 201)
        errors = []
        for rel_tol in (1e-4, 1e-4 / 16):
            problem = IvpProblem(
                rhs=exponential,
                initial_point=0.0,
                initial_state=(1.0, 1.0),
                rel_tol=rel_tol,
                abs_tol=1e-14,
                blowup_threshold=1e8,
                max_step=10.0,
            )
            result = integrate_ivp(problem, 10.0)
            errors.append(np.max(np.abs(result.dense(x)[0] / np.exp(x) - 1.0)))

        assert errors[0] / errors[1] >= 2.0

    def test_step_doubling_defect_is_small(self):
        problem = IvpProblem(
            rhs=exponential, initial_point=0.0, initial_state=(1.0, 1.0), rel_tol=1e-10
        )
        defect = step_doubling_defect(problem, 1.0)

        assert 0.0 <= defect < 1e-8


class TestRefineBlowup:
    """Лог-подгонка точки расходимости."""

    def test_recovers_planted_singularity(self):
        result = log_divergent_result(np.linspace(0.9, 0.999, 40), T=0.05)
        x_star = refine_blowup(result, LogDivergence(strength=0.1))

        assert x_star == pytest.approx(1.0, abs=1e-6)
        assert x_star > result.last_point

    def test_constant_tail_fails(self):
        nodes = np.linspace(0.0, 1.0, 20)
        result = IvpResult(
            value=GridFunction(nodes=nodes, values=np.full(20, 3.0)),
            derivative=GridFunction(nodes=nodes, values=np.zeros(20)),
            terminated_by=Termination.BLOWUP_DETECTED,
            blowup_estimate=1.5,
        )
        with pytest.raises(FitFailed):
            refine_blowup(result, LogDivergence(strength=0.1))

    def test_short_tail_fails(self):
        result = log_divergent_result(np.linspace(0.9, 0.999, 5), T=0.05)
        with pytest.raises(FitFailed):
            refine_blowup(result, LogDivergence(strength=0.1))

    def test_reached_end_fails(self):
        problem = IvpProblem(rhs=exponential, initial_point=0.0, initial_state=(1.0, 1.0))
        with pytest.raises(FitFailed):
            refine_blowup(integrate_ivp(problem, 1.0), LogDivergence(strength=0.1))


class TestRichardsonDerivative:
    def test_sine(self):
        x = np.linspace(0.1, 3.0, 30)
        slope = richardson_derivative(np.sin, x, 1e-3)
        np.testing.assert_allclose(slope, np.cos(x), atol=1e-10)

    def test_fourth_order(self):
        errors = [abs(richardson_derivative(np.exp, np.array([1.0]), d)[0] - math.e) for d in (0.1, 0.05)]
        assert 12.0 <= errors[0] / errors[1] <= 20.0


class TestQuadrature:
    """Составная формула Симпсона."""

    def test_unit_weight(self):
        f = GridFunction(nodes=np.linspace(0, 1, 101), values=np.ones(101))
        assert quadrature(f, Weight.UNIT) == pytest.approx(1.0, abs=1e-14)

    def test_ball_volume(self):
        f = GridFunction(nodes=np.linspace(0, 1, 101), values=np.ones(101))
        assert quadrature(f, Weight.RADIAL_BALL) == pytest.approx(4 * math.pi / 3, rel=1e-13)

    def test_exact_for_cubic(self):
        x = np.linspace(0, 1, 11)
        assert quadrature(GridFunction(nodes=x, values=x**3)) == pytest.approx(0.25, abs=1e-14)

    def test_sinc_squared_ball(self):
        r = np.linspace(0, math.pi / math.sqrt(2), 2001)
        f = GridFunction(nodes=r, values=np.sinc(math.sqrt(2) * r / math.pi) ** 2)
        # 4 pi r^2 sin^2(sqrt2 r)/(2 r^2) = 2 pi sin^2(sqrt2 r)
        assert quadrature(f, Weight.RADIAL_BALL) == pytest.approx(math.pi**2 / math.sqrt(2), abs=1e-8)


class TestSecondDerivative:
    """Шаблоны второй производной и их порядок."""

    def test_radial_laplacian_of_r_squared(self):
        r = np.linspace(0, 1, 101)
        lap = second_derivative(GridFunction(nodes=r, values=r**2), StencilKind.RADIAL_LAPLACIAN_3D)
        np.testing.assert_allclose(lap.values, 6.0, atol=1e-10)

    @staticmethod
    def _cos_error(points: int) -> float:
        t = np.linspace(0, 2, points)
        d2 = second_derivative(GridFunction(nodes=t, values=np.cos(3 * t)))
        mask = interior_mask(t)
        return float(np.max(np.abs(d2.values[mask] + 9 * np.cos(3 * t[mask]))))

    @staticmethod
    def _sinc_error(points: int) -> float:
        k = math.sqrt(2)
        r = np.linspace(0, math.pi / k, points)
        f = GridFunction(nodes=r, values=np.sinc(k * r / math.pi))
        lap = second_derivative(f, StencilKind.RADIAL_LAPLACIAN_3D)
        mask = interior_mask(r, keep_origin=True)
        return float(np.max(np.abs(lap.values[mask] + k**2 * f.values[mask])))

    def test_cartesian_order_two(self):
        ratio = self._cos_error(101) / self._cos_error(201)
        assert 3.5 <= ratio <= 4.5

    def test_radial_order_two(self):
        ratio = self._sinc_error(129) / self._sinc_error(257)
        assert 3.5 <= ratio <= 4.5

    def test_needs_five_nodes(self):
        with pytest.raises(ValueError):
            second_derivative(GridFunction(nodes=[0, 1, 2, 3], values=[0, 1, 4, 9]))

    def test_non_uniform_grid(self):
        x = np.geomspace(1, 10, 20)
        with pytest.raises(NonUniformGrid):
            second_derivative(GridFunction(nodes=x, values=x**2))


class TestMasks:
    def test_window_symmetric(self):
        t = np.linspace(-1, 1, 11)
        assert window_mask(t, 0.5, symmetric=True).sum() == 5

    def test_interior_keeps_origin(self):
        r = np.linspace(0, 1, 5)
        assert interior_mask(r, keep_origin=True).tolist() == [True, True, True, True, False]
