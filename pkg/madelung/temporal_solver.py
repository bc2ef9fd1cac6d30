"""Временная задача: U_t(t), полуширина носителя t_a и плотность rho_t."""

import math
import time
from typing import Callable

import numpy as np
from opentelemetry import trace

from structured_logging import get_logger

from .core_numerics import integrate_ivp, refine_blowup, richardson_derivative
from .errors import NoBlowup, WrongSign
from .schemas import (
    GridFunction,
    IvpProblem,
    LogDivergence,
    PhysicalConstants,
    PotentialProfile,
    TemporalSolution,
    TemporalSolveInput,
    Termination,
    Weight,
)
from .spatial_solver import THRESHOLD_SCALE, density_from_potential, support_cutoff

try:
    from metrics import SOLVE_DURATION_SECONDS, SOLVES_TOTAL
except ImportError:
    SOLVES_TOTAL = None
    SOLVE_DURATION_SECONDS = None

tracer = trace.get_tracer(__name__)
logger = get_logger("madelung")


def temporal_rhs(constants: PhysicalConstants) -> Callable[[float, np.ndarray], np.ndarray]:
    """Правая часть U'' = (U')^2/(2T) - (4 T c^2 / hbar^2) U."""
    T = constants.T
    coupling = 4.0 * T * constants.c**2 / constants.hbar**2

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        value, slope = y
        return np.array([slope, slope * slope / (2.0 * T) - coupling * value])

    return rhs


def frozen_half_width(U_t0: float, constants: PhysicalConstants) -> float:
    """t0 = pi / (2 omega0), omega0 = c sqrt(-2 U_t0) / hbar."""
    return math.pi * constants.hbar / (2.0 * constants.c * math.sqrt(-2.0 * U_t0))


def symmetrize(half: GridFunction) -> GridFunction:
    """
    Чётное отражение функции с [0, t_last] на [-t_last, t_last].

    Узел t = 0 не дублируется.

    Raises:
        ValueError: Если первый узел не равен нулю
    """
    if half.nodes[0] != 0.0:
        raise ValueError("отражаемая функция должна начинаться в t = 0")
    nodes = np.concatenate([-half.nodes[:0:-1], half.nodes])
    values = np.concatenate([half.values[:0:-1], half.values])
    return GridFunction(nodes=nodes, values=values)


def solve_temporal(params: TemporalSolveInput) -> TemporalSolution:
    """
    Решает временное уравнение от t = 0 до расходимости U_t и отражает решение.

    Args:
        params: U_t0 < 0, постоянные и численные настройки

    Returns:
        TemporalSolution на симметричной сетке [-t_last, t_last]

    Raises:
        WrongSign: U_t0 >= 0
        NoBlowup: T >= |U_t0| (периодический режим) или нет расходимости до горизонта
        FitFailed: Хвост траектории не описывается логарифмом
    """
    constants = params.constants
    U_t0 = params.U_t0
    T = constants.T
    start_time = time.time()

    with tracer.start_as_current_span("solve_temporal") as span:
        span.set_attribute("T", T)
        span.set_attribute("U_t0", U_t0)
        try:
            if U_t0 >= 0:
                raise WrongSign("временное семейство требует U_t0 < 0", U_t0=U_t0)
            # sqrt(rho) колеблется в яме, не достигая нуля, при T >= |U_t0|
            if T >= abs(U_t0):
                raise NoBlowup("при T >= |U_t0| решение периодично", T=T, U_t0=U_t0)

            t0 = frozen_half_width(U_t0, constants)
            horizon = params.horizon_factor * t0
            problem = IvpProblem(
                rhs=temporal_rhs(constants),
                initial_point=0.0,
                initial_state=(U_t0, 0.0),
                rel_tol=params.rel_tol,
                abs_tol=params.abs_tol,
                method=params.method,
                blowup_threshold=THRESHOLD_SCALE * max(1.0, abs(U_t0)),
                blowup_component=1,
                # не крупнее шага половины сетки плотности
                max_step=2.0 * t0 / params.grid_points,
            )
            trajectory = integrate_ivp(problem, horizon)
            if trajectory.terminated_by is Termination.REACHED_END:
                raise NoBlowup(
                    "решение не разошлось до горизонта интегрирования",
                    horizon=horizon,
                    T=T,
                )
            t_a = refine_blowup(trajectory, LogDivergence(strength=2.0 * T))

            dense = trajectory.dense

            def evaluate(t: np.ndarray) -> np.ndarray:
                return dense(np.atleast_1d(np.asarray(t, dtype=float)))

            t_last, _ = support_cutoff(
                evaluate, trajectory.last_point, T, Weight.UNIT, params.rho_floor, mirrored=True
            )
            half_points = params.grid_points // 2 + 1
            half_nodes = np.linspace(0.0, t_last, half_points)
            half = GridFunction(nodes=half_nodes, values=evaluate(half_nodes)[0])
            potential = PotentialProfile(
                grid=symmetrize(half),
                trajectory=trajectory.value,
                blowup=t_a,
                threshold_crossing=trajectory.threshold_crossing,
                terminated_by=trajectory.terminated_by,
            )
            density = density_from_potential(potential, T, Weight.UNIT)
        except Exception as e:
            if SOLVES_TOTAL:
                SOLVES_TOTAL.labels(solver="temporal", status=getattr(e, "code", "error")).inc()
            span.set_attribute("error", str(e))
            raise

        span.set_attribute("t_a", t_a)
        if SOLVES_TOTAL:
            SOLVES_TOTAL.labels(solver="temporal", status="ok").inc()
        if SOLVE_DURATION_SECONDS:
            SOLVE_DURATION_SECONDS.labels(solver="temporal").observe(time.time() - start_time)
        logger.debug(
            "temporal solve finished",
            T=T,
            U_t0=U_t0,
            t_a=t_a,
            threshold_crossing=trajectory.threshold_crossing,
            steps=trajectory.n_steps,
            terminated_by=trajectory.terminated_by.value,
        )

        return TemporalSolution(
            potential=potential,
            density=density,
            constants=constants,
            floor_coordinate=t_last,
            rho_floor=params.rho_floor,
            evaluate=evaluate,
            t_a=t_a,
            U_t0=U_t0,
        )


def ode_defect(solution: TemporalSolution, fraction: float = 0.8, step: float = 2e-4) -> float:
    """Относительная невязка временного уравнения на [step * t_last, fraction * t_last]."""
    rhs = temporal_rhs(solution.constants)
    nodes = solution.potential.grid.nodes
    t_last = nodes[-1]
    delta = step * t_last
    inner = nodes[(nodes > delta) & (nodes <= fraction * t_last)]
    state = solution.evaluate(inner)
    curvature = richardson_derivative(lambda t: solution.evaluate(t)[1], inner, delta)
    predicted = np.array([rhs(t, y)[1] for t, y in zip(inner, state.T)])
    constants = solution.constants
    terms = np.vstack(
        [
            np.abs(curvature),
            state[1] ** 2 / (2 * constants.T),
            np.abs(4 * constants.T * constants.c**2 * state[0] / constants.hbar**2),
        ]
    )
    return float(np.max(np.abs(curvature - predicted)) / np.max(terms))
