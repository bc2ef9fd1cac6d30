"""Сферически симметричная пространственная задача: U_s(r), радиус носителя r_m и плотность rho_s."""

import math
import time
from typing import Callable, Tuple

import numpy as np
from opentelemetry import trace
from scipy.optimize import brentq

from structured_logging import get_logger

from .core_numerics import integrate_ivp, quadrature, refine_blowup, richardson_derivative
from .errors import DegenerateFlat, NoBlowup, OverflowGuard, WrongSign
from .schemas import (
    DensityProfile,
    GridFunction,
    IvpProblem,
    IvpResult,
    LogDivergence,
    PhysicalConstants,
    PotentialProfile,
    SpatialSolution,
    SpatialSolveInput,
    Termination,
    Weight,
)

try:
    from metrics import SOLVE_DURATION_SECONDS, SOLVES_TOTAL
except ImportError:
    SOLVES_TOTAL = None
    SOLVE_DURATION_SECONDS = None

tracer = trace.get_tracer(__name__)
logger = get_logger("madelung")

# Старт интегрирования r = h0 в долях радиуса предела T=0
ORIGIN_OFFSET = 1e-6
# Порог события расходимости для производной: THRESHOLD_SCALE * max(1, |U(0)|)
THRESHOLD_SCALE = 1e8
# Узлов предварительной сетки для оценки Z при поиске границы носителя
PILOT_GRID_POINTS = 1025

Evaluator = Callable[[np.ndarray], np.ndarray]


def spatial_rhs(constants: PhysicalConstants) -> Callable[[float, np.ndarray], np.ndarray]:
    """
    Правая часть U'' = (U')^2/(2T) + (4T/hbar^2) U - (2/r) U'.

    Получена подстановкой rho = exp(-U/T)/Z в U = -(hbar^2/2) lap(sqrt(rho))/sqrt(rho).
    """
    T = constants.T
    coupling = 4.0 * T / constants.hbar**2

    def rhs(r: float, y: np.ndarray) -> np.ndarray:
        value, slope = y
        return np.array([slope, slope * slope / (2.0 * T) + coupling * value - 2.0 * slope / r])

    return rhs


def origin_series(U_s0: float, constants: PhysicalConstants, r: np.ndarray) -> np.ndarray:
    """
    Ряд у начала координат U = U(0) + a r^2, a = 2 T U(0) / (3 hbar^2).

    Returns:
        Массив формы (2, n): значения и производные
    """
    r = np.asarray(r, dtype=float)
    a = 2.0 * constants.T * U_s0 / (3.0 * constants.hbar**2)
    return np.array([U_s0 + a * r**2, 2.0 * a * r])


def frozen_radius(U_s0: float, constants: PhysicalConstants) -> float:
    """r0 = pi / k0, k0 = sqrt(2 U_s0) / hbar."""
    return math.pi * constants.hbar / math.sqrt(2.0 * U_s0)


def support_cutoff(
    evaluate: Evaluator,
    end: float,
    T: float,
    weight: Weight,
    rho_floor: float,
    mirrored: bool = False,
) -> Tuple[float, float]:
    """
    Координата, где плотность опускается до ``rho_floor``.

    Z оценивается на предварительной равномерной сетке [0, end]; затем
    решается U(x) = -T ln(rho_floor * Z). Для отражённой временной задачи Z
    считается по обеим половинам.

    Returns:
        (координата обрезки, оценка ln Z)
    """
    pilot = np.linspace(0.0, end, PILOT_GRID_POINTS)
    exponent = -evaluate(pilot)[0] / T
    shift = float(np.max(exponent))
    scaled = GridFunction(nodes=pilot, values=np.exp(exponent - shift))
    log_z = shift + math.log(quadrature(scaled, weight) * (2.0 if mirrored else 1.0))
    level = -T * (math.log(rho_floor) + log_z)

    def excess(x: float) -> float:
        return float(evaluate(np.array([x]))[0][0] - level)

    if excess(end) <= 0:
        return end, log_z
    if excess(0.0) >= 0:
        raise OverflowGuard("плотность ниже пола уже в центре носителя", level=level)
    return float(brentq(excess, 0.0, end, xtol=1e-14 * end)), log_z


def density_from_potential(
    potential: PotentialProfile, T: float, weight: Weight = Weight.RADIAL_BALL
) -> DensityProfile:
    """
    Нормированная плотность Гиббса rho = exp(-U/T)/Z.

    Экспонента сдвигается на свой максимум до возведения, поэтому
    ln Z = shift + ln(int exp(-U/T - shift) w).

    Args:
        potential: Потенциал на равномерной сетке
        T: Множитель Лагранжа, T > 0
        weight: Мера нормировки

    Returns:
        DensityProfile с ln Z и энтропией H = -int rho ln rho w

    Raises:
        ValueError: Если T <= 0
        OverflowGuard: Если -U/T не представимо конечным числом
    """
    if not T > 0:
        raise ValueError(f"T должно быть положительным, получено {T}")
    grid = potential.grid
    with np.errstate(over="ignore", invalid="ignore"):
        exponent = -grid.values / T
    if not np.all(np.isfinite(exponent)):
        raise OverflowGuard("показатель -U/T не конечен", T=T)

    shift = float(np.max(exponent))
    scaled = np.exp(exponent - shift)
    scaled_norm = quadrature(grid.with_values(scaled), weight)
    log_z = shift + math.log(scaled_norm)
    rho = scaled / scaled_norm
    log_rho = exponent - log_z
    entropy = -quadrature(grid.with_values(rho * log_rho), weight)

    return DensityProfile(
        grid=grid.with_values(rho),
        log_normalization=log_z,
        entropy=entropy,
        weight=weight,
    )


def _stitched_evaluator(trajectory: IvpResult, U_s0: float, constants: PhysicalConstants, h0: float) -> Evaluator:
    dense = trajectory.dense

    def evaluate(r: np.ndarray) -> np.ndarray:
        r = np.atleast_1d(np.asarray(r, dtype=float))
        out = np.empty((2, r.size))
        near = r < h0
        out[:, near] = origin_series(U_s0, constants, r[near])
        if np.any(~near):
            out[:, ~near] = dense(r[~near])
        return out

    return evaluate


def solve_spatial(params: SpatialSolveInput) -> SpatialSolution:
    """
    Решает пространственное уравнение от центра до расходимости U_s.

    Интегрирование стартует в r = h0 по ряду у начала координат и идёт до
    горизонта ``horizon_factor * r0``. Радиус r_m уточняется лог-подгонкой
    хвоста с силой 2T; плотность строится на равномерной сетке до точки,
    где rho падает до ``rho_floor``.
    Шаг интегратора ограничен r0 / grid_points: погрешность плотного
    вывода между узлами сетки остаётся ниже погрешности разностных шаблонов.

    Raises:
        DegenerateFlat: U_s0 = 0
        WrongSign: U_s0 < 0
        NoBlowup: Расходимость не достигнута до горизонта
        FitFailed: Хвост траектории не описывается логарифмом
    """
    constants = params.constants
    U_s0 = params.U_s0
    T = constants.T
    start_time = time.time()

    with tracer.start_as_current_span("solve_spatial") as span:
        span.set_attribute("T", T)
        span.set_attribute("U_s0", U_s0)
        try:
            if U_s0 == 0:
                raise DegenerateFlat("U_s0 = 0 даёт тождественно нулевое решение")
            if U_s0 < 0:
                raise WrongSign("пространственное семейство требует U_s0 > 0", U_s0=U_s0)

            r0 = frozen_radius(U_s0, constants)
            h0 = ORIGIN_OFFSET * r0
            horizon = params.horizon_factor * r0
            problem = IvpProblem(
                rhs=spatial_rhs(constants),
                initial_point=h0,
                initial_state=tuple(origin_series(U_s0, constants, h0)),
                rel_tol=params.rel_tol,
                abs_tol=params.abs_tol,
                method=params.method,
                blowup_threshold=THRESHOLD_SCALE * max(1.0, abs(U_s0)),
                blowup_component=1,
                max_step=r0 / params.grid_points,
            )
            trajectory = integrate_ivp(problem, horizon)
            if trajectory.terminated_by is Termination.REACHED_END:
                raise NoBlowup(
                    "решение не разошлось до горизонта интегрирования",
                    horizon=horizon,
                    T=T,
                )
            r_m = refine_blowup(trajectory, LogDivergence(strength=2.0 * T))

            evaluate = _stitched_evaluator(trajectory, U_s0, constants, h0)
            r_last, _ = support_cutoff(
                evaluate, trajectory.last_point, T, Weight.RADIAL_BALL, params.rho_floor
            )
            nodes = np.linspace(0.0, r_last, params.grid_points)
            potential = PotentialProfile(
                grid=GridFunction(nodes=nodes, values=evaluate(nodes)[0]),
                trajectory=trajectory.value,
                blowup=r_m,
                threshold_crossing=trajectory.threshold_crossing,
                terminated_by=trajectory.terminated_by,
            )
            density = density_from_potential(potential, T, Weight.RADIAL_BALL)
        except Exception as e:
            if SOLVES_TOTAL:
                SOLVES_TOTAL.labels(solver="spatial", status=getattr(e, "code", "error")).inc()
            span.set_attribute("error", str(e))
            raise

        span.set_attribute("r_m", r_m)
        if SOLVES_TOTAL:
            SOLVES_TOTAL.labels(solver="spatial", status="ok").inc()
        if SOLVE_DURATION_SECONDS:
            SOLVE_DURATION_SECONDS.labels(solver="spatial").observe(time.time() - start_time)
        logger.debug(
            "spatial solve finished",
            T=T,
            U_s0=U_s0,
            r_m=r_m,
            threshold_crossing=trajectory.threshold_crossing,
            steps=trajectory.n_steps,
            terminated_by=trajectory.terminated_by.value,
        )

        return SpatialSolution(
            potential=potential,
            density=density,
            constants=constants,
            floor_coordinate=r_last,
            rho_floor=params.rho_floor,
            evaluate=evaluate,
            r_m=r_m,
            U_s0=U_s0,
        )


def ode_defect(
    solution: SpatialSolution, fraction: float = 0.8, step: float = 2e-4
) -> float:
    """
    Относительная невязка пространственного уравнения на внутренних узлах.

    U'' берётся экстраполяцией Ричардсона по производной плотного вывода с
    шагом ``step * r_last``; невязка нормируется на максимум модулей слагаемых
    и сравнима с 10 * rel_tol.
    """
    rhs = spatial_rhs(solution.constants)
    nodes = solution.potential.grid.nodes
    delta = step * nodes[-1]
    inner = nodes[(nodes > max(nodes[1], delta)) & (nodes <= fraction * nodes[-1])]
    state = solution.evaluate(inner)
    curvature = richardson_derivative(lambda r: solution.evaluate(r)[1], inner, delta)
    predicted = np.array([rhs(r, y)[1] for r, y in zip(inner, state.T)])
    T = solution.constants.T
    terms = np.vstack(
        [
            np.abs(curvature),
            state[1] ** 2 / (2 * T),
            np.abs(4 * T * state[0] / solution.constants.hbar**2),
            np.abs(2 * state[1] / inner),
        ]
    )
    return float(np.max(np.abs(curvature - predicted)) / np.max(terms))
