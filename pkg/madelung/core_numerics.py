"""Численное ядро: адаптивное интегрирование ОДУ, квадратуры и конечно-разностные шаблоны."""

import math
from typing import Callable, Optional

import numpy as np
from scipy.integrate import simpson, solve_ivp
from scipy.optimize import minimize_scalar

from .errors import FitFailed, NonFiniteRhs
from .schemas import (
    GridFunction,
    IvpProblem,
    IvpResult,
    LogDivergence,
    StencilKind,
    Termination,
    Weight,
)

# max_step по умолчанию: доля длины отрезка интегрирования
DEFAULT_STEP_FRACTION = 32
MIN_TAIL_NODES = 8
MIN_STENCIL_NODES = 5

# Границы поиска зазора x* - x_last относительно длины хвоста (в логарифмах)
GAP_SEARCH_LOWER = 1e-12
GAP_SEARCH_UPPER = 1e3


class _RhsGuard:
    """
    Обёртка правой части.

    Переполнения на пробных стадиях шага (за точкой расходимости) отбрасываются
    самим интегратором; здесь запоминается только случай, когда правая часть
    вернула нечисловое значение в конечном состоянии ниже порога.
    """

    def __init__(self, problem: IvpProblem):
        self._rhs = problem.rhs
        self._component = problem.blowup_component
        self._threshold = problem.blowup_threshold
        self.non_finite_at: Optional[float] = None

    def __call__(self, x: float, y: np.ndarray) -> np.ndarray:
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            out = np.asarray(self._rhs(x, y), dtype=float)
        if (
            self.non_finite_at is None
            and not np.all(np.isfinite(out))
            and np.all(np.isfinite(y))
            and abs(y[self._component]) < self._threshold
        ):
            self.non_finite_at = float(x)
        return out


def _pole_extrapolation(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    x: float,
    state: np.ndarray,
    component: int,
    direction: int,
) -> float:
    """Положение простого полюса контролируемой компоненты: x + |g/g'|."""
    g = state[component]
    slope = state[1] if component == 0 else rhs(x, state)[1]
    if slope == 0 or not math.isfinite(slope):
        return math.nextafter(x, direction * math.inf)
    return x + direction * abs(g / slope)


def integrate_ivp(problem: IvpProblem, end: float) -> IvpResult:
    """
    Интегрирует задачу Коши до ``end``, порога расходимости или исчезновения шага.

    Args:
        problem: Задача Коши
        end: Конечная координата (по направлению интегрирования)

    Returns:
        IvpResult с траекторией, плотным выводом и причиной остановки

    Raises:
        ValueError: Если ``end`` лежит не с той стороны от начальной точки
        NonFiniteRhs: Если правая часть вернула нечисловые значения до порога
    """
    start = problem.initial_point
    direction = problem.direction
    if (end - start) * direction <= 0:
        raise ValueError(f"конец {end} не лежит по направлению {direction} от {start}")

    guard = _RhsGuard(problem)
    y0 = np.asarray(problem.initial_state, dtype=float)
    if not np.all(np.isfinite(guard(start, y0))):
        raise NonFiniteRhs("правая часть не конечна в начальной точке", x=start)

    component = problem.blowup_component
    threshold = problem.blowup_threshold

    def blowup_event(x: float, y: np.ndarray) -> float:
        return abs(y[component]) - threshold

    blowup_event.terminal = True
    blowup_event.direction = 1.0

    max_step = problem.max_step or abs(end - start) / DEFAULT_STEP_FRACTION
    with np.errstate(over="ignore", invalid="ignore"):
        solution = solve_ivp(
            guard,
            (start, end),
            y0,
            method=problem.method,
            rtol=problem.rel_tol,
            atol=problem.abs_tol,
            max_step=max_step,
            dense_output=True,
            events=blowup_event,
        )

    if not np.all(np.isfinite(solution.y)):
        raise NonFiniteRhs("траектория содержит нечисловые значения", x=guard.non_finite_at)

    if solution.status == 1:
        terminated_by = Termination.BLOWUP_DETECTED
    elif solution.status == 0:
        terminated_by = Termination.REACHED_END
    else:
        if guard.non_finite_at is not None:
            raise NonFiniteRhs(
                "правая часть вернула нечисловые значения до пересечения порога",
                x=guard.non_finite_at,
            )
        terminated_by = Termination.STEP_UNDERFLOW

    nodes = solution.t
    values, slopes = solution.y[0], solution.y[1]
    crossing = estimate = None
    if terminated_by is Termination.BLOWUP_DETECTED:
        crossing = float(nodes[-1])
        estimate = _pole_extrapolation(guard, crossing, solution.y[:, -1], component, direction)

    if direction == -1:
        nodes, values, slopes = nodes[::-1], values[::-1], slopes[::-1]

    return IvpResult(
        value=GridFunction(nodes=nodes, values=values),
        derivative=GridFunction(nodes=nodes, values=slopes),
        terminated_by=terminated_by,
        direction=direction,
        threshold_crossing=crossing,
        blowup_estimate=estimate,
        n_steps=int(solution.t.size - 1),
        dense=solution.sol,
    )


def step_doubling_defect(problem: IvpProblem, end: float, samples: int = 257) -> float:
    """
    Оценка погрешности повторным решением с вдвое меньшими допусками.

    Returns:
        Максимум |y_tol - y_tol/2| по значению на общем отрезке
    """
    coarse = integrate_ivp(problem, end)
    halved = problem.model_copy(
        update={"rel_tol": problem.rel_tol / 2, "abs_tol": problem.abs_tol / 2}
    )
    fine = integrate_ivp(halved, end)
    reach = min(
        problem.direction * (coarse.last_point - problem.initial_point),
        problem.direction * (fine.last_point - problem.initial_point),
    )
    x = problem.initial_point + problem.direction * np.linspace(0.0, reach, samples)
    return float(np.max(np.abs(coarse.dense(x)[0] - fine.dense(x)[0])))


def refine_blowup(result: IvpResult, model: LogDivergence) -> float:
    """
    Уточняет точку расходимости подгонкой U ~ -s*ln(x* - x) + C к хвосту.

    При фиксированном x* константа C находится в замкнутом виде, поэтому
    минимизируется одномерная невязка по ln(x* - x_last).

    Args:
        result: Результат интегрирования, остановленного расходимостью
        model: Модель логарифмической расходимости

    Returns:
        x*, лежащая за последним узлом траектории

    Raises:
        FitFailed: Если хвост короче 8 узлов, немонотонен или минимум на границе
    """
    if result.terminated_by is Termination.REACHED_END:
        raise FitFailed("траектория дошла до конца отрезка без расходимости")

    coords, values = result.tail(model.tail_nodes)
    if coords.size < MIN_TAIL_NODES:
        raise FitFailed(f"в хвосте {coords.size} узлов, нужно не менее {MIN_TAIL_NODES}")
    if not np.all(np.diff(values) > 0):
        raise FitFailed("хвост траектории немонотонен")

    direction = result.direction
    distances = direction * (coords[-1] - coords)
    span = float(distances[0])
    strength = model.strength

    def misfit(log_gap: float) -> float:
        shifted = values + strength * np.log(distances + math.exp(log_gap))
        return float(np.sum((shifted - shifted.mean()) ** 2))

    lower = math.log(span * GAP_SEARCH_LOWER)
    upper = math.log(span * GAP_SEARCH_UPPER)
    best = minimize_scalar(
        misfit, bounds=(lower, upper), method="bounded", options={"xatol": 1e-10}
    )
    if not best.success or best.x - lower < 1e-6 or upper - best.x < 1e-6:
        raise FitFailed("минимум невязки не найден внутри допустимого интервала")
    return float(coords[-1] + direction * math.exp(best.x))


def quadrature(f: GridFunction, weight: Weight = Weight.UNIT) -> float:
    """Интеграл f по составной формуле Симпсона (порядок 4), вес 1 или 4*pi*r^2."""
    integrand = f.values
    if weight is Weight.RADIAL_BALL:
        integrand = integrand * 4.0 * math.pi * f.nodes**2
    return float(simpson(integrand, x=f.nodes))


def richardson_derivative(
    f: Callable[[np.ndarray], np.ndarray], x: np.ndarray, delta: float
) -> np.ndarray:
    """
    Первая производная центральной разностью с экстраполяцией Ричардсона.

    (4 D(delta/2) - D(delta)) / 3, где D(s) = (f(x+s) - f(x-s)) / (2s);
    погрешность O(delta^4) плюс округление порядка eps |f| / delta.
    """
    x = np.asarray(x, dtype=float)

    def central(step: float) -> np.ndarray:
        return (f(x + step) - f(x - step)) / (2.0 * step)

    return (4.0 * central(delta / 2.0) - central(delta)) / 3.0


def second_derivative(f: GridFunction, kind: StencilKind = StencilKind.CARTESIAN_1D) -> GridFunction:
    """
    Центральная вторая производная второго порядка на равномерной сетке.

    На концах используются односторонние шаблоны того же порядка. Для
    ``RadialLaplacian3D`` добавляется (2/r) f'; в узле r = 0 берётся 3 f''(0)
    по чётному продолжению.

    Raises:
        ValueError: Если узлов меньше пяти или радиальная сетка заходит в r < 0
        NonUniformGrid: Если шаг сетки непостоянен
    """
    if f.size < MIN_STENCIL_NODES:
        raise ValueError(f"для шаблона нужно не менее {MIN_STENCIL_NODES} узлов")
    h = f.spacing()
    v = f.values
    d2 = np.empty_like(v)
    d2[1:-1] = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / h**2
    d2[0] = (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) / h**2
    d2[-1] = (2.0 * v[-1] - 5.0 * v[-2] + 4.0 * v[-3] - v[-4]) / h**2

    if kind is StencilKind.RADIAL_LAPLACIAN_3D:
        r = f.nodes
        if r[0] < 0:
            raise ValueError("радиальная сетка должна лежать в r >= 0")
        d1 = np.gradient(v, h, edge_order=2)
        laplacian = d2.copy()
        positive = r > 0
        laplacian[positive] += 2.0 * d1[positive] / r[positive]
        if r[0] == 0.0:
            laplacian[0] = 3.0 * 2.0 * (v[1] - v[0]) / h**2
        d2 = laplacian

    return f.with_values(d2)


def interior_mask(nodes: np.ndarray, keep_origin: bool = False) -> np.ndarray:
    """Маска внутренних узлов; узел r = 0 радиальной сетки можно оставить."""
    mask = np.ones(nodes.size, dtype=bool)
    mask[0] = keep_origin and nodes[0] == 0.0
    mask[-1] = False
    return mask


def window_mask(nodes: np.ndarray, fraction: float, symmetric: bool) -> np.ndarray:
    """Внутренняя доля носителя: r <= f*r_max или |t| <= f*t_max."""
    if symmetric:
        return np.abs(nodes) <= fraction * np.max(np.abs(nodes))
    return nodes <= nodes[0] + fraction * (nodes[-1] - nodes[0])

