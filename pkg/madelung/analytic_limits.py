"""Замкнутые состояния предела T=0: sinc в шаре и косинус во времени."""

import math
from typing import Optional

import numpy as np

from .core_numerics import interior_mask, quadrature, second_derivative
from .schemas import (
    AnalyticLimitState,
    DensityProfile,
    GridFunction,
    LimitKind,
    StencilKind,
    Weight,
)

MIN_INTERIOR_NODES = 64


def sinc_limit(U_s0: float, hbar: float = 1.0) -> AnalyticLimitState:
    """
    Предел T=0 пространственной задачи: I = A sinc(k0 r) на шаре r <= r0.

    k0 = sqrt(2 U_s0)/hbar, r0 = pi/k0, A^2 = k0^3/(2 pi^2).

    Raises:
        ValueError: Если U_s0 <= 0
    """
    if not U_s0 > 0:
        raise ValueError(f"предел sinc требует U_s0 > 0, получено {U_s0}")
    k0 = math.sqrt(2.0 * U_s0) / hbar
    return AnalyticLimitState(
        kind=LimitKind.SPATIAL_SINC,
        wavenumber=k0,
        boundary=math.pi / k0,
        amplitude=math.sqrt(k0**3 / (2.0 * math.pi**2)),
        level=U_s0,
    )


def cos_limit(U_t0: float, c: float = 1.0, hbar: float = 1.0) -> AnalyticLimitState:
    """
    Предел T=0 временной задачи: I = A cos(omega0 t) на |t| <= t0.

    omega0 = c sqrt(-2 U_t0)/hbar, t0 = pi/(2 omega0), A^2 = 1/t0.

    Raises:
        ValueError: Если U_t0 >= 0
    """
    if not U_t0 < 0:
        raise ValueError(f"предел cos требует U_t0 < 0, получено {U_t0}")
    omega0 = c * math.sqrt(-2.0 * U_t0) / hbar
    t0 = math.pi / (2.0 * omega0)
    return AnalyticLimitState(
        kind=LimitKind.TEMPORAL_COS,
        wavenumber=omega0,
        boundary=t0,
        amplitude=math.sqrt(1.0 / t0),
        level=U_t0,
    )


def limit_amplitude(state: AnalyticLimitState, x: np.ndarray) -> np.ndarray:
    """Амплитуда I(x) внутри носителя и ноль вне его; sinc(0) = 1."""
    x = np.asarray(x, dtype=float)
    inside = np.abs(x) <= state.boundary
    if state.kind is LimitKind.SPATIAL_SINC:
        # np.sinc(u) = sin(pi u)/(pi u)
        shape = np.sinc(state.wavenumber * x / math.pi)
    else:
        shape = np.cos(state.wavenumber * x)
    return np.where(inside, state.amplitude * shape, 0.0)


def limit_density(state: AnalyticLimitState, x: np.ndarray) -> np.ndarray:
    return limit_amplitude(state, x) ** 2


def limit_grid(state: AnalyticLimitState, points: int) -> GridFunction:
    """Амплитуда на равномерной сетке [0, r0] или [-t0, t0]."""
    lower = 0.0 if state.kind is LimitKind.SPATIAL_SINC else -state.boundary
    nodes = np.linspace(lower, state.boundary, points)
    return GridFunction(nodes=nodes, values=limit_amplitude(state, nodes))


def helmholtz_defect(f: GridFunction, kind: StencilKind, eigenvalue: float) -> float:
    """max |D2 f + eigenvalue * f| по внутренним узлам."""
    d2 = second_derivative(f, kind)
    mask = interior_mask(f.nodes, keep_origin=kind is StencilKind.RADIAL_LAPLACIAN_3D)
    return float(np.max(np.abs(d2.values[mask] + eigenvalue * f.values[mask])))


def eigen_residual(state: AnalyticLimitState, grid_spacing: float) -> float:
    """
    Дефект соотношения lap I = -k0^2 I (или I'' = -omega0^2 I) на сетке с шагом h.

    Raises:
        ValueError: Если на носителе меньше 64 внутренних узлов
    """
    lower = 0.0 if state.kind is LimitKind.SPATIAL_SINC else -state.boundary
    intervals = int(round((state.boundary - lower) / grid_spacing))
    if intervals - 1 < MIN_INTERIOR_NODES:
        raise ValueError(
            f"шаг {grid_spacing} даёт {intervals - 1} внутренних узлов, нужно {MIN_INTERIOR_NODES}"
        )
    nodes = np.linspace(lower, state.boundary, intervals + 1)
    f = GridFunction(nodes=nodes, values=limit_amplitude(state, nodes))
    kind = (
        StencilKind.RADIAL_LAPLACIAN_3D
        if state.kind is LimitKind.SPATIAL_SINC
        else StencilKind.CARTESIAN_1D
    )
    return helmholtz_defect(f, kind, state.wavenumber**2)


def limit_distance(
    density: DensityProfile,
    state: AnalyticLimitState,
    support: Optional[float] = None,
) -> float:
    """
    max-норма разности плотности решения и плотности предела.

    Обе плотности сужаются на общий носитель |x| <= min(x_last, r0 или t0)
    и перенормируются на нём в мере плотности.
    """
    common = min(float(np.max(np.abs(density.grid.nodes))), state.boundary)
    if support is not None:
        common = min(common, support)
    grid = density.grid
    restricted = grid.restrict(-common, common)
    weight = density.weight

    numeric = restricted.values / quadrature(restricted, weight)
    limit = restricted.with_values(limit_density(state, restricted.nodes))
    closed = limit.values / quadrature(limit, weight)
    return float(np.max(np.abs(numeric - closed)))
