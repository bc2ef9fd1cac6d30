"""Произведение I_s(r) I_t(t): невязка Клейна-Гордона, обратное восстановление потенциала и сдвиги."""

import math
from typing import Optional, Tuple, Union

import numpy as np
from scipy.integrate import simpson

from .analytic_limits import limit_amplitude
from .core_numerics import interior_mask, quadrature, second_derivative, window_mask
from .errors import DensityFloorReached
from .mass_spectrum import compute_mass
from .schemas import (
    AnalyticLimitState,
    GridFunction,
    PhysicalConstants,
    ProductState,
    SpatialSolution,
    StencilKind,
    TemporalSolution,
    Weight,
)

MIN_PRODUCT_NODES = 65
INTERIOR_FRACTION = 0.8
# Окно проверки должно лежать выше пола плотности с запасом
FLOOR_MARGIN = 1e3


def build_product_state(
    spatial: AnalyticLimitState,
    temporal: AnalyticLimitState,
    grid: Tuple[int, int],
    constants: PhysicalConstants,
) -> ProductState:
    """
    Собирает sinc(k0 r) * cos(omega0 t) на сетке n_r x n_t.

    Массу даёт compute_mass; совместная нормировка считается тензорной
    формулой Симпсона по мере 4 pi r^2 dr dt.

    Args:
        spatial: Состояние SpatialSinc
        temporal: Состояние TemporalCos
        grid: (n_r, n_t), каждое не меньше 65
        constants: hbar и c

    Raises:
        ValueError: Если сетка мала или типы состояний перепутаны
        NonNegativeUtot: Если U_s0 + U_t0 >= 0
    """
    n_r, n_t = grid
    if min(n_r, n_t) < MIN_PRODUCT_NODES:
        raise ValueError(f"нужно не менее {MIN_PRODUCT_NODES} узлов по каждому измерению")
    report = compute_mass(spatial, temporal, constants)

    r = np.linspace(0.0, spatial.boundary, n_r)
    t = np.linspace(-temporal.boundary, temporal.boundary, n_t)
    radial = np.clip(limit_amplitude(spatial, r), 0.0, None)
    wave = np.clip(limit_amplitude(temporal, t), 0.0, None)
    # sin(pi) и cos(pi/2) в двойной точности не равны нулю
    radial[-1] = 0.0
    wave[0] = wave[-1] = 0.0

    density = np.outer(radial**2 * 4.0 * math.pi * r**2, wave**2)
    normalization = float(simpson(simpson(density, x=t, axis=1), x=r))

    return ProductState(
        spatial_amplitude=GridFunction(nodes=r, values=radial),
        temporal_amplitude=GridFunction(nodes=t, values=wave),
        mass=report.m,
        constants=constants,
        normalization=normalization,
    )


def kg_residual(
    state: ProductState,
    mass: Optional[float] = None,
    interior_fraction: float = INTERIOR_FRACTION,
) -> float:
    """
    max |box I + (m c / hbar)^2 I| на внутренней доле носителя.

    box = (1/c^2) d_t^2 - lap_r. Для произведения I_s I_t все слагаемые
    раскладываются во внешние произведения одномерных шаблонов.
    """
    constants = state.constants
    m = state.mass if mass is None else mass
    radial, wave = state.spatial_amplitude, state.temporal_amplitude

    lap_r = second_derivative(radial, StencilKind.RADIAL_LAPLACIAN_3D).values
    d2_t = second_derivative(wave, StencilKind.CARTESIAN_1D).values

    r_mask = window_mask(radial.nodes, interior_fraction, symmetric=False) & interior_mask(
        radial.nodes, keep_origin=True
    )
    t_mask = window_mask(wave.nodes, interior_fraction, symmetric=True) & interior_mask(wave.nodes)

    I_r, I_t = radial.values[r_mask], wave.values[t_mask]
    mass_term = (m * constants.c / constants.hbar) ** 2
    residual = (
        np.outer(I_r, d2_t[t_mask]) / constants.c**2
        - np.outer(lap_r[r_mask], I_t)
        + mass_term * np.outer(I_r, I_t)
    )
    return float(np.max(np.abs(residual)))


def reconstruct_potential(
    density: GridFunction, kind: StencilKind, constants: PhysicalConstants
) -> GridFunction:
    """
    Квантовый потенциал по плотности.

    Пространственный: -(hbar^2/2) lap(I)/I; временной: +(hbar^2/(2 c^2)) I''/I.
    Отношение берётся через ln I = ln(rho)/2 по тождеству
    lap(I)/I = lap(ln I) + |grad ln I|^2, так что на I не делится.
    Узлы с rho <= 0 получают нулевой потенциал.
    """
    positive = density.values > 0
    log_amplitude = density.with_values(0.5 * np.log(np.where(positive, density.values, 1.0)))
    gradient = np.gradient(log_amplitude.values, log_amplitude.spacing(), edge_order=2)
    if kind is StencilKind.RADIAL_LAPLACIAN_3D:
        factor = -constants.hbar**2 / 2.0
        # чётное продолжение через r = 0
        if density.nodes[0] == 0.0:
            gradient[0] = 0.0
    else:
        factor = constants.hbar**2 / (2.0 * constants.c**2)
    curvature = second_derivative(log_amplitude, kind).values + gradient**2
    return density.with_values(np.where(positive, factor * curvature, 0.0))



def potential_roundtrip(
    solution: Union[SpatialSolution, TemporalSolution],
    constants: PhysicalConstants,
    interior_fraction: float = INTERIOR_FRACTION,
) -> float:
    """
    Сравнивает потенциал решения ОДУ с восстановленным из его плотности.

    Returns:
        max |U_rec - U| / max |U| по внутренней доле носителя

    Raises:
        DensityFloorReached: Если окно проверки заходит в зону пола плотности
    """
    spatial = isinstance(solution, SpatialSolution)
    kind = StencilKind.RADIAL_LAPLACIAN_3D if spatial else StencilKind.CARTESIAN_1D
    density = solution.density.grid
    mask = window_mask(density.nodes, interior_fraction, symmetric=not spatial) & interior_mask(
        density.nodes, keep_origin=spatial
    )
    if np.min(density.values[mask]) <= FLOOR_MARGIN * solution.rho_floor:
        raise DensityFloorReached(
            "окно проверки заходит в зону пола плотности",
            fraction=interior_fraction,
        )

    reconstructed = reconstruct_potential(density, kind, constants)
    potential = solution.potential.grid.values[mask]
    error = np.abs(reconstructed.values[mask] - potential)
    return float(np.max(error) / np.max(np.abs(potential)))


def translate_state(
    state: ProductState, shift: Tuple[float, float, float, float]
) -> ProductState:
    """Сдвиг носителя на 4-вектор (c dt, dx, dy, dz); значения амплитуд не меняются."""
    origin = tuple(a + b for a, b in zip(state.origin, shift))
    return state.model_copy(update={"origin": origin})


def average_quantum_potential(
    spatial: SpatialSolution, temporal: TemporalSolution
) -> float:
    """
    int U rho по носителю произведения.

    Плотность произведения нормирована по каждому множителю, поэтому
    среднее суммы U_s + U_t распадается на два одномерных средних.
    """
    spatial_density = spatial.density.grid
    temporal_density = temporal.density.grid
    spatial_mean = quadrature(
        spatial_density.with_values(spatial_density.values * spatial.potential.grid.values),
        Weight.RADIAL_BALL,
    )
    temporal_mean = quadrature(
        temporal_density.with_values(temporal_density.values * temporal.potential.grid.values),
        Weight.UNIT,
    )
    return spatial_mean + temporal_mean


def boundary_slices(state: ProductState) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Срезы I(r0, t), I(r, -t0) и I(r, t0)."""
    radial, wave = state.spatial_amplitude.values, state.temporal_amplitude.values
    return radial[-1] * wave, radial * wave[0], radial * wave[-1]
