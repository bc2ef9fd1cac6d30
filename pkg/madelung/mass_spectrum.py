"""Возникающая масса, соотношение энергия-импульс-масса и неопределённость времени."""

import math
from typing import Optional

import numpy as np

from .errors import IdentityViolation, NonNegativeUtot
from .schemas import (
    AnalyticLimitState,
    DeBroglieState,
    LimitKind,
    MassReport,
    PhysicalConstants,
)

IDENTITY_RTOL = 1e-12


def compute_mass(
    spatial: AnalyticLimitState,
    temporal: AnalyticLimitState,
    constants: PhysicalConstants,
) -> MassReport:
    """
    Масса из плоского потенциала U_tot = U_s0 + U_t0.

    m = sqrt(-2 U_tot)/c, calE = c sqrt(hbar^2 k0^2 + m^2 c^2), Delta_t = pi/omega0.
    Невязка тождества |hbar^2 omega0^2/c^2 - hbar^2 k0^2 - m^2 c^2| сохраняется в отчёте.

    Raises:
        ValueError: Если состояния перепутаны по типу
        NonNegativeUtot: Если U_s0 + U_t0 >= 0
    """
    if spatial.kind is not LimitKind.SPATIAL_SINC or temporal.kind is not LimitKind.TEMPORAL_COS:
        raise ValueError("нужна пара (SpatialSinc, TemporalCos)")

    hbar, c = constants.hbar, constants.c
    U_tot = spatial.level + temporal.level
    if U_tot >= 0:
        raise NonNegativeUtot(
            "U_s0 + U_t0 >= 0, нужно увеличить |U_t0|",
            U_s0=spatial.level,
            U_t0=temporal.level,
        )

    k0, omega0 = spatial.wavenumber, temporal.wavenumber
    m = math.sqrt(-2.0 * U_tot) / c
    energy = c * math.sqrt(hbar**2 * k0**2 + m**2 * c**2)
    residual = abs(hbar**2 * omega0**2 / c**2 - hbar**2 * k0**2 - m**2 * c**2)

    return MassReport(
        U_s0=spatial.level,
        U_t0=temporal.level,
        U_tot=U_tot,
        m=m,
        k0=k0,
        omega0=omega0,
        energy=energy,
        delta_t=math.pi / omega0,
        t0=temporal.boundary,
        r0=spatial.boundary,
        identity_residual=residual,
    )


def de_broglie_state(report: MassReport, constants: PhysicalConstants) -> DeBroglieState:
    """E = hbar omega0, p^2 = hbar^2 k0^2."""
    return DeBroglieState(
        E=constants.hbar * report.omega0,
        p_sq=constants.hbar**2 * report.k0**2,
    )


def energy_momentum_check(
    report: MassReport, dbe: DeBroglieState, constants: PhysicalConstants
) -> float:
    """|E^2/c^2 - p^2 - m^2 c^2|; ноль до округления, если выполнено соотношение де Бройля."""
    c = constants.c
    return abs(dbe.E**2 / c**2 - dbe.p_sq - report.m**2 * c**2)


def time_uncertainty(report: MassReport, constants: PhysicalConstants) -> float:
    """
    Delta_t = pi / omega0.

    Проверяет Delta_t = pi hbar / calE и Delta_t = 2 t0 с относительным допуском 1e-12.

    Raises:
        IdentityViolation: Если одно из тождеств нарушено
    """
    delta_t = math.pi / report.omega0
    via_energy = math.pi * constants.hbar / report.energy
    if not math.isclose(delta_t, via_energy, rel_tol=IDENTITY_RTOL):
        raise IdentityViolation(
            "Delta_t != pi hbar / calE", delta_t=delta_t, via_energy=via_energy
        )
    if not math.isclose(delta_t, 2.0 * report.t0, rel_tol=IDENTITY_RTOL):
        raise IdentityViolation("Delta_t != 2 t0", delta_t=delta_t, t0=report.t0)
    return delta_t


def delta_t_vs_mass(
    k0: float, masses: np.ndarray, constants: Optional[PhysicalConstants] = None
) -> np.ndarray:
    """Delta_t(m) = pi hbar / (c sqrt(hbar^2 k0^2 + m^2 c^2)) при фиксированном k0."""
    constants = constants or PhysicalConstants()
    hbar, c = constants.hbar, constants.c
    masses = np.asarray(masses, dtype=float)
    return math.pi * hbar / (c * np.sqrt(hbar**2 * k0**2 + masses**2 * c**2))
