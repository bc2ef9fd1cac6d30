"""Тесты массы, соотношения энергия-импульс-масса и неопределённости времени."""

import math

import numpy as np
import pytest

from madelung.analytic_limits import cos_limit, sinc_limit
from madelung.errors import IdentityViolation, NonNegativeUtot
from madelung.mass_spectrum import (
    compute_mass,
    de_broglie_state,
    delta_t_vs_mass,
    energy_momentum_check,
    time_uncertainty,
)
from madelung.schemas import DeBroglieState, MassReport, PhysicalConstants

UNITS = PhysicalConstants()


def report_for(U_s0: float, U_t0: float) -> MassReport:
    return compute_mass(sinc_limit(U_s0), cos_limit(U_t0), UNITS)


class TestComputeMass:
    """Масса из плоского потенциала."""

    def test_reference_pair(self):
        report = report_for(1.0, -2.0)

        assert report.U_tot == -1.0
        assert report.m == pytest.approx(math.sqrt(2))
        assert report.omega0 == pytest.approx(2.0)
        assert report.k0 == pytest.approx(math.sqrt(2))
        assert report.delta_t == pytest.approx(math.pi / 2)
        assert report.identity_residual < 1e-12

    def test_energy_equals_hbar_omega(self):
        report = report_for(1.0, -2.0)
        assert report.energy == pytest.approx(UNITS.hbar * report.omega0, rel=1e-14)

    def test_non_negative_total(self):
        with pytest.raises(NonNegativeUtot):
            report_for(1.0, -0.5)

    def test_vanishing_spatial_level(self):
        assert report_for(1e-12, -2.0).m == pytest.approx(2.0, abs=1e-6)

    def test_swapped_states(self):
        with pytest.raises(ValueError):
            compute_mass(cos_limit(-2.0), sinc_limit(1.0), UNITS)

    @pytest.mark.parametrize(
        "U_s0, U_t0",
        [(0.1, -0.5), (0.3, -1.0), (0.5, -0.6), (1.0, -1.5), (1.0, -2.0),
         (1.5, -4.0), (2.0, -2.5), (2.5, -3.0), (3.0, -5.0), (0.05, -0.1)],
    )
    def test_identity_holds_for_sampled_pairs(self, U_s0, U_t0):
        report = report_for(U_s0, U_t0)
        dbe = de_broglie_state(report, UNITS)

        assert report.identity_residual < 1e-12
        assert energy_momentum_check(report, dbe, UNITS) < 1e-12
        assert time_uncertainty(report, UNITS) == pytest.approx(2 * report.t0, rel=1e-12)


class TestEnergyMomentum:
    """Соотношение E^2/c^2 = p^2 + m^2 c^2."""

    def test_de_broglie_state(self):
        dbe = de_broglie_state(report_for(1.0, -2.0), UNITS)
        assert dbe.E == pytest.approx(2.0)
        assert dbe.p_sq == pytest.approx(2.0)

    def test_violated_frequency(self):
        report = report_for(1.0, -2.0)
        dbe = DeBroglieState(E=1.1 * report.omega0, p_sq=report.k0**2)

        # (1.1^2 - 1) * omega0^2 = 0.21 * 4
        assert energy_momentum_check(report, dbe, UNITS) == pytest.approx(0.21 * 4.0, rel=1e-12)

    def test_massless_case(self):
        k0 = math.sqrt(2)
        report = MassReport(
            U_s0=1.0,
            U_t0=-1.0,
            U_tot=0.0,
            m=0.0,
            k0=k0,
            omega0=k0,
            energy=k0,
            delta_t=math.pi / k0,
            t0=math.pi / (2 * k0),
            identity_residual=0.0,
        )
        dbe = de_broglie_state(report, UNITS)

        assert energy_momentum_check(report, dbe, UNITS) < 1e-12
        assert time_uncertainty(report, UNITS) == pytest.approx(math.pi / k0)


class TestTimeUncertainty:
    """Delta_t = pi hbar / calE = 2 t0."""

    def test_product_with_energy(self):
        report = report_for(0.5, -1.0)
        delta_t = time_uncertainty(report, UNITS)

        assert delta_t == pytest.approx(math.pi / math.sqrt(2))
        assert delta_t * report.energy == pytest.approx(math.pi * UNITS.hbar, rel=1e-12)

    def test_tampered_half_width(self):
        report = report_for(1.0, -2.0).model_copy(update={"t0": 1.0})
        with pytest.raises(IdentityViolation):
            time_uncertainty(report, UNITS)

    def test_decreases_with_mass(self):
        masses = np.linspace(0.0, 100.0, 50)
        delta_t = delta_t_vs_mass(math.sqrt(2), masses)

        assert np.all(np.diff(delta_t) < 0)
        assert delta_t[0] == pytest.approx(math.pi / math.sqrt(2))
        assert delta_t[-1] < 0.05
