import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from dimer_hysteresis.classical.meanfield import (
    EnergyWindow,
    bloch_rhs,
    bloch_state,
    energy_bloch,
    energy_qp,
    flow_qp,
    flow_rhs,
    mean_field_energy,
)
from dimer_hysteresis.model.charts import PhasePoint


class TestEnergy:
    def test_formula(self, small_dimer):
        p0 = small_dimer.p0
        q, p, delta = 0.7, -4.0, 0.3
        expected = (
            -math.sqrt(p0**2 - p**2) * math.cos(q)
            + small_dimer.interaction * (p0**2 + p**2)
            + delta * p
        )
        assert energy_qp(q, p, small_dimer, delta) == pytest.approx(expected)
        assert mean_field_energy(PhasePoint(q, p), small_dimer, delta) == pytest.approx(expected)

    def test_bloch_form_agrees(self, small_dimer):
        rng = np.random.default_rng(0)
        q = rng.uniform(-np.pi, np.pi, 50)
        p = rng.uniform(-20.0, 20.0, 50)
        x, _, z = bloch_state(q, p, small_dimer)
        assert_allclose(energy_bloch(x, z, small_dimer, 0.8), energy_qp(q, p, small_dimer, 0.8))

    def test_rejects_points_beyond_p0(self, small_dimer):
        with pytest.raises(ValueError):
            mean_field_energy(PhasePoint(0.0, 20.5), small_dimer, 0.0)


class TestFlow:
    def test_matches_hamiltons_equations(self, small_dimer):
        q, p, delta, h = 0.4, 6.0, -0.7, 1e-6
        dq, dp = flow_rhs(PhasePoint(q, p), small_dimer, delta)
        dh_dp = (energy_qp(q, p + h, small_dimer, delta) - energy_qp(q, p - h, small_dimer, delta)) / (2 * h)
        dh_dq = (energy_qp(q + h, p, small_dimer, delta) - energy_qp(q - h, p, small_dimer, delta)) / (2 * h)
        assert dq == pytest.approx(dh_dp, rel=1e-7)
        assert dp == pytest.approx(-dh_dq, rel=1e-7)

    def test_bloch_flow_matches_flat_flow(self, small_dimer):
        q, p, delta, h = np.array([0.4, -2.0]), np.array([6.0, -11.0]), 0.25, 1e-7
        vec = bloch_state(q, p, small_dimer)
        dq, dp = flow_qp(q, p, small_dimer, delta)
        shifted = bloch_state(q + h * dq, p + h * dp, small_dimer)
        assert_allclose(bloch_rhs(vec, small_dimer, delta), (shifted - vec) / h, rtol=1e-5, atol=1e-5)

    def test_bloch_flow_keeps_radius_and_energy(self, small_dimer):
        vec = bloch_state(np.array([0.1, 2.5, -1.0]), np.array([19.9, 0.0, -10.0]), small_dimer)
        velocity = bloch_rhs(vec, small_dimer, 1.2)
        assert_allclose(np.sum(vec * velocity, axis=0), 0.0, atol=1e-10)
        gradient = np.stack(
            (
                np.full(3, -small_dimer.omega),
                np.zeros(3),
                2.0 * small_dimer.interaction * vec[2] + 1.2,
            )
        )
        assert_allclose(np.sum(gradient * velocity, axis=0), 0.0, atol=1e-10)

    def test_flat_chart_rejects_poles(self, small_dimer):
        with pytest.raises(ValueError):
            flow_rhs(PhasePoint(0.0, small_dimer.p0), small_dimer, 0.0)


class TestEnergyWindow:
    def test_half_open(self):
        window = EnergyWindow(-1.0, 1.0)
        assert list(window.contains([-1.0, 0.0, 1.0])) == [True, True, False]

    def test_complement(self):
        window = EnergyWindow.below(0.0)
        energies = np.array([-2.0, 0.0, 3.0])
        assert np.array_equal(window.complement().contains(energies), ~window.contains(energies))
        assert window.complement().complement() == window

    def test_everything(self):
        assert EnergyWindow.everything().contains(np.array([-1e300, 1e300])).all()

    def test_rejects_reversed_bounds(self):
        with pytest.raises(ValueError):
            EnergyWindow(2.0, 1.0)
