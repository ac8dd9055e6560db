import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from dimer_hysteresis.classical.meanfield import energy_qp
from dimer_hysteresis.classical.trajectory import integrate_trajectory, orbital_period
from dimer_hysteresis.model.charts import PhasePoint
from dimer_hysteresis.model.params import DimerParams, SweepProtocol

# No interaction, no detuning: rigid rotation of the Bloch sphere about x
LINEAR = DimerParams(omega=1.0, interaction=0.0, total_particles=40)


class TestIntegrateTrajectory:
    def test_orbit_over_the_poles(self):
        start = PhasePoint(math.pi / 2, 0.0)
        protocol = SweepProtocol.frozen(0.0, 10.0)
        traj = integrate_trajectory(start, LINEAR, protocol, 0.0, 2.0 * math.pi)
        assert traj.chart_switches >= 2
        assert traj.final.q == pytest.approx(math.pi / 2, abs=1e-7)
        assert traj.final.p == pytest.approx(0.0, abs=1e-6)

    def test_quarter_turn_reaches_pole_region(self):
        start = PhasePoint(math.pi / 2, 0.0)
        protocol = SweepProtocol.frozen(0.0, 10.0)
        times = np.linspace(0.0, math.pi / 2 - 0.05, 5)
        traj = integrate_trajectory(start, LINEAR, protocol, 0.0, times[-1], t_eval=times)
        assert_allclose(np.abs(traj.p), 20.0 * np.sin(times), atol=1e-6)

    def test_energy_conserved_at_frozen_detuning(self, small_dimer):
        start = PhasePoint(0.3, 12.0)
        protocol = SweepProtocol.frozen(0.4, 50.0)
        times = np.linspace(-50.0, 50.0, 11)
        traj = integrate_trajectory(start, small_dimer, protocol, -50.0, 50.0, t_eval=times)
        energies = energy_qp(traj.q, traj.p, small_dimer, 0.4)
        assert np.ptp(energies) < 1e-7 * abs(energies[0])

    def test_time_reversal(self, small_dimer, cycle):
        start = PhasePoint(-0.5, 8.0)
        forward = integrate_trajectory(start, small_dimer, cycle, -20.0, 13.0)
        back = integrate_trajectory(forward.final, small_dimer, cycle, 13.0, -20.0)
        assert back.final.q == pytest.approx(start.q, abs=1e-6)
        assert back.final.p == pytest.approx(start.p, abs=1e-5)

    def test_rejects_start_on_pole(self, small_dimer, cycle):
        with pytest.raises(ValueError):
            integrate_trajectory(PhasePoint(0.0, 20.0), small_dimer, cycle, -20.0, 0.0)

    def test_rejects_times_outside_protocol(self, small_dimer, cycle):
        with pytest.raises(ValueError):
            integrate_trajectory(PhasePoint(0.0, 0.0), small_dimer, cycle, -20.0, 25.0)


class TestOrbitalPeriod:
    @pytest.mark.parametrize("delta", [0.0, 0.75, -2.0])
    def test_linear_precession(self, delta):
        period = orbital_period(PhasePoint(1.0, 5.0), LINEAR, delta)
        assert period == pytest.approx(2.0 * math.pi / math.hypot(1.0, delta), rel=1e-8)

    def test_fixed_point_has_no_period(self):
        with pytest.raises(ValueError):
            orbital_period(PhasePoint(0.0, 0.0), LINEAR, 0.0)
