import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from dimer_hysteresis.model.charts import (
    BlochPoint,
    PhasePoint,
    RotatedPoint,
    from_bloch,
    from_rotated,
    to_bloch,
    to_rotated,
)
from dimer_hysteresis.model.params import DimerParams, SweepProtocol, detuning_at, split_at_turn


class TestDimerParams:
    def test_nonlinearity_round_trip(self):
        params = DimerParams.from_nonlinearity(-3.0, 1000)
        assert params.interaction == pytest.approx(-3e-3)
        assert params.nonlinearity == pytest.approx(-3.0)
        assert params.p0 == 500.0
        assert params.dimension == 1001
        assert params.supercritical

    def test_subcritical(self):
        assert not DimerParams.from_nonlinearity(-0.5, 20).supercritical

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"omega": 0.0, "interaction": 0.1, "total_particles": 10},
            {"omega": 1.0, "interaction": 0.1, "total_particles": 0},
            {"omega": 1.0, "interaction": 0.1, "total_particles": 2.5},
            {"omega": 1.0, "interaction": math.inf, "total_particles": 10},
        ],
        ids=["omega", "zero-particles", "fractional", "infinite-u"],
    )
    def test_rejects_invalid(self, kwargs):
        with pytest.raises(ValueError):
            DimerParams(**kwargs)


class TestSweepProtocol:
    @pytest.mark.parametrize(
        "t, expected",
        [(0.0, 2.0), (5000.0, -2.0), (-5000.0, -2.0), (-2500.0, 0.0), (2500.0, 0.0)],
    )
    def test_detuning(self, t, expected):
        protocol = SweepProtocol(-2.0, 2.0, 5000.0)
        assert detuning_at(protocol, t) == pytest.approx(expected)

    def test_detuning_vectorized(self):
        protocol = SweepProtocol(-2.0, 2.0, 5000.0)
        values = protocol.detuning(np.array([-5000.0, 0.0, 5000.0]))
        assert_allclose(values, [-2.0, 2.0, -2.0])

    def test_rejects_times_outside_span(self):
        protocol = SweepProtocol(-2.0, 2.0, 5000.0)
        with pytest.raises(ValueError):
            protocol.detuning(5001.0)

    def test_rejects_reversed_detunings(self):
        with pytest.raises(ValueError):
            SweepProtocol(2.0, -2.0, 100.0)

    def test_frozen(self):
        protocol = SweepProtocol.frozen(0.7, 10.0)
        assert protocol.is_frozen
        assert protocol.detuning(-3.0) == pytest.approx(0.7)

    def test_rate_changes_sign_at_turn(self):
        protocol = SweepProtocol(-2.0, 2.0, 100.0)
        assert protocol.rate(-1.0) == pytest.approx(0.04)
        assert protocol.rate(1.0) == pytest.approx(-0.04)

    def test_checkpoints(self):
        times = SweepProtocol(-2.0, 2.0, 10.0).checkpoints(5)
        assert_allclose(times, [-10.0, -5.0, 0.0, 5.0, 10.0])
        with pytest.raises(ValueError):
            SweepProtocol(-2.0, 2.0, 10.0).checkpoints(1)

    def test_with_half_time(self):
        protocol = SweepProtocol(-2.0, 2.0, 10.0).with_half_time(40.0)
        assert protocol.half_time == 40.0
        assert protocol.delta_turn == 2.0


@pytest.mark.parametrize(
    "start, end, expected",
    [
        (-5.0, 5.0, ((-5.0, 0.0), (0.0, 5.0))),
        (5.0, -5.0, ((5.0, 0.0), (0.0, -5.0))),
        (-5.0, -1.0, ((-5.0, -1.0),)),
        (0.0, 3.0, ((0.0, 3.0),)),
    ],
)
def test_split_at_turn(start, end, expected):
    assert split_at_turn(start, end) == expected


class TestCharts:
    params = DimerParams(omega=1.0, interaction=-0.003, total_particles=1000)

    def test_origin_is_fixed(self):
        rot = to_rotated(PhasePoint(0.0, 0.0), self.params)
        assert rot.q_rot == pytest.approx(0.0)
        assert rot.p_rot == pytest.approx(0.0)

    def test_quarter_turn_maps_to_pole(self):
        rot = to_rotated(PhasePoint(math.pi / 2, 0.0), self.params)
        assert rot.q_rot == pytest.approx(0.0, abs=1e-12)
        assert rot.p_rot == pytest.approx(-500.0)

    @pytest.mark.parametrize("alpha", [1e-3, 1e-2])
    def test_small_imbalance(self, alpha):
        rot = to_rotated(PhasePoint(0.0, 500.0 * math.sin(alpha)), self.params)
        assert rot.q_rot == pytest.approx(alpha, rel=1e-9)
        assert rot.p_rot == pytest.approx(0.0, abs=1e-12)

    def test_rotation_inverts_away_from_poles(self):
        rng = np.random.default_rng(3)
        q = rng.uniform(-np.pi, np.pi, 200)
        p = rng.uniform(-450.0, 450.0, 200)
        rot = to_rotated(PhasePoint(q, p), self.params)
        keep = np.abs(rot.p_rot) < 450.0
        back = from_rotated(RotatedPoint(rot.q_rot[keep], rot.p_rot[keep]), self.params)
        assert_allclose(back.q, q[keep], atol=1e-9)
        assert_allclose(back.p, p[keep], atol=1e-9)

    def test_rotation_preserves_area_element(self):
        # The map is a rigid rotation, so the radius of the Bloch vector is kept
        rot = to_rotated(PhasePoint(0.3, 120.0), self.params)
        back = from_rotated(rot, self.params)
        assert back.p == pytest.approx(120.0)

    def test_bloch_angles(self):
        bp = to_bloch(PhasePoint(0.25, 250.0), self.params)
        assert bp.theta == pytest.approx(math.pi / 3)
        assert bp.phi == pytest.approx(0.25)
        pt = from_bloch(BlochPoint(math.pi / 3, 0.25), self.params)
        assert pt.p == pytest.approx(250.0)

    def test_rejects_points_off_the_sphere(self):
        with pytest.raises(ValueError):
            to_rotated(PhasePoint(0.0, 501.0), self.params)
