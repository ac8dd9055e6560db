import math

import pytest

from dimer_hysteresis.model.charts import PhasePoint
from dimer_hysteresis.model.params import SweepProtocol
from dimer_hysteresis.phasespace.coherent import CoherentParams, coherent_state
from dimer_hysteresis.phasespace.grid import GridSpec
from dimer_hysteresis.phasespace.residual import husimi_pde_residual
from dimer_hysteresis.quantum.hamiltonian import spectrum
from dimer_hysteresis.quantum.propagation import propagate

DT = 1e-3
DELTA = 0.5


@pytest.fixture
def step(small_dimer):
    cp = CoherentParams.at(PhasePoint(0.4, 3.0), small_dimer)
    before = coherent_state(cp, small_dimer.total_particles)
    protocol = SweepProtocol.frozen(DELTA, 1.0)
    after = propagate(before, small_dimer, protocol, 0.0, DT, step_tolerance=1e-13)
    return before, after


WINDOW = GridSpec(128, 128, chart="flat", q_range=(-1.1, 1.9), p_range=(-7.0, 13.0))


class TestHusimiResidual:
    def test_coherent_state_step(self, small_dimer, step):
        report = husimi_pde_residual(*step, DT, small_dimer, DELTA, WINDOW)
        assert report.include_correction
        assert report.relative < 0.05
        assert report.included_cells + report.excluded_cells == 128 * 128

    def test_correction_term_is_needed(self, small_dimer, step):
        full = husimi_pde_residual(*step, DT, small_dimer, DELTA, WINDOW)
        liouville = husimi_pde_residual(*step, DT, small_dimer, DELTA, WINDOW, include_correction=False)
        assert not liouville.include_correction
        assert liouville.relative > 3.0 * full.relative
        assert liouville.terms["correction"] == pytest.approx(full.terms["correction"])

    def test_stationary_state(self, small_dimer):
        state = spectrum(small_dimer, DELTA).eigenstate(30)
        grid = GridSpec(256, 256, chart="flat")
        report = husimi_pde_residual(state, state, DT, small_dimer, DELTA, grid)
        assert report.terms["time_derivative"] == 0.0
        transport = max(report.terms["transport_q"], report.terms["transport_p"])
        assert report.absolute < 0.1 * transport
        # Cells next to the poles are dropped
        assert report.excluded_cells > 2 * 256

    @pytest.mark.parametrize("dt", [0.0, -1e-3, 0.1])
    def test_rejects_bad_time_step(self, small_dimer, step, dt):
        with pytest.raises(ValueError):
            husimi_pde_residual(*step, dt, small_dimer, DELTA, WINDOW)

    def test_rejects_rotated_chart(self, small_dimer, step):
        with pytest.raises(ValueError):
            husimi_pde_residual(*step, DT, small_dimer, DELTA, GridSpec(64, 64))


def test_window_stays_inside_chart(small_dimer):
    assert WINDOW.bounds(small_dimer.p0)[1] == (-7.0, 13.0)
    assert WINDOW.spacing(small_dimer.p0)[0] == pytest.approx(3.0 / 128)
    assert not WINDOW.full_q
    assert math.isclose(WINDOW.cell_area(small_dimer.p0), 3.0 * 20.0 / 128**2)
