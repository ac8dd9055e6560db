from types import SimpleNamespace

import numpy as np
import pytest
from numpy.testing import assert_allclose

from dimer_hysteresis.classical import ensemble as ensemble_module
from dimer_hysteresis.classical.ensemble import (
    Ensemble,
    evolve_ensemble,
    microcanonical_ensemble,
    sample_from_husimi,
)
from dimer_hysteresis.classical.meanfield import bloch_state
from dimer_hysteresis.common.errors import EnsembleLossError, IntegratorError
from dimer_hysteresis.common.seeding import MICROCANONICAL_STREAM, SAMPLE_STREAM, rng_stream
from dimer_hysteresis.model.charts import PhasePoint
from dimer_hysteresis.model.params import SweepProtocol
from dimer_hysteresis.phasespace.coherent import CoherentParams, coherent_state
from dimer_hysteresis.phasespace.density import ensemble_histogram
from dimer_hysteresis.phasespace.grid import GridSpec
from dimer_hysteresis.phasespace.husimi import husimi_grid


@pytest.fixture
def coherent_grid(small_dimer):
    cp = CoherentParams.at(PhasePoint(0.3, 5.0), small_dimer)
    return husimi_grid(coherent_state(cp, small_dimer.total_particles), small_dimer, GridSpec(128, 128))


class TestSeeding:
    def test_same_key_same_numbers(self):
        assert np.array_equal(rng_stream(7, 3, 0).random(5), rng_stream(7, 3, 0).random(5))

    def test_keys_are_independent(self):
        assert not np.array_equal(rng_stream(7, 3, 0).random(5), rng_stream(7, 4, 0).random(5))
        assert not np.array_equal(rng_stream(7, 3, 0).random(5), rng_stream(8, 3, 0).random(5))

    def test_seed_is_mandatory(self):
        with pytest.raises(ValueError):
            rng_stream(None, 0)

    def test_purposes_draw_different_numbers(self):
        assert SAMPLE_STREAM != MICROCANONICAL_STREAM
        assert not np.array_equal(rng_stream(7, 0, SAMPLE_STREAM).random(5), rng_stream(7, 0, MICROCANONICAL_STREAM).random(5))


class TestSampling:
    def test_deterministic(self, coherent_grid):
        a = sample_from_husimi(coherent_grid, 500, seed=11)
        b = sample_from_husimi(coherent_grid, 500, seed=11)
        assert np.array_equal(a.q, b.q) and np.array_equal(a.p, b.p)

    def test_streams_differ(self, coherent_grid):
        a = sample_from_husimi(coherent_grid, 500, seed=11, stream=0)
        b = sample_from_husimi(coherent_grid, 500, seed=11, stream=1)
        assert not np.array_equal(a.q, b.q)

    def test_samples_follow_the_density(self, coherent_grid):
        ens = sample_from_husimi(coherent_grid, 20000, seed=3)
        assert ens.size == 20000
        assert_allclose(ens.weights, 1.0 / 20000)
        assert np.mean(ens.q) == pytest.approx(0.3, abs=0.03)
        # Mean of cos(angle from the centre) under Q is N / (N + 2)
        assert np.mean(ens.p) == pytest.approx(5.0 * 40 / 42, abs=0.15)
        assert ens.provenance["source"] == "husimi"
        assert ens.provenance["seed"] == 3

    def test_histogram_recovers_grid(self, small_dimer, coherent_grid):
        ens = sample_from_husimi(coherent_grid, 50000, seed=5)
        hist = ensemble_histogram(ens, small_dimer, GridSpec(64, 64))
        assert hist.integral() == pytest.approx(1.0)
        assert hist.centroid()[0] == pytest.approx(coherent_grid.centroid()[0], abs=0.05)

    def test_rejects_empty_request(self, coherent_grid):
        with pytest.raises(ValueError):
            sample_from_husimi(coherent_grid, 0, seed=1)


class TestMicrocanonical:
    def test_energies_inside_band(self, small_dimer):
        ens = microcanonical_ensemble(small_dimer, -2.0, (-70.0, -65.0), 2000, seed=9)
        energies = ens.energies(small_dimer, -2.0)
        assert np.all((energies >= -70.0) & (energies < -65.0))
        assert ens.provenance["energy_band"] == [-70.0, -65.0]

    def test_rejects_empty_band(self, small_dimer):
        with pytest.raises(ValueError):
            microcanonical_ensemble(small_dimer, 0.0, (1.0, 1.0), 10, seed=1)

    def test_starts_at_sweep_start(self, small_dimer, cycle):
        ens = microcanonical_ensemble(small_dimer, -2.0, (-70.0, -65.0), 50, seed=9, time=-20.0)
        assert ens.time == -20.0
        snaps = evolve_ensemble(ens, small_dimer, cycle, [-20.0, -10.0])
        assert [s.time for s in snaps] == [-20.0, -10.0]
        assert_allclose(snaps[0].q, ens.q)

    def test_default_time_is_zero(self, small_dimer):
        assert microcanonical_ensemble(small_dimer, -2.0, (-70.0, -65.0), 5, seed=9).time == 0.0


class TestEvolution:
    def test_energy_conserved_at_frozen_detuning(self, small_dimer):
        ens = microcanonical_ensemble(small_dimer, 0.5, (-55.0, -45.0), 300, seed=2)
        protocol = SweepProtocol.frozen(0.5, 30.0)
        snaps = evolve_ensemble(ens, small_dimer, protocol, [10.0, 30.0])
        assert [s.time for s in snaps] == [10.0, 30.0]
        for snap in snaps:
            assert_allclose(snap.energies(small_dimer, 0.5), ens.energies(small_dimer, 0.5), rtol=1e-7)
            assert snap.lost_weight == 0.0

    def test_backwards_evolution_restores_points(self, small_dimer, cycle):
        start = Ensemble.equal_weights(
            np.linspace(-1.0, 1.0, 20), np.linspace(-15.0, 15.0, 20), small_dimer.p0, time=-20.0
        )
        forward = evolve_ensemble(start, small_dimer, cycle, [5.0])[-1]
        back = evolve_ensemble(forward, small_dimer, cycle, [-20.0])[-1]
        assert_allclose(back.q, start.q, atol=1e-5)
        assert_allclose(back.p, start.p, atol=1e-4)

    def test_checkpoint_at_start_returns_input(self, small_dimer, cycle):
        start = Ensemble.equal_weights([0.1, 0.2], [1.0, 2.0], small_dimer.p0, time=-20.0)
        snaps = evolve_ensemble(start, small_dimer, cycle, [-20.0, -10.0])
        assert_allclose(snaps[0].q, start.q)
        assert_allclose(snaps[0].p, start.p)

    def test_rejects_non_monotone_checkpoints(self, small_dimer, cycle):
        start = Ensemble.equal_weights([0.1], [1.0], small_dimer.p0, time=-20.0)
        with pytest.raises(ValueError):
            evolve_ensemble(start, small_dimer, cycle, [0.0, -5.0])


class TestEnsemble:
    def test_rejects_bad_weights(self):
        with pytest.raises(ValueError):
            Ensemble(np.zeros(2), np.zeros(2), np.array([0.5, 0.6]), 10.0)

    def test_rejects_points_off_the_sphere(self):
        with pytest.raises(ValueError):
            Ensemble.equal_weights([0.0], [11.0], 10.0)

    def test_energy_statistics_skip_failed_points(self, small_dimer):
        ens = Ensemble(
            np.zeros(3),
            np.array([0.0, 5.0, 10.0]),
            np.full(3, 1.0 / 3.0),
            small_dimer.p0,
            failed=np.array([False, False, True]),
        )
        energies = ens.energies(small_dimer, 0.0)
        assert ens.mean_energy(small_dimer, 0.0) == pytest.approx(energies[:2].mean())
        assert ens.energy_spread(small_dimer, 0.0) == pytest.approx(0.5 * abs(energies[1] - energies[0]))
        assert ens.lost_weight == pytest.approx(1.0 / 3.0)


def broken_solver(monkeypatch, bad_point):
    """solve_ivp that fails every joint solve and the single solve of bad_point"""
    real = ensemble_module.solve_ivp

    def solver(fun, t_span, y0, **kwargs):
        y0 = np.asarray(y0)
        if y0.size > 3 or (bad_point is not None and np.allclose(y0, bad_point)):
            return SimpleNamespace(status=-1, message="Required step size is less than spacing between numbers.")
        return real(fun, t_span, y0, **kwargs)

    monkeypatch.setattr(ensemble_module, "solve_ivp", solver)


class TestIntegrationFailure:
    protocol = SweepProtocol.frozen(0.5, 10.0)

    def start(self, params, count):
        return microcanonical_ensemble(params, 0.5, (-55.0, -45.0), count, seed=4)

    def test_only_the_failing_point_is_lost(self, small_dimer, monkeypatch):
        ens = self.start(small_dimer, 200)
        broken_solver(monkeypatch, bloch_state(ens.q[:1], ens.p[:1], small_dimer)[:, 0])
        snaps = evolve_ensemble(ens, small_dimer, self.protocol, [5.0, 10.0])
        for snap in snaps:
            assert np.flatnonzero(snap.failed).tolist() == [0]
            assert snap.lost_weight == pytest.approx(1.0 / 200)
        survivors = ~snaps[-1].failed
        assert_allclose(
            snaps[-1].energies(small_dimer, 0.5)[survivors], ens.energies(small_dimer, 0.5)[survivors], rtol=1e-7
        )
        assert not np.allclose(snaps[-1].q[survivors], ens.q[survivors])

    def test_failures_still_count_against_the_loss_limit(self, small_dimer, monkeypatch):
        ens = self.start(small_dimer, 50)
        broken_solver(monkeypatch, bloch_state(ens.q[:1], ens.p[:1], small_dimer)[:, 0])
        with pytest.raises(EnsembleLossError):
            evolve_ensemble(ens, small_dimer, self.protocol, [10.0])

    def test_every_point_failing_is_an_integrator_error(self, small_dimer, monkeypatch):
        ens = self.start(small_dimer, 5)
        monkeypatch.setattr(
            ensemble_module, "solve_ivp", lambda *args, **kwargs: SimpleNamespace(status=-1, message="diverged")
        )
        with pytest.raises(IntegratorError):
            evolve_ensemble(ens, small_dimer, self.protocol, [10.0])
