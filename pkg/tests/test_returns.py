import math

import pytest

from dimer_hysteresis.classical.classifier import EnergyClassifier
from dimer_hysteresis.common.errors import ClassifierError
from dimer_hysteresis.model.params import DimerParams, SweepProtocol
from dimer_hysteresis.phasespace.grid import GridSpec
from dimer_hysteresis.quantum.hamiltonian import spectrum
from dimer_hysteresis.quantum.propagation import propagate
from dimer_hysteresis.quantum.returns import quantum_return_probability
from dimer_hysteresis.quantum.states import MixedState
from dimer_hysteresis.quantum.tunneling import ground_state_retention, required_sweep_time

GRID = GridSpec(64, 64)


class TestQuantumReturnProbability:
    def test_frozen_eigenstate_returns(self, small_dimer):
        protocol = SweepProtocol.frozen(-2.0, 10.0)
        spec = spectrum(small_dimer, -2.0)
        final = propagate(spec.eigenstate(5), small_dimer, protocol, -10.0, 10.0)
        classifier = EnergyClassifier.for_spectrum(spec.eigenvalues, spec.energy(5))
        result = quantum_return_probability(final, small_dimer, protocol, classifier, GRID, spec)
        assert result.husimi == pytest.approx(1.0, abs=1e-9)
        assert result.spectral == pytest.approx(1.0, abs=1e-9)
        assert result.to_dict()["threshold"] is None

    def test_separated_mixture(self, small_dimer):
        protocol = SweepProtocol(-2.0, 2.0, 10.0)
        spec = spectrum(small_dimer, -2.0)
        final = MixedState.from_members([0.7, 0.3], [spec.eigenstate(3), spec.eigenstate(35)])
        classifier = EnergyClassifier.for_spectrum(spec.eigenvalues, spec.energy(3))
        result = quantum_return_probability(final, small_dimer, protocol, classifier, GRID, spec)
        assert result.separated
        assert spec.energy(3) < result.threshold < spec.energy(35)
        assert result.spectral == pytest.approx(0.7, abs=1e-12)
        assert result.husimi == pytest.approx(0.7, abs=0.05)

    def test_ambiguous_populations_raise(self, small_dimer):
        protocol = SweepProtocol(-2.0, 2.0, 10.0)
        spec = spectrum(small_dimer, -2.0)
        members = [spec.eigenstate(k) for k in list(range(1, 9)) + list(range(12, 20))]
        final = MixedState.uniform(members)
        classifier = EnergyClassifier.for_spectrum(spec.eigenvalues, spec.energy(4))
        with pytest.raises(ClassifierError) as excinfo:
            quantum_return_probability(final, small_dimer, protocol, classifier, GRID, spec)
        husimi, spectral = excinfo.value.candidates
        assert spectral == pytest.approx(0.5, abs=1e-12)
        assert 0.0 <= husimi <= 1.0


class TestTunneling:
    params = DimerParams.from_nonlinearity(-0.5, 2)

    def test_slow_sweep_keeps_ground_state(self):
        retention = ground_state_retention(self.params, SweepProtocol(-2.0, 2.0, 1e3), checkpoints=9)
        assert retention > 0.99

    def test_fast_sweep_loses_ground_state(self):
        retention = ground_state_retention(self.params, SweepProtocol(-2.0, 2.0, 0.5), checkpoints=9)
        assert retention < 0.9

    def test_required_time_inside_bracket(self):
        (result,) = required_sweep_time([self.params], SweepProtocol(-2.0, 2.0, 1.0), bracket=(1.0, 1e3), rel_tol=0.25)
        assert 1.0 < result.half_time <= 1e3
        assert result.retention >= 0.99
        assert result.to_dict()["bracket"] == [1.0, 1e3]

    def test_bracket_too_short(self):
        (result,) = required_sweep_time([self.params], SweepProtocol(-2.0, 2.0, 1.0), bracket=(0.1, 0.5))
        assert math.isnan(result.half_time)
        assert result.to_dict()["half_time"] is None

    @pytest.mark.parametrize("kwargs", [{"threshold": 1.0}, {"bracket": (10.0, 1.0)}])
    def test_rejects_bad_arguments(self, kwargs):
        with pytest.raises(ValueError):
            required_sweep_time([self.params], SweepProtocol(-2.0, 2.0, 1.0), **kwargs)


@pytest.mark.slow
def test_required_time_grows_with_particle_number():
    protocol = SweepProtocol(-2.0, 2.0, 1.0)
    params_list = [DimerParams.from_nonlinearity(-3.0, n) for n in (2, 4, 6, 8, 10)]
    results = required_sweep_time(params_list, protocol, bracket=(1.0, 1e13), rel_tol=0.25)
    times = [r.half_time for r in results]
    assert all(math.isfinite(t) for t in times)
    assert all(r.retention >= 0.99 for r in results)
    assert all(a < b for a, b in zip(times, times[1:]))
    # Collective tunnelling of all N particles: far faster than linear growth
    assert times[-1] > 100.0 * times[0]
