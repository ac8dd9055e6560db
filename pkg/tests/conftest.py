import pytest

from dimer_hysteresis.model.params import DimerParams, SweepProtocol


@pytest.fixture
def two_level():
    """N=1 with generic constants"""
    return DimerParams(omega=1.0, interaction=-0.3, total_particles=1)


@pytest.fixture
def small_dimer():
    """Supercritical dimer small enough for dense checks"""
    return DimerParams.from_nonlinearity(-3.0, 40)


@pytest.fixture
def subcritical_dimer():
    return DimerParams.from_nonlinearity(-0.5, 20)


@pytest.fixture
def cycle():
    """Detuning -2 -> 2 -> -2 over a short cycle"""
    return SweepProtocol(delta_initial=-2.0, delta_turn=2.0, half_time=20.0)
