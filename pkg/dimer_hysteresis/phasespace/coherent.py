"""SU(2) coherent states

    <n|theta, phi> = sqrt(C(N, n)) cos(theta/2)^n (sin(theta/2) e^{i phi})^(N-n)

Amplitudes are built in log space so binomials like C(1000, 500) never
overflow.
"""

from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.special import gammaln, xlogy

from ..model.charts import PhasePoint, to_bloch
from ..model.params import DimerParams
from ..quantum.states import FockVector

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class CoherentParams:
    # Polar angle in [0, pi]
    theta: float
    # Azimuth in [-pi, pi)
    phi: float

    def __post_init__(self):
        if not 0.0 <= self.theta <= np.pi:
            raise ValueError(f"theta={self.theta} outside [0, pi]")
        if not -np.pi <= self.phi < np.pi:
            raise ValueError(f"phi={self.phi} outside [-pi, pi)")

    @classmethod
    def at(cls, pt: PhasePoint, params: DimerParams) -> "CoherentParams":
        """Coherent state centred on a flat-chart point"""
        bp = to_bloch(pt, params)
        return cls(float(bp.theta), float(bp.phi))

    def bloch_unit_vector(self) -> np.ndarray:
        st = np.sin(self.theta)
        return np.array([st * np.cos(self.phi), st * np.sin(self.phi), np.cos(self.theta)])


def log_binomial_half(total_particles: int) -> np.ndarray:
    """0.5 log C(N, n) for n = 0..N"""
    n = np.arange(total_particles + 1, dtype=float)
    return 0.5 * (
        gammaln(total_particles + 1.0) - gammaln(n + 1.0) - gammaln(total_particles - n + 1.0)
    )


def coherent_amplitudes(
    theta: ArrayLike, phi: ArrayLike, total_particles: int, log_binom: np.ndarray = None
) -> np.ndarray:
    """(K, N+1) amplitudes for K coherent states given by flat arrays theta, phi"""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    n = np.arange(total_particles + 1, dtype=float)
    if log_binom is None:
        log_binom = log_binomial_half(total_particles)
    half = 0.5 * theta[:, None]
    log_mag = (
        log_binom[None, :]
        + xlogy(n[None, :], np.cos(half))
        + xlogy(total_particles - n[None, :], np.sin(half))
    )
    phase = (total_particles - n)[None, :] * phi[:, None]
    return np.exp(log_mag + 1j * phase)


def coherent_state(cp: CoherentParams, total_particles: int) -> FockVector:
    return FockVector(coherent_amplitudes(cp.theta, cp.phi, total_particles)[0])
