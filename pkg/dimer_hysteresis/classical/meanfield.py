"""Mean-field Hamiltonian and its flow

    H(q, p) = -omega sqrt(p0^2 - p^2) cos q + U (p0^2 + p^2) + delta p

In the Bloch embedding (x, y, z) with z = p the same flow is the precession
ds/dt = grad H x s with grad H = (-omega, 0, 2 U z + delta), which is regular
everywhere on the sphere.
"""

import math
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from ..model.charts import PhasePoint, bloch_vector, is_flat_pole
from ..model.params import DimerParams

ArrayLike = Union[float, np.ndarray]


def energy_qp(q: ArrayLike, p: ArrayLike, params: DimerParams, delta: float) -> ArrayLike:
    p0 = params.p0
    transverse = np.sqrt(np.clip(p0 * p0 - np.square(p), 0.0, None))
    value = (
        -params.omega * transverse * np.cos(q)
        + params.interaction * (p0 * p0 + np.square(p))
        + delta * np.asarray(p, dtype=float)
    )
    return float(value) if np.ndim(value) == 0 else value


def mean_field_energy(pt: PhasePoint, params: DimerParams, delta: float) -> ArrayLike:
    if np.any(np.abs(pt.p) > params.p0 * (1.0 + 1e-12)):
        raise ValueError(f"|p| exceeds p0 = {params.p0}")
    return energy_qp(pt.q, pt.p, params, delta)


def energy_bloch(x: ArrayLike, z: ArrayLike, params: DimerParams, delta: float) -> ArrayLike:
    """Mean-field energy in terms of the Bloch vector components x and z"""
    return (
        -params.omega * np.asarray(x)
        + params.interaction * (params.p0 ** 2 + np.square(z))
        + delta * np.asarray(z)
    )


def flow_qp(
    q: ArrayLike, p: ArrayLike, params: DimerParams, delta: float
) -> Tuple[np.ndarray, np.ndarray]:
    """Hamilton's equations in the flat chart, no pole check"""
    p0 = params.p0
    transverse = np.sqrt(p0 * p0 - np.square(p))
    dq = params.omega * p * np.cos(q) / transverse + 2.0 * params.interaction * p + delta
    dp = -params.omega * transverse * np.sin(q)
    return dq, dp


def flow_rhs(pt: PhasePoint, params: DimerParams, delta: float) -> Tuple[ArrayLike, ArrayLike]:
    """(dq/dt, dp/dt) = (dH/dp, -dH/dq); rejects the chart poles |p| = p0"""
    if np.any(is_flat_pole(pt.p, params.p0)):
        raise ValueError("flow_rhs is singular at |p| = p0, use the rotated chart there")
    dq, dp = flow_qp(pt.q, pt.p, params, delta)
    if np.ndim(dq) == 0:
        return float(dq), float(dp)
    return dq, dp


def bloch_rhs(vectors: np.ndarray, params: DimerParams, delta: float) -> np.ndarray:
    """ds/dt for Bloch vectors stacked as a (3, M) array"""
    x, y, z = vectors
    gz = 2.0 * params.interaction * z + delta
    return np.stack((-gz * y, gz * x + params.omega * z, -params.omega * y))


def bloch_state(q: ArrayLike, p: ArrayLike, params: DimerParams) -> np.ndarray:
    return np.stack(bloch_vector(q, p, params.p0))


@dataclass(frozen=True)
class EnergyWindow:
    """Mean-field energy band [lower, upper), or its complement when inverted"""

    lower: float = -math.inf
    upper: float = math.inf
    inverted: bool = False

    def __post_init__(self):
        if self.lower > self.upper:
            raise ValueError(f"Energy window lower bound {self.lower} above upper {self.upper}")

    @classmethod
    def everything(cls) -> "EnergyWindow":
        return cls()

    @classmethod
    def below(cls, threshold: float) -> "EnergyWindow":
        return cls(upper=threshold)

    @classmethod
    def above(cls, threshold: float) -> "EnergyWindow":
        return cls(lower=threshold)

    def complement(self) -> "EnergyWindow":
        return EnergyWindow(self.lower, self.upper, not self.inverted)

    def contains(self, energies: ArrayLike) -> np.ndarray:
        energies = np.asarray(energies)
        inside = (energies >= self.lower) & (energies < self.upper)
        return ~inside if self.inverted else inside

    def to_dict(self):
        return {"lower": self.lower, "upper": self.upper, "inverted": self.inverted}
