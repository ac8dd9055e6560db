import math
from dataclasses import dataclass
from typing import Any, Dict, Tuple, Union

import numpy as np

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class DimerParams:
    """Bose-Hubbard dimer constants, in units where hbar = omega = 1 by default"""

    # Tunneling rate, sets the energy unit
    omega: float
    # On-site interaction U, negative for the attractive case
    interaction: float
    # Total particle number N
    total_particles: int

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError("Tunneling rate omega must be positive")
        if int(self.total_particles) != self.total_particles or self.total_particles < 1:
            raise ValueError("total_particles must be a positive integer")
        if not math.isfinite(self.interaction):
            raise ValueError("Interaction must be finite")

    @classmethod
    def from_nonlinearity(
        cls, nonlinearity: float, total_particles: int, omega: float = 1.0
    ) -> "DimerParams":
        """Build from u = U N / omega"""
        return cls(
            omega=omega,
            interaction=nonlinearity * omega / total_particles,
            total_particles=total_particles,
        )

    @property
    def p0(self) -> float:
        """Half the particle number, the radius of the Bloch sphere"""
        return self.total_particles / 2.0

    @property
    def nonlinearity(self) -> float:
        """Effective nonlinearity u = U N / omega"""
        return self.interaction * self.total_particles / self.omega

    @property
    def supercritical(self) -> bool:
        return abs(self.nonlinearity) > 1.0

    @property
    def dimension(self) -> int:
        return self.total_particles + 1

    def to_dict(self) -> Dict[str, Any]:
        return {
            "omega": self.omega,
            "interaction": self.interaction,
            "total_particles": self.total_particles,
            "nonlinearity": self.nonlinearity,
        }


@dataclass(frozen=True)
class SweepProtocol:
    """Triangular detuning schedule on t in [-T, T]

    Equal initial and turning detunings describe a frozen detuning, which the
    stationary-state checks use.
    """

    # Detuning at t = -T and t = +T
    delta_initial: float
    # Detuning at the turning point t = 0
    delta_turn: float
    # Half the total sweep time
    half_time: float

    def __post_init__(self):
        if self.delta_turn < self.delta_initial:
            raise ValueError("delta_turn must not be below delta_initial")
        if not self.half_time > 0:
            raise ValueError("half_time must be positive")

    @classmethod
    def frozen(cls, delta: float, half_time: float) -> "SweepProtocol":
        return cls(delta_initial=delta, delta_turn=delta, half_time=half_time)

    @property
    def is_frozen(self) -> bool:
        return self.delta_turn == self.delta_initial

    @property
    def span(self) -> Tuple[float, float]:
        return (-self.half_time, self.half_time)

    def with_half_time(self, half_time: float) -> "SweepProtocol":
        return SweepProtocol(self.delta_initial, self.delta_turn, half_time)

    def check_time(self, t: ArrayLike) -> None:
        # Float slack for checkpoint grids built with linspace
        slack = 1e-12 * self.half_time
        if np.any(np.abs(t) > self.half_time + slack):
            raise ValueError(
                f"Time {t} outside the protocol span [-{self.half_time}, {self.half_time}]"
            )

    def detuning(self, t: ArrayLike) -> ArrayLike:
        self.check_time(t)
        frac = np.minimum(np.abs(t) / self.half_time, 1.0)
        value = self.delta_initial * frac + self.delta_turn * (1.0 - frac)
        return float(value) if np.ndim(value) == 0 else value

    def rate(self, t: float) -> float:
        """dDelta/dt on the half of the sweep containing t (forward half at t = 0)"""
        slope = (self.delta_turn - self.delta_initial) / self.half_time
        return slope if t < 0 else -slope

    def checkpoints(self, count: int) -> np.ndarray:
        if count < 2:
            raise ValueError("At least two checkpoints are needed")
        return np.linspace(-self.half_time, self.half_time, count)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "delta_initial": self.delta_initial,
            "delta_turn": self.delta_turn,
            "half_time": self.half_time,
        }


def detuning_at(protocol: SweepProtocol, t: ArrayLike) -> ArrayLike:
    """Delta(t) = Delta_I |t|/T + Delta_0 (1 - |t|/T); rejects |t| > T"""
    return protocol.detuning(t)


def split_at_turn(t_start: float, t_end: float) -> Tuple[Tuple[float, float], ...]:
    """Split [t_start, t_end] at t = 0 where the schedule has its kink"""
    if t_start < 0.0 < t_end:
        return ((t_start, 0.0), (0.0, t_end))
    if t_end < 0.0 < t_start:
        return ((t_start, 0.0), (0.0, t_end))
    return ((t_start, t_end),)
