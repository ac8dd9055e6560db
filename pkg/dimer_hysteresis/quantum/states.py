from dataclasses import dataclass, field
from typing import Iterable, Sequence, Tuple, Union

import numpy as np

NORM_TOLERANCE = 1e-9
WEIGHT_TOLERANCE = 1e-12


@dataclass(frozen=True)
class FockVector:
    """Amplitudes on |n, N-n>, entry n is the amplitude with n particles in mode 1"""

    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.ndim != 1 or amps.size < 2:
            raise ValueError("Fock vector needs a 1-D amplitude array of length N+1 >= 2")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def basis(cls, n: int, total_particles: int) -> "FockVector":
        if not 0 <= n <= total_particles:
            raise ValueError(f"Fock index {n} outside [0, {total_particles}]")
        amps = np.zeros(total_particles + 1, dtype=complex)
        amps[n] = 1.0
        return cls(amps)

    @property
    def total_particles(self) -> int:
        return self.amplitudes.size - 1

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "FockVector":
        return FockVector(self.amplitudes / self.norm)

    def require_normalized(self, tolerance: float = NORM_TOLERANCE) -> None:
        if abs(self.norm - 1.0) > tolerance:
            raise ValueError(f"State norm {self.norm:.12f} is not 1 within {tolerance}")


@dataclass(frozen=True)
class MixedState:
    """Weighted mixture of mutually orthogonal pure states

    members holds the pure states as the columns of an (N+1, M) matrix.
    """

    weights: np.ndarray
    members: np.ndarray = field(repr=False)

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=float)
        members = np.asarray(self.members, dtype=complex)
        if members.ndim != 2 or weights.shape != (members.shape[1],):
            raise ValueError("members must be (N+1, M) with one weight per column")
        if np.any(weights < 0):
            raise ValueError("Mixture weights must be non-negative")
        if abs(weights.sum() - 1.0) > WEIGHT_TOLERANCE:
            raise ValueError(f"Mixture weights sum to {weights.sum()}, not 1")
        weights.setflags(write=False)
        members.setflags(write=False)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "members", members)

    @classmethod
    def uniform(cls, states: Sequence[FockVector]) -> "MixedState":
        if not states:
            raise ValueError("A mixture needs at least one member")
        members = np.column_stack([s.amplitudes for s in states])
        return cls(np.full(len(states), 1.0 / len(states)), members)

    @classmethod
    def from_members(cls, weights: Iterable[float], states: Sequence[FockVector]) -> "MixedState":
        return cls(np.asarray(list(weights), dtype=float), np.column_stack([s.amplitudes for s in states]))

    @property
    def total_particles(self) -> int:
        return self.members.shape[0] - 1

    def member(self, index: int) -> FockVector:
        return FockVector(self.members[:, index])

    def require_normalized(self, tolerance: float = NORM_TOLERANCE) -> None:
        norms = np.linalg.norm(self.members, axis=0)
        if np.any(np.abs(norms - 1.0) > tolerance):
            raise ValueError(f"Mixture member norms {norms} are not 1 within {tolerance}")

    def orthogonality_defect(self) -> float:
        """Largest off-diagonal overlap magnitude between members"""
        gram = self.members.conj().T @ self.members
        np.fill_diagonal(gram, 0.0)
        return float(np.max(np.abs(gram))) if gram.size else 0.0


QuantumState = Union[FockVector, MixedState]


def as_members(state: QuantumState) -> Tuple[np.ndarray, np.ndarray]:
    """(weights, (N+1, M) member matrix) for a pure or mixed state"""
    if isinstance(state, FockVector):
        return np.ones(1), state.amplitudes[:, None]
    if isinstance(state, MixedState):
        return state.weights, state.members
    raise TypeError(f"Not a quantum state: {type(state).__name__}")


def with_members(state: QuantumState, members: np.ndarray) -> QuantumState:
    """Same kind and weights as state, new member amplitudes"""
    if isinstance(state, FockVector):
        return FockVector(members[:, 0] if members.ndim == 2 else members)
    return MixedState(state.weights, members)
