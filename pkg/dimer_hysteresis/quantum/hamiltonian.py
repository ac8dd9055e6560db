"""Fock-basis Hamiltonian and its adiabatic spectrum

In the basis |n, N-n> the Hamiltonian is real symmetric tridiagonal, and it
depends on the detuning only through the diagonal:

    H(delta) = H0 + delta * Lz,    Lz = diag(n - N/2)
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, eigh_tridiagonal

from ..common.errors import SpectrumError
from ..model.params import DimerParams
from .states import FockVector

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TridiagonalHamiltonian:
    diagonal: np.ndarray = field(repr=False)
    off_diagonal: np.ndarray = field(repr=False)

    @property
    def dimension(self) -> int:
        return self.diagonal.size

    def dense(self) -> np.ndarray:
        return (
            np.diag(self.diagonal)
            + np.diag(self.off_diagonal, 1)
            + np.diag(self.off_diagonal, -1)
        )

    def matvec(self, vector: np.ndarray) -> np.ndarray:
        """H @ vector for a vector or a matrix of column vectors"""
        vec = np.asarray(vector)
        diag = self.diagonal if vec.ndim == 1 else self.diagonal[:, None]
        off = self.off_diagonal if vec.ndim == 1 else self.off_diagonal[:, None]
        out = diag * vec
        out[:-1] += off * vec[1:]
        out[1:] += off * vec[:-1]
        return out

    def norm_bound(self) -> float:
        """Gershgorin bound on the spectral norm"""
        abs_off = np.abs(self.off_diagonal)
        rows = np.abs(self.diagonal).copy()
        rows[:-1] += abs_off
        rows[1:] += abs_off
        return float(rows.max())


def imbalance_diagonal(total_particles: int) -> np.ndarray:
    """Diagonal of Lz = n - N/2"""
    return np.arange(total_particles + 1, dtype=float) - total_particles / 2.0


def static_parts(params: DimerParams):
    """(diagonal of H0, off-diagonal) with the detuning term removed"""
    n = np.arange(params.total_particles + 1, dtype=float)
    big_n = params.total_particles
    diagonal = 0.5 * params.interaction * (n ** 2 + (big_n - n) ** 2)
    off_diagonal = -0.5 * params.omega * np.sqrt((n[:-1] + 1.0) * (big_n - n[:-1]))
    return diagonal, off_diagonal


def hamiltonian_matrix(params: DimerParams, delta: float) -> TridiagonalHamiltonian:
    """Diagonal (U/2)(n^2 + (N-n)^2) + (delta/2)(2n - N), off-diagonal -(omega/2) sqrt((n+1)(N-n))"""
    diagonal, off_diagonal = static_parts(params)
    diagonal = diagonal + delta * imbalance_diagonal(params.total_particles)
    return TridiagonalHamiltonian(diagonal, off_diagonal)


def fix_gauge(vectors: np.ndarray) -> np.ndarray:
    """Make the largest-magnitude component of every column real positive

    Ties go to the lowest index, so the convention is deterministic.
    """
    idx = np.argmax(np.abs(vectors), axis=0)
    pivots = vectors[idx, np.arange(vectors.shape[1])]
    signs = np.where(pivots < 0, -1.0, 1.0)
    return vectors * signs


@dataclass(frozen=True)
class Spectrum:
    delta: float
    # Ascending; eigenvalue k-1 belongs to the 1-based eigenstate index k
    eigenvalues: np.ndarray = field(repr=False)
    # Column k-1 is eigenstate k
    eigenvectors: np.ndarray = field(repr=False)

    @property
    def dimension(self) -> int:
        return self.eigenvalues.size

    def check_index(self, index: int) -> None:
        if not 1 <= index <= self.dimension:
            raise ValueError(f"Eigenstate index {index} outside [1, {self.dimension}]")

    def energy(self, index: int) -> float:
        self.check_index(index)
        return float(self.eigenvalues[index - 1])

    def eigenstate(self, index: int) -> FockVector:
        """1-based adiabatic eigenstate, index 1 is the ground state"""
        self.check_index(index)
        return FockVector(self.eigenvectors[:, index - 1])


def diagonalize(diagonal: np.ndarray, off_diagonal: np.ndarray):
    """Raw eigh_tridiagonal with failures mapped to SpectrumError"""
    try:
        return eigh_tridiagonal(diagonal, off_diagonal, lapack_driver="stev")
    except LinAlgError as exc:
        raise SpectrumError(f"Tridiagonal eigensolver failed: {exc}") from exc


def spectrum(params: DimerParams, delta: float) -> Spectrum:
    ham = hamiltonian_matrix(params, delta)
    values, vectors = diagonalize(ham.diagonal, ham.off_diagonal)
    if not np.all(np.isfinite(values)):
        raise SpectrumError(f"Non-finite eigenvalues at delta={delta}")
    vectors = fix_gauge(vectors)
    values.setflags(write=False)
    vectors.setflags(write=False)
    return Spectrum(float(delta), values, vectors)
