import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from dimer_hysteresis.model.params import DimerParams
from dimer_hysteresis.quantum.hamiltonian import Spectrum, fix_gauge, hamiltonian_matrix, spectrum


def two_mode_oracle(params: DimerParams, delta: float) -> np.ndarray:
    """H built from ladder operators on the full two-mode space, restricted to N particles"""
    big_n = params.total_particles
    cutoff = big_n + 1
    a = np.diag(np.sqrt(np.arange(1, cutoff, dtype=float)), 1)
    eye = np.eye(cutoff)
    a1, a2 = np.kron(a, eye), np.kron(eye, a)
    n1, n2 = a1.T @ a1, a2.T @ a2
    ham = (
        -0.5 * params.omega * (a1.T @ a2 + a2.T @ a1)
        + 0.5 * params.interaction * (n1 @ n1 + n2 @ n2)
        + 0.5 * delta * (n1 - n2)
    )
    # |n, N-n> sits at index n * cutoff + (N - n) of the product basis
    index = [n * cutoff + (big_n - n) for n in range(big_n + 1)]
    return ham[np.ix_(index, index)]


class TestHamiltonianMatrix:
    def test_two_level_matrix(self, two_level):
        delta = 0.4
        u, w = two_level.interaction, two_level.omega
        # Rows ordered by the particle number n in mode 1
        expected = [[u / 2 - delta / 2, -w / 2], [-w / 2, u / 2 + delta / 2]]
        assert_allclose(hamiltonian_matrix(two_level, delta).dense(), expected, atol=1e-15)

    @pytest.mark.parametrize("delta", [0.0, 0.4, -1.3])
    def test_two_level_eigenvalues(self, two_level, delta):
        values = spectrum(two_level, delta).eigenvalues
        root = 0.5 * math.hypot(delta, two_level.omega)
        u = two_level.interaction
        assert_allclose(values, [u / 2 - root, u / 2 + root], atol=1e-14)

    @pytest.mark.parametrize("total, delta, interaction", [(4, 0.7, -0.3), (7, -1.1, 0.2), (3, 0.0, 0.0)])
    def test_matches_ladder_operator_oracle(self, total, delta, interaction):
        params = DimerParams(omega=1.0, interaction=interaction, total_particles=total)
        dense = hamiltonian_matrix(params, delta).dense()
        assert_allclose(dense, two_mode_oracle(params, delta), atol=1e-12)

    def test_matvec_matches_dense(self, small_dimer):
        ham = hamiltonian_matrix(small_dimer, 0.3)
        rng = np.random.default_rng(0)
        vec = rng.normal(size=small_dimer.dimension) + 1j * rng.normal(size=small_dimer.dimension)
        block = rng.normal(size=(small_dimer.dimension, 3))
        assert_allclose(ham.matvec(vec), ham.dense() @ vec, atol=1e-12)
        assert_allclose(ham.matvec(block), ham.dense() @ block, atol=1e-12)

    def test_norm_bound(self, small_dimer):
        ham = hamiltonian_matrix(small_dimer, 0.3)
        assert ham.norm_bound() >= np.linalg.norm(ham.dense(), 2) - 1e-12


class TestSpectrum:
    def test_residual(self):
        params = DimerParams.from_nonlinearity(-3.0, 200)
        spec = spectrum(params, 0.5)
        ham = hamiltonian_matrix(params, 0.5)
        residual = ham.matvec(spec.eigenvectors) - spec.eigenvectors * spec.eigenvalues
        scale = np.linalg.norm(ham.dense(), 2)
        assert np.max(np.linalg.norm(residual, axis=0)) < 1e-9 * scale

    def test_ascending_and_orthonormal(self, small_dimer):
        spec = spectrum(small_dimer, -2.0)
        assert np.all(np.diff(spec.eigenvalues) >= 0)
        assert_allclose(spec.eigenvectors.T @ spec.eigenvectors, np.eye(spec.dimension), atol=1e-12)

    def test_gauge_convention(self, small_dimer):
        vectors = spectrum(small_dimer, 0.1).eigenvectors
        pivots = vectors[np.argmax(np.abs(vectors), axis=0), np.arange(vectors.shape[1])]
        assert np.all(pivots > 0)

    def test_gauge_is_idempotent(self, small_dimer):
        vectors = spectrum(small_dimer, 0.1).eigenvectors
        assert_allclose(fix_gauge(-vectors), vectors)

    def test_one_based_indexing(self, small_dimer):
        spec = spectrum(small_dimer, -2.0)
        assert spec.energy(1) == spec.eigenvalues[0]
        assert_allclose(spec.eigenstate(1).amplitudes, spec.eigenvectors[:, 0])
        with pytest.raises(ValueError):
            spec.eigenstate(0)
        with pytest.raises(ValueError):
            spec.energy(small_dimer.dimension + 1)

    def test_deterministic(self, small_dimer):
        first, second = spectrum(small_dimer, 0.37), spectrum(small_dimer, 0.37)
        assert np.array_equal(first.eigenvectors, second.eigenvectors)

    def test_read_only(self, small_dimer):
        spec = spectrum(small_dimer, 0.0)
        assert isinstance(spec, Spectrum)
        with pytest.raises(ValueError):
            spec.eigenvalues[0] = 1.0
