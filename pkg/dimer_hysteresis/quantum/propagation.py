"""Unitary propagation through the detuning sweep

Two propagators share one contract:

* ``propagate`` integrates in the Fock basis with a fourth-order
  commutator-free Magnus scheme. Each step is a product of two exponentials of
  tridiagonal Hamiltonians taken at Gauss-Legendre nodes, so every factor is
  exactly unitary. The step size is chosen by step doubling.
* ``propagate_adiabatic_frame`` integrates the coefficients in the
  instantaneous eigenbasis, where the generator is diag(E) plus the
  nonadiabatic coupling. Its step size is limited by how fast the basis
  rotates, not by the energy scale, which makes very slow sweeps of small
  systems affordable.

Norms are monitored at every checkpoint and never renormalized.
"""

import logging
import math
from typing import List, Optional, Sequence

import numpy as np
from scipy import sparse
from scipy.linalg import eigh
from scipy.sparse.linalg import expm_multiply

from ..common.errors import IntegratorError, NormDriftError
from ..model.params import DimerParams, SweepProtocol, split_at_turn
from .hamiltonian import diagonalize, imbalance_diagonal, static_parts
from .states import QuantumState, as_members, with_members

logger = logging.getLogger(__name__)

# Allowed norm drift per unit time
DEFAULT_NORM_TOLERANCE = 1e-12
# Local error allowed per unit time by the step-size controller
DEFAULT_STEP_TOLERANCE = 1e-10
# Rounding floor for the norm bound on very short propagations
NORM_ROUNDOFF_FLOOR = 1e-11
MIN_STEP = 1e-9
# Hilbert-space dimension from which expm_multiply beats a full tridiagonal
# eigendecomposition per exponential
EXPM_MULTIPLY_MIN_DIM = 128
# Largest tolerated 1 - |<v_k(t)|v_k(t+h)>| within one adiabatic-frame step
MAX_FRAME_ROTATION = 0.05

_SQRT3 = math.sqrt(3.0)
_NODE_1 = 0.5 - _SQRT3 / 6.0
_NODE_2 = 0.5 + _SQRT3 / 6.0
_WEIGHT_1 = (3.0 - 2.0 * _SQRT3) / 12.0
_WEIGHT_2 = (3.0 + 2.0 * _SQRT3) / 12.0


def _column_norms(members: np.ndarray) -> np.ndarray:
    return np.linalg.norm(members, axis=0)


def _step_factor(error: float, allowed: float, order: int) -> float:
    if error == 0.0:
        return 4.0
    return min(4.0, max(0.2, 0.9 * (allowed / error) ** (1.0 / order)))


class _TridiagonalExponential:
    """exp(-i tau H(delta)) applied to a block of state vectors"""

    def __init__(self, params: DimerParams):
        self.static, self.off = static_parts(params)
        self.lz = imbalance_diagonal(params.total_particles)
        self.use_expm_multiply = params.dimension >= EXPM_MULTIPLY_MIN_DIM
        if self.use_expm_multiply:
            self._off_sparse = sparse.diags([self.off, self.off], [-1, 1], format="csr")

    def apply(self, delta: float, tau: float, members: np.ndarray) -> np.ndarray:
        diagonal = self.static + delta * self.lz
        if self.use_expm_multiply:
            ham = (self._off_sparse + sparse.diags(diagonal, format="csr")).astype(complex)
            return expm_multiply((-1j * tau) * ham, members)
        values, vectors = diagonalize(diagonal, self.off)
        phases = np.exp(-1j * tau * values)[:, None]
        return vectors @ (phases * (vectors.T @ members))


class _MagnusPropagator:
    def __init__(
        self,
        params: DimerParams,
        protocol: SweepProtocol,
        step_tolerance: float,
        max_step: Optional[float],
    ):
        self.protocol = protocol
        self.exponential = _TridiagonalExponential(params)
        self.step_tolerance = step_tolerance
        self.max_step = max_step if max_step is not None else math.inf
        self.step: Optional[float] = None
        self.accepted = 0
        self.rejected = 0

    def _cf4(self, members: np.ndarray, t: float, h: float) -> np.ndarray:
        delta_1 = self.protocol.detuning(t + _NODE_1 * h)
        delta_2 = self.protocol.detuning(t + _NODE_2 * h)
        first = 2.0 * (_WEIGHT_2 * delta_1 + _WEIGHT_1 * delta_2)
        second = 2.0 * (_WEIGHT_1 * delta_1 + _WEIGHT_2 * delta_2)
        members = self.exponential.apply(first, 0.5 * h, members)
        return self.exponential.apply(second, 0.5 * h, members)

    def advance(self, members: np.ndarray, t_from: float, t_to: float) -> np.ndarray:
        for seg_start, seg_end in split_at_turn(t_from, t_to):
            members = self._segment(members, seg_start, seg_end)
        return members

    def _segment(self, members: np.ndarray, start: float, end: float) -> np.ndarray:
        if end <= start:
            return members
        if self.protocol.is_frozen:
            return self.exponential.apply(self.protocol.delta_initial, end - start, members)

        t = start
        h = self.step if self.step is not None else min(self.max_step, 0.1)
        while t < end:
            h = min(h, self.max_step, end - t)
            full = self._cf4(members, t, h)
            half = self._cf4(self._cf4(members, t, 0.5 * h), t + 0.5 * h, 0.5 * h)
            error = float(np.max(_column_norms(full - half))) / 15.0
            allowed = self.step_tolerance * h
            if error <= allowed:
                members = half
                t = end if end - t <= h else t + h
                self.accepted += 1
            else:
                self.rejected += 1
            h *= _step_factor(error, allowed, 4)
            if h < MIN_STEP and t < end:
                raise IntegratorError(f"Magnus step size underflow at t={t:.6g} (h={h:.3g})")
            self.step = h
        return members


def _align_signs(vectors: np.ndarray, reference: np.ndarray) -> np.ndarray:
    signs = np.sign(np.einsum("ij,ij->j", vectors, reference))
    signs[signs == 0] = 1.0
    return vectors * signs


def _rotation(vectors: np.ndarray, reference: np.ndarray) -> float:
    overlaps = np.abs(np.einsum("ij,ij->j", vectors, reference))
    return float(np.max(1.0 - overlaps))


class _AdiabaticFramePropagator:
    def __init__(
        self,
        params: DimerParams,
        protocol: SweepProtocol,
        step_tolerance: float,
        max_step: Optional[float],
        max_rotation: float,
    ):
        self.protocol = protocol
        self.static, self.off = static_parts(params)
        self.lz = imbalance_diagonal(params.total_particles)
        self.step_tolerance = step_tolerance
        self.max_step = max_step if max_step is not None else protocol.half_time / 32.0
        self.max_rotation = max_rotation
        self.step: Optional[float] = None
        self.accepted = 0
        self.rejected = 0

    def basis(self, t: float):
        return diagonalize(self.static + self.protocol.detuning(t) * self.lz, self.off)

    def _midpoint_step(self, coeffs, frame, t, h, rate):
        energies, mid = self.basis(t + 0.5 * h)
        mid = _align_signs(mid, frame)
        lz_mid = mid.T @ (self.lz[:, None] * mid)
        gaps = energies[None, :] - energies[:, None]
        coupling = np.divide(lz_mid, gaps, out=np.zeros_like(lz_mid), where=gaps != 0.0)
        generator = np.diag(energies) - 1j * rate * coupling
        w, u = eigh(generator)
        coeffs = u @ (np.exp(-1j * h * w)[:, None] * (u.conj().T @ coeffs))
        _, end = self.basis(t + h)
        end = _align_signs(end, mid)
        rotation = max(_rotation(mid, frame), _rotation(end, mid))
        return coeffs, end, rotation

    def advance(self, members: np.ndarray, t_from: float, t_to: float) -> np.ndarray:
        _, frame = self.basis(t_from)
        coeffs = frame.T @ members
        for seg_start, seg_end in split_at_turn(t_from, t_to):
            coeffs, frame = self._segment(coeffs, frame, seg_start, seg_end)
        return frame @ coeffs

    def _segment(self, coeffs, frame, start, end):
        if end <= start:
            return coeffs, frame
        rate = self.protocol.rate(0.5 * (start + end))
        t = start
        h = self.step if self.step is not None else min(self.max_step, 1.0)
        while t < end:
            h = min(h, self.max_step, end - t)
            full, full_frame, rot_full = self._midpoint_step(coeffs, frame, t, h, rate)
            part, part_frame, rot_1 = self._midpoint_step(coeffs, frame, t, 0.5 * h, rate)
            half, half_frame, rot_2 = self._midpoint_step(
                part, part_frame, t + 0.5 * h, 0.5 * h, rate
            )
            signs = np.sign(np.einsum("ij,ij->j", full_frame, half_frame))
            signs[signs == 0] = 1.0
            error = float(np.max(_column_norms(full * signs[:, None] - half))) / 3.0
            allowed = self.step_tolerance * h
            rotation = max(rot_full, rot_1, rot_2)
            if error <= allowed and rotation <= self.max_rotation:
                coeffs, frame = half, half_frame
                t = end if end - t <= h else t + h
                self.accepted += 1
                h *= _step_factor(error, allowed, 2)
            else:
                self.rejected += 1
                factor = _step_factor(error, allowed, 2) if error > allowed else 1.0
                if rotation > self.max_rotation:
                    factor = min(factor, 0.5)
                h *= factor
            if h < MIN_STEP and t < end:
                raise IntegratorError(
                    f"Adiabatic-frame step size underflow at t={t:.6g} (h={h:.3g})"
                )
            self.step = h
        return coeffs, frame


def _check_interval(protocol: SweepProtocol, t_start: float, t_end: float) -> None:
    if not t_start < t_end:
        raise ValueError(f"Propagation needs t_start < t_end, got {t_start} >= {t_end}")
    protocol.check_time(np.array([t_start, t_end]))


def _check_norms(initial: np.ndarray, current: np.ndarray, elapsed: float, tolerance: float, t: float):
    drift = float(np.max(np.abs(_column_norms(current) - initial)))
    bound = max(tolerance * elapsed, NORM_ROUNDOFF_FLOOR)
    if not np.isfinite(drift) or drift > bound:
        raise NormDriftError(
            f"Norm drift {drift:.3e} exceeds bound {bound:.3e} at t={t:.6g}", drift, bound
        )


def _make_propagator(params, protocol, method, step_tolerance, max_step, max_rotation):
    if method == "magnus":
        return _MagnusPropagator(params, protocol, step_tolerance, max_step)
    if method == "adiabatic":
        return _AdiabaticFramePropagator(params, protocol, step_tolerance, max_step, max_rotation)
    raise ValueError(f"Unknown propagation method: {method}")


def propagate_checkpoints(
    state: QuantumState,
    params: DimerParams,
    protocol: SweepProtocol,
    times: Sequence[float],
    tolerance: float = DEFAULT_NORM_TOLERANCE,
    step_tolerance: float = DEFAULT_STEP_TOLERANCE,
    max_step: Optional[float] = None,
    method: str = "magnus",
    max_rotation: float = MAX_FRAME_ROTATION,
) -> List[QuantumState]:
    """States at every checkpoint time; the first time is where state lives

    Mixture members are propagated together as one block, so they see
    identical step sequences.

    Args:
        times: strictly increasing checkpoint times within the protocol span
        tolerance: allowed norm drift per unit time
        step_tolerance: local error per unit time for the step controller
        method: "magnus" (Fock basis) or "adiabatic" (instantaneous eigenbasis)
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 1:
        raise ValueError("Checkpoint times must be a non-empty 1-D sequence")
    if times.size > 1:
        if np.any(np.diff(times) <= 0):
            raise ValueError("Checkpoint times must be strictly increasing")
        _check_interval(protocol, float(times[0]), float(times[-1]))
    state.require_normalized()

    _, members = as_members(state)
    initial_norms = _column_norms(members)
    propagator = _make_propagator(params, protocol, method, step_tolerance, max_step, max_rotation)
    results = [state]
    for t_from, t_to in zip(times[:-1], times[1:]):
        members = propagator.advance(members, float(t_from), float(t_to))
        _check_norms(initial_norms, members, float(t_to - times[0]), tolerance, float(t_to))
        results.append(with_members(state, members))
    logger.debug(
        f"{method} propagation over [{times[0]:.6g}, {times[-1]:.6g}]: "
        f"{propagator.accepted} steps accepted, {propagator.rejected} rejected"
    )
    return results


def propagate(
    state: QuantumState,
    params: DimerParams,
    protocol: SweepProtocol,
    t_start: float,
    t_end: float,
    tolerance: float = DEFAULT_NORM_TOLERANCE,
    step_tolerance: float = DEFAULT_STEP_TOLERANCE,
    max_step: Optional[float] = None,
) -> QuantumState:
    """Solve i dpsi/dt = H(delta(t)) psi from t_start to t_end"""
    _check_interval(protocol, t_start, t_end)
    return propagate_checkpoints(
        state, params, protocol, [t_start, t_end], tolerance, step_tolerance, max_step
    )[-1]


def propagate_adiabatic_frame(
    state: QuantumState,
    params: DimerParams,
    protocol: SweepProtocol,
    t_start: float,
    t_end: float,
    tolerance: float = DEFAULT_NORM_TOLERANCE,
    step_tolerance: float = DEFAULT_STEP_TOLERANCE,
    max_step: Optional[float] = None,
    max_rotation: float = MAX_FRAME_ROTATION,
) -> QuantumState:
    """Same contract as propagate, integrated in the instantaneous eigenbasis

    Meant for small N and very slow sweeps; the cost per step is a dense
    eigendecomposition of size N+1.
    """
    _check_interval(protocol, t_start, t_end)
    return propagate_checkpoints(
        state,
        params,
        protocol,
        [t_start, t_end],
        tolerance,
        step_tolerance,
        max_step,
        method="adiabatic",
        max_rotation=max_rotation,
    )[-1]
