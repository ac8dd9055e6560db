"""Coordinate charts on the Bloch sphere

Three descriptions of the same mean-field state are used throughout:

* flat canonical (q, p): relative phase and particle imbalance, p = p0 cos(theta);
  singular at the poles |p| = p0
* Bloch (theta, phi) and the Cartesian Bloch vector (x, y, z) of radius p0
* rotated canonical (q', p'): the flat chart taken after a rigid rotation of
  the sphere, q' = atan2(z, x), p' = -y; singular at |p'| = p0

All functions accept scalars or numpy arrays.
"""

from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from .params import DimerParams

ArrayLike = Union[float, np.ndarray]

POLE_TOLERANCE = 1e-12


@dataclass(frozen=True)
class PhasePoint:
    # Relative phase, periodic with period 2 pi
    q: ArrayLike
    # Particle imbalance, |p| <= p0
    p: ArrayLike


@dataclass(frozen=True)
class BlochPoint:
    # Polar angle in [0, pi]
    theta: ArrayLike
    # Azimuth in [-pi, pi)
    phi: ArrayLike


@dataclass(frozen=True)
class RotatedPoint:
    q_rot: ArrayLike
    p_rot: ArrayLike


def _scalar_or_array(value: np.ndarray) -> ArrayLike:
    return float(value) if np.ndim(value) == 0 else value


def _transverse(p0: float, p: ArrayLike) -> np.ndarray:
    return np.sqrt(np.clip(p0 * p0 - np.square(p), 0.0, None))


def _check_bound(p0: float, value: ArrayLike, name: str) -> None:
    if np.any(np.abs(value) > p0 * (1.0 + 1e-12)):
        raise ValueError(f"|{name}| exceeds p0 = {p0}")


def bloch_vector(q: ArrayLike, p: ArrayLike, p0: float) -> Tuple[np.ndarray, ...]:
    """Cartesian Bloch vector (x, y, z) of radius p0"""
    r = _transverse(p0, p)
    return r * np.cos(q), r * np.sin(q), np.asarray(p, dtype=float)


def from_bloch_vector(
    x: ArrayLike, y: ArrayLike, z: ArrayLike, p0: float
) -> Tuple[np.ndarray, np.ndarray]:
    """Flat chart (q, p) of a Bloch vector; the vector is projected to radius p0"""
    radius = np.sqrt(np.square(x) + np.square(y) + np.square(z))
    scale = np.where(radius > 0, p0 / np.where(radius > 0, radius, 1.0), 1.0)
    return np.arctan2(y, x), np.clip(z * scale, -p0, p0)


def rotate_coords(q: ArrayLike, p: ArrayLike, p0: float) -> Tuple[np.ndarray, np.ndarray]:
    x, y, z = bloch_vector(q, p, p0)
    return np.arctan2(z, x), -y


def unrotate_coords(
    q_rot: ArrayLike, p_rot: ArrayLike, p0: float
) -> Tuple[np.ndarray, np.ndarray]:
    r = _transverse(p0, p_rot)
    x = r * np.cos(q_rot)
    z = r * np.sin(q_rot)
    y = -np.asarray(p_rot, dtype=float)
    return np.arctan2(y, x), z


def to_rotated(pt: PhasePoint, params: DimerParams) -> RotatedPoint:
    """(q, p) -> (q', p'); a rigid rotation of the Bloch sphere"""
    _check_bound(params.p0, pt.p, "p")
    q_rot, p_rot = rotate_coords(pt.q, pt.p, params.p0)
    return RotatedPoint(_scalar_or_array(q_rot), _scalar_or_array(p_rot))


def from_rotated(pt: RotatedPoint, params: DimerParams) -> PhasePoint:
    """Inverse of to_rotated away from the chart poles"""
    _check_bound(params.p0, pt.p_rot, "p'")
    q, p = unrotate_coords(pt.q_rot, pt.p_rot, params.p0)
    return PhasePoint(_scalar_or_array(q), _scalar_or_array(p))


def to_bloch(pt: PhasePoint, params: DimerParams) -> BlochPoint:
    _check_bound(params.p0, pt.p, "p")
    cos_theta = np.clip(np.asarray(pt.p, dtype=float) / params.p0, -1.0, 1.0)
    phi = np.mod(np.asarray(pt.q, dtype=float) + np.pi, 2.0 * np.pi) - np.pi
    return BlochPoint(_scalar_or_array(np.arccos(cos_theta)), _scalar_or_array(phi))


def from_bloch(bp: BlochPoint, params: DimerParams) -> PhasePoint:
    """q = phi, p = (N/2) cos(theta)"""
    p = params.p0 * np.cos(bp.theta)
    return PhasePoint(_scalar_or_array(np.asarray(bp.phi, dtype=float)), _scalar_or_array(p))


def is_rotated_pole(p_rot: ArrayLike, p0: float) -> np.ndarray:
    """Flag points on the rotated chart poles where q' is undefined"""
    return np.abs(p_rot) >= p0 * (1.0 - POLE_TOLERANCE)


def is_flat_pole(p: ArrayLike, p0: float) -> np.ndarray:
    return np.abs(p) >= p0 * (1.0 - POLE_TOLERANCE)
