"""Husimi function Q(Gamma) = |<Gamma|psi>|^2 on phase space grids"""

import logging
from dataclasses import dataclass
from typing import Union

import numpy as np

from ..classical.meanfield import EnergyWindow, energy_qp
from ..model.params import DimerParams
from ..quantum.states import QuantumState, as_members
from .coherent import CoherentParams, coherent_amplitudes, log_binomial_half
from .grid import GridSpec, HusimiGrid

logger = logging.getLogger(__name__)

MIN_RESOLUTION = 64
# Upper bound on coherent amplitudes held in memory per chunk
CHUNK_ELEMENTS = 4_000_000

ArrayLike = Union[float, np.ndarray]


def husimi_values(
    state: QuantumState, theta: ArrayLike, phi: ArrayLike, total_particles: int = None
) -> np.ndarray:
    """Unnormalized Q at Bloch angles, weighted over mixture members

    Every value is an overlap probability and therefore at most 1.
    """
    weights, members = as_members(state)
    big_n = members.shape[0] - 1
    if total_particles is not None and total_particles != big_n:
        raise ValueError(f"State has N={big_n}, expected {total_particles}")
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    shape = np.broadcast(theta, phi).shape
    theta_flat = np.broadcast_to(theta, shape).ravel()
    phi_flat = np.broadcast_to(phi, shape).ravel()

    log_binom = log_binomial_half(big_n)
    chunk = max(1, CHUNK_ELEMENTS // (big_n + 1))
    out = np.empty(theta_flat.size)
    for start in range(0, theta_flat.size, chunk):
        stop = start + chunk
        amps = coherent_amplitudes(theta_flat[start:stop], phi_flat[start:stop], big_n, log_binom)
        overlaps = np.abs(amps.conj() @ members) ** 2
        out[start:stop] = overlaps @ weights
    return out.reshape(shape)


def husimi_point(state: QuantumState, cp: CoherentParams) -> float:
    return float(husimi_values(state, cp.theta, cp.phi))


def husimi_on_flat(state: QuantumState, q: ArrayLike, p: ArrayLike, p0: float) -> np.ndarray:
    """Unnormalized Q at flat-chart points, theta = arccos(p / p0), phi = q"""
    theta = np.arccos(np.clip(np.asarray(p, dtype=float) / p0, -1.0, 1.0))
    return husimi_values(state, theta, q)


def sphere_normalization(total_particles: int) -> float:
    """1 / integral of the unnormalized Q over the whole sphere in dq dp"""
    return (total_particles + 1.0) / (2.0 * np.pi * total_particles)


def husimi_grid(
    state: QuantumState, params: DimerParams, grid_spec: GridSpec = GridSpec()
) -> HusimiGrid:
    """Evaluate Q on a grid and normalize it

    A grid covering the whole chart is rescaled so its Riemann sum is exactly
    1. A window grid is scaled with the analytic whole-sphere factor, so its
    sum is the probability captured by the window.
    """
    if grid_spec.q_points < MIN_RESOLUTION or grid_spec.p_points < MIN_RESOLUTION:
        raise ValueError(f"Husimi grids need at least {MIN_RESOLUTION} points per axis")
    p0 = params.p0
    grid = HusimiGrid(
        grid_spec, p0, *grid_spec.axes(p0), np.zeros((grid_spec.q_points, grid_spec.p_points))
    )
    q, p = grid.flat_nodes()
    raw = husimi_on_flat(state, q, p, p0)
    raw_integral = float(raw.sum() * grid.cell_area)
    if grid_spec.full_chart:
        scale = 1.0 / raw_integral
        expected = 1.0 / sphere_normalization(params.total_particles)
        logger.debug(
            f"Husimi raw integral {raw_integral:.8f}, sphere value {expected:.8f}"
        )
    else:
        scale = sphere_normalization(params.total_particles)
    return HusimiGrid(grid_spec, p0, grid.q_axis, grid.p_axis, raw * scale, raw_integral)


@dataclass(frozen=True)
class RegionIntegral:
    value: float
    node_count: int
    # True when no node fell inside the window
    empty: bool


def region_integral(
    grid: HusimiGrid, region: EnergyWindow, params: DimerParams, delta: float
) -> RegionIntegral:
    """Riemann sum of the grid density over nodes whose mean-field energy is in region"""
    q, p = grid.flat_nodes()
    mask = region.contains(energy_qp(q, p, params, delta))
    count = int(np.count_nonzero(mask))
    if count == 0:
        logger.warning(f"Energy window {region} contains no grid node at delta={delta}")
        return RegionIntegral(0.0, 0, True)
    return RegionIntegral(float(grid.values[mask].sum() * grid.cell_area), count, False)
