"""Coarse-grained density and classical entropy

For a frozen detuning the flow is integrable: the infinite time average of
any density spreads each point uniformly (in time) along its orbit. Binning
weights into cells made of whole orbits and dividing by the cell's phase
space volume is exactly that average, at the resolution of the cells.

By default the cells are shells of fixed enclosed area. Within each region
every orbit is labelled by the area between it and the region's centre, the
adiabatic invariant of the slow sweep, and shell k holds the orbits with
label in [k dA, (k + 1) dA). A slowly transported ensemble keeps its labels,
so its cells and their volumes do not change until it meets the separatrix;
only the outermost shell of a region is cut short by the region's area.
Given an explicit energy interval the cells are equal energy bands instead.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np

from ..model.params import DimerParams
from .ensemble import Ensemble
from .meanfield import energy_qp
from .separatrix import SeparatrixInfo, basin_sense, fixed_points, separatrix_info, width_integral

logger = logging.getLogger(__name__)

REGIONS_SPLIT = ("upper", "lower", "outside")
REGIONS_WHOLE = ("all",)

# Energies per region at which the enclosed area is tabulated
ACTION_NODES = 41


@dataclass(frozen=True)
class ActionTable:
    """Area enclosed between an orbit and its region's centre, against energy"""

    energies: np.ndarray = field(repr=False)
    actions: np.ndarray = field(repr=False)
    # Phase space area of the whole region
    capacity: float

    def __call__(self, energies) -> np.ndarray:
        return np.interp(energies, self.energies, self.actions)


@dataclass(frozen=True)
class CoarseGrainedDensity:
    delta: float
    regions: Tuple[str, ...]
    # weights[b, r]: ensemble weight in cell b of region r, summing to 1
    weights: np.ndarray = field(repr=False)
    # volumes[b, r]: phase space area of the cell
    volumes: np.ndarray = field(repr=False)
    separatrix: Optional[SeparatrixInfo] = None
    # Energy band edges when binned by energy, None for area shells
    band_edges: Optional[np.ndarray] = field(default=None, repr=False)
    action_step: Optional[float] = None
    action_tables: Tuple[ActionTable, ...] = field(default=(), repr=False)

    @property
    def band_count(self) -> int:
        return self.weights.shape[0]

    @property
    def total_volume(self) -> float:
        return float(self.volumes.sum())

    def band_histogram(self) -> np.ndarray:
        return self.weights.sum(axis=1)

    def cell_index(self, q: np.ndarray, p: np.ndarray, params: DimerParams):
        """(cell, region) indices of flat-chart points; cell -1 outside the range"""
        energies = np.asarray(energy_qp(q, p, params, self.delta), dtype=float)
        regions = _region_index(energies, np.asarray(p), params, self.separatrix)
        if self.band_edges is not None:
            return _band_index(energies, self.band_edges), regions
        cells = np.full(energies.shape, -1, dtype=int)
        for r, table in enumerate(self.action_tables):
            mask = regions == r
            cells[mask] = _shell_index(table(energies[mask]), self.action_step, table.capacity, self.band_count)
        return cells, regions

    def density_at(self, q: np.ndarray, p: np.ndarray, params: DimerParams) -> np.ndarray:
        """Coarse-grained density (weight per area) at flat-chart points"""
        cells, regions = self.cell_index(q, p, params)
        inside = cells >= 0
        out = np.zeros(np.shape(cells))
        vol = self.volumes[cells[inside], regions[inside]]
        w = self.weights[cells[inside], regions[inside]]
        out[inside] = np.divide(w, vol, out=np.zeros_like(w), where=vol > 0)
        return out


def _band_index(energies: np.ndarray, edges: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(edges, energies, side="right") - 1
    idx = np.where(energies == edges[-1], edges.size - 2, idx)
    return np.where((idx >= 0) & (idx < edges.size - 1), idx, -1)


def _shell_index(actions: np.ndarray, step: float, capacity: float, count: int) -> np.ndarray:
    last = min(max(math.ceil(capacity / step - 1e-9) - 1, 0), count - 1)
    return np.clip(np.floor(np.asarray(actions) / step).astype(int), 0, last)


def _shell_volumes(step: float, capacity: float, count: int) -> np.ndarray:
    edges = np.minimum(np.arange(count + 1) * step, capacity)
    edges[-1] = capacity
    return np.diff(edges)


def _region_index(energies, p, params: DimerParams, info: Optional[SeparatrixInfo]) -> np.ndarray:
    if info is None:
        return np.zeros(np.shape(energies), dtype=int)
    in_lobe = basin_sense(params) * (energies - info.separatrix_energy) < 0
    upper = np.asarray(p) > float(info.saddle.p)
    return np.where(in_lobe, np.where(upper, 0, 1), 2)


def energy_range(params: DimerParams, delta: float) -> Tuple[float, float]:
    """Global energy extrema, attained at fixed points"""
    energies = [fp.energy for fp in fixed_points(params, delta)]
    lo, hi = min(energies), max(energies)
    pad = 1e-9 * max(1.0, hi - lo)
    return lo - pad, hi + pad


def _tabulate(action: Callable[[float], float], lo: float, hi: float, capacity: float) -> ActionTable:
    # Chebyshev nodes crowd the ends, where the separatrix makes the area steep
    k = np.arange(ACTION_NODES)
    energies = lo + (hi - lo) * 0.5 * (1.0 - np.cos(np.pi * k / (ACTION_NODES - 1)))
    actions = np.clip([action(float(e)) for e in energies], 0.0, capacity)
    return ActionTable(energies, actions, float(capacity))


def action_tables(
    params: DimerParams, delta: float, info: Optional[SeparatrixInfo]
) -> Tuple[ActionTable, ...]:
    """Enclosed area tables for each region, in the order of REGIONS_SPLIT or REGIONS_WHOLE

    Lobes are measured from their centre outwards. The outside region is
    measured from the global extremum it surrounds, so its label is the area
    on the far side of the orbit.
    """
    p0 = params.p0
    total = 2.0 * np.pi * params.total_particles
    energies = [fp.energy for fp in fixed_points(params, delta)]
    e_min, e_max = min(energies), max(energies)

    def level_area(level, lo=-p0, hi=p0):
        return width_integral(level, lo, hi, params, delta)

    if info is None:
        return (_tabulate(level_area, e_min, e_max, total),)
    e_sep, p_s = info.separatrix_energy, float(info.saddle.p)
    e_upper = float(energy_qp(info.upper_center.q, info.upper_center.p, params, delta))
    e_lower = float(energy_qp(info.lower_center.q, info.lower_center.p, params, delta))
    sublevel = basin_sense(params) > 0

    def span(center):
        return (center, e_sep) if sublevel else (e_sep, center)

    outside_span = (e_sep, e_max) if sublevel else (e_min, e_sep)
    return (
        _tabulate(lambda e: level_area(e, p_s, p0), *span(e_upper), info.area_upper),
        _tabulate(lambda e: level_area(e, -p0, p_s), *span(e_lower), info.area_lower),
        _tabulate(lambda e: total - level_area(e), *outside_span, info.area_outer),
    )


def coarse_grain(
    ens: Ensemble,
    params: DimerParams,
    delta: float,
    band_count: int,
    band_range: Optional[Tuple[float, float]] = None,
) -> CoarseGrainedDensity:
    """Histogram of ensemble weight over (cell x region)

    Args:
        band_count: shells of area 2 pi N / band_count per region, or the
            number of energy bands when band_range is given
        band_range: energy interval split into equal energy bands
    """
    if band_count < 1:
        raise ValueError("band_count must be at least 1")
    info = separatrix_info(params, delta)
    regions = REGIONS_SPLIT if info is not None else REGIONS_WHOLE

    alive = ~ens.failed
    energies = ens.energies(params, delta)[alive]
    weights = ens.weights[alive]
    region_idx = _region_index(energies, ens.p[alive], params, info)
    volumes = np.empty((band_count, len(regions)))
    edges = tables = step = None
    if band_range is not None:
        edges = np.linspace(band_range[0], band_range[1], band_count + 1)
        cells = _band_index(energies, edges)
        for r, name in enumerate(regions):
            areas = np.array([_energy_band_area(float(e), name, params, delta, info) for e in edges])
            volumes[:, r] = np.clip(np.diff(areas), 0.0, None)
    else:
        tables = action_tables(params, delta, info)
        step = 2.0 * np.pi * params.total_particles / band_count
        cells = np.empty(energies.size, dtype=int)
        for r, table in enumerate(tables):
            mask = region_idx == r
            cells[mask] = _shell_index(table(energies[mask]), step, table.capacity, band_count)
            volumes[:, r] = _shell_volumes(step, table.capacity, band_count)

    inside = cells >= 0
    if np.any(~inside):
        logger.debug(f"{int(np.sum(~inside))} points fall outside the band range")
    cell_weights = np.zeros((band_count, len(regions)))
    np.add.at(cell_weights, (cells[inside], region_idx[inside]), weights[inside])
    cell_weights /= weights.sum()
    return CoarseGrainedDensity(
        float(delta), regions, cell_weights, volumes, info, edges, step, tables or ()
    )


def _energy_band_area(
    energy: float, region: str, params: DimerParams, delta: float, info: Optional[SeparatrixInfo]
) -> float:
    """Area of {E' < energy} within one region"""
    p0 = params.p0
    total = 2.0 * np.pi * params.total_particles

    def level_area(level, lo=-p0, hi=p0):
        return width_integral(level, lo, hi, params, delta)

    if basin_sense(params) > 0:
        if info is None:
            return level_area(energy)
        e_sep, p_s = info.separatrix_energy, float(info.saddle.p)
        if region == "upper":
            return level_area(min(energy, e_sep), p_s, p0)
        if region == "lower":
            return level_area(min(energy, e_sep), -p0, p_s)
        return max(0.0, level_area(energy) - info.area_upper - info.area_lower) if energy > e_sep else 0.0
    # Superlevel sense: widths measure {E' > level}
    if info is None:
        return total - level_area(energy)
    e_sep, p_s = info.separatrix_energy, float(info.saddle.p)
    if region == "upper":
        return max(0.0, info.area_upper - level_area(max(energy, e_sep), p_s, p0))
    if region == "lower":
        return max(0.0, info.area_lower - level_area(max(energy, e_sep), -p0, p_s))
    return total - level_area(min(energy, e_sep))


def classical_entropy(cg: CoarseGrainedDensity, offset: float = 0.0) -> float:
    """-sum w_i log(w_i / V_i) over occupied cells, plus an alignment offset"""
    occupied = cg.weights > 0
    w = cg.weights[occupied]
    v = cg.volumes[occupied]
    if np.any(v <= 0):
        logger.warning(f"{int(np.sum(v <= 0))} occupied cells have zero volume and are skipped")
        keep = v > 0
        w, v = w[keep], v[keep]
    return float(-np.sum(w * np.log(w / v)) + offset)
