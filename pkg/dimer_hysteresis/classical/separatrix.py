"""Fixed points, the separatrix and the areas of the regions it bounds

At fixed p the energy reads E(q, p) = A(p) - B(p) cos q with B >= 0, so every
energy sublevel set is, for each p, one q-interval centred on q = 0. Areas of
lobes and energy contours therefore reduce to one-dimensional integrals of
that interval's width, done with adaptive QUADPACK quadrature.

For attractive interaction the lobes around the self-trapped minima are
sublevel sets below the separatrix energy; for repulsive interaction they are
superlevel sets around the maxima on q = pi. ``sense`` carries that sign.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from ..model.charts import PhasePoint
from ..model.params import DimerParams
from .meanfield import energy_qp

logger = logging.getLogger(__name__)

CENTER = "center"
SADDLE = "saddle"
LOBES = ("upper", "lower", "whole")

_ROOT_SCAN_POINTS = 4001
_EDGE_SCAN_POINTS = 2001
_QUAD_LIMIT = 400


@dataclass(frozen=True)
class FixedPoint:
    point: PhasePoint
    stability: str
    energy: float


def _hessian_det(q: float, p: float, params: DimerParams) -> float:
    p0 = params.p0
    transverse = math.sqrt(p0 * p0 - p * p)
    h_qq = params.omega * transverse * math.cos(q)
    h_pp = params.omega * math.cos(q) * p0 * p0 / transverse ** 3 + 2.0 * params.interaction
    return h_qq * h_pp


def fixed_points(params: DimerParams, delta: float) -> List[FixedPoint]:
    """All fixed points, found on the lines q = 0 and q = pi

    With p = p0 tanh(w) the condition dq/dt = 0 on the line cos q = s reads
    s sinh(w) + u tanh(w) + delta/omega = 0, whose roots are bracketed on a
    grid and polished with Brent's method.
    """
    u = params.nonlinearity
    d = delta / params.omega
    bound = math.asinh(abs(u) + abs(d) + 1.0) + 1.0
    w_grid = np.linspace(-bound, bound, _ROOT_SCAN_POINTS)
    found: List[FixedPoint] = []
    for q, s in ((0.0, 1.0), (math.pi, -1.0)):

        def residual(w, s=s):
            return s * math.sinh(w) + u * math.tanh(w) + d

        values = s * np.sinh(w_grid) + u * np.tanh(w_grid) + d
        roots = [float(w) for w, v in zip(w_grid, values) if v == 0.0]
        for i in np.flatnonzero(values[:-1] * values[1:] < 0):
            try:
                roots.append(brentq(residual, w_grid[i], w_grid[i + 1], xtol=1e-14))
            except (ValueError, RuntimeError) as exc:
                logger.warning(f"Fixed point search on q={q:.4f} did not converge: {exc}")
        for w in roots:
            p = params.p0 * math.tanh(w)
            det = _hessian_det(q, p, params)
            stability = SADDLE if det < 0 else CENTER
            pt = PhasePoint(q, p)
            found.append(FixedPoint(pt, stability, energy_qp(q, p, params, delta)))
    found.sort(key=lambda fp: (fp.point.q, fp.point.p))
    return found


def separatrix_window(params: DimerParams) -> Optional[Tuple[float, float]]:
    """Detuning interval in which a saddle exists, None when subcritical

    The saddle and one centre on the saddle line merge where the line's
    residual has a double root, at cosh^3(w) = |u|.
    """
    u = params.nonlinearity
    if abs(u) <= 1.0:
        return None
    w_c = math.acosh(abs(u) ** (1.0 / 3.0))
    s = -math.copysign(1.0, u)
    delta_c = params.omega * abs(s * math.sinh(w_c) + u * math.tanh(w_c))
    return (-delta_c, delta_c)


def basin_sense(params: DimerParams) -> float:
    """+1 when lobes are energy sublevel sets, -1 when superlevel sets"""
    return 1.0 if params.interaction <= 0 else -1.0


def basin_width(p: np.ndarray, level: float, params: DimerParams, delta: float) -> np.ndarray:
    """q-measure of {E(q, p) below level} (sublevel sense) or above it (superlevel)"""
    p = np.asarray(p, dtype=float)
    p0 = params.p0
    a = params.interaction * (p0 * p0 + p * p) + delta * p
    b = params.omega * np.sqrt(np.clip(p0 * p0 - p * p, 0.0, None))
    with np.errstate(divide="ignore", invalid="ignore"):
        c = (a - level) / b
    c = np.where(b > 0, c, np.where(a < level, -np.inf, np.inf))
    sub = 2.0 * np.arccos(np.clip(c, -1.0, 1.0))
    return sub if basin_sense(params) > 0 else 2.0 * np.pi - sub


def _edges(level: float, lo: float, hi: float, params: DimerParams, delta: float) -> List[float]:
    """Points in (lo, hi) where the basin width has a square-root edge"""
    p0 = params.p0
    grid = np.linspace(lo, hi, _EDGE_SCAN_POINTS)
    a = params.interaction * (p0 * p0 + grid * grid) + delta * grid
    b = params.omega * np.sqrt(np.clip(p0 * p0 - grid * grid, 0.0, None))
    edges: List[float] = []
    for sign in (1.0, -1.0):
        g = a - sign * b - level
        for i in np.flatnonzero(g[:-1] * g[1:] < 0):

            def func(x, sign=sign):
                return (
                    params.interaction * (p0 * p0 + x * x)
                    + delta * x
                    - sign * params.omega * math.sqrt(max(p0 * p0 - x * x, 0.0))
                    - level
                )

            edges.append(brentq(func, grid[i], grid[i + 1], xtol=1e-13 * max(1.0, p0)))
    return sorted(e for e in edges if lo < e < hi)


def width_integral(level: float, lo: float, hi: float, params: DimerParams, delta: float) -> float:
    """Area of the basin-sense level set of ``level`` with lo < p < hi"""
    if hi <= lo:
        return 0.0
    points = _edges(level, lo, hi, params, delta)
    knots = [lo] + points + [hi]
    total = 0.0
    for a, b in zip(knots[:-1], knots[1:]):
        value, error = quad(
            lambda x: float(basin_width(x, level, params, delta)),
            a,
            b,
            limit=_QUAD_LIMIT,
            epsabs=1e-12 * params.total_particles,
            epsrel=1e-11,
        )
        total += value
        if error > 1e-8 * max(1.0, abs(value)):
            logger.debug(f"Area quadrature on [{a:.6g}, {b:.6g}] error estimate {error:.2e}")
    return total


@dataclass(frozen=True)
class SeparatrixInfo:
    delta: float
    saddle: PhasePoint
    separatrix_energy: float
    # Phase space areas in (q, p) units, summing to 2 pi N
    area_upper: float
    area_lower: float
    area_outer: float
    upper_center: PhasePoint
    lower_center: PhasePoint

    @property
    def total_area(self) -> float:
        return self.area_upper + self.area_lower + self.area_outer

    def to_dict(self):
        return {
            "delta": self.delta,
            "saddle_q": float(self.saddle.q),
            "saddle_p": float(self.saddle.p),
            "separatrix_energy": self.separatrix_energy,
            "area_upper": self.area_upper,
            "area_lower": self.area_lower,
            "area_outer": self.area_outer,
        }


def separatrix_info(params: DimerParams, delta: float) -> Optional[SeparatrixInfo]:
    """Saddle, separatrix energy and region areas; None when no saddle exists"""
    points = fixed_points(params, delta)
    saddles = [fp for fp in points if fp.stability == SADDLE]
    if not saddles:
        return None
    saddle = saddles[0]
    q_s, p_s = float(saddle.point.q), float(saddle.point.p)
    centers = [fp for fp in points if fp.stability == CENTER and fp.point.q == q_s]
    upper = max(centers, key=lambda fp: fp.point.p)
    lower = min(centers, key=lambda fp: fp.point.p)
    level = saddle.energy
    p0 = params.p0

    area_upper = width_integral(level, p_s, p0, params, delta)
    area_lower = width_integral(level, -p0, p_s, params, delta)
    # Outer region integrated on its own as an independent check of the sum rule
    outer_points = [-p0] + _edges(level, -p0, p0, params, delta) + [p_s, p0]
    knots = sorted(set(outer_points))
    area_outer = 0.0
    for a, b in zip(knots[:-1], knots[1:]):
        area_outer += quad(
            lambda x: 2.0 * np.pi - float(basin_width(x, level, params, delta)),
            a,
            b,
            limit=_QUAD_LIMIT,
            epsabs=1e-12 * params.total_particles,
            epsrel=1e-11,
        )[0]
    return SeparatrixInfo(
        float(delta),
        saddle.point,
        level,
        area_upper,
        area_lower,
        area_outer,
        upper.point,
        lower.point,
    )


def enclosed_action(params: DimerParams, delta: float, energy: float, lobe: str = "upper") -> float:
    """Phase space area enclosed by the energy contour inside one basin

    With a separatrix, "upper" and "lower" restrict to one lobe and the
    contour must lie inside it. "whole", or any lobe when there is no
    separatrix, integrates the full basin-sense level set.
    """
    if lobe not in LOBES:
        raise ValueError(f"Unknown lobe {lobe}, expected one of {LOBES}")
    p0 = params.p0
    info = separatrix_info(params, delta) if lobe != "whole" else None
    if info is None:
        return width_integral(energy, -p0, p0, params, delta)
    if basin_sense(params) * (energy - info.separatrix_energy) > 0:
        raise ValueError(
            f"Energy {energy:.6g} lies outside the lobes (separatrix at {info.separatrix_energy:.6g})"
        )
    p_s = float(info.saddle.p)
    if lobe == "upper":
        return width_integral(energy, p_s, p0, params, delta)
    return width_integral(energy, -p0, p_s, params, delta)


def separatrix_scan(params: DimerParams, deltas) -> List[SeparatrixInfo]:
    """Region areas along a detuning grid; detunings without a saddle are skipped"""
    rows = []
    for delta in np.asarray(deltas, dtype=float):
        info = separatrix_info(params, float(delta))
        if info is not None:
            rows.append(info)
    logger.debug(f"Separatrix present at {len(rows)} of {np.size(deltas)} detunings")
    return rows
