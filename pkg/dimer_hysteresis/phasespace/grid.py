import logging
from dataclasses import dataclass, field, replace
from typing import Optional, Tuple

import numpy as np

from ..model.charts import rotate_coords, unrotate_coords

logger = logging.getLogger(__name__)

CHARTS = ("rotated", "flat")


@dataclass(frozen=True)
class GridSpec:
    """Cell-centred rectangular grid in one of the canonical charts

    Without explicit ranges the grid covers the whole chart, q in [-pi, pi)
    and p in [-p0, p0]. Ranges are absolute (radians, particle imbalance).
    """

    q_points: int = 256
    p_points: int = 256
    chart: str = "rotated"
    q_range: Optional[Tuple[float, float]] = None
    p_range: Optional[Tuple[float, float]] = None

    def __post_init__(self):
        if self.chart not in CHARTS:
            raise ValueError(f"Unknown chart {self.chart}, expected one of {CHARTS}")
        if self.q_points < 2 or self.p_points < 2:
            raise ValueError("A grid needs at least 2 points per axis")
        for name, rng in (("q_range", self.q_range), ("p_range", self.p_range)):
            if rng is not None and not rng[0] < rng[1]:
                raise ValueError(f"{name} must be increasing, got {rng}")
        if self.q_range is not None:
            object.__setattr__(self, "q_range", tuple(float(v) for v in self.q_range))
        if self.p_range is not None:
            object.__setattr__(self, "p_range", tuple(float(v) for v in self.p_range))

    @property
    def full_q(self) -> bool:
        return self.q_range is None

    @property
    def full_chart(self) -> bool:
        return self.q_range is None and self.p_range is None

    def bounds(self, p0: float) -> Tuple[Tuple[float, float], Tuple[float, float]]:
        q_lo, q_hi = self.q_range if self.q_range is not None else (-np.pi, np.pi)
        p_lo, p_hi = self.p_range if self.p_range is not None else (-p0, p0)
        if p_lo < -p0 or p_hi > p0:
            raise ValueError(f"p_range {self.p_range} leaves [-{p0}, {p0}]")
        return (q_lo, q_hi), (p_lo, p_hi)

    def axes(self, p0: float) -> Tuple[np.ndarray, np.ndarray]:
        (q_lo, q_hi), (p_lo, p_hi) = self.bounds(p0)
        dq = (q_hi - q_lo) / self.q_points
        dp = (p_hi - p_lo) / self.p_points
        q_axis = q_lo + dq * (np.arange(self.q_points) + 0.5)
        p_axis = p_lo + dp * (np.arange(self.p_points) + 0.5)
        return q_axis, p_axis

    def edges(self, p0: float) -> Tuple[np.ndarray, np.ndarray]:
        (q_lo, q_hi), (p_lo, p_hi) = self.bounds(p0)
        return np.linspace(q_lo, q_hi, self.q_points + 1), np.linspace(p_lo, p_hi, self.p_points + 1)

    def spacing(self, p0: float) -> Tuple[float, float]:
        (q_lo, q_hi), (p_lo, p_hi) = self.bounds(p0)
        return (q_hi - q_lo) / self.q_points, (p_hi - p_lo) / self.p_points

    def cell_area(self, p0: float) -> float:
        dq, dp = self.spacing(p0)
        return dq * dp

    def refined(self, factor: int = 2) -> "GridSpec":
        return replace(self, q_points=self.q_points * factor, p_points=self.p_points * factor)

    def to_dict(self):
        return {
            "q_points": self.q_points,
            "p_points": self.p_points,
            "chart": self.chart,
            "q_range": list(self.q_range) if self.q_range else None,
            "p_range": list(self.p_range) if self.p_range else None,
        }


def chart_to_flat(q_chart, p_chart, chart: str, p0: float):
    if chart == "flat":
        return np.asarray(q_chart, dtype=float), np.asarray(p_chart, dtype=float)
    return unrotate_coords(q_chart, p_chart, p0)


def flat_to_chart(q, p, chart: str, p0: float):
    if chart == "flat":
        return np.asarray(q, dtype=float), np.asarray(p, dtype=float)
    return rotate_coords(q, p, p0)


@dataclass(frozen=True)
class HusimiGrid:
    """A phase space density sampled on a GridSpec

    values[i, j] belongs to the node (q_axis[i], p_axis[j]) of the grid's
    chart. raw_integral is the Riemann sum before rescaling.
    """

    spec: GridSpec
    p0: float
    q_axis: np.ndarray = field(repr=False)
    p_axis: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    raw_integral: float = 1.0

    def __post_init__(self):
        if self.values.shape != (self.q_axis.size, self.p_axis.size):
            raise ValueError("values must have shape (q_points, p_points)")
        if np.any(self.values < 0):
            raise ValueError("Phase space densities must be non-negative")

    @property
    def chart(self) -> str:
        return self.spec.chart

    @property
    def q_rot_axis(self) -> np.ndarray:
        return self.q_axis

    @property
    def p_rot_axis(self) -> np.ndarray:
        return self.p_axis

    @property
    def cell_area(self) -> float:
        return self.spec.cell_area(self.p0)

    def integral(self) -> float:
        return float(self.values.sum() * self.cell_area)

    def mesh(self) -> Tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.q_axis, self.p_axis, indexing="ij")

    def flat_nodes(self) -> Tuple[np.ndarray, np.ndarray]:
        """Flat-chart (q, p) of every node, shaped like values"""
        q_chart, p_chart = self.mesh()
        return chart_to_flat(q_chart, p_chart, self.chart, self.p0)

    def centroid(self) -> Tuple[float, float]:
        """Mean of the chart coordinates under the grid density"""
        q_chart, p_chart = self.mesh()
        total = self.values.sum()
        return (
            float((self.values * q_chart).sum() / total),
            float((self.values * p_chart).sum() / total),
        )

    def same_binning(self, other: "HusimiGrid") -> bool:
        return (
            self.chart == other.chart
            and self.values.shape == other.values.shape
            and np.allclose(self.q_axis, other.q_axis, rtol=0, atol=1e-12)
            and np.allclose(self.p_axis, other.p_axis, rtol=0, atol=1e-12 * max(1.0, self.p0))
        )
