import math
from dataclasses import dataclass

import numpy as np
from scipy.special import entr

from .grid import GridSpec, HusimiGrid


@dataclass(frozen=True)
class WehrlResult:
    entropy: float
    grid_spec: GridSpec
    raw_integral: float


def wehrl_entropy(grid: HusimiGrid) -> WehrlResult:
    """-sum Q log Q dq' dp' with 0 log 0 = 0"""
    value = float(np.sum(entr(grid.values)) * grid.cell_area)
    return WehrlResult(value, grid.spec, grid.raw_integral)


def coherent_wehrl_entropy(total_particles: int) -> float:
    """Wehrl entropy of any coherent state with Q normalized to 1 over dq dp"""
    n = float(total_particles)
    return math.log(2.0 * math.pi * n / (n + 1.0)) + n / (n + 1.0)
