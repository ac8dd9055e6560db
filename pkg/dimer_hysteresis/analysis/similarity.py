"""Distances between quantum and classical phase space distributions"""

import logging
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from ..classical.coarse import CoarseGrainedDensity
from ..common.errors import BinningMismatchError
from ..model.params import DimerParams
from ..phasespace.grid import HusimiGrid

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SimilarityReport:
    # Sum of |P - Q| over cells, in [0, 2]
    l1: float
    # Bhattacharyya coefficient sum sqrt(P Q), in [0, 1]
    overlap: float

    def to_dict(self):
        return {"l1": self.l1, "overlap": self.overlap}


def project_coarse_grained(cg: CoarseGrainedDensity, like: HusimiGrid, params: DimerParams) -> HusimiGrid:
    """Evaluate a coarse-grained density on the nodes of another grid"""
    q, p = like.flat_nodes()
    values = cg.density_at(q, p, params)
    raw = float(values.sum() * like.cell_area)
    return HusimiGrid(like.spec, like.p0, like.q_axis, like.p_axis, values, raw)


def _cell_probabilities(grid: HusimiGrid) -> np.ndarray:
    total = grid.values.sum()
    if total <= 0:
        raise ValueError("Cannot compare a distribution that is zero on every cell")
    return grid.values / total


def similarity_metrics(
    grid_q: HusimiGrid,
    other: Union[HusimiGrid, CoarseGrainedDensity],
    params: Optional[DimerParams] = None,
) -> SimilarityReport:
    """L1 distance and overlap of two densities renormalized on a shared binning

    A coarse-grained density is first evaluated on grid_q's nodes, which
    needs params.

    Raises:
        BinningMismatchError: the two grids are binned differently
    """
    if isinstance(other, CoarseGrainedDensity):
        if params is None:
            raise ValueError("params are needed to project a coarse-grained density")
        other = project_coarse_grained(other, grid_q, params)
    if not grid_q.same_binning(other):
        raise BinningMismatchError(
            f"Grids differ: {grid_q.spec.to_dict()} vs {other.spec.to_dict()}"
        )
    first = _cell_probabilities(grid_q)
    second = _cell_probabilities(other)
    l1 = float(np.abs(first - second).sum())
    overlap = float(np.sqrt(first * second).sum())
    logger.debug(f"Similarity: L1 {l1:.4f}, overlap {overlap:.4f}")
    return SimilarityReport(l1, min(overlap, 1.0))
