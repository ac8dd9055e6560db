"""Classical ensembles binned on Husimi grids"""

import numpy as np

from ..model.params import DimerParams
from .grid import GridSpec, HusimiGrid, flat_to_chart


def ensemble_histogram(ens, params: DimerParams, grid_spec: GridSpec) -> HusimiGrid:
    """Ensemble weight per cell divided by the cell area

    Failed trajectories are left out, so the integral is the surviving weight
    captured by the grid.
    """
    p0 = params.p0
    alive = ~ens.failed
    q_chart, p_chart = flat_to_chart(ens.q[alive], ens.p[alive], grid_spec.chart, p0)
    q_edges, p_edges = grid_spec.edges(p0)
    counts, _, _ = np.histogram2d(
        q_chart, p_chart, bins=(q_edges, p_edges), weights=ens.weights[alive]
    )
    cell_area = grid_spec.cell_area(p0)
    captured = float(counts.sum())
    return HusimiGrid(grid_spec, p0, *grid_spec.axes(p0), counts / cell_area, captured)
