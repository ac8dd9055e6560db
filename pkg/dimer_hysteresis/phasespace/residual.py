"""Numerical check of the Husimi evolution equation

For the dimer the Husimi function obeys the classical Liouville equation plus
one second-derivative term:

    dQ/dt = -(dH/dp) dQ/dq + (dH/dq) dQ/dp - U (p0^2 - p^2) / p0 * d2Q/dqdp

in the flat chart. The residual compares a finite difference of two Husimi
grids in time with the right-hand side evaluated on their average.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict

import numpy as np

from ..classical.meanfield import flow_qp
from ..model.params import DimerParams
from ..quantum.states import QuantumState
from .grid import GridSpec
from .husimi import husimi_on_flat

logger = logging.getLogger(__name__)

MAX_TIME_STEP = 1e-2
# Cells this close to |p| = p0 (fraction of p0) are excluded
POLE_MARGIN = 0.05


@dataclass(frozen=True)
class ResidualReport:
    # ||lhs - rhs|| / max(||lhs||, ||rhs||)
    relative: float
    # RMS of lhs - rhs over the included cells
    absolute: float
    # RMS of every term: "time_derivative", "transport_q", "transport_p", "correction"
    terms: Dict[str, float] = field(default_factory=dict)
    included_cells: int = 0
    excluded_cells: int = 0
    include_correction: bool = True


def _rms(values: np.ndarray) -> float:
    return float(np.sqrt(np.mean(np.square(values)))) if values.size else 0.0


def _derivatives(values: np.ndarray, dq: float, dp: float, periodic_q: bool):
    """Central first derivatives and the symmetric cross derivative

    Boundary rows are filled by wrapping and must be masked out unless the
    axis is periodic.
    """
    plus_q = np.roll(values, -1, axis=0)
    minus_q = np.roll(values, 1, axis=0)
    d_q = (plus_q - minus_q) / (2.0 * dq)
    d_p = (np.roll(values, -1, axis=1) - np.roll(values, 1, axis=1)) / (2.0 * dp)
    d_qp = (
        np.roll(plus_q, -1, axis=1)
        - np.roll(plus_q, 1, axis=1)
        - np.roll(minus_q, -1, axis=1)
        + np.roll(minus_q, 1, axis=1)
    ) / (4.0 * dq * dp)
    return d_q, d_p, d_qp


def husimi_pde_residual(
    state_before: QuantumState,
    state_after: QuantumState,
    dt: float,
    params: DimerParams,
    delta: float,
    grid_spec: GridSpec,
    include_correction: bool = True,
) -> ResidualReport:
    """Residual of the Husimi evolution equation over one short time step

    Args:
        dt: time between the two states, at most 1e-2
        delta: detuning at the midpoint of the step
        grid_spec: flat-chart grid; a window grid is the usual choice
        include_correction: drop the second-derivative term when False
    """
    if not 0.0 < dt <= MAX_TIME_STEP:
        raise ValueError(f"dt={dt} must lie in (0, {MAX_TIME_STEP}]")
    if grid_spec.chart != "flat":
        raise ValueError("The Husimi evolution equation is checked in the flat chart")
    p0 = params.p0
    q_axis, p_axis = grid_spec.axes(p0)
    q, p = np.meshgrid(q_axis, p_axis, indexing="ij")
    dq, dp = grid_spec.spacing(p0)

    before = husimi_on_flat(state_before, q, p, p0)
    after = husimi_on_flat(state_after, q, p, p0)
    time_derivative = (after - before) / dt
    d_q, d_p, d_qp = _derivatives(0.5 * (before + after), dq, dp, grid_spec.full_q)

    qdot, pdot = flow_qp(q, p, params, delta)
    transport_q = -qdot * d_q
    transport_p = -pdot * d_p
    correction = -params.interaction * (p0 * p0 - p * p) / p0 * d_qp

    mask = np.abs(p) < (1.0 - POLE_MARGIN) * p0
    pole_cells = int(np.count_nonzero(~mask))
    mask[:, 0] = mask[:, -1] = False
    if not grid_spec.full_q:
        mask[0, :] = mask[-1, :] = False
    excluded = int(np.count_nonzero(~mask))
    if pole_cells:
        logger.debug(f"Excluded {pole_cells} cells near the chart poles")

    rhs = transport_q + transport_p
    if include_correction:
        rhs = rhs + correction
    lhs = time_derivative[mask]
    rhs = rhs[mask]
    absolute = _rms(lhs - rhs)
    scale = max(_rms(lhs), _rms(rhs))
    relative = absolute / scale if scale > 0 else 0.0
    terms = {
        "time_derivative": _rms(lhs),
        "transport_q": _rms(transport_q[mask]),
        "transport_p": _rms(transport_p[mask]),
        "correction": _rms(correction[mask]),
    }
    return ResidualReport(relative, absolute, terms, int(lhs.size), excluded, include_correction)
