"""Single mean-field trajectories with chart switching

The flat chart (q, p) is singular at |p| = p0 and the rotated chart (q', p')
at |p'| = p0. Integration runs in whichever chart keeps the point away from
its poles and hands over with a terminal event once the imbalance of the
current chart passes SWITCH_FRACTION * p0.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from ..common.errors import IntegratorError
from ..model.charts import PhasePoint, rotate_coords, unrotate_coords
from ..model.params import DimerParams, SweepProtocol, split_at_turn
from .meanfield import bloch_rhs, bloch_state, flow_qp

logger = logging.getLogger(__name__)

SWITCH_FRACTION = 0.9
DEFAULT_RTOL = 1e-10
# Chart hand-overs allowed without progress in time before declaring a pole trap
MAX_STALLED_SWITCHES = 8


@dataclass
class Trajectory:
    times: np.ndarray
    q: np.ndarray = field(repr=False)
    p: np.ndarray = field(repr=False)
    chart_switches: int = 0

    @property
    def final(self) -> PhasePoint:
        return PhasePoint(float(self.q[-1]), float(self.p[-1]))


def _flat_rhs(params: DimerParams, delta_of: Callable[[float], float]):
    def rhs(t, y):
        dq, dp = flow_qp(y[0], y[1], params, delta_of(t))
        return [dq, dp]

    return rhs


def _rotated_rhs(params: DimerParams, delta_of: Callable[[float], float]):
    p0 = params.p0

    def rhs(t, y):
        q_rot, p_rot = y
        r = np.sqrt(max(p0 * p0 - p_rot * p_rot, 0.0))
        x, z = r * np.cos(q_rot), r * np.sin(q_rot)
        vec = np.array([x, -p_rot, z])
        dx, dy, dz = bloch_rhs(vec, params, delta_of(t))
        return [(x * dz - z * dx) / (r * r), -dy]

    return rhs


def _pole_event(p0: float):
    def event(t, y):
        return SWITCH_FRACTION * p0 - abs(y[1])

    event.terminal = True
    event.direction = -1
    return event


def _to_flat(chart: str, y, p0: float):
    if chart == "flat":
        return y[0], y[1]
    return unrotate_coords(y[0], y[1], p0)


def _switch(chart: str, y, p0: float):
    if chart == "flat":
        return "rotated", np.array(rotate_coords(y[0], y[1], p0), dtype=float)
    return "flat", np.array(unrotate_coords(y[0], y[1], p0), dtype=float)


def _delta_function(protocol: SweepProtocol) -> Callable[[float], float]:
    slope = (protocol.delta_turn - protocol.delta_initial) / protocol.half_time

    def delta_of(t: float) -> float:
        return protocol.delta_turn - slope * abs(t)

    return delta_of


def integrate_trajectory(
    pt: PhasePoint,
    params: DimerParams,
    protocol: SweepProtocol,
    t_start: float,
    t_end: float,
    tolerance: float = DEFAULT_RTOL,
    t_eval: Optional[Sequence[float]] = None,
) -> Trajectory:
    """Integrate Hamilton's equations with delta = detuning_at(t)

    Runs forwards or backwards in time. Without t_eval only the end points
    are recorded.

    Raises:
        IntegratorError: step-size underflow or a pole trap
    """
    p0 = params.p0
    protocol.check_time(np.array([t_start, t_end]))
    if abs(pt.p) >= p0:
        raise ValueError("Trajectories must start away from the chart poles")
    delta_of = _delta_function(protocol)
    rhs = {"flat": _flat_rhs(params, delta_of), "rotated": _rotated_rhs(params, delta_of)}
    event = _pole_event(p0)
    direction = 1.0 if t_end >= t_start else -1.0
    samples = (
        np.asarray(t_eval, dtype=float) if t_eval is not None else np.array([t_start, t_end])
    )

    chart = "flat"
    y = np.array([float(pt.q), float(pt.p)])
    if abs(y[1]) > SWITCH_FRACTION * p0:
        chart, y = _switch(chart, y, p0)

    out_q = np.full(samples.size, np.nan)
    out_p = np.full(samples.size, np.nan)
    switches = 0
    stalled = 0
    for seg_start, seg_end in split_at_turn(t_start, t_end):
        t = seg_start
        while direction * (seg_end - t) > 0:
            sol = solve_ivp(
                rhs[chart],
                (t, seg_end),
                y,
                method="DOP853",
                rtol=tolerance,
                atol=tolerance * p0,
                events=event,
                dense_output=True,
            )
            if sol.status == -1:
                raise IntegratorError(f"Trajectory integration failed at t={t:.6g}: {sol.message}")
            t_reached = sol.t[-1]
            lo, hi = sorted((t, t_reached))
            inside = (samples >= lo) & (samples <= hi)
            if np.any(inside):
                values = sol.sol(samples[inside])
                out_q[inside], out_p[inside] = _to_flat(chart, values, p0)
            if sol.status == 1:
                stalled = stalled + 1 if t_reached == t else 0
                if stalled > MAX_STALLED_SWITCHES:
                    raise IntegratorError(f"Pole trap at t={t_reached:.6g}")
                y = sol.y_events[0][0]
                chart, y = _switch(chart, y, p0)
                switches += 1
            else:
                y = sol.y[:, -1]
            t = t_reached
    if np.any(np.isnan(out_q)):
        raise IntegratorError("Trajectory did not reach every requested time")
    logger.debug(f"Trajectory over [{t_start}, {t_end}] used {switches} chart switches")
    out_q = np.mod(out_q + np.pi, 2.0 * np.pi) - np.pi
    return Trajectory(samples, out_q, out_p, switches)


def orbital_period(
    pt: PhasePoint, params: DimerParams, delta: float, tolerance: float = DEFAULT_RTOL
) -> float:
    """Period of the frozen-delta orbit through pt

    Integrated in the Bloch embedding. The period is the first return to the
    plane through pt orthogonal to the initial velocity, crossed in the
    direction of motion and located by the event root finder.
    """
    p0 = params.p0
    start = bloch_state(pt.q, pt.p, params)
    velocity = bloch_rhs(start[:, None], params, delta)[:, 0]
    if np.linalg.norm(velocity) < 1e-12 * max(1.0, p0):
        raise ValueError("Fixed points have no orbital period")

    def rhs(t, y):
        return bloch_rhs(y[:, None], params, delta)[:, 0]

    def section(t, y):
        return float(np.dot(y - start, velocity))

    section.direction = 1
    section.terminal = True

    # Leave the section before arming the event; no orbit closes this fast
    max_rate = params.omega + 2.0 * abs(params.interaction) * p0 + abs(delta)
    departure = 1e-2 / max_rate
    first = solve_ivp(rhs, (0.0, departure), start, method="DOP853", rtol=tolerance, atol=tolerance * p0)
    # Periods diverge only on the separatrix, where no finite horizon suffices
    horizon = 1e4 / params.omega
    sol = solve_ivp(
        rhs,
        (departure, horizon),
        first.y[:, -1],
        method="DOP853",
        rtol=tolerance,
        atol=tolerance * p0,
        events=section,
    )
    if sol.status != 1:
        raise IntegratorError("No return to the starting section within the integration horizon")
    return float(sol.t_events[0][0])
