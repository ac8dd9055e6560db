"""Return probability in the quasi-static limit from separatrix area growth

An ensemble starting on a contour of action J in the upper lobe keeps J until
the shrinking upper lobe reaches it, at the detuning where A_u = J. It then
spills into the growing lower lobe and meets the separatrix again at the same
detuning on the way back. There it is shared between the upper lobe and the
outer region in proportion to their area growth rates, and only the upper
lobe share returns to the initial energy shell.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

from scipy.optimize import brentq

from ..model.params import DimerParams, SweepProtocol
from .meanfield import energy_qp
from .separatrix import (
    basin_sense,
    enclosed_action,
    fixed_points,
    separatrix_info,
    separatrix_window,
    CENTER,
)

logger = logging.getLogger(__name__)

DEFAULT_DELTA_STEP = 1e-3
# Relative disagreement between the step and half-step derivatives that is reported
DERIVATIVE_CHECK = 1e-2
# Keep away from the saddle-node detunings where the saddle is a double root
WINDOW_MARGIN = 1e-7


@dataclass(frozen=True)
class KruskalPrediction:
    return_probability: float
    crossed: bool
    crossing_delta_forward: Optional[float] = None
    crossing_delta_backward: Optional[float] = None
    # Adiabatic invariant of the band's central contour
    action: float = math.nan
    # dA/dt of every region at the backward crossing
    rates: Dict[str, float] = field(default_factory=dict)
    reason: str = ""

    def to_dict(self):
        return {
            "return_probability": self.return_probability,
            "crossed": self.crossed,
            "crossing_delta_forward": self.crossing_delta_forward,
            "crossing_delta_backward": self.crossing_delta_backward,
            "action": self.action,
            "rates": dict(self.rates),
            "reason": self.reason,
        }


def _no_crossing(reason: str, action: float = math.nan) -> KruskalPrediction:
    logger.info(f"No separatrix crossing: {reason}")
    return KruskalPrediction(1.0, False, action=action, reason=reason)


def _areas(params: DimerParams, delta: float) -> Tuple[float, float, float]:
    info = separatrix_info(params, delta)
    if info is None:
        raise ValueError(f"No separatrix at delta={delta}")
    return info.area_upper, info.area_lower, info.area_outer


def area_derivatives(
    params: DimerParams, delta: float, step: float = DEFAULT_DELTA_STEP
) -> Dict[str, float]:
    """dA/d(delta) of the three regions by centred differences

    The result is checked against the half-step estimate and the two are
    combined by Richardson extrapolation.
    """

    def centred(h):
        plus = _areas(params, delta + h)
        minus = _areas(params, delta - h)
        return [(a - b) / (2.0 * h) for a, b in zip(plus, minus)]

    coarse = centred(step)
    fine = centred(0.5 * step)
    names = ("upper", "lower", "outer")
    result = {}
    for name, d_coarse, d_fine in zip(names, coarse, fine):
        scale = max(abs(d_fine), 1e-12)
        if abs(d_coarse - d_fine) > DERIVATIVE_CHECK * scale:
            logger.warning(
                f"dA_{name}/d(delta) at {delta:.6g} not converged: {d_coarse:.6g} vs {d_fine:.6g}"
            )
        result[name] = (4.0 * d_fine - d_coarse) / 3.0
    return result


def _initial_action(params: DimerParams, delta: float, energy: float) -> Optional[float]:
    """Action of the contour at energy around the would-be upper lobe centre, None if elsewhere"""
    sense = basin_sense(params)
    info = separatrix_info(params, delta)
    if info is not None:
        upper_center_energy = energy_qp(info.upper_center.q, info.upper_center.p, params, delta)
        inside = sense * (energy - info.separatrix_energy) < 0
        above_bottom = sense * (energy - upper_center_energy) >= 0
        if not (inside and above_bottom):
            return None
        return enclosed_action(params, delta, energy, "upper")
    saddle_line = 0.0 if sense > 0 else math.pi
    centers = [fp for fp in fixed_points(params, delta) if fp.stability == CENTER and fp.point.q == saddle_line]
    if not centers or centers[0].point.p <= 0:
        return None
    if sense * (energy - centers[0].energy) < 0:
        return None
    return enclosed_action(params, delta, energy, "whole")


def kruskal_prediction(
    initial_energy_band: Tuple[float, float],
    params: DimerParams,
    protocol: SweepProtocol,
    delta_step: float = DEFAULT_DELTA_STEP,
) -> KruskalPrediction:
    """Quasi-static return probability of an ensemble starting in the upper lobe

    Args:
        initial_energy_band: (lower, upper) mean-field energies at the initial
            detuning; the central contour sets the adiabatic invariant
        delta_step: centred-difference step for the area derivatives
    """
    lower, upper = initial_energy_band
    energy = 0.5 * (lower + upper)
    window = separatrix_window(params)
    if window is None:
        return _no_crossing("subcritical interaction, no separatrix")
    delta_i, delta_0 = protocol.delta_initial, protocol.delta_turn

    action = _initial_action(params, delta_i, energy)
    if action is None:
        return _no_crossing("initial band is not inside the upper lobe")

    margin = WINDOW_MARGIN * max(1.0, window[1] - window[0])
    start = max(delta_i, window[0] + margin)
    end = min(delta_0, window[1] - margin)
    if start >= end:
        return _no_crossing("the sweep never reaches the separatrix window", action)

    def excess(delta):
        return _areas(params, delta)[0] - action

    if excess(start) < 0:
        return _no_crossing("the band does not fit the upper lobe when the separatrix forms", action)
    if excess(end) > 0:
        return _no_crossing("the upper lobe never shrinks to the band within the sweep", action)
    crossing = brentq(excess, start, end, xtol=1e-12 * max(1.0, abs(end - start)))

    step = min(delta_step, 0.5 * (crossing - window[0]), 0.5 * (window[1] - crossing))
    derivatives = area_derivatives(params, crossing, step)
    backward_rate = -(delta_0 - delta_i) / protocol.half_time
    rates = {name: value * backward_rate for name, value in derivatives.items()}
    growing_upper = max(rates["upper"], 0.0)
    growing_outer = max(rates["outer"], 0.0)
    if growing_upper + growing_outer <= 0:
        logger.warning(f"Neither the upper lobe nor the outer region grows at delta={crossing:.6g}")
        probability = 1.0
    else:
        probability = growing_upper / (growing_upper + growing_outer)
    logger.debug(
        f"Separatrix crossing at delta={crossing:.6g}, action {action:.6g}, "
        f"return probability {probability:.4f}"
    )
    return KruskalPrediction(
        probability,
        True,
        crossing_delta_forward=crossing,
        crossing_delta_backward=crossing,
        action=action,
        rates=rates,
        reason="separatrix crossed twice",
    )
