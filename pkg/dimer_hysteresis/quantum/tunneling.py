"""Sweep times needed to follow the ground state adiabatically

Staying in the instantaneous ground state across the self-trapping
transition requires all N particles to tunnel collectively, so the required
sweep time grows steeply with N. These helpers measure it with the
adiabatic-frame propagator, which makes very slow sweeps affordable for
small N.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from ..model.params import DimerParams, SweepProtocol
from .hamiltonian import spectrum
from .populations import track_populations
from .propagation import DEFAULT_NORM_TOLERANCE, propagate_checkpoints

logger = logging.getLogger(__name__)

DEFAULT_BRACKET = (1e1, 1e9)
DEFAULT_CHECKPOINTS = 33


@dataclass(frozen=True)
class TunnelingTime:
    total_particles: int
    # Smallest half sweep time found to keep the ground state, nan if none in the bracket
    half_time: float
    retention: float
    bracket: Tuple[float, float]

    def to_dict(self):
        return {
            "total_particles": self.total_particles,
            "half_time": None if math.isnan(self.half_time) else self.half_time,
            "retention": self.retention,
            "bracket": list(self.bracket),
        }


def ground_state_retention(
    params: DimerParams,
    protocol: SweepProtocol,
    checkpoints: int = DEFAULT_CHECKPOINTS,
    tolerance: float = DEFAULT_NORM_TOLERANCE,
) -> float:
    """Lowest population of the continuously tracked ground state over the full cycle"""
    times = protocol.checkpoints(checkpoints)
    deltas = protocol.detuning(times)
    start = spectrum(params, protocol.delta_initial).eigenstate(1)
    states = propagate_checkpoints(start, params, protocol, times, tolerance=tolerance, method="adiabatic")
    track = track_populations(states, params, deltas)
    retention = float(np.min(track.populations[:, 0]))
    logger.debug(
        f"N={params.total_particles}, T={protocol.half_time:.4g}: ground state retention {retention:.6f}"
    )
    return retention


def required_sweep_time(
    params_list: Sequence[DimerParams],
    protocol: SweepProtocol,
    threshold: float = 0.99,
    bracket: Tuple[float, float] = DEFAULT_BRACKET,
    rel_tol: float = 0.05,
) -> List[TunnelingTime]:
    """Smallest half sweep time keeping the ground state above threshold, per parameter set

    Bisection runs on log T, assuming retention grows with the sweep time.
    Only protocol's detunings are used; its half_time is replaced.
    """
    if not 0 < threshold < 1:
        raise ValueError("threshold must lie in (0, 1)")
    lo, hi = bracket
    if not 0 < lo < hi:
        raise ValueError(f"Invalid sweep time bracket {bracket}")
    results = []
    for params in params_list:
        top = ground_state_retention(params, protocol.with_half_time(hi))
        if top < threshold:
            logger.warning(
                f"N={params.total_particles}: retention {top:.4f} at T={hi:.3g} stays below {threshold}"
            )
            results.append(TunnelingTime(params.total_particles, math.nan, top, bracket))
            continue
        bottom = ground_state_retention(params, protocol.with_half_time(lo))
        if bottom >= threshold:
            results.append(TunnelingTime(params.total_particles, lo, bottom, bracket))
            continue
        low, high, kept = math.log(lo), math.log(hi), top
        while high - low > math.log1p(rel_tol):
            mid = 0.5 * (low + high)
            value = ground_state_retention(params, protocol.with_half_time(math.exp(mid)))
            if value >= threshold:
                high, kept = mid, value
            else:
                low = mid
        found = math.exp(high)
        logger.info(f"N={params.total_particles}: ground state followed for T >= {found:.4g}")
        results.append(TunnelingTime(params.total_particles, found, kept, bracket))
    return results
