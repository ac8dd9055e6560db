"""Classical ensembles and their evolution by the method of characteristics

Points carry fixed weights; under the Liouville flow the density is constant
along characteristics, so evolving the ensemble means moving the points.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import RegularGridInterpolator

from ..common.errors import EnsembleLossError, IntegratorError, SamplingError
from ..common.seeding import MICROCANONICAL_STREAM, SAMPLE_STREAM, rng_stream
from ..model.charts import from_bloch_vector, rotate_coords
from ..model.params import DimerParams, SweepProtocol, split_at_turn
from ..phasespace.grid import HusimiGrid, chart_to_flat
from .meanfield import bloch_rhs, bloch_state, energy_qp

logger = logging.getLogger(__name__)

MIN_ACCEPTANCE = 1e-4
# Proposals drawn before a low acceptance rate is judged pathological
MIN_PROPOSALS_FOR_VERDICT = 1_000_000
MAX_WEIGHT_LOSS = 0.01
# Relative deviation of |s| from p0 after which a trajectory counts as failed
RADIUS_DRIFT_LIMIT = 1e-3
DEFAULT_RTOL = 1e-10


@dataclass(frozen=True)
class Ensemble:
    q: np.ndarray = field(repr=False)
    p: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    p0: float
    time: float = 0.0
    provenance: Dict[str, Any] = field(default_factory=dict)
    failed: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        p = np.asarray(self.p, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if not q.shape == p.shape == weights.shape or q.ndim != 1:
            raise ValueError("q, p and weights must be 1-D arrays of equal length")
        if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-12:
            raise ValueError("Ensemble weights must be non-negative and sum to 1")
        if np.any(np.abs(p) > self.p0 * (1.0 + 1e-12)):
            raise ValueError(f"Ensemble points must satisfy |p| <= p0 = {self.p0}")
        failed = (
            np.zeros(q.size, dtype=bool) if self.failed is None else np.asarray(self.failed, dtype=bool)
        )
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "failed", failed)

    @classmethod
    def equal_weights(cls, q, p, p0: float, time: float = 0.0, provenance=None) -> "Ensemble":
        q = np.asarray(q, dtype=float)
        return cls(q, p, np.full(q.size, 1.0 / q.size), p0, time, dict(provenance or {}))

    @property
    def size(self) -> int:
        return self.q.size

    @property
    def lost_weight(self) -> float:
        return float(self.weights[self.failed].sum())

    def rotated(self) -> Tuple[np.ndarray, np.ndarray]:
        return rotate_coords(self.q, self.p, self.p0)

    def energies(self, params: DimerParams, delta: float) -> np.ndarray:
        return energy_qp(self.q, self.p, params, delta)

    def mean_energy(self, params: DimerParams, delta: float) -> float:
        alive = ~self.failed
        w = self.weights[alive]
        return float(np.dot(w, self.energies(params, delta)[alive]) / w.sum())

    def energy_spread(self, params: DimerParams, delta: float) -> float:
        alive = ~self.failed
        w = self.weights[alive] / self.weights[alive].sum()
        e = self.energies(params, delta)[alive]
        mean = np.dot(w, e)
        return float(np.sqrt(np.dot(w, (e - mean) ** 2)))


def _padded_interpolator(grid: HusimiGrid) -> Tuple[RegularGridInterpolator, Tuple, Tuple]:
    """Bilinear interpolator that covers the whole grid domain

    Cell-centred nodes stop half a cell short of the domain edges; the q axis
    is padded periodically on a full chart, the p axis (and a windowed q axis)
    with edge values.
    """
    (q_lo, q_hi), (p_lo, p_hi) = grid.spec.bounds(grid.p0)
    values = grid.values
    if grid.spec.full_q:
        dq = grid.q_axis[1] - grid.q_axis[0]
        q_nodes = np.concatenate(([grid.q_axis[0] - dq], grid.q_axis, [grid.q_axis[-1] + dq]))
        values = np.vstack((values[-1:], values, values[:1]))
    else:
        q_nodes = np.concatenate(([q_lo], grid.q_axis, [q_hi]))
        values = np.vstack((values[:1], values, values[-1:]))
    p_nodes = np.concatenate(([p_lo], grid.p_axis, [p_hi]))
    values = np.hstack((values[:, :1], values, values[:, -1:]))
    interp = RegularGridInterpolator((q_nodes, p_nodes), values, method="linear")
    return interp, (q_lo, q_hi), (p_lo, p_hi)


def sample_from_husimi(grid: HusimiGrid, count: int, seed: int, stream: int = 0) -> Ensemble:
    """Rejection-sample count points from the bilinear interpolant of the grid

    Args:
        seed: run seed, mandatory
        stream: scan index, so parallel jobs draw independent numbers
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    rng = rng_stream(seed, stream, SAMPLE_STREAM)
    interp, (q_lo, q_hi), (p_lo, p_hi) = _padded_interpolator(grid)
    ceiling = float(grid.values.max())
    if ceiling <= 0:
        raise SamplingError("Cannot sample from a grid that is zero everywhere")

    accepted_q: List[np.ndarray] = []
    accepted_p: List[np.ndarray] = []
    accepted = proposals = 0
    while accepted < count:
        batch = max(4096, 2 * (count - accepted))
        q_prop = rng.uniform(q_lo, q_hi, batch)
        p_prop = rng.uniform(p_lo, p_hi, batch)
        density = interp(np.column_stack((q_prop, p_prop)))
        keep = rng.uniform(0.0, ceiling, batch) < density
        accepted_q.append(q_prop[keep])
        accepted_p.append(p_prop[keep])
        accepted += int(keep.sum())
        proposals += batch
        rate = accepted / proposals
        if proposals >= MIN_PROPOSALS_FOR_VERDICT and rate < MIN_ACCEPTANCE:
            raise SamplingError(
                f"Acceptance rate {rate:.2e} after {proposals} proposals is below {MIN_ACCEPTANCE}"
            )
    q_chart = np.concatenate(accepted_q)[:count]
    p_chart = np.concatenate(accepted_p)[:count]
    q, p = chart_to_flat(q_chart, p_chart, grid.chart, grid.p0)
    logger.debug(f"Sampled {count} points with acceptance rate {accepted / proposals:.3f}")
    provenance = {
        "source": "husimi",
        "seed": int(seed),
        "stream": int(stream),
        "grid": grid.spec.to_dict(),
        "acceptance_rate": accepted / proposals,
    }
    return Ensemble.equal_weights(q, p, grid.p0, provenance=provenance)


def microcanonical_ensemble(
    params: DimerParams,
    delta: float,
    energy_band: Tuple[float, float],
    count: int,
    seed: int,
    stream: int = 0,
    time: float = 0.0,
) -> Ensemble:
    """Points uniform in phase space area within an energy band

    Uniform area in (q, p) is uniform on the Bloch sphere, so proposals are
    drawn uniformly in q and p and kept when their energy is inside the band.

    Args:
        time: protocol time the ensemble belongs to, -T for a sweep start
    """
    lower, upper = energy_band
    if not lower < upper:
        raise ValueError("Energy band must have lower < upper")
    rng = rng_stream(seed, stream, MICROCANONICAL_STREAM)
    p0 = params.p0
    qs: List[np.ndarray] = []
    ps: List[np.ndarray] = []
    accepted = proposals = 0
    while accepted < count:
        batch = max(4096, 4 * (count - accepted))
        q = rng.uniform(-np.pi, np.pi, batch)
        p = rng.uniform(-p0, p0, batch)
        e = energy_qp(q, p, params, delta)
        keep = (e >= lower) & (e < upper)
        qs.append(q[keep])
        ps.append(p[keep])
        accepted += int(keep.sum())
        proposals += batch
        rate = accepted / proposals
        if proposals >= MIN_PROPOSALS_FOR_VERDICT and rate < MIN_ACCEPTANCE:
            raise SamplingError(f"Energy band {energy_band} has acceptance rate {rate:.2e}")
    provenance = {
        "source": "microcanonical",
        "seed": int(seed),
        "stream": int(stream),
        "delta": float(delta),
        "energy_band": [float(lower), float(upper)],
    }
    return Ensemble.equal_weights(
        np.concatenate(qs)[:count], np.concatenate(ps)[:count], p0, time=float(time), provenance=provenance
    )


def _solve(vectors, t_from, t_to, t_eval, params, protocol, rtol):
    count = vectors.shape[1]
    slope = (protocol.delta_turn - protocol.delta_initial) / protocol.half_time

    def rhs(t, y):
        delta = protocol.delta_turn - slope * abs(t)
        return bloch_rhs(y.reshape(3, count), params, delta).ravel()

    return solve_ivp(
        rhs,
        (t_from, t_to),
        vectors.ravel(),
        method="DOP853",
        t_eval=t_eval,
        rtol=rtol,
        atol=rtol * params.p0,
    )


def _integrate_embedding(vectors, t_from, t_to, samples, params, protocol, rtol):
    """Integrate stacked Bloch vectors from t_from to t_to, recording at samples

    Points are integrated together. When the joint solve fails each point is
    retried on its own and only the ones that fail again come back as NaN,
    as do points that entered already non-finite.
    """
    samples = np.asarray(samples, dtype=float)
    ends_on_sample = samples.size > 0 and samples[-1] == t_to
    t_eval = samples if ends_on_sample else np.append(samples, t_to)
    count = vectors.shape[1]
    columns = np.full((t_eval.size, 3, count), np.nan)
    live = np.flatnonzero(np.all(np.isfinite(vectors), axis=0))
    if live.size == 0:
        return columns[-1], list(columns[: samples.size])

    sol = _solve(vectors[:, live], t_from, t_to, t_eval, params, protocol, rtol)
    if sol.status == 0:
        columns[:, :, live] = sol.y.T.reshape(-1, 3, live.size)
        return columns[-1], list(columns[: samples.size])

    logger.warning(
        f"Joint integration of {live.size} points failed between {t_from} and {t_to} "
        f"({sol.message}), retrying point by point"
    )
    for j in live:
        single = _solve(vectors[:, j : j + 1], t_from, t_to, t_eval, params, protocol, rtol)
        if single.status == 0:
            columns[:, :, j] = single.y.T
        else:
            logger.debug(f"Point {j} failed on its own: {single.message}")
    failures = int(np.sum(~np.isfinite(columns[-1, 0, live])))
    if failures == live.size:
        raise IntegratorError(
            f"Ensemble integration failed between {t_from} and {t_to} for every point: {sol.message}"
        )
    logger.warning(f"{failures} of {live.size} points could not be integrated")
    return columns[-1], list(columns[: samples.size])


def evolve_ensemble(
    ens: Ensemble,
    params: DimerParams,
    protocol: SweepProtocol,
    checkpoints: Sequence[float],
    rtol: float = DEFAULT_RTOL,
) -> List[Ensemble]:
    """Snapshots of the ensemble at every checkpoint

    All points are integrated together in the Bloch embedding, which has no
    chart singularities. Checkpoints must be monotone and may run backwards
    in time from ens.time. Weights are never rescaled; points the integrator
    cannot carry, or whose Bloch radius drifts, are marked failed.

    Raises:
        EnsembleLossError: more than 1% of the weight failed
    """
    times = np.asarray(checkpoints, dtype=float)
    if times.size == 0:
        return []
    direction = 1.0 if times[-1] >= ens.time else -1.0
    if np.any(direction * np.diff(np.concatenate(([ens.time], times))) < 0):
        raise ValueError("Checkpoints must be monotone in the direction of integration")
    protocol.check_time(np.concatenate(([ens.time], times)))

    vectors = bloch_state(ens.q, ens.p, params)
    snapshots: List[np.ndarray] = []
    idx = 0
    while idx < times.size and times[idx] == ens.time:
        snapshots.append(vectors)
        idx += 1
    for seg_start, seg_end in split_at_turn(ens.time, float(times[-1])):
        if seg_end == seg_start:
            continue
        stop = idx
        while stop < times.size and direction * (times[stop] - seg_end) <= 0:
            stop += 1
        vectors, recorded = _integrate_embedding(
            vectors, seg_start, seg_end, times[idx:stop], params, protocol, rtol
        )
        snapshots.extend(recorded)
        idx = stop

    results: List[Ensemble] = []
    failed = ens.failed.copy()
    for t_k, snap in zip(times, snapshots):
        radius = np.linalg.norm(snap, axis=0)
        bad = ~np.isfinite(radius) | (np.abs(radius - params.p0) > RADIUS_DRIFT_LIMIT * params.p0)
        if np.any(bad & ~failed):
            logger.warning(f"{int(np.sum(bad & ~failed))} trajectories failed by t={t_k:.6g}")
        failed = failed | bad
        lost = float(ens.weights[failed].sum())
        if lost > MAX_WEIGHT_LOSS:
            raise EnsembleLossError(f"{lost:.2%} of the ensemble weight lost by t={t_k:.6g}")
        safe = np.where(np.isfinite(snap), snap, 0.0)
        q, p = from_bloch_vector(safe[0], safe[1], safe[2], params.p0)
        results.append(replace(ens, q=q, p=p, time=float(t_k), failed=failed.copy()))
    logger.debug(f"Evolved {ens.size} points through {times.size} checkpoints")
    return results
