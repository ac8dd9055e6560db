"""Entropy traces through a sweep cycle

Three entropies are recorded side by side at every checkpoint: the Wehrl
entropy of the Husimi function, the diagonal entropy of the adiabatic
populations and the coarse-grained entropy of the classical ensemble that
starts from the initial Husimi function.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Union

import numpy as np

from ..classical.coarse import classical_entropy, coarse_grain
from ..classical.ensemble import Ensemble, evolve_ensemble, sample_from_husimi
from ..common.dispatch import gather_ordered
from ..model.params import DimerParams, SweepProtocol
from ..phasespace.entropy import wehrl_entropy
from ..phasespace.grid import GridSpec
from ..phasespace.husimi import husimi_grid
from ..quantum.populations import adiabatic_populations, population_entropy
from ..quantum.propagation import DEFAULT_NORM_TOLERANCE, propagate_checkpoints
from ..quantum.states import FockVector, MixedState, QuantumState, as_members

logger = logging.getLogger(__name__)

CURVES = ("wehrl", "diagonal", "classical")


def diagonal_entropy(state: QuantumState, params: DimerParams, delta: float) -> float:
    """-sum p_n log p_n over the adiabatic populations at delta

    This is the von Neumann entropy of the infinite-time average of the
    density matrix at frozen delta, without building that matrix.
    """
    return population_entropy(adiabatic_populations(state, params, delta))


@dataclass(frozen=True)
class TraceOptions:
    grid_spec: GridSpec = GridSpec()
    samples: int = 2000
    seed: int = 0
    # Coarse-graining shells, each 2 pi N / band_count in area
    band_count: int = 40
    wehrl: bool = True
    diagonal: bool = True
    classical: bool = True
    # Shift curves to the diagonal entropy at t = -T for mixed initial states
    align: bool = True
    tolerance: float = DEFAULT_NORM_TOLERANCE
    max_workers: Optional[int] = None

    def to_dict(self):
        return {
            "grid": self.grid_spec.to_dict(),
            "samples": self.samples,
            "seed": self.seed,
            "band_count": self.band_count,
            "curves": [name for name in CURVES if getattr(self, name)],
            "align": self.align,
            "tolerance": self.tolerance,
        }


@dataclass
class EntropyTrace:
    times: np.ndarray
    deltas: np.ndarray
    wehrl: Optional[np.ndarray] = None
    diagonal: Optional[np.ndarray] = None
    classical: Optional[np.ndarray] = None
    # Additive constants already applied to each curve
    alignment_offsets: Dict[str, float] = field(default_factory=dict)

    def curves(self) -> Dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in CURVES if getattr(self, name) is not None}

    def rows(self) -> List[List[float]]:
        curves = self.curves()
        return [
            [float(t), float(d)] + [float(values[i]) for values in curves.values()]
            for i, (t, d) in enumerate(zip(self.times, self.deltas))
        ]


def _propagate_member(job):
    """Process-pool entry point: all checkpoint amplitudes of one pure state"""
    amplitudes, params, protocol, times, tolerance = job
    states = propagate_checkpoints(FockVector(amplitudes), params, protocol, times, tolerance=tolerance)
    return np.column_stack([s.amplitudes for s in states])


async def _quantum_checkpoints(
    initial: QuantumState,
    params: DimerParams,
    protocol: SweepProtocol,
    times: np.ndarray,
    options: TraceOptions,
) -> List[QuantumState]:
    weights, members = as_members(initial)
    jobs = [(members[:, m].copy(), params, protocol, times, options.tolerance) for m in range(members.shape[1])]
    histories = await gather_ordered(_propagate_member, jobs, options.max_workers)
    states: List[QuantumState] = []
    for k in range(times.size):
        column = np.column_stack([history[:, k] for history in histories])
        if isinstance(initial, FockVector):
            states.append(FockVector(column[:, 0]))
        else:
            states.append(MixedState(weights, column))
    return states


async def entropy_trace(
    initial: Union[QuantumState, Ensemble],
    params: DimerParams,
    protocol: SweepProtocol,
    checkpoints: Union[int, Sequence[float]] = 200,
    options: TraceOptions = TraceOptions(),
) -> EntropyTrace:
    """Propagate the quantum state and its classical ensemble and record entropies

    Args:
        initial: quantum state at t = -T, or a classical ensemble alone
        checkpoints: count of evenly spaced times over [-T, T], or the times
    """
    times = (
        protocol.checkpoints(checkpoints)
        if isinstance(checkpoints, int)
        else np.asarray(checkpoints, dtype=float)
    )
    deltas = np.asarray(protocol.detuning(times), dtype=float)
    trace = EntropyTrace(times, deltas)
    quantum = not isinstance(initial, Ensemble)

    ensemble: Optional[Ensemble] = None
    if options.classical:
        if quantum:
            start_grid = husimi_grid(initial, params, options.grid_spec)
            ensemble = sample_from_husimi(start_grid, options.samples, options.seed)
        else:
            ensemble = initial
        ensemble = replace(ensemble, time=float(times[0]))
        snapshots = evolve_ensemble(ensemble, params, protocol, times)
        trace.classical = np.array(
            [
                classical_entropy(coarse_grain(snap, params, delta, options.band_count))
                for snap, delta in zip(snapshots, deltas)
            ]
        )

    if quantum and (options.wehrl or options.diagonal):
        states = await _quantum_checkpoints(initial, params, protocol, times, options)
        if options.wehrl:
            trace.wehrl = np.array(
                [wehrl_entropy(husimi_grid(s, params, options.grid_spec)).entropy for s in states]
            )
        if options.diagonal:
            trace.diagonal = np.array(
                [diagonal_entropy(s, params, delta) for s, delta in zip(states, deltas)]
            )

    if options.align and isinstance(initial, MixedState) and trace.diagonal is not None:
        reference = float(trace.diagonal[0])
        for name in ("wehrl", "classical"):
            values = getattr(trace, name)
            if values is not None:
                offset = reference - float(values[0])
                setattr(trace, name, values + offset)
                trace.alignment_offsets[name] = offset
        trace.alignment_offsets["diagonal"] = 0.0
    logger.info(
        f"Entropy trace over {times.size} checkpoints: "
        + ", ".join(f"{name} {values[0]:.4f} -> {values[-1]:.4f}" for name, values in trace.curves().items())
    )
    return trace
