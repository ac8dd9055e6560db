import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.special import entr

from ..model.params import DimerParams
from .hamiltonian import Spectrum, spectrum
from .states import QuantumState, as_members

logger = logging.getLogger(__name__)


def populations_in(state: QuantumState, eigenvectors: np.ndarray) -> np.ndarray:
    """Weight-averaged |<v_k|psi>|^2 for the columns of eigenvectors"""
    weights, members = as_members(state)
    overlaps = np.abs(eigenvectors.T @ members) ** 2
    return overlaps @ weights


def adiabatic_populations(
    state: QuantumState,
    params: DimerParams,
    delta: float,
    spec: Optional[Spectrum] = None,
) -> np.ndarray:
    """Populations of the adiabatic eigenstates at delta, ascending in energy"""
    spec = spec if spec is not None else spectrum(params, delta)
    pops = populations_in(state, spec.eigenvectors)
    total = pops.sum()
    if abs(total - 1.0) > 1e-9:
        logger.warning(f"Adiabatic populations sum to {total:.12f}")
    return pops


def population_entropy(populations: np.ndarray) -> float:
    """-sum p log p with 0 log 0 = 0"""
    return float(np.sum(entr(np.clip(populations, 0.0, None))))


@dataclass
class PopulationTrack:
    deltas: np.ndarray
    # populations[i, k]: population of the level that continues level k at deltas[0]
    populations: np.ndarray = field(repr=False)
    # labels[i, k]: ascending-energy index (0-based) that level k occupies at deltas[i]
    labels: np.ndarray = field(repr=False)


class AdiabaticTracker:
    """Follows eigenstates through successive detunings by maximal overlap

    Near-degenerate levels can swap their energy order between two
    checkpoints; matching on overlaps rather than on index keeps each label on
    one continuous level.
    """

    def __init__(self, params: DimerParams):
        self.params = params
        self.previous: Optional[np.ndarray] = None
        self.labels: Optional[np.ndarray] = None

    def update(self, spec: Spectrum) -> np.ndarray:
        """Column of spec.eigenvectors carrying each tracked label"""
        vectors = spec.eigenvectors
        if self.previous is None:
            self.labels = np.arange(vectors.shape[1])
        else:
            overlaps = np.abs(self.previous.T @ vectors)
            rows, cols = linear_sum_assignment(-overlaps)
            mapping = np.empty_like(cols)
            mapping[rows] = cols
            swapped = int(np.count_nonzero(mapping != np.arange(mapping.size)))
            if swapped:
                logger.debug(f"Overlap matching reordered {swapped} levels at delta={spec.delta:.6g}")
            self.labels = mapping[self.labels]
        self.previous = vectors
        return self.labels


def track_populations(
    states: Sequence[QuantumState],
    params: DimerParams,
    deltas: Sequence[float],
) -> PopulationTrack:
    """Adiabatic populations along a checkpoint sequence, labelled by continuity"""
    if len(states) != len(deltas):
        raise ValueError("One detuning is needed per state")
    tracker = AdiabaticTracker(params)
    pops: List[np.ndarray] = []
    labels: List[np.ndarray] = []
    for state, delta in zip(states, deltas):
        spec = spectrum(params, float(delta))
        current = tracker.update(spec)
        pops.append(populations_in(state, spec.eigenvectors)[current])
        labels.append(current.copy())
    return PopulationTrack(np.asarray(deltas, dtype=float), np.array(pops), np.array(labels))
