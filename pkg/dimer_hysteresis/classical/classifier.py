"""Splitting final energies into the returned and the escaped sub-ensemble

After a full cycle the energies at the initial detuning fall into two groups.
The threshold is the midpoint of the largest gap in the sorted energies; the
gap counts as clear when it is at least as wide as both groups.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..common.errors import ClassifierError
from ..model.params import DimerParams
from .ensemble import Ensemble
from .meanfield import EnergyWindow

logger = logging.getLogger(__name__)

SEPARATED = "separated"
SINGLE = "single"
AMBIGUOUS = "ambiguous"


@dataclass(frozen=True)
class Classification:
    verdict: str
    # Midpoint of the largest gap (nan when fewer than two energies)
    threshold: float
    gap: float
    ratio: float
    returned_below: bool
    # Single cluster only: whether it is the returned one
    single_returned: bool = True

    @property
    def separated(self) -> bool:
        return self.verdict == SEPARATED

    @property
    def ambiguous(self) -> bool:
        return self.verdict == AMBIGUOUS

    @property
    def diagnostic(self) -> str:
        return f"{self.verdict}: largest gap {self.gap:.6g} at {self.threshold:.6g}, gap/width ratio {self.ratio:.3g}"

    def returned_window(self) -> EnergyWindow:
        if self.verdict == SINGLE:
            return EnergyWindow.everything() if self.single_returned else EnergyWindow(math.inf, math.inf)
        if self.returned_below:
            return EnergyWindow.below(self.threshold)
        return EnergyWindow.above(self.threshold)


class EnergyClassifier:
    """Gap-midpoint classifier anchored on the initial energy

    Args:
        reference_energy: mean energy of the initial state; the group closer
            to it is the returned one
        min_width: floor on the group widths, e.g. a few level spacings for
            discrete spectra
        population_cutoff: energies carrying less weight are ignored
    """

    def __init__(
        self,
        reference_energy: float,
        min_width: float = 0.0,
        population_cutoff: float = 1e-8,
        separated_ratio: float = 1.0,
        single_ratio: float = 0.25,
    ):
        if single_ratio > separated_ratio:
            raise ValueError("single_ratio must not exceed separated_ratio")
        self.reference_energy = reference_energy
        self.min_width = min_width
        self.population_cutoff = population_cutoff
        self.separated_ratio = separated_ratio
        self.single_ratio = single_ratio

    @classmethod
    def for_spectrum(cls, eigenvalues: np.ndarray, reference_energy: float, levels: int = 5, **kwargs):
        """Classifier whose width floor is a few level spacings around the reference"""
        k = int(np.clip(np.searchsorted(eigenvalues, reference_energy), 1, eigenvalues.size - 1))
        spacing = float(eigenvalues[k] - eigenvalues[k - 1])
        return cls(reference_energy, min_width=levels * spacing, **kwargs)

    def classify(self, energies: np.ndarray, weights: np.ndarray) -> Classification:
        energies = np.asarray(energies, dtype=float)
        keep = np.asarray(weights, dtype=float) > self.population_cutoff
        values = np.sort(energies[keep])
        if values.size < 2 or values[-1] - values[0] <= self.min_width:
            return self._single(values)
        gaps = np.diff(values)
        i = int(np.argmax(gaps))
        gap = float(gaps[i])
        width = max(values[i] - values[0], values[-1] - values[i + 1], self.min_width)
        ratio = gap / width if width > 0 else math.inf
        threshold = 0.5 * (values[i] + values[i + 1])
        below = self.reference_energy < threshold
        if ratio >= self.separated_ratio:
            return Classification(SEPARATED, threshold, gap, ratio, below)
        if ratio < self.single_ratio:
            single = self._single(values)
            return Classification(SINGLE, threshold, gap, ratio, below, single.single_returned)
        logger.warning(f"Ambiguous energy clusters: gap/width ratio {ratio:.3g}")
        return Classification(AMBIGUOUS, threshold, gap, ratio, below)

    def _single(self, values: np.ndarray) -> Classification:
        if values.size == 0:
            return Classification(SINGLE, math.nan, 0.0, 0.0, True, False)
        margin = max(self.min_width, 0.5 * (values[-1] - values[0]))
        returned = values[0] - margin <= self.reference_energy <= values[-1] + margin
        return Classification(SINGLE, math.nan, 0.0, 0.0, True, bool(returned))


def _reference_energy(final: Ensemble, params: DimerParams, delta: float) -> float:
    band = final.provenance.get("energy_band")
    if band is not None and final.provenance.get("delta") == delta:
        return 0.5 * (float(band[0]) + float(band[1]))
    logger.debug("No initial energy band recorded at this detuning, classifying around the mean energy")
    return final.mean_energy(params, delta)


def classical_return_probability(
    final: Ensemble,
    params: DimerParams,
    delta: float,
    band: Optional[EnergyWindow] = None,
    classifier: Optional[EnergyClassifier] = None,
) -> float:
    """Weight of the surviving points whose energy at delta lies in band

    Without an explicit band the returned group is found by the classifier.
    Without either, a gap-midpoint classifier is anchored on the energy band
    the ensemble was drawn from when that band belongs to delta, and on the
    mean final energy otherwise.

    Raises:
        ClassifierError: the final energies do not form clearly separated groups
    """
    alive = ~final.failed
    energies = final.energies(params, delta)[alive]
    weights = final.weights[alive]
    if band is None:
        if classifier is None:
            classifier = EnergyClassifier(_reference_energy(final, params, delta))
        result = classifier.classify(energies, weights)
        band = result.returned_window()
        if result.ambiguous:
            value = float(weights[band.contains(energies)].sum())
            raise ClassifierError(
                "Final classical energies are not separated into two groups",
                candidates=(value,),
                diagnostic=result.diagnostic,
            )
    return float(weights[band.contains(energies)].sum())
