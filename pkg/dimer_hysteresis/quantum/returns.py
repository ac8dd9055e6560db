"""Return probability of a quantum state after a full sweep cycle"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

from ..classical.classifier import EnergyClassifier
from ..common.errors import ClassifierError
from ..model.params import DimerParams, SweepProtocol
from ..phasespace.grid import GridSpec
from ..phasespace.husimi import husimi_grid, region_integral
from .hamiltonian import Spectrum, spectrum
from .populations import populations_in
from .states import QuantumState

logger = logging.getLogger(__name__)

# Particle number above which the two definitions are expected to agree
AGREEMENT_MIN_PARTICLES = 200
AGREEMENT_TOLERANCE = 0.01


@dataclass(frozen=True)
class QuantumReturn:
    # Husimi weight of the returned energy region
    husimi: float
    # Adiabatic population on the returned side of the threshold
    spectral: float
    threshold: float
    separated: bool
    diagnostic: str = ""

    @property
    def discrepancy(self) -> float:
        return abs(self.husimi - self.spectral)

    def to_dict(self):
        return {
            "husimi": self.husimi,
            "spectral": self.spectral,
            "threshold": None if math.isnan(self.threshold) else self.threshold,
            "separated": self.separated,
            "diagnostic": self.diagnostic,
        }


def quantum_return_probability(
    final: QuantumState,
    params: DimerParams,
    protocol: SweepProtocol,
    classifier: EnergyClassifier,
    grid_spec: GridSpec = GridSpec(),
    spec: Optional[Spectrum] = None,
) -> QuantumReturn:
    """Probability that the state at t = +T is back in its initial energy group

    The final state is expanded in the eigenstates at the initial detuning and
    the classifier splits the occupied levels at the widest spectral gap. The
    Husimi weight of the mean-field energy region on the returned side is the
    primary value, the summed populations of the returned levels a cross-check.

    Raises:
        ClassifierError: the occupied levels do not form two separated groups;
            the exception carries the (husimi, spectral) candidates computed at
            the best available threshold
    """
    delta = protocol.delta_initial
    spec = spec if spec is not None else spectrum(params, delta)
    pops = populations_in(final, spec.eigenvectors)
    verdict = classifier.classify(spec.eigenvalues, pops)
    window = verdict.returned_window()

    spectral = float(pops[window.contains(spec.eigenvalues)].sum())
    grid = husimi_grid(final, params, grid_spec)
    husimi = region_integral(grid, window, params, delta).value

    if verdict.ambiguous:
        raise ClassifierError(
            f"Final populations at delta={delta} are not separated by a clear gap",
            candidates=(husimi, spectral),
            diagnostic=verdict.diagnostic,
        )
    result = QuantumReturn(husimi, spectral, verdict.threshold, verdict.separated, verdict.diagnostic)
    if params.total_particles >= AGREEMENT_MIN_PARTICLES and result.discrepancy > AGREEMENT_TOLERANCE:
        logger.warning(
            f"Husimi and spectral return probabilities differ by {result.discrepancy:.4f} "
            f"({husimi:.4f} vs {spectral:.4f})"
        )
    logger.debug(f"Return probability {husimi:.6f} (spectral {spectral:.6f}), {verdict.diagnostic}")
    return result