"""Return probability as a function of the total sweep time

Each sweep time is an independent job that runs the full cycle quantum
mechanically and classically. The classical ensemble is sampled once from
the initial Husimi function and shared by every job, so the classical curve
differs between sweep times only through the dynamics.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..classical.classifier import EnergyClassifier, classical_return_probability
from ..classical.ensemble import Ensemble, evolve_ensemble, sample_from_husimi
from ..classical.kruskal import KruskalPrediction, kruskal_prediction
from ..common.dispatch import gather_ordered
from ..common.errors import HysteresisError
from ..model.params import DimerParams, SweepProtocol
from ..phasespace.grid import GridSpec
from ..phasespace.husimi import husimi_grid
from ..quantum.hamiltonian import spectrum
from ..quantum.populations import populations_in
from ..quantum.propagation import DEFAULT_NORM_TOLERANCE, propagate
from ..quantum.returns import quantum_return_probability
from ..quantum.states import MixedState, QuantumState

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ScanOptions:
    grid_spec: GridSpec = GridSpec()
    samples: int = 2000
    seed: int = 0
    quantum: bool = True
    classical: bool = True
    # Level spacings used as the classifier's width floor
    classifier_levels: int = 5
    tolerance: float = DEFAULT_NORM_TOLERANCE
    max_workers: Optional[int] = None

    def to_dict(self):
        return {
            "grid": self.grid_spec.to_dict(),
            "samples": self.samples,
            "seed": self.seed,
            "quantum": self.quantum,
            "classical": self.classical,
            "classifier_levels": self.classifier_levels,
            "tolerance": self.tolerance,
        }


@dataclass
class ReturnCurve:
    # Total sweep times 2T
    sweep_times: np.ndarray
    quantum: np.ndarray
    quantum_spectral: np.ndarray
    classical: np.ndarray
    kruskal: float
    samples: int = 0
    prediction: Optional[KruskalPrediction] = None
    # Scan index -> failure message; the matching entries are nan
    failures: Dict[int, str] = field(default_factory=dict)

    @property
    def classical_error(self) -> np.ndarray:
        """One-sigma binomial sampling error of the classical values"""
        if self.samples < 1:
            return np.full(self.classical.shape, math.nan)
        p = np.clip(self.classical, 0.0, 1.0)
        return np.sqrt(p * (1.0 - p) / self.samples)

    def rows(self) -> List[List[float]]:
        return [
            [float(t), float(q), float(s), float(c), float(e), self.kruskal]
            for t, q, s, c, e in zip(
                self.sweep_times, self.quantum, self.quantum_spectral, self.classical, self.classical_error
            )
        ]


@dataclass(frozen=True)
class _ScanPoint:
    quantum: float = math.nan
    spectral: float = math.nan
    classical: float = math.nan
    failure: str = ""


def initial_reference_energy(state: QuantumState, params: DimerParams, delta: float) -> float:
    """Energy expectation value <H> at delta"""
    spec = spectrum(params, delta)
    return float(np.dot(populations_in(state, spec.eigenvectors), spec.eigenvalues))


def _run_scan_point(job) -> _ScanPoint:
    """Process-pool entry point: one full cycle at one sweep time"""
    index, initial, ensemble, params, protocol, options = job
    quantum = spectral = classical = math.nan
    failures = []
    delta = protocol.delta_initial
    if initial is not None and options.quantum:
        try:
            final = propagate(
                initial, params, protocol, -protocol.half_time, protocol.half_time, options.tolerance
            )
            spec = spectrum(params, delta)
            classifier = EnergyClassifier.for_spectrum(
                spec.eigenvalues, initial_reference_energy(initial, params, delta), options.classifier_levels
            )
            result = quantum_return_probability(final, params, protocol, classifier, options.grid_spec, spec)
            quantum, spectral = result.husimi, result.spectral
        except (HysteresisError, ValueError) as exc:
            logger.warning(f"Scan point {index} (T={protocol.half_time:.6g}) quantum run failed: {exc}")
            failures.append(f"quantum: {exc}")
    if ensemble is not None and options.classical:
        try:
            final_ens = evolve_ensemble(ensemble, params, protocol, [protocol.half_time])[-1]
            classifier = EnergyClassifier(ensemble.mean_energy(params, delta))
            classical = classical_return_probability(final_ens, params, delta, classifier=classifier)
        except (HysteresisError, ValueError) as exc:
            logger.warning(f"Scan point {index} (T={protocol.half_time:.6g}) classical run failed: {exc}")
            failures.append(f"classical: {exc}")
    return _ScanPoint(quantum, spectral, classical, "; ".join(failures))


def initial_ensemble(
    initial: QuantumState, params: DimerParams, protocol: SweepProtocol, options: ScanOptions
) -> Ensemble:
    """Husimi-sampled ensemble placed at t = -T"""
    grid = husimi_grid(initial, params, options.grid_spec)
    ens = sample_from_husimi(grid, options.samples, options.seed)
    return replace(ens, time=-protocol.half_time)


def ensemble_band(ens: Ensemble, params: DimerParams, delta: float) -> Tuple[float, float]:
    """Mean energy plus or minus one standard deviation"""
    mean, spread = ens.mean_energy(params, delta), ens.energy_spread(params, delta)
    return mean - spread, mean + spread


async def return_curve(
    initial: QuantumState,
    params: DimerParams,
    protocol_template: SweepProtocol,
    sweep_times: Sequence[float],
    options: ScanOptions = ScanOptions(),
) -> ReturnCurve:
    """Quantum, classical and quasi-static return probabilities for every 2T

    Args:
        protocol_template: detunings of the cycle; its half_time is replaced
        sweep_times: total sweep times 2T
    """
    totals = np.asarray(sweep_times, dtype=float)
    if totals.ndim != 1 or totals.size == 0 or np.any(totals <= 0):
        raise ValueError("sweep_times must be a non-empty sequence of positive values")
    protocols = [protocol_template.with_half_time(0.5 * total) for total in totals]
    delta = protocol_template.delta_initial

    ensemble = initial_ensemble(initial, params, protocols[0], options) if options.classical else None
    if ensemble is not None:
        band = ensemble_band(ensemble, params, delta)
    else:
        reference = initial_reference_energy(initial, params, delta)
        band = (reference, reference)
    prediction = kruskal_prediction(band, params, protocol_template)

    jobs = []
    for i, protocol in enumerate(protocols):
        ens = replace(ensemble, time=-protocol.half_time) if ensemble is not None else None
        jobs.append((i, initial, ens, params, protocol, options))
    logger.info(f"Scanning {totals.size} sweep times from {totals.min():.4g} to {totals.max():.4g}")
    points = await gather_ordered(_run_scan_point, jobs, options.max_workers)

    failures = {i: point.failure for i, point in enumerate(points) if point.failure}
    curve = ReturnCurve(
        totals,
        np.array([pt.quantum for pt in points]),
        np.array([pt.spectral for pt in points]),
        np.array([pt.classical for pt in points]),
        prediction.return_probability,
        samples=options.samples if options.classical else 0,
        prediction=prediction,
        failures=failures,
    )
    if failures:
        logger.warning(f"{len(failures)} of {totals.size} scan points failed")
    return curve


def oscillation_amplitude(curve: ReturnCurve, which: str = "quantum") -> float:
    """Peak-to-trough spread of one curve, ignoring failed points"""
    values = np.asarray(getattr(curve, which), dtype=float)
    values = values[np.isfinite(values)]
    if values.size == 0:
        return math.nan
    return float(values.max() - values.min())


@dataclass(frozen=True)
class WidthPoint:
    # Number of adjacent eigenstates in the initial mixture
    width: int
    first_index: int
    amplitude: float
    mean: float


async def width_study(
    params: DimerParams,
    protocol: SweepProtocol,
    widths: Sequence[int],
    sweep_times: Sequence[float],
    center_index: int,
    options: ScanOptions = ScanOptions(),
) -> List[WidthPoint]:
    """Quantum oscillation amplitude against the energy width of the initial mixture

    Each width w uses the uniform mixture of the w eigenstates at the initial
    detuning centred on center_index.
    """
    spec = spectrum(params, protocol.delta_initial)
    quantum_only = replace(options, classical=False)
    results = []
    for width in widths:
        if width < 1:
            raise ValueError("Mixture widths must be at least 1")
        first = center_index - (width - 1) // 2
        spec.check_index(first)
        spec.check_index(first + width - 1)
        mixture = MixedState.uniform([spec.eigenstate(k) for k in range(first, first + width)])
        curve = await return_curve(mixture, params, protocol, sweep_times, quantum_only)
        values = curve.quantum[np.isfinite(curve.quantum)]
        mean = float(values.mean()) if values.size else math.nan
        results.append(WidthPoint(width, first, oscillation_amplitude(curve), mean))
        logger.info(f"Width {width}: oscillation amplitude {results[-1].amplitude:.4f}")
    return results
