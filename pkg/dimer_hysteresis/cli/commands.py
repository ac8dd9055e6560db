"""One coroutine per subcommand; each writes its files into a run directory"""

import logging
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, List, Sequence

import numpy as np
from colorama import Fore

from ..analysis.entropy_trace import TraceOptions, diagonal_entropy, entropy_trace
from ..analysis.return_curve import ScanOptions, ensemble_band, oscillation_amplitude, return_curve
from ..classical.classifier import EnergyClassifier, classical_return_probability
from ..classical.coarse import classical_entropy, coarse_grain
from ..classical.ensemble import Ensemble, evolve_ensemble, microcanonical_ensemble, sample_from_husimi
from ..classical.kruskal import kruskal_prediction
from ..classical.separatrix import separatrix_scan
from ..common.config import RunConfig
from ..common.errors import ClassifierError, ConfigError, HysteresisError
from ..model.params import DimerParams
from ..phasespace.coherent import CoherentParams, coherent_state
from ..phasespace.grid import HusimiGrid
from ..phasespace.husimi import husimi_grid
from ..quantum.hamiltonian import Spectrum, spectrum
from ..quantum.populations import populations_in, track_populations
from ..quantum.propagation import propagate_checkpoints
from ..quantum.returns import quantum_return_probability
from ..quantum.states import FockVector, MixedState, QuantumState
from .outputs import RunDirectory, snapshot_name
from .render import render_file

logger = logging.getLogger(__name__)

HUSIMI_COLUMNS = ("q_chart [rad]", "p_chart [particles]", "Q [1/(rad particles)]")
ENSEMBLE_COLUMNS = ("q [rad]", "p [particles]", "q_rot [rad]", "p_rot [particles]", "weight", "failed")
# Populations below this are left out of populations.csv
POPULATION_FLOOR = 1e-12


def load_amplitudes(path: str, total_particles: int) -> FockVector:
    """Amplitudes from .npy, or text with one "real imag" row per Fock index"""
    source = Path(path)
    if not source.exists():
        raise ConfigError(f"Amplitudes file {path} not found")
    if source.suffix == ".npy":
        amplitudes = np.load(source).astype(complex)
    else:
        data = np.loadtxt(source, ndmin=2)
        amplitudes = data[:, 0] + 1j * (data[:, 1] if data.shape[1] > 1 else 0.0)
    if amplitudes.size != total_particles + 1:
        raise ConfigError(f"{path} holds {amplitudes.size} amplitudes, expected {total_particles + 1}")
    state = FockVector(amplitudes)
    state.require_normalized()
    return state


def initial_state(config: RunConfig, params: DimerParams, spec: Spectrum) -> QuantumState:
    initial = config.initial
    kind = initial["kind"]
    if kind == "eigenstate":
        return spec.eigenstate(int(initial["index"]))
    if kind == "eigenstate_range":
        first, last = int(initial["first"]), int(initial["last"])
        return MixedState.uniform([spec.eigenstate(k) for k in range(first, last + 1)])
    if kind == "coherent":
        cp = CoherentParams(float(initial["theta"]), float(initial["phi"]))
        return coherent_state(cp, params.total_particles)
    return load_amplitudes(initial["path"], params.total_particles)


def reference_band(state: QuantumState, spec: Spectrum) -> tuple:
    """Energy mean plus or minus the spread of the eigenstate populations"""
    pops = populations_in(state, spec.eigenvectors)
    mean = float(np.dot(pops, spec.eigenvalues))
    spread = float(np.sqrt(max(np.dot(pops, (spec.eigenvalues - mean) ** 2), 0.0)))
    return mean - spread, mean + spread


def _snapshot_indices(count: int, every: int) -> List[int]:
    indices = list(range(0, count, max(1, every)))
    if indices[-1] != count - 1:
        indices.append(count - 1)
    return indices


def _grid_metadata(grid: HusimiGrid, params: DimerParams, time: float, delta: float, kind: str) -> Dict[str, Any]:
    return {
        "kind": kind,
        "chart": grid.chart,
        "q_points": grid.spec.q_points,
        "p_points": grid.spec.p_points,
        "grid": grid.spec.to_dict(),
        "params": params.to_dict(),
        "time": time,
        "delta": delta,
        "integral": grid.integral(),
    }


def _grid_rows(grid: HusimiGrid):
    q_mesh, p_mesh = grid.mesh()
    return zip(q_mesh.ravel(), p_mesh.ravel(), grid.values.ravel())


def _write_csv(run: RunDirectory, config: RunConfig, name: str, columns, rows, metadata) -> None:
    if not config.outputs.get("csv", True):
        return
    path = run.write_csv(name, columns, rows, metadata)
    if config.outputs.get("png", False):
        render_file(path)


def _run_metadata(config: RunConfig) -> Dict[str, Any]:
    return {
        "params": config.dimer_params.to_dict(),
        "protocol": config.sweep_protocol.to_dict(),
        "seed": config.ensemble.get("seed"),
    }


async def cmd_run_quantum(config: RunConfig, run: RunDirectory) -> Dict[str, Any]:
    """Propagate the initial state through the cycle and export populations, Husimi grids and P_ret"""
    params, protocol = config.dimer_params, config.sweep_protocol
    spec = spectrum(params, protocol.delta_initial)
    initial = initial_state(config, params, spec)
    times = protocol.checkpoints(int(config.checkpoints))
    deltas = np.asarray(protocol.detuning(times), dtype=float)
    logger.info(f"{Fore.CYAN}Propagating N={params.total_particles} through {times.size} checkpoints")
    states = propagate_checkpoints(
        initial,
        params,
        protocol,
        times,
        tolerance=float(config.tolerances["norm_per_time"]),
        step_tolerance=float(config.tolerances["step"]),
    )

    track = track_populations(states, params, deltas)
    rows = []
    for i, (t, delta) in enumerate(zip(times, deltas)):
        for label in np.flatnonzero(track.populations[i] > POPULATION_FLOOR):
            rows.append([t, delta, label + 1, track.labels[i, label] + 1, track.populations[i, label]])
    meta = dict(_run_metadata(config), kind="populations")
    _write_csv(
        run,
        config,
        "populations.csv",
        ("t [1/omega]", "delta [omega]", "label", "level", "population"),
        rows,
        meta,
    )

    grid_spec = config.grid_spec
    for k in _snapshot_indices(times.size, int(config.outputs.get("snapshot_every", 20))):
        grid = husimi_grid(states[k], params, grid_spec)
        metadata = _grid_metadata(grid, params, float(times[k]), float(deltas[k]), "husimi")
        _write_csv(run, config, snapshot_name("husimi", k), HUSIMI_COLUMNS, _grid_rows(grid), metadata)

    entropies = [diagonal_entropy(s, params, d) for s, d in zip(states, deltas)]
    lo, hi = reference_band(initial, spec)
    classifier = EnergyClassifier.for_spectrum(spec.eigenvalues, 0.5 * (lo + hi))
    results: Dict[str, Any] = {
        "diagonal_entropy_initial": entropies[0],
        "diagonal_entropy_final": entropies[-1],
        "norm_final": [float(v) for v in np.linalg.norm(np.atleast_2d(_amplitudes(states[-1])), axis=0)],
    }
    try:
        ret = quantum_return_probability(states[-1], params, protocol, classifier, grid_spec, spec)
    except ClassifierError as exc:
        run.write_json(
            "return.json",
            {"status": "ambiguous", "candidates": list(exc.candidates or ()), "diagnostic": exc.diagnostic},
        )
        raise
    run.write_json("return.json", dict(ret.to_dict(), status="ok"))
    results["return_probability"] = ret.husimi
    results["return_probability_spectral"] = ret.spectral
    logger.info(f"{Fore.GREEN}Return probability {ret.husimi:.4f} (spectral {ret.spectral:.4f})")
    return results


def _amplitudes(state: QuantumState) -> np.ndarray:
    return state.amplitudes[:, None] if isinstance(state, FockVector) else state.members


def _classical_initial(config: RunConfig, params: DimerParams, spec: Spectrum, protocol) -> Ensemble:
    source = config.ensemble.get("source", "husimi")
    if source == "microcanonical":
        band = config.ensemble.get("energy_band")
        if band is None:
            band = reference_band(initial_state(config, params, spec), spec)
        return microcanonical_ensemble(
            params, protocol.delta_initial, tuple(band), config.samples, config.seed, time=-protocol.half_time
        )
    grid = husimi_grid(initial_state(config, params, spec), params, config.grid_spec)
    ens = sample_from_husimi(grid, config.samples, config.seed)
    return replace(ens, time=-protocol.half_time)


async def cmd_run_classical(config: RunConfig, run: RunDirectory) -> Dict[str, Any]:
    """Evolve the classical ensemble through the cycle and export snapshots, entropies and P_ret"""
    params, protocol = config.dimer_params, config.sweep_protocol
    if config.samples < 1:
        raise ConfigError("run-classical needs ensemble.samples >= 1")
    spec = spectrum(params, protocol.delta_initial)
    ensemble = _classical_initial(config, params, spec, protocol)
    times = protocol.checkpoints(int(config.checkpoints))
    deltas = np.asarray(protocol.detuning(times), dtype=float)
    logger.info(f"{Fore.CYAN}Evolving {ensemble.size} trajectories through {times.size} checkpoints")
    snapshots = evolve_ensemble(
        ensemble, params, protocol, times, rtol=float(config.tolerances["classical_rtol"])
    )

    for k in _snapshot_indices(times.size, int(config.outputs.get("snapshot_every", 20))):
        snap = snapshots[k]
        q_rot, p_rot = snap.rotated()
        metadata = dict(_run_metadata(config), kind="ensemble", time=float(times[k]), delta=float(deltas[k]))
        rows = zip(snap.q, snap.p, q_rot, p_rot, snap.weights, snap.failed.astype(int))
        _write_csv(run, config, snapshot_name("ensemble", k), ENSEMBLE_COLUMNS, rows, metadata)

    band_count = int(config.ensemble.get("band_count", 40))
    entropy = [
        classical_entropy(coarse_grain(snap, params, delta, band_count))
        for snap, delta in zip(snapshots, deltas)
    ]
    meta = dict(_run_metadata(config), kind="entropy", band_count=band_count)
    _write_csv(
        run,
        config,
        "entropy.csv",
        ("t [1/omega]", "delta [omega]", "classical"),
        zip(times, deltas, entropy),
        meta,
    )

    delta_i = protocol.delta_initial
    classifier = EnergyClassifier(ensemble.mean_energy(params, delta_i))
    prediction = kruskal_prediction(ensemble_band(ensemble, params, delta_i), params, protocol)
    final = snapshots[-1]
    try:
        value = classical_return_probability(final, params, delta_i, classifier=classifier)
    except ClassifierError as exc:
        run.write_json(
            "return.json",
            {"status": "ambiguous", "candidates": list(exc.candidates or ()), "diagnostic": exc.diagnostic},
        )
        raise
    error = float(np.sqrt(value * (1.0 - value) / ensemble.size))
    run.write_json(
        "return.json",
        {
            "status": "ok",
            "classical": value,
            "classical_error": error,
            "lost_weight": final.lost_weight,
            "kruskal": prediction.to_dict(),
        },
    )
    logger.info(f"{Fore.GREEN}Classical return probability {value:.4f} +/- {error:.4f}")
    return {"return_probability": value, "return_probability_error": error, "kruskal": prediction.return_probability}


def _scan_options(config: RunConfig, max_workers) -> ScanOptions:
    return ScanOptions(
        grid_spec=config.grid_spec,
        samples=config.samples,
        seed=int(config.ensemble.get("seed") or 0),
        classical=config.samples > 0,
        tolerance=float(config.tolerances["norm_per_time"]),
        max_workers=max_workers,
    )


async def cmd_scan(config: RunConfig, run: RunDirectory, max_workers=None, sweep_times: Sequence[float] = None) -> Dict[str, Any]:
    """Return probabilities over the configured sweep times"""
    params, protocol = config.dimer_params, config.sweep_protocol
    spec = spectrum(params, protocol.delta_initial)
    initial = initial_state(config, params, spec)
    totals = np.asarray(sweep_times, dtype=float) if sweep_times is not None else config.sweep_times()
    options = _scan_options(config, max_workers)
    curve = await return_curve(initial, params, protocol, totals, options)
    meta = dict(_run_metadata(config), kind="return_curve", options=options.to_dict(), failures=curve.failures)
    _write_csv(
        run,
        config,
        "return_curve.csv",
        ("sweep_time [1/omega]", "quantum", "quantum_spectral", "classical", "classical_error", "kruskal"),
        curve.rows(),
        meta,
    )
    summary = {
        "kruskal": curve.prediction.to_dict() if curve.prediction is not None else curve.kruskal,
        "quantum_amplitude": oscillation_amplitude(curve, "quantum"),
        "classical_amplitude": oscillation_amplitude(curve, "classical"),
        "quantum_mean": float(np.nanmean(curve.quantum)) if np.any(np.isfinite(curve.quantum)) else None,
        "failures": curve.failures,
    }
    run.write_json("return.json", summary)
    if curve.failures:
        raise HysteresisError(f"{len(curve.failures)} scan points failed")
    return summary


async def cmd_entropy(config: RunConfig, run: RunDirectory, max_workers=None) -> Dict[str, Any]:
    """Wehrl, diagonal and classical coarse-grained entropy traces"""
    params, protocol = config.dimer_params, config.sweep_protocol
    spec = spectrum(params, protocol.delta_initial)
    initial = initial_state(config, params, spec)
    options = TraceOptions(
        grid_spec=config.grid_spec,
        samples=config.samples,
        seed=int(config.ensemble.get("seed") or 0),
        band_count=int(config.ensemble.get("band_count", 40)),
        classical=config.samples > 0,
        tolerance=float(config.tolerances["norm_per_time"]),
        max_workers=max_workers,
    )
    trace = await entropy_trace(initial, params, protocol, int(config.checkpoints), options)
    curves = trace.curves()
    meta = dict(
        _run_metadata(config), kind="entropy", options=options.to_dict(), alignment_offsets=trace.alignment_offsets
    )
    _write_csv(
        run,
        config,
        "entropy.csv",
        ("t [1/omega]", "delta [omega]") + tuple(curves),
        trace.rows(),
        meta,
    )
    return {name: {"initial": float(v[0]), "final": float(v[-1])} for name, v in curves.items()}


async def cmd_kruskal(config: RunConfig, run: RunDirectory, points: int = 201) -> Dict[str, Any]:
    """Quasi-static prediction plus the separatrix areas along the sweep"""
    params, protocol = config.dimer_params, config.sweep_protocol
    spec = spectrum(params, protocol.delta_initial)
    band = reference_band(initial_state(config, params, spec), spec)
    prediction = kruskal_prediction(band, params, protocol)
    run.write_json("kruskal.json", dict(prediction.to_dict(), energy_band=list(band)))
    deltas = np.linspace(protocol.delta_initial, protocol.delta_turn, points)
    rows = [
        [info.delta, info.separatrix_energy, info.area_upper, info.area_lower, info.area_outer]
        for info in separatrix_scan(params, deltas)
    ]
    _write_csv(
        run,
        config,
        "separatrix.csv",
        ("delta [omega]", "energy [omega]", "area_upper", "area_lower", "area_outer"),
        rows,
        dict(_run_metadata(config), kind="separatrix"),
    )
    logger.info(f"{Fore.GREEN}Quasi-static return probability {prediction.return_probability:.4f}")
    return {"return_probability": prediction.return_probability, "crossed": prediction.crossed}


def cmd_render(inputs: Sequence[str], style: str = "auto") -> List[Dict[str, Any]]:
    results = []
    for source in inputs:
        result = render_file(Path(source), style)
        results.append({"png": str(result.path), "style": result.style, "vmin": result.vmin, "vmax": result.vmax})
    return results
