import copy
import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from ..model.params import DimerParams, SweepProtocol
from ..phasespace.grid import GridSpec
from .errors import ConfigError

logger = logging.getLogger(__name__)

CONFIG_NAME = "hysteresis-run.json"
OUTPUT_DIR_ENV = "DIMER_HYSTERESIS_OUTPUT_DIR"
INITIAL_KINDS = ("eigenstate", "eigenstate_range", "coherent", "amplitudes_file")

DEFAULTS: Dict[str, Any] = {
    "params": {"omega": 1.0, "nonlinearity": -3.0, "total_particles": 1000},
    "protocol": {"delta_initial": -2.0, "delta_turn": 2.0, "half_time": 5000.0},
    "initial": {"kind": "eigenstate", "index": 37},
    "grid": {"q_points": 256, "p_points": 256, "chart": "rotated"},
    "ensemble": {"samples": 2000, "seed": 20240611},
    "checkpoints": 200,
    "tolerances": {"norm_per_time": 1e-12, "step": 1e-10, "classical_rtol": 1e-10},
    "outputs": {"directory": None, "csv": True, "json": True, "png": False, "snapshot_every": 20},
    "scan": {"range": [2000.0, 20000.0], "count": 40},
}


def search_paths(explicit: Optional[str] = None) -> List[Path]:
    """Config files tried in order; an explicit path is the only candidate"""
    if explicit:
        return [Path(explicit)]
    return [
        Path.cwd() / CONFIG_NAME,  # Project directory
        Path.home() / ".config/dimer-hysteresis" / CONFIG_NAME,  # User config
    ]


@dataclass
class RunConfig:
    # omega, total_particles and either interaction U or nonlinearity u = U N / omega
    params: Dict[str, Any]
    # delta_initial, delta_turn, half_time
    protocol: Dict[str, Any]
    # kind plus its fields: index, first/last, theta/phi, path
    initial: Dict[str, Any]
    # Husimi grid resolution and chart
    grid: Dict[str, Any]
    # Classical sample count and the run seed
    ensemble: Dict[str, Any]
    # Evenly spaced observation times over [-T, T]
    checkpoints: int
    # Norm drift per unit time, step error per unit time, classical rtol
    tolerances: Dict[str, float]
    # Output directory and format flags
    outputs: Dict[str, Any]
    # Total sweep times 2T, listed or as a geometric range with a count
    scan: Dict[str, Any] = field(default_factory=dict)
    # File the values came from, None for defaults
    source: Optional[str] = None

    @classmethod
    def from_dict(cls, data: Dict[str, Any], source: Optional[str] = None) -> "RunConfig":
        """Merge each section over the defaults"""
        unknown = set(data) - set(DEFAULTS) - {"schema_version"}
        if unknown:
            raise ConfigError(f"Unknown configuration sections: {sorted(unknown)}")
        merged = copy.deepcopy(DEFAULTS)
        for key, value in data.items():
            if key == "schema_version":
                continue
            if isinstance(merged[key], dict):
                if not isinstance(value, dict):
                    raise ConfigError(f"Section {key} must be an object")
                merged[key].update(value)
            else:
                merged[key] = value
        params = merged["params"]
        if "interaction" in data.get("params", {}):
            params.pop("nonlinearity", None)
        initial = merged["initial"]
        if "kind" in data.get("initial", {}):
            initial = dict(data["initial"])
        scan = merged["scan"]
        if "sweep_times" in data.get("scan", {}):
            scan = {"sweep_times": data["scan"]["sweep_times"]}
        return cls(
            params=params,
            protocol=merged["protocol"],
            initial=initial,
            grid=merged["grid"],
            ensemble=merged["ensemble"],
            checkpoints=merged["checkpoints"],
            tolerances=merged["tolerances"],
            outputs=merged["outputs"],
            scan=scan,
            source=source,
        )

    @classmethod
    def load_config(cls, path: Optional[str] = None) -> "RunConfig":
        """Load configuration from JSON file

        Args:
            path: explicit config file; without it the project directory and
                the user config directory are searched

        Returns:
            RunConfig instance, built from the defaults if no file is found
        """
        for candidate in search_paths(path):
            if not candidate.exists():
                continue
            try:
                with open(candidate) as f:
                    data = json.load(f)
            except json.JSONDecodeError as e:
                raise ConfigError(f"Error reading config from {candidate}: {e}") from e
            return cls.from_dict(data, str(candidate))
        if path:
            raise ConfigError(f"Config file {path} not found")
        return cls.from_dict({})

    def __post_init__(self):
        try:
            dimer = self.dimer_params
            self.sweep_protocol
            self.grid_spec
        except (TypeError, KeyError, ValueError) as e:
            raise ConfigError(f"Invalid configuration: {e}") from e
        if int(self.checkpoints) < 2:
            raise ConfigError("checkpoints must be at least 2")
        self._validate_initial(dimer.dimension)
        samples = self.ensemble.get("samples", 0)
        if int(samples) < 0:
            raise ConfigError("ensemble.samples must not be negative")
        if samples and self.ensemble.get("seed") is None:
            raise ConfigError("ensemble.seed is mandatory for stochastic steps")
        for name in ("norm_per_time", "step", "classical_rtol"):
            if not float(self.tolerances.get(name, 1.0)) > 0:
                raise ConfigError(f"tolerances.{name} must be positive")
        self.sweep_times()

    def _validate_initial(self, dimension: int) -> None:
        kind = self.initial.get("kind")
        if kind not in INITIAL_KINDS:
            raise ConfigError(f"initial.kind must be one of {INITIAL_KINDS}, got {kind}")
        if kind == "eigenstate":
            indices = [self.initial.get("index")]
        elif kind == "eigenstate_range":
            indices = [self.initial.get("first"), self.initial.get("last")]
            if None not in indices and indices[0] > indices[1]:
                raise ConfigError("initial.first must not exceed initial.last")
        elif kind == "coherent":
            theta, phi = self.initial.get("theta"), self.initial.get("phi")
            if theta is None or phi is None:
                raise ConfigError("Coherent initial states need theta and phi")
            if not 0 <= theta <= np.pi:
                raise ConfigError(f"theta {theta} outside [0, pi]")
            return
        else:
            if not self.initial.get("path"):
                raise ConfigError("amplitudes_file initial states need a path")
            return
        for index in indices:
            if not isinstance(index, int) or not 1 <= index <= dimension:
                raise ConfigError(f"Eigenstate index {index} outside [1, {dimension}]")

    @property
    def dimer_params(self) -> DimerParams:
        p = self.params
        total = p["total_particles"]
        omega = p.get("omega", 1.0)
        if "interaction" in p:
            return DimerParams(omega=omega, interaction=p["interaction"], total_particles=total)
        return DimerParams.from_nonlinearity(p["nonlinearity"], total, omega)

    @property
    def sweep_protocol(self) -> SweepProtocol:
        return SweepProtocol(
            float(self.protocol["delta_initial"]),
            float(self.protocol["delta_turn"]),
            float(self.protocol["half_time"]),
        )

    @property
    def grid_spec(self) -> GridSpec:
        return GridSpec(
            q_points=int(self.grid.get("q_points", 256)),
            p_points=int(self.grid.get("p_points", 256)),
            chart=self.grid.get("chart", "rotated"),
            q_range=self.grid.get("q_range"),
            p_range=self.grid.get("p_range"),
        )

    @property
    def seed(self) -> int:
        return int(self.ensemble["seed"])

    @property
    def samples(self) -> int:
        return int(self.ensemble.get("samples", 0))

    @property
    def output_dir(self) -> Path:
        """Configured directory, else DIMER_HYSTERESIS_OUTPUT_DIR, else ./runs"""
        configured = self.outputs.get("directory")
        if configured:
            return Path(configured)
        return Path(os.environ.get(OUTPUT_DIR_ENV, "runs"))

    def sweep_times(self) -> np.ndarray:
        """Total sweep times 2T of a scan"""
        if "sweep_times" in self.scan:
            values = np.asarray(self.scan["sweep_times"], dtype=float)
        else:
            lo, hi = self.scan["range"]
            count = int(self.scan["count"])
            values = np.geomspace(lo, hi, count) if count > 1 else np.array([float(lo)])
        if values.ndim != 1 or values.size == 0 or np.any(values <= 0):
            raise ConfigError("Scan sweep times must be positive")
        return values

    def override(self, name: str, value: Any) -> None:
        """Replace one value, "section.key" or a top-level name, and re-validate"""
        logger.info(f"Overriding {name} from command line: {value}")
        section, _, key = name.partition(".")
        if key:
            target = getattr(self, section)
            target[key] = value
            if section == "params" and key in ("interaction", "nonlinearity"):
                target.pop("nonlinearity" if key == "interaction" else "interaction", None)
        else:
            setattr(self, section, value)
        self.__post_init__()

    def to_dict(self) -> Dict[str, Any]:
        return {
            "params": dict(self.params),
            "protocol": dict(self.protocol),
            "initial": dict(self.initial),
            "grid": dict(self.grid),
            "ensemble": dict(self.ensemble),
            "checkpoints": self.checkpoints,
            "tolerances": dict(self.tolerances),
            "outputs": dict(self.outputs),
            "scan": dict(self.scan),
        }
