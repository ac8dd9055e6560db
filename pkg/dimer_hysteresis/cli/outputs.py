"""Run directories, manifests and CSV files

Every CSV starts with one comment line, "# json " followed by the run's
metadata, then a header row naming the columns with their units.
"""

import csv
import json
import logging
import math
import platform
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy

from .. import __version__

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
METADATA_PREFIX = "# json "


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, Path):
        return str(value)
    return value


def versions() -> Dict[str, str]:
    return {
        "dimer_hysteresis": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
    }


@dataclass
class RunDirectory:
    path: Path
    command: str

    @classmethod
    def create(cls, root: Path, command: str, name: Optional[str] = None) -> "RunDirectory":
        """One directory per run, named after the command and the start time"""
        name = name or f"{command}-{time.strftime('%Y%m%d-%H%M%S')}"
        path = Path(root) / name
        path.mkdir(parents=True, exist_ok=True)
        logger.info(f"Writing outputs to {path}")
        return cls(path, command)

    def file(self, name: str) -> Path:
        return self.path / name

    def write_json(self, name: str, data: Dict[str, Any]) -> Path:
        target = self.file(name)
        with open(target, "w") as f:
            json.dump(_jsonable(data), f, indent=4)
        logger.debug(f"Wrote {target}")
        return target

    def write_csv(
        self,
        name: str,
        columns: Sequence[str],
        rows,
        metadata: Optional[Dict[str, Any]] = None,
    ) -> Path:
        target = self.file(name)
        write_csv(target, columns, rows, metadata)
        return target

    def write_manifest(
        self,
        config: Dict[str, Any],
        status: str,
        results: Optional[Dict[str, Any]] = None,
        error: Optional[str] = None,
    ) -> Path:
        manifest = {
            "schema_version": SCHEMA_VERSION,
            "command": self.command,
            "status": status,
            "versions": versions(),
            "config": config,
            "results": results or {},
            "files": sorted(p.name for p in self.path.iterdir() if p.name != "manifest.json"),
        }
        if error:
            manifest["error"] = error
        return self.write_json("manifest.json", manifest)


def write_csv(path: Path, columns: Sequence[str], rows, metadata: Optional[Dict[str, Any]] = None) -> None:
    meta = dict(metadata or {})
    meta.setdefault("schema_version", SCHEMA_VERSION)
    with open(path, "w", newline="") as f:
        f.write(METADATA_PREFIX + json.dumps(_jsonable(meta)) + "\n")
        writer = csv.writer(f)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    logger.debug(f"Wrote {path}")


def read_csv(path: Path) -> Tuple[Dict[str, Any], List[str], np.ndarray]:
    """(metadata, column names, float data) of a CSV written by write_csv"""
    with open(path, newline="") as f:
        first = f.readline()
        if not first.startswith(METADATA_PREFIX):
            raise ValueError(f"{path} has no metadata line")
        metadata = json.loads(first[len(METADATA_PREFIX):])
        reader = csv.reader(f)
        columns = next(reader)
        data = [[float(v) for v in row] for row in reader if row]
    array = np.array(data, dtype=float).reshape(-1, len(columns))
    return metadata, columns, array


def snapshot_name(prefix: str, index: int) -> str:
    return f"{prefix}_t{index:04d}.csv"
