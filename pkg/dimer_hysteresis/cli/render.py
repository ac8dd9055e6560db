"""PNG rendering of exported CSV files

Rendering reads only what the CSV carries: its metadata line and columns.
"""

import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

os.environ.setdefault("MPLCONFIGDIR", "/tmp/matplotlib")
import matplotlib  # noqa: E402

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from ..classical.meanfield import energy_qp  # noqa: E402
from ..classical.separatrix import separatrix_info  # noqa: E402
from ..model.params import DimerParams  # noqa: E402
from ..phasespace.grid import chart_to_flat  # noqa: E402
from .outputs import read_csv  # noqa: E402

logger = logging.getLogger(__name__)

COLORMAP = "viridis"
STYLES = ("auto", "heatmap", "lines")
# Columns never drawn as curves
_SKIPPED = ("delta", "classical_error")


@dataclass(frozen=True)
class RenderResult:
    path: Path
    style: str
    # Colour limits of a heatmap, the data extrema
    vmin: Optional[float] = None
    vmax: Optional[float] = None


def _column_name(header: str) -> str:
    return header.split(" [")[0]


def _separatrix_overlay(ax, metadata, q_axis, p_axis, chart: str) -> None:
    params_data = metadata.get("params")
    delta = metadata.get("delta")
    if not params_data or delta is None:
        return
    params = DimerParams(
        omega=params_data["omega"],
        interaction=params_data["interaction"],
        total_particles=params_data["total_particles"],
    )
    info = separatrix_info(params, float(delta))
    if info is None:
        return
    q_mesh, p_mesh = np.meshgrid(q_axis, p_axis, indexing="ij")
    q, p = chart_to_flat(q_mesh, p_mesh, chart, params.p0)
    energy = energy_qp(q, p, params, float(delta))
    ax.contour(q_mesh, p_mesh, energy, levels=[info.separatrix_energy], colors="white", linewidths=0.8)


def render_heatmap(source: Path, target: Path) -> RenderResult:
    metadata, columns, data = read_csv(source)
    nq, np_ = int(metadata["q_points"]), int(metadata["p_points"])
    q_axis = data[:, 0].reshape(nq, np_)[:, 0]
    p_axis = data[:, 1].reshape(nq, np_)[0, :]
    values = data[:, 2].reshape(nq, np_)
    vmin, vmax = float(values.min()), float(values.max())
    chart = metadata.get("chart", "rotated")

    fig, ax = plt.subplots(figsize=(6.0, 5.0))
    mesh = ax.pcolormesh(q_axis, p_axis, values.T, cmap=COLORMAP, vmin=vmin, vmax=vmax, shading="nearest")
    fig.colorbar(mesh, ax=ax, label=columns[2])
    _separatrix_overlay(ax, metadata, q_axis, p_axis, chart)
    primed = "'" if chart == "rotated" else ""
    ax.set_xlabel(f"q{primed} [rad]")
    ax.set_ylabel(f"p{primed} [particles]")
    if "time" in metadata:
        ax.set_title(f"t = {metadata['time']:.6g}, delta = {metadata.get('delta', float('nan')):.4g}")
    fig.savefig(target, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return RenderResult(target, "heatmap", vmin, vmax)


def render_lines(source: Path, target: Path) -> RenderResult:
    metadata, columns, data = read_csv(source)
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    x = data[:, 0]
    for i, header in enumerate(columns[1:], start=1):
        name = _column_name(header)
        if name in _SKIPPED:
            continue
        if name == "classical" and "classical_error" in map(_column_name, columns):
            err = data[:, [_column_name(c) for c in columns].index("classical_error")]
            ax.errorbar(x, data[:, i], yerr=err, label=name, marker=".", linestyle="-")
        else:
            ax.plot(x, data[:, i], label=name)
    ax.set_xlabel(columns[0])
    if metadata.get("kind") == "return_curve":
        ax.set_xscale("log")
        ax.set_ylabel("return probability")
    elif metadata.get("kind") == "entropy":
        ax.set_ylabel("entropy")
    ax.legend()
    fig.savefig(target, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return RenderResult(target, "lines")


def render_file(source: Path, style: str = "auto", target: Optional[Path] = None) -> RenderResult:
    """Render one CSV to PNG next to it, or to target"""
    if style not in STYLES:
        raise ValueError(f"Unknown render style {style}, expected one of {STYLES}")
    source = Path(source)
    target = Path(target) if target is not None else source.with_suffix(".png")
    if style == "auto":
        metadata, _, _ = read_csv(source)
        style = "heatmap" if metadata.get("kind") in ("husimi", "histogram") else "lines"
    result = render_heatmap(source, target) if style == "heatmap" else render_lines(source, target)
    logger.info(f"Rendered {source.name} -> {target}")
    return result
