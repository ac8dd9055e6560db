import json
from pathlib import Path

import numpy as np
import pytest
from numpy.testing import assert_allclose

from dimer_hysteresis.cli.outputs import METADATA_PREFIX, RunDirectory, read_csv, write_csv
from dimer_hysteresis.cli.render import render_file
from dimer_hysteresis.cli.runner import main, parse_args, run

SMALL_RUN = {
    "params": {"omega": 1.0, "nonlinearity": -0.5, "total_particles": 20},
    "protocol": {"delta_initial": -2.0, "delta_turn": 2.0, "half_time": 50.0},
    "initial": {"kind": "eigenstate", "index": 1},
    "grid": {"q_points": 64, "p_points": 64},
    "ensemble": {"samples": 200, "seed": 11, "band_count": 8},
    "checkpoints": 3,
    "outputs": {"snapshot_every": 2},
}


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps(SMALL_RUN))
    return str(path)


def run_args(command, config, tmp_path, *extra):
    return parse_args([command, "--config", config, "--output-dir", str(tmp_path / "out"), "--run-name", "r", *extra])


def manifest(tmp_path):
    return json.loads((tmp_path / "out" / "r" / "manifest.json").read_text())


class TestParseArgs:
    def test_overrides(self):
        args = parse_args(["scan", "--total-particles", "50", "--nonlinearity", "-2.5", "--sweep-times", "10", "20"])
        assert args.command == "scan"
        assert args.total_particles == 50
        assert args.nonlinearity == -2.5
        assert args.sweep_times == [10.0, 20.0]
        assert args.interaction is None

    def test_interaction_and_nonlinearity_exclusive(self):
        with pytest.raises(SystemExit):
            parse_args(["kruskal", "--interaction", "-0.1", "--nonlinearity", "-3"])

    def test_render_arguments(self):
        args = parse_args(["render", "a.csv", "b.csv", "--style", "lines"])
        assert args.inputs == ["a.csv", "b.csv"]
        assert args.style == "lines"

    def test_command_required(self):
        with pytest.raises(SystemExit):
            parse_args([])


class TestRun:
    async def test_kruskal_subcritical(self, small_config, tmp_path):
        assert await run(run_args("kruskal", small_config, tmp_path)) == 0
        run_dir = tmp_path / "out" / "r"
        prediction = json.loads((run_dir / "kruskal.json").read_text())
        assert prediction["return_probability"] == 1.0
        assert not prediction["crossed"]
        _, columns, data = read_csv(run_dir / "separatrix.csv")
        assert columns[0] == "delta [omega]"
        assert data.shape == (0, 5)
        meta = manifest(tmp_path)
        assert meta["status"] == "ok"
        assert meta["command"] == "kruskal"
        assert "separatrix.csv" in meta["files"]

    async def test_kruskal_supercritical(self, small_config, tmp_path):
        args = run_args("kruskal", small_config, tmp_path, "--nonlinearity", "-3", "--total-particles", "100")
        assert await run(args) == 0
        run_dir = tmp_path / "out" / "r"
        prediction = json.loads((run_dir / "kruskal.json").read_text())
        assert 0.0 <= prediction["return_probability"] <= 1.0
        _, _, data = read_csv(run_dir / "separatrix.csv")
        assert 0 < data.shape[0] < 201
        assert np.all(np.abs(data[:, 0]) < 1.1226)
        assert_allclose(data[:, 2:].sum(axis=1), 2 * np.pi * 100, rtol=1e-6)
        assert manifest(tmp_path)["config"]["params"]["nonlinearity"] == -3.0

    async def test_run_quantum(self, small_config, tmp_path):
        assert await run(run_args("run-quantum", small_config, tmp_path)) == 0
        run_dir = tmp_path / "out" / "r"
        returned = json.loads((run_dir / "return.json").read_text())
        assert returned["status"] == "ok"
        assert returned["spectral"] == pytest.approx(1.0, abs=1e-6)
        assert (run_dir / "populations.csv").exists()
        metadata, _, data = read_csv(run_dir / "husimi_t0000.csv")
        assert metadata["kind"] == "husimi"
        assert data.shape == (64 * 64, 3)
        assert metadata["integral"] == pytest.approx(1.0, abs=1e-6)

    async def test_run_classical(self, small_config, tmp_path):
        code = await run(run_args("run-classical", small_config, tmp_path))
        meta = manifest(tmp_path)
        if code == 0:
            assert 0.0 <= meta["results"]["return_probability"] <= 1.0
        else:
            # An unclear energy gap is reported, not swallowed
            assert code == 1
            assert meta["status"] == "failed"
            assert "ClassifierError" in meta["error"]
        _, columns, data = read_csv(tmp_path / "out" / "r" / "entropy.csv")
        assert data.shape == (3, 3)

    async def test_index_outside_spectrum(self, small_config, tmp_path):
        assert await run(run_args("kruskal", small_config, tmp_path, "--index", "500")) == 2
        assert not (tmp_path / "out" / "r").exists()

    async def test_eigenstate_range_flag(self, small_config, tmp_path):
        assert await run(run_args("kruskal", small_config, tmp_path, "--eigenstate-range", "2", "4")) == 0
        assert manifest(tmp_path)["config"]["initial"] == {"kind": "eigenstate_range", "first": 2, "last": 4}

    async def test_missing_config(self, tmp_path):
        args = run_args("kruskal", str(tmp_path / "absent.json"), tmp_path)
        assert await run(args) == 2


def write_husimi_csv(path: Path, nq=4, np_=3):
    q = np.linspace(-3.0, 3.0, nq)
    p = np.linspace(-1.0, 1.0, np_)
    q_mesh, p_mesh = np.meshgrid(q, p, indexing="ij")
    values = np.arange(nq * np_, dtype=float).reshape(nq, np_) / 10.0
    rows = zip(q_mesh.ravel(), p_mesh.ravel(), values.ravel())
    write_csv(path, ("q_chart [rad]", "p_chart [particles]", "Q"), rows, {"kind": "husimi", "q_points": nq, "p_points": np_, "chart": "flat"})
    return values


class TestRender:
    def test_heatmap(self, tmp_path):
        values = write_husimi_csv(tmp_path / "husimi.csv")
        result = render_file(tmp_path / "husimi.csv")
        assert result.style == "heatmap"
        assert result.vmin == pytest.approx(values.min())
        assert result.vmax == pytest.approx(values.max())
        assert result.path == tmp_path / "husimi.png"
        assert result.path.stat().st_size > 0

    def test_lines(self, tmp_path):
        rows = [[10.0, 0.9, 0.9, 0.8, 0.02, 1.0], [100.0, 0.5, 0.5, 0.6, 0.03, 1.0]]
        columns = ("sweep_time [1/omega]", "quantum", "quantum_spectral", "classical", "classical_error", "kruskal")
        write_csv(tmp_path / "curve.csv", columns, rows, {"kind": "return_curve"})
        result = render_file(tmp_path / "curve.csv")
        assert result.style == "lines"
        assert result.vmin is None
        assert (tmp_path / "curve.png").exists()

    def test_unknown_style(self, tmp_path):
        write_husimi_csv(tmp_path / "husimi.csv")
        with pytest.raises(ValueError):
            render_file(tmp_path / "husimi.csv", "contour")

    async def test_render_command(self, tmp_path):
        write_husimi_csv(tmp_path / "husimi.csv")
        assert await run(parse_args(["render", str(tmp_path / "husimi.csv")])) == 0
        assert (tmp_path / "husimi.png").exists()

    def test_missing_input_exits_with_failure(self, tmp_path):
        with pytest.raises(SystemExit) as excinfo:
            main(["render", str(tmp_path / "absent.csv")])
        assert excinfo.value.code == 1


class TestOutputs:
    def test_run_directory(self, tmp_path):
        run_dir = RunDirectory.create(tmp_path, "scan")
        assert run_dir.path.parent == tmp_path
        assert run_dir.path.name.startswith("scan-")
        run_dir.write_json("values.json", {"x": np.float64(1.5), "bad": float("nan"), "arr": np.arange(3)})
        data = json.loads(run_dir.file("values.json").read_text())
        assert data == {"x": 1.5, "bad": None, "arr": [0, 1, 2]}
        manifest_data = json.loads(run_dir.write_manifest({"checkpoints": 3}, "ok").read_text())
        assert manifest_data["files"] == ["values.json"]
        assert set(manifest_data["versions"]) == {"dimer_hysteresis", "python", "numpy", "scipy"}

    def test_csv_round_trip(self, tmp_path):
        path = tmp_path / "table.csv"
        write_csv(path, ("t", "value"), [[0.1, 1.0 / 3.0], [0.2, 2.0]], {"kind": "test"})
        assert path.read_text().startswith(METADATA_PREFIX)
        metadata, columns, data = read_csv(path)
        assert metadata == {"kind": "test", "schema_version": 1}
        assert columns == ["t", "value"]
        assert_allclose(data, [[0.1, 1.0 / 3.0], [0.2, 2.0]], rtol=0, atol=0)

    def test_csv_without_metadata(self, tmp_path):
        path = tmp_path / "plain.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(ValueError):
            read_csv(path)
