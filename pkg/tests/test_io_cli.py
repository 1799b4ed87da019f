import json
from pathlib import Path

import numpy as np
import pytest

from hmmellam import io
from hmmellam.cli import ConfigError, default_seeds, main, parse_config
from hmmellam.mesh import MeshError, build_cartesian, build_distorted

GOLDEN = Path(__file__).parent / "golden"


@pytest.mark.parametrize("kind", ["kershaw", "hexahedral", "nonconforming"])
def test_mesh_round_trip_is_bitwise(tmp_path, kind):
    m = build_distorted(kind, 8, 8, 1000, 1000, amplitude={"kershaw": 0.6, "hexahedral": 0.3}.get(kind))
    m = m.with_materials(porosity=np.linspace(0.05, 0.3, m.n_cells), permeability=[[80.0, 1e-3], [1e-3, 20.0]])
    io.write_mesh(m, tmp_path / "m.polymesh")
    r = io.read_mesh(tmp_path / "m.polymesh")
    assert np.array_equal(r.vertices, m.vertices)
    assert all(np.array_equal(r.cell_vertices(k), m.cell_vertices(k)) for k in range(m.n_cells))
    assert np.array_equal(r.porosity, m.porosity) and np.array_equal(r.permeability, m.permeability)


def test_malformed_mesh_file(tmp_path):
    p = tmp_path / "bad.polymesh"
    p.write_text("POLYMESH 2D\nVERTICES 3\n0 0\n1 0\n0 1\nCELLS 1\n4 0 1 2\n")
    with pytest.raises(MeshError):
        io.read_mesh(p)
    p.write_text("nothing\n")
    with pytest.raises(MeshError):
        io.read_mesh(p)


def test_snapshot_matches_golden_file(tmp_path):
    io.write_snapshot(build_cartesian(2, 2, 1, 1), [0.0, 0.25, 0.1, 1.0], tmp_path / "s.csv")
    assert (tmp_path / "s.csv").read_text() == (GOLDEN / "snapshot_2x2.csv").read_text()


def test_vtk_layout(tmp_path):
    m = build_cartesian(2, 1, 2, 1)
    io.write_vtk(m, tmp_path / "m.vtk", {"c": [0.5, 1.0]})
    lines = (tmp_path / "m.vtk").read_text().splitlines()
    assert lines[0] == "# vtk DataFile Version 3.0" and "POINTS 6 double" in lines
    assert "POLYGONS 2 10" in lines and "CELL_DATA 2" in lines and lines[-2:] == ["0.5", "1"]


def test_config_parsing(monkeypatch):
    monkeypatch.delenv("HMMELLAM_OUTPUT_DIR", raising=False)
    cfg, opts = parse_config("preset = peaceman-inhomogeneous\nmesh = kershaw  # distorted\nclosure = KR\n"
                             "wells = 500,500,10; 0,0,-10\noutput_every = 5\n")
    assert (cfg.nx, cfg.dt, cfg.inhomogeneous, cfg.mesh_kind, cfg.closure) == (20, 2.5, True, "kershaw", "KR")
    assert [w.rate for w in cfg.wells] == [10.0, -10.0] and opts["output_every"] == 5


@pytest.mark.parametrize("text", ["colour = red\n", "dt = fast\n", "dt\n", "preset = nope\n",
                                  "inhomogeneous = maybe\n", "dt = 35\n"])
def test_config_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_output_dir_from_environment(monkeypatch):
    monkeypatch.setenv("HMMELLAM_OUTPUT_DIR", "/tmp/elsewhere")
    assert parse_config("output_dir = here\n")[1]["output_dir"] == "/tmp/elsewhere"


def test_default_seeds_near_injector():
    seeds = np.array(default_seeds())
    assert np.allclose(np.linalg.norm(seeds - 1000.0, axis=1), 100.0)
    assert np.all(seeds < 1000.0)


def test_unknown_key_exit_code(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("bogus = 1\n")
    assert main(["run", str(cfg)]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["exit_code"] == 2 and "bogus" in err["message"]


def test_missing_config_exit_code(tmp_path):
    assert main(["run", str(tmp_path / "missing.cfg")]) == 2


def test_run_writes_outputs(tmp_path, monkeypatch):
    out = tmp_path / "out"
    monkeypatch.setenv("HMMELLAM_OUTPUT_DIR", str(out))
    cfg = tmp_path / "c.cfg"
    cfg.write_text("preset = peaceman-standard\nnx = 8\nny = 8\nfinal_time = 108\noutput_every = 2\n"
                   "streamline_seeds = 900,950\nstreamline_duration = 100\n")
    assert main(["run", str(cfg)]) == 0
    names = sorted(p.name for p in (out / "snapshots").iterdir())
    assert names == ["c_00000.csv", "c_00000.vtk", "c_00002.csv", "c_00002.vtk", "c_00003.csv", "c_00003.vtk"]
    diag = (out / "diagnostics.csv").read_text().splitlines()
    assert diag[0].split(",") == io.DIAGNOSTICS_HEADER and len(diag) == 4
    assert (out / "streamlines" / "seed_000.csv").read_text().startswith("x,y,t\n900,950,0\n")
    summary = dict(line.split() for line in (out / "summary.txt").read_text().splitlines())
    assert summary["steps"] == "3" and float(summary["max_ledger_defect"]) < 1e-12


def test_streamlines_command(tmp_path, monkeypatch):
    monkeypatch.setenv("HMMELLAM_OUTPUT_DIR", str(tmp_path))
    cfg = tmp_path / "c.cfg"
    cfg.write_text("nx = 8\nny = 8\nstreamline_duration = 50\n")
    assert main(["streamlines", str(cfg)]) == 0
    assert len(list((tmp_path / "streamlines").glob("seed_*.csv"))) == 9


def test_gen_mesh_command(tmp_path):
    path = tmp_path / "k.polymesh"
    assert main(["gen-mesh", "kershaw", "nx=8", "ny=8", "amplitude=0.6", "-o", str(path)]) == 0
    assert io.read_mesh(path).n_cells == 64
    assert main(["gen-mesh", "blob", "-o", str(path)]) == 2
    assert main(["gen-mesh", "cartesian", "depth=3", "-o", str(path)]) == 2


def test_report_commands(tmp_path, capsys):
    assert main(["report", "regularity", "-o", str(tmp_path / "r.tsv")]) == 0
    rows = [line.split("\t") for line in capsys.readouterr().out.splitlines()]
    assert rows[0] == ["mesh", "m_reg", "log2", "points_per_edge"]
    assert [r[3] for r in rows[1:]] == ["1", "3", "2", "6"]
    assert main(["report", "velocity-table"]) == 0
    rows = [line.split("\t") for line in capsys.readouterr().out.splitlines()]
    assert float(rows[1][1]) == 0.0 and all(float(r[2]) < 1e-12 for r in rows[1:])
