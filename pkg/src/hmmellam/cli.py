"""Command line entry point.

    hmmellam run CONFIG
    hmmellam streamlines CONFIG
    hmmellam gen-mesh KIND [key=value ...] [-o FILE]
    hmmellam report velocity-table|regularity [-o FILE]

Configuration files hold ``key = value`` lines; ``#`` starts a comment.
``preset = peaceman-standard`` or ``peaceman-inhomogeneous`` loads the
standard test data, which later keys override.  The environment variable
``HMMELLAM_OUTPUT_DIR`` overrides ``output_dir``.

Exit codes: 0 success, 2 configuration error, 3 solver error, 4 tracking error.
"""
import argparse
import json
import logging
import os
import sys
import time
from dataclasses import fields, replace
from pathlib import Path

import numpy as np

from . import io
from .driver import Simulation, SimulationConfig, Well, inhomogeneous_config, standard_config, streamlines
from .ellam import EllamError
from .hmm import SolverError
from .mesh import MeshError, build_cartesian, build_distorted
from .reports import format_table, regularity_table, velocity_table
from .tracking import TrackingError

OUTPUT_ENV = "HMMELLAM_OUTPUT_DIR"
PRESETS = {"peaceman-standard": standard_config, "peaceman-inhomogeneous": inhomogeneous_config}
RUN_KEYS = {"output_dir": "output", "output_every": 10, "seed": 0, "mesh_file": None,
            "streamline_seeds": None, "streamline_duration": 3600.0}


class ConfigError(ValueError):
    pass


def _convert(name, text, default):
    kind = type(default) if default is not None else None
    if name == "wells":
        wells = []
        for item in text.split(";"):
            if item.strip():
                x, y, r = (float(v) for v in item.split(","))
                wells.append(Well(x, y, r))
        return wells
    if name in ("amplitude", "points_per_edge"):
        return None if text.lower() == "none" else (int(text) if name == "points_per_edge" else float(text))
    if name == "streamline_seeds":
        return [tuple(float(v) for v in item.split(",")) for item in text.split(";") if item.strip()]
    if kind is bool:
        if text.lower() not in ("true", "false", "1", "0", "yes", "no"):
            raise ConfigError(f"{name}: expected a boolean, got {text!r}")
        return text.lower() in ("true", "1", "yes")
    if kind is int:
        return int(text)
    if kind is float:
        return float(text)
    return text


def parse_config(text):
    """Returns ``(SimulationConfig, run options)``."""
    entries = []
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        entries.append((n, key, value))
    config = SimulationConfig()
    for n, key, value in entries:
        if key == "preset":
            if value not in PRESETS:
                raise ConfigError(f"line {n}: unknown preset {value!r}")
            config = PRESETS[value]()
    sim_defaults = {f.name: getattr(config, f.name) for f in fields(SimulationConfig)}
    sim_defaults["mesh"] = config.mesh_kind
    updates, options = {}, dict(RUN_KEYS)
    for n, key, value in entries:
        if key == "preset":
            continue
        try:
            if key in sim_defaults:
                name = "mesh_kind" if key == "mesh" else key
                updates[name] = _convert(name, value, getattr(SimulationConfig(), name))
            elif key in RUN_KEYS:
                options[key] = _convert(key, value, RUN_KEYS[key])
            else:
                raise ConfigError(f"line {n}: unknown key {key!r}")
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"line {n}: bad value for {key}: {exc}") from exc
    config = replace(config, **updates)
    try:
        config.validate()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if os.environ.get(OUTPUT_ENV):
        options["output_dir"] = os.environ[OUTPUT_ENV]
    return config, options


def _load(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return parse_config(text)


def _simulation(config, options):
    mesh = None
    if options["mesh_file"]:
        mesh = io.read_mesh(options["mesh_file"])
    return Simulation(config, mesh)


def default_seeds(length=1000.0, n=9, radius=0.1):
    """Seeds on a quarter circle around the injection corner ``(length, length)``."""
    angles = np.linspace(1.05, 1.45, n) * np.pi
    return [(length * (1.0 + radius * np.cos(a)), length * (1.0 + radius * np.sin(a))) for a in angles]


def _write_streamlines(sim, field_, options, out):
    seeds = options["streamline_seeds"] or default_seeds(sim.config.length)
    lines = streamlines(field_, sim.mesh.porosity, seeds, options["streamline_duration"])
    d = out / "streamlines"
    d.mkdir(parents=True, exist_ok=True)
    for i, line in enumerate(lines):
        io.write_rows(d / f"seed_{i:03d}.csv", io.STREAMLINE_HEADER, [tuple(map(float, p)) for p in line])
    return lines


def cmd_run(args):
    config, options = _load(args.config)
    out = Path(options["output_dir"])
    (out / "snapshots").mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    sim = _simulation(config, options)
    every = max(1, int(options["output_every"]))

    def snapshot(state):
        name = out / "snapshots" / f"c_{state.n:05d}"
        io.write_snapshot(sim.mesh, state.c.cell, name.with_suffix(".csv"))
        io.write_vtk(sim.mesh, name.with_suffix(".vtk"), {"c": state.c.cell}, f"t = {state.time} days")

    state = sim.initial_state()
    snapshot(state)

    def callback(st, diag):
        if st.n % every == 0 or st.n == config.n_steps:
            snapshot(st)

    try:
        state = sim.run(callback=callback)
    finally:
        io.write_rows(out / "diagnostics.csv", io.DIAGNOSTICS_HEADER,
                      [tuple(getattr(d, h) for h in io.DIAGNOSTICS_HEADER) for d in sim.history])
    if state.field is not None:
        _write_streamlines(sim, state.field, options, out)
    h = sim.history
    with open(out / "summary.txt", "w") as f:
        f.write(f"steps {state.n}\n")
        f.write(f"final_time {state.time:.17g}\n")
        f.write(f"recovered_domain {h[-1].recovered if h else 0.0:.17g}\n")
        f.write(f"recovered_pore {h[-1].recovered_pore if h else 0.0:.17g}\n")
        f.write(f"c_min {min((d.c_min for d in h), default=0.0):.17g}\n")
        f.write(f"c_max {max((d.c_max for d in h), default=0.0):.17g}\n")
        f.write(f"max_ledger_defect {max((d.ledger_defect for d in h), default=0.0):.17g}\n")
        f.write(f"wall_time {time.perf_counter() - t0:.3f}\n")
    print(f"wrote {out}")
    return 0


def cmd_streamlines(args):
    config, options = _load(args.config)
    out = Path(options["output_dir"])
    sim = _simulation(config, options)
    _, _, field_, _ = sim.velocity(np.zeros(sim.mesh.n_cells))
    lines = _write_streamlines(sim, field_, options, out)
    print(f"wrote {len(lines)} streamlines to {out / 'streamlines'}")
    return 0


def cmd_gen_mesh(args):
    params = {"nx": 16, "ny": 16, "lx": 1000.0, "ly": 1000.0, "amplitude": None,
              "porosity": 0.1, "permeability": 80.0}
    for item in args.params:
        if "=" not in item:
            raise ConfigError(f"expected key=value, got {item!r}")
        k, v = item.split("=", 1)
        if k not in params:
            raise ConfigError(f"unknown mesh parameter {k!r}")
        params[k] = int(v) if k in ("nx", "ny") else (None if v.lower() == "none" else float(v))
    common = dict(porosity=params["porosity"], permeability=params["permeability"])
    if args.kind == "cartesian":
        mesh = build_cartesian(params["nx"], params["ny"], params["lx"], params["ly"], **common)
    elif args.kind in ("kershaw", "hexahedral", "nonconforming"):
        mesh = build_distorted(args.kind, params["nx"], params["ny"], params["lx"], params["ly"],
                               amplitude=params["amplitude"], **common)
    else:
        raise ConfigError(f"unknown mesh kind {args.kind!r}")
    path = args.output or f"{args.kind}.polymesh"
    io.write_mesh(mesh, path)
    print(f"wrote {path} ({mesh})")
    return 0


def cmd_report(args):
    if args.table == "velocity-table":
        text = format_table(["mesh", "KR", "C"], velocity_table())
    else:
        text = format_table(["mesh", "m_reg", "log2", "points_per_edge"], regularity_table())
    if args.output:
        Path(args.output).write_text(text)
    sys.stdout.write(text)
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="hmmellam", description=__doc__.split("\n")[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a simulation")
    r.add_argument("config")
    r.set_defaults(func=cmd_run)
    s = sub.add_parser("streamlines", help="streamlines of the initial velocity field")
    s.add_argument("config")
    s.set_defaults(func=cmd_streamlines)
    g = sub.add_parser("gen-mesh", help="write a generated mesh")
    g.add_argument("kind")
    g.add_argument("params", nargs="*")
    g.add_argument("-o", "--output")
    g.set_defaults(func=cmd_gen_mesh)
    t = sub.add_parser("report", help="reference tables")
    t.add_argument("table", choices=["velocity-table", "regularity"])
    t.add_argument("-o", "--output")
    t.set_defaults(func=cmd_report)
    return p


def _error(code, kind, exc):
    sys.stderr.write(json.dumps({"error": kind, "message": str(exc), "exit_code": code}) + "\n")
    return code


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (ConfigError, MeshError) as exc:
        return _error(2, "config", exc)
    except SolverError as exc:
        return _error(3, "solver", exc)
    except (TrackingError, EllamError) as exc:
        return _error(4, "tracking", exc)


if __name__ == "__main__":
    sys.exit(main())
