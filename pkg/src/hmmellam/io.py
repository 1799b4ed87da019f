"""Plain-text mesh files, legacy VTK and CSV output."""
import csv

import numpy as np

from .mesh import MeshError, PolygonalMesh

HEADER = "POLYMESH 2D"


def _g(x):
    return "%.17g" % x


def write_mesh(mesh, path):
    """Write vertices, cell loops and per-cell ``PHI`` and ``K`` blocks."""
    with open(path, "w") as f:
        f.write(HEADER + "\n")
        f.write(f"VERTICES {mesh.n_vertices}\n")
        for x, y in mesh.vertices:
            f.write(f"{_g(x)} {_g(y)}\n")
        f.write(f"CELLS {mesh.n_cells}\n")
        for k in range(mesh.n_cells):
            loop = mesh.cell_vertices(k)
            f.write(" ".join(str(v) for v in [len(loop), *loop]) + "\n")
        f.write("PHI\n")
        for v in mesh.porosity:
            f.write(_g(v) + "\n")
        f.write("K\n")
        for t in mesh.permeability:
            f.write(" ".join(_g(v) for v in t.ravel()) + "\n")


def read_mesh(path):
    with open(path) as f:
        lines = [ln.split("#", 1)[0].strip() for ln in f]
    lines = [ln for ln in lines if ln]
    if not lines or lines[0] != HEADER:
        raise MeshError(f"{path}: missing '{HEADER}' header")
    pos = 1

    def block(name):
        nonlocal pos
        parts = lines[pos].split()
        if parts[0] != name:
            raise MeshError(f"{path}: expected {name} block, found {lines[pos]!r}")
        pos += 1
        return int(parts[1]) if len(parts) > 1 else None

    try:
        nv = block("VERTICES")
        verts = np.array([[float(v) for v in lines[pos + i].split()] for i in range(nv)])
        pos += nv
        nc = block("CELLS")
        cells = []
        for i in range(nc):
            parts = [int(v) for v in lines[pos + i].split()]
            if parts[0] != len(parts) - 1:
                raise MeshError(f"{path}: cell {i} declares {parts[0]} vertices but lists {len(parts) - 1}")
            cells.append(parts[1:])
        pos += nc
        phi, perm = 1.0, 1.0
        while pos < len(lines):
            name = lines[pos].split()[0]
            block(name)
            if name == "PHI":
                phi = np.array([float(lines[pos + i]) for i in range(nc)])
            elif name == "K":
                perm = np.array([[float(v) for v in lines[pos + i].split()] for i in range(nc)]).reshape(nc, 2, 2)
            else:
                raise MeshError(f"{path}: unknown block {name}")
            pos += nc
    except (IndexError, ValueError) as exc:
        raise MeshError(f"{path}: malformed mesh file ({exc})") from exc
    return PolygonalMesh(verts, cells, phi, perm)


def write_vtk(mesh, path, cell_data=None, title="hmmellam"):
    """Legacy ASCII VTK polydata with optional cell scalars ``{name: values}``."""
    with open(path, "w") as f:
        f.write("# vtk DataFile Version 3.0\n")
        f.write(title + "\nASCII\nDATASET POLYDATA\n")
        f.write(f"POINTS {mesh.n_vertices} double\n")
        for x, y in mesh.vertices:
            f.write(f"{_g(x)} {_g(y)} 0\n")
        size = int(mesh.cell_sizes.sum() + mesh.n_cells)
        f.write(f"POLYGONS {mesh.n_cells} {size}\n")
        for k in range(mesh.n_cells):
            loop = mesh.cell_vertices(k)
            f.write(" ".join(str(v) for v in [len(loop), *loop]) + "\n")
        if cell_data:
            f.write(f"CELL_DATA {mesh.n_cells}\n")
            for name, values in cell_data.items():
                f.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
                for v in values:
                    f.write(_g(v) + "\n")


SNAPSHOT_HEADER = ["cell", "x", "y", "c"]
DIAGNOSTICS_HEADER = ["step", "time", "c_min", "c_max", "mass", "injected", "produced",
                      "ledger_defect", "recovered", "recovered_pore", "wall"]
STREAMLINE_HEADER = ["x", "y", "t"]


def write_snapshot(mesh, c, path):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(SNAPSHOT_HEADER)
        for k, ((x, y), v) in enumerate(zip(mesh.centers, c)):
            w.writerow([k, _g(x), _g(y), _g(v)])


def write_rows(path, header, rows):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        for row in rows:
            w.writerow([_g(v) if isinstance(v, float) else v for v in row])
