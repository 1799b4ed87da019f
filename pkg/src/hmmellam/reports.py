"""Reconstruction-error and mesh-regularity tables for the standard mesh families."""
import math

import numpy as np

from .ellam import points_per_edge
from .mesh import build_cartesian, build_distorted, mesh_regularity, subtriangulate
from .velocity import exact_fluxes, reconstruct, relative_l2_error

MESH_KINDS = ("cartesian", "hexahedral", "nonconforming", "kershaw")


def reference_mesh(kind, n=16, length=1.0):
    if kind == "cartesian":
        return build_cartesian(n, n, length, length)
    return build_distorted(kind, n, n, length, length)


def velocity_table(kinds=MESH_KINDS, velocity=(0.0, 1.0), n=16):
    """Rows ``(kind, KR error, C error)``: relative L2 error over the whole mesh
    of the field reconstructed from the exact fluxes of a constant velocity."""
    V = np.asarray(velocity, dtype=float)
    rows = []
    for kind in kinds:
        mesh = reference_mesh(kind, n)
        st = subtriangulate(mesh)
        F = exact_fluxes(mesh, 0.0, V)
        errs = {}
        for closure in ("KR", "C"):
            field = reconstruct(mesh, st, F, closure)
            errs[closure] = relative_l2_error(field, lambda x: np.broadcast_to(V, x.shape))
        rows.append((kind, errs["KR"], errs["C"]))
    return rows


def regularity_table(kinds=MESH_KINDS, n=16):
    """Rows ``(kind, m_reg, log2 m_reg, points per edge of a well cell)``."""
    rows = []
    for kind in kinds:
        mesh = reference_mesh(kind, n)
        m = mesh_regularity(mesh)
        rows.append((kind, m, math.log2(m), points_per_edge(mesh, 0, well_cell=True)))
    return rows


def format_table(header, rows):
    out = ["\t".join(header)]
    for row in rows:
        out.append("\t".join(v if isinstance(v, str) else ("%.4e" % v if isinstance(v, float) else str(v))
                             for v in row))
    return "\n".join(out) + "\n"
