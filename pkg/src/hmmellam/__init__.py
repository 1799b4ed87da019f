"""HMM-ELLAM simulation of miscible displacement on 2D polygonal meshes."""
from .mesh import (PolygonalMesh, SubTriangulation, MeshError, build_cartesian, build_distorted,
                   subtriangulate, mesh_regularity, cell_regularity)
from .hmm import DofVector, FluxSet, SolverError, solve_pressure, solve_diffusion_step

__all__ = [
    "PolygonalMesh", "SubTriangulation", "MeshError", "build_cartesian", "build_distorted",
    "subtriangulate", "mesh_regularity", "cell_regularity",
    "DofVector", "FluxSet", "SolverError", "solve_pressure", "solve_diffusion_step",
]
