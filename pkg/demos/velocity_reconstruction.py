# # Velocity reconstruction on polygonal meshes
#
# The pressure solve returns one normal flux per cell edge.  Tracking needs a
# pointwise velocity, so every cell is cut into triangles around its centroid
# and an RT0 field is built on them.  The fluxes through the internal spokes
# are fixed up to one constant per cell; this script compares the two ways of
# choosing it.
#
# Run from the repository root: `python3 demos/velocity_reconstruction.py`.

# +
import numpy as np

from hmmellam.mesh import build_distorted, mesh_regularity, subtriangulate
from hmmellam.reports import format_table, reference_mesh, regularity_table, velocity_table
from hmmellam.velocity import cell_reconstruction_error, exact_fluxes, reconstruct, relative_l2_error
# -

# ## A constant field on four mesh families
#
# The fluxes of `V = (0, 1)` are exact, so any error comes from the closure.
# The minimal-norm closure (KR) only recovers `V` on cells whose centroid
# weights are uniform; the consistent closure (C) is exact everywhere.

print(format_table(["mesh", "KR", "C"], velocity_table()))

# ## Where KR goes wrong
#
# Per-cell errors on the Kershaw mesh show that the worst cells are the most
# sheared ones.

mesh = reference_mesh("kershaw")
st = subtriangulate(mesh)
errs = np.array([cell_reconstruction_error(mesh, st, k, closure="KR") for k in range(mesh.n_cells)])
worst = np.argsort(errs)[-3:][::-1]
for k in worst:
    print(f"cell {k:3d}  KR error {errs[k]:.3f}  vertices {mesh.cell_sizes[k]}  "
          f"aspect {mesh.diameters[k] ** 2 / mesh.areas[k]:.1f}")

# ## Affine fields
#
# RT0 fields `a x + b` are reproduced by the C closure for any `a`.

F = exact_fluxes(mesh, 0.4, (1.0, -2.0))
field = reconstruct(mesh, st, F, "C")
print("max |a - 0.4| =", np.abs(field.a - 0.4).max())
print("relative L2 error:", relative_l2_error(field, lambda x: 0.4 * x + np.array([1.0, -2.0])))

# ## Mesh regularity and tracking resolution
#
# The number of traced points per edge grows with `log2` of the mesh
# regularity `max diam(K)^2 / |K|`.

print(format_table(["mesh", "m_reg", "log2", "points_per_edge"], regularity_table()))
for amp in (0.2, 0.4, 0.6):
    m = build_distorted("kershaw", 16, 16, 1, 1, amplitude=amp)
    print(f"kershaw amplitude {amp}: m_reg = {mesh_regularity(m):.2f}")
