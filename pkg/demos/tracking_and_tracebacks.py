# # Streamlines and traceback regions
#
# Within one triangle the reconstructed velocity is affine, so a particle
# path is an exponential ray with a closed-form exit time.  Chaining
# triangles gives exact streamlines of the discrete field.  Tracing the
# boundary of a cell backwards over one time step gives its traceback
# polygon, whose overlaps with the mesh carry the advected mass.
#
# Run from the repository root: `python3 demos/tracking_and_tracebacks.py`.
# Figures are written next to the script when matplotlib is installed.

# +
from pathlib import Path

import numpy as np

from hmmellam.driver import Simulation, standard_config, streamlines
from hmmellam.tracking import BACKWARD, Tracker

try:
    import matplotlib.pyplot as plt
except ImportError:
    plt = None
OUT = Path(__file__).with_suffix("")
# -

# ## Initial flow field on a Kershaw mesh
#
# With `c = 0` the viscosity is uniform and the flow runs from the injector at
# `(1000, 1000)` to the producer at the origin.

sim = Simulation(standard_config(mesh_kind="kershaw"))
p, F, field, U = sim.velocity(np.zeros(sim.mesh.n_cells))
print(sim.mesh, "max |F| =", np.abs(F.values).max())

angles = np.linspace(1.05, 1.45, 9) * np.pi
seeds = [(1000 + 100 * np.cos(a), 1000 + 100 * np.sin(a)) for a in angles]
lines = streamlines(field, sim.mesh.porosity, seeds, 3600.0)
for s, line in zip(seeds, lines):
    x, y, t = line[-1]
    print(f"seed ({s[0]:7.2f}, {s[1]:7.2f}) -> ({x:7.2f}, {y:7.2f}) after {len(line) - 1} transitions")

# ## Reversibility
#
# Away from the wells the field is divergence-free, so tracing forward and
# then backward returns to the start.

tracker = Tracker(field, sim.mesh.porosity)
x0 = (400.0, 620.0)
x1 = tracker.trace(x0, 200.0)
x2 = tracker.trace(x1, 200.0, BACKWARD)
print("round trip error:", np.hypot(x2[0] - x0[0], x2[1] - x0[1]), "ft")

# ## Traceback polygons
#
# Shared boundary points are traced once, so the polygons of neighbouring
# cells share edges and tile their union.

polys, O = sim.ellam.tracebacks(tracker, sim.config.dt)
cover = np.asarray(O.sum(axis=0)).ravel() / sim.mesh.areas
print(f"largest covered fraction of any cell: {cover.max():.12f}")
ratios = np.array([pl.area for pl in polys]) / sim.mesh.areas
print(f"traceback area / cell area: min {ratios.min():.4f}, max {ratios.max():.4f}")

if plt is not None:
    fig, ax = plt.subplots(1, 2, figsize=(11, 5))
    for k in range(sim.mesh.n_cells):
        loop = sim.mesh.vertices[sim.mesh.cell_vertices(k)]
        for a in ax:
            a.fill(*loop.T, fill=False, lw=0.3, color="0.6")
    for line in lines:
        ax[0].plot([q[0] for q in line], [q[1] for q in line], lw=1)
    for pl in polys[::7]:
        pts = np.array(pl.points)
        ax[1].fill(*pts.T, alpha=0.4)
    ax[0].set_title("streamlines, 3600 days")
    ax[1].set_title("traceback polygons, one step")
    for a in ax:
        a.set_aspect("equal")
    fig.savefig(f"{OUT}.png", dpi=120)
    print("wrote", f"{OUT}.png")
