"""Characteristic (ELLAM) advection: traceback polygons, overlaps and source terms.

Every cell ``K`` is approximated backwards in time by the polygon through the
traced images of its vertices and of ``n`` equispaced points per edge.  The
advected mass of ``K`` is ``sum_M phi_M |K^ ∩ M| c_M``.  Injection cells use
an exact exponential decay for the part of the injected volume that stays in
the cell and spread the rest over the cells covered by the forward image of
the injection cell.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .mesh import GridIndex, cell_regularity, mesh_regularity
from .polygon import clip_convex, dedupe, is_simple, signed_area
from .tracking import BACKWARD, FORWARD

log = logging.getLogger(__name__)

MAX_RETRIES = 3


class EllamError(RuntimeError):
    """Raised when a traced polygon stays self-intersecting; reduce the time step."""


def points_per_edge(mesh, k, well_cell=False):
    """``ceil(log2 m)`` with ``m`` the mesh regularity for well cells, else the cell's.

    At least one point per edge.
    """
    m = mesh_regularity(mesh) if well_cell else cell_regularity(mesh, k)
    return max(1, math.ceil(math.log2(m) - 1e-9))


def edge_point_counts(mesh, well_cells=(), override=None):
    """Points per edge, the larger of the two owners' counts."""
    if override is not None:
        return np.full(mesh.n_edges, int(override), dtype=int)
    reg = cell_regularity(mesh)
    per_cell = np.maximum(1, np.ceil(np.log2(reg) - 1e-9)).astype(int)
    wells = np.asarray(list(well_cells), dtype=int)
    if len(wells):
        per_cell[wells] = points_per_edge(mesh, 0, well_cell=True)
    owners = mesh.edge_cells
    n = per_cell[owners[:, 0]]
    inner = owners[:, 1] >= 0
    n[inner] = np.maximum(n[inner], per_cell[owners[inner, 1]])
    return n


@dataclass
class TracebackPolygon:
    """Traced image of a cell; ``overlaps`` maps cell ids to intersection areas."""

    owner: int
    points: list
    area: float
    overlaps: dict = field(default_factory=dict)


def source_weight(alpha):
    """``w = 1 / (1 - exp(-alpha)) - 1 / alpha`` for ``alpha > 0``."""
    alpha = float(alpha)
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    if alpha < 1e-4:
        return 0.5 + alpha / 12.0 - alpha ** 3 / 720.0
    return 1.0 / -math.expm1(-alpha) - 1.0 / alpha


def source_alpha(rate, porosity, area, dt):
    """``alpha = dt * int_E q / int_E phi``."""
    return dt * rate / (porosity * area)


class OverlapIntegrator:
    """Clips polygons against the cells of a mesh."""

    def __init__(self, mesh, subtri):
        self.mesh = mesh
        self.subtri = subtri
        self.index = GridIndex(mesh.cell_bounding_boxes())
        self.clippers = []
        for k in range(mesh.n_cells):
            pts = mesh.vertices[mesh.cell_vertices(k)]
            d = np.roll(pts, -1, axis=0) - pts
            cross = d[:, 0] * np.roll(d[:, 1], -1) - d[:, 1] * np.roll(d[:, 0], -1)
            if np.all(cross >= -1e-12 * (d ** 2).sum(axis=1).max()):
                self.clippers.append([[tuple(p) for p in pts.tolist()]])
            else:
                s = mesh.cell_slice(k)
                self.clippers.append([[tuple(p) for p in tri] for tri in subtri.vertices[s].tolist()])

    def overlaps(self, poly):
        """``{M: |poly ∩ M|}`` for cells with a positive intersection."""
        xs = [p[0] for p in poly]
        ys = [p[1] for p in poly]
        out = {}
        for m in self.index.query(min(xs), min(ys), max(xs), max(ys)):
            area = 0.0
            for clipper in self.clippers[m]:
                area += signed_area(clip_convex(poly, clipper))
            if area > 0.0:
                out[m] = area
        return out


class Ellam:
    """Per-mesh driver of traceback construction for a given tracker."""

    def __init__(self, mesh, subtri, well_cells=(), points_override=None):
        self.mesh = mesh
        self.subtri = subtri
        self.well_cells = sorted(set(int(k) for k in well_cells))
        self.counts = edge_point_counts(mesh, self.well_cells, points_override)
        self.integrator = OverlapIntegrator(mesh, subtri)
        self.tol = 1e-12 * mesh.domain_diameter

    def _edge_points(self, e, n):
        p, q = self.mesh.vertices[self.mesh.edges[e]]
        return [p + (q - p) * (j / (n + 1)) for j in range(1, n + 1)]

    def _trace_cell_points(self, tracker, dt, direction, k, counts, cache):
        """Traced polygon loop of cell ``k``; shared points are cached in ``cache``."""
        m = self.mesh
        out = []
        for f in range(m.cell_ptr[k], m.cell_ptr[k + 1]):
            v_prev = m.cell_nodes[m.prev_node[f]]
            key = ("v", v_prev)
            if key not in cache:
                cache[key] = tracker.trace(m.vertices[v_prev], dt, direction, start=("point", v_prev))
            out.append(cache[key])
            e = m.cell_edges[f]
            n = counts(e)
            key = ("e", e, n)
            if key not in cache:
                start = tracker.edge_start(f if m.cell_edge_sign[f] > 0 else m.cell_edge_twin[f], direction)
                cache[key] = [tracker.trace(p, dt, direction, start=("triangle", start))
                              for p in self._edge_points(e, n)]
            pts = cache[key]
            out.extend(pts if m.cell_edge_sign[f] > 0 else pts[::-1])
        return out

    def trace_polygon(self, tracker, dt, k, direction=BACKWARD, cache=None):
        """Traced polygon of cell ``k`` with self-intersection retries."""
        cache = {} if cache is None else cache
        base = self.counts
        for attempt in range(MAX_RETRIES + 1):
            factor = 2 ** attempt
            pts = self._trace_cell_points(tracker, dt, direction, k, lambda e: base[e] * factor, cache)
            pts = dedupe(pts, self.tol)
            if is_simple(pts):
                return TracebackPolygon(k, pts, signed_area(pts))
            log.info("cell %d: traced polygon self-intersects; retrying with %d points per edge",
                     k, base[self.mesh.cell_edges[self.mesh.cell_slice(k)]].max() * 2 * factor)
        raise EllamError(f"traced polygon of cell {k} self-intersects after {MAX_RETRIES} retries; reduce the time step")

    def tracebacks(self, tracker, dt):
        """Traceback polygons of all cells with their overlaps, and the overlap matrix."""
        cache = {}
        polys = []
        rows, cols, vals = [], [], []
        for k in range(self.mesh.n_cells):
            poly = self.trace_polygon(tracker, dt, k, BACKWARD, cache)
            poly.overlaps = self.integrator.overlaps(poly.points)
            polys.append(poly)
            for m_, a in poly.overlaps.items():
                rows.append(k)
                cols.append(m_)
                vals.append(a)
        n = self.mesh.n_cells
        O = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
        return polys, O

    def trace_forward(self, tracker, dt, k):
        """Forward image of cell ``k`` with its overlaps."""
        poly = self.trace_polygon(tracker, dt, k, FORWARD, {})
        poly.overlaps = self.integrator.overlaps(poly.points)
        return poly


@dataclass
class SourceShare:
    """Per-cell source data: injected mass ``rhs``, implicit ``production``
    coefficient ``dt * int_K q^-``, and ``alpha``, ``w`` of the injection cell
    feeding the cell (0 where none), plus cells with a fixed value."""

    rhs: np.ndarray
    production: np.ndarray
    alpha: np.ndarray
    w: np.ndarray
    fixed: np.ndarray


def source_shares(mesh, rates, dt, forward=None, mode="paper"):
    """Source contributions for one step.

    ``rates`` are per-cell integrated rates (positive for injection).
    ``forward`` maps every injection cell to its forward polygon (with overlaps).
    In ``paper`` mode an injection cell keeps ``dt Q (w e^-a + 1 - w)`` and the
    cells covered by its forward image share ``w dt Q (1 - e^-a)``; in ``AW11``
    mode they share ``w dt Q`` and the injection cell is held at 1.
    """
    n = mesh.n_cells
    rates = np.asarray(rates, dtype=float)
    rhs = np.zeros(n)
    alpha_k = np.zeros(n)
    w_k = np.zeros(n)
    fixed = np.full(n, np.nan)
    production = dt * np.maximum(-rates, 0.0)
    if mode not in ("paper", "AW11"):
        raise ValueError(f"unknown source mode {mode!r}")
    for E in np.flatnonzero(rates > 0):
        Q = rates[E]
        alpha = source_alpha(Q, mesh.porosity[E], mesh.areas[E], dt)
        w = source_weight(alpha)
        decay = math.exp(-alpha)
        alpha_k[E], w_k[E] = alpha, w
        if mode == "paper":
            rhs[E] += dt * Q * (w * decay + 1.0 - w)
            spread = w * dt * Q * (1.0 - decay)
        else:
            fixed[E] = 1.0
            spread = w * dt * Q
        ov = {} if forward is None else {k: a for k, a in forward[E].overlaps.items() if k != E}
        total = sum(ov.values())
        if spread > 0.0 and total <= 0.0:
            raise EllamError(f"forward image of injection cell {E} does not leave the cell")
        for k, a in ov.items():
            rhs[k] += spread * a / total
            if alpha_k[k] == 0.0:
                alpha_k[k], w_k[k] = alpha, w
    return SourceShare(rhs, production, alpha_k, w_k, fixed)


def advect(mesh, c_prev, overlap, rhs):
    """``phi_K |K| c~_K = sum_M phi_M |K^ ∩ M| c_M + rhs_K``."""
    mass = overlap @ (mesh.porosity * np.asarray(c_prev, dtype=float))
    return (mass + rhs) / (mesh.porosity * mesh.areas)
