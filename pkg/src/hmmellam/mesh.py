"""Polygonal meshes, their triangular subdivisions and regularity measures.

Cells are star-shaped polygons given by counter-clockwise vertex loops.  The
local edge ``j`` of a cell with loop ``(v_0, ..., v_{r-1})`` is the segment
``[v_{j-1}, v_j]`` (indices modulo ``r``), and the triangle ``j`` of the
subdivision is ``(x_K, v_{j-1}, v_j)``.  Cell-edge pairs are stored in a flat
layout: ``cell_ptr[K] + j`` indexes the local edge ``j`` of cell ``K`` and also
the triangle ``j`` of ``K``.

Hanging nodes are plain vertices of the coarse cell's loop, so every edge is a
segment between two consecutive loop vertices shared by at most two cells.
"""
import math

import numpy as np


class MeshError(ValueError):
    """Raised for invalid mesh geometry or topology."""


def polygon_signed_area(pts):
    pts = np.asarray(pts, dtype=float)
    pts = pts - pts[0]
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def polygon_centroid(pts):
    pts = np.asarray(pts, dtype=float)
    origin = pts[0]
    pts = pts - origin
    x, y = pts[:, 0], pts[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = 0.5 * cross.sum()
    cx = ((x + xn) * cross).sum() / (6.0 * area)
    cy = ((y + yn) * cross).sum() / (6.0 * area)
    return origin + np.array([cx, cy])


def _as_tensors(value, n):
    value = np.asarray(value, dtype=float)
    if value.ndim == 0:
        return np.broadcast_to(value * np.eye(2), (n, 2, 2)).copy()
    if value.shape == (2, 2):
        return np.broadcast_to(value, (n, 2, 2)).copy()
    if value.shape == (n,):
        return value[:, None, None] * np.eye(2)
    if value.shape == (n, 2, 2):
        return value.copy()
    raise MeshError(f"cannot interpret permeability of shape {value.shape}")


class GridIndex:
    """Uniform bucket grid over axis-aligned bounding boxes."""

    def __init__(self, boxes, n_bins=None):
        boxes = np.asarray(boxes, dtype=float)
        self.lo = boxes[:, :2].min(axis=0)
        self.hi = boxes[:, 2:].max(axis=0)
        n = len(boxes)
        if n_bins is None:
            n_bins = max(1, int(math.sqrt(n)))
        span = np.maximum(self.hi - self.lo, 1e-300)
        self.n_bins = n_bins
        self.h = span / n_bins
        self.boxes = boxes
        self.buckets = [[] for _ in range(n_bins * n_bins)]
        i0 = self._bin(boxes[:, 0], 0)
        i1 = self._bin(boxes[:, 2], 0)
        j0 = self._bin(boxes[:, 1], 1)
        j1 = self._bin(boxes[:, 3], 1)
        for item in range(n):
            for i in range(i0[item], i1[item] + 1):
                for j in range(j0[item], j1[item] + 1):
                    self.buckets[i * n_bins + j].append(item)

    def _bin(self, coord, axis):
        idx = np.floor((np.asarray(coord) - self.lo[axis]) / self.h[axis]).astype(int)
        return np.clip(idx, 0, self.n_bins - 1)

    def query(self, xmin, ymin, xmax, ymax):
        """Items whose box intersects the query box."""
        n = self.n_bins
        i0 = min(max(int((xmin - self.lo[0]) // self.h[0]), 0), n - 1)
        i1 = min(max(int((xmax - self.lo[0]) // self.h[0]), 0), n - 1)
        j0 = min(max(int((ymin - self.lo[1]) // self.h[1]), 0), n - 1)
        j1 = min(max(int((ymax - self.lo[1]) // self.h[1]), 0), n - 1)
        found = set()
        for i in range(i0, i1 + 1):
            for j in range(j0, j1 + 1):
                found.update(self.buckets[i * n + j])
        boxes = self.boxes
        return sorted(
            k for k in found
            if boxes[k, 0] <= xmax and boxes[k, 2] >= xmin
            and boxes[k, 1] <= ymax and boxes[k, 3] >= ymin
        )


class PolygonalMesh:
    """A 2D polygonal mesh with per-cell porosity and permeability.

    Parameters
    ----------
    vertices : (nv, 2) array
    cells : sequence of vertex-index sequences
        Loops may be given in either orientation; they are stored
        counter-clockwise.
    porosity : scalar or (nc,) array
    permeability : scalar, (2, 2), (nc,) or (nc, 2, 2)
    """

    def __init__(self, vertices, cells, porosity=1.0, permeability=1.0):
        self.vertices = np.array(vertices, dtype=float)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 2:
            raise MeshError("vertices must be an (n, 2) array")
        loops = []
        for loop in cells:
            loop = [int(v) for v in loop]
            if len(loop) < 3:
                raise MeshError("a cell needs at least 3 vertices")
            if len(set(loop)) != len(loop):
                raise MeshError(f"repeated vertex in cell loop {loop}")
            if polygon_signed_area(self.vertices[loop]) < 0:
                loop = loop[::-1]
            loops.append(loop)
        self.n_vertices = len(self.vertices)
        self.n_cells = len(loops)
        sizes = np.array([len(lp) for lp in loops], dtype=int)
        self.cell_sizes = sizes
        self.cell_ptr = np.concatenate([[0], np.cumsum(sizes)])
        self.cell_nodes = np.array([v for lp in loops for v in lp], dtype=int)
        self.porosity = np.broadcast_to(np.asarray(porosity, dtype=float), (self.n_cells,)).copy()
        self.permeability = _as_tensors(permeability, self.n_cells)
        self._build_geometry(loops)
        self._build_edges(loops)
        self._check()

    # -- construction -------------------------------------------------------
    def _build_geometry(self, loops):
        nc = self.n_cells
        self.areas = np.empty(nc)
        self.centers = np.empty((nc, 2))
        self.diameters = np.empty(nc)
        for k, lp in enumerate(loops):
            pts = self.vertices[lp]
            self.areas[k] = polygon_signed_area(pts)
            self.centers[k] = polygon_centroid(pts)
            diff = pts[:, None, :] - pts[None, :, :]
            self.diameters[k] = math.sqrt((diff ** 2).sum(axis=2).max())
        nce = len(self.cell_nodes)
        self.cell_of = np.repeat(np.arange(nc), self.cell_sizes)
        self.local_index = np.arange(nce) - self.cell_ptr[self.cell_of]
        prev = self.cell_ptr[self.cell_of] + (self.local_index - 1) % self.cell_sizes[self.cell_of]
        # flat cell-edge f joins cell_nodes[prev_node[f]] -> cell_nodes[f]
        self.prev_node = prev
        a = self.vertices[self.cell_nodes[prev]]
        b = self.vertices[self.cell_nodes]
        d = b - a
        length = np.hypot(d[:, 0], d[:, 1])
        if np.any(length <= 0):
            raise MeshError("zero-length edge")
        self.cell_edge_lengths = length
        self.cell_edge_normals = np.column_stack([d[:, 1], -d[:, 0]]) / length[:, None]
        self.cell_edge_midpoints = 0.5 * (a + b)
        xk = self.centers[self.cell_of]
        self.cell_edge_distances = np.einsum("ij,ij->i", self.cell_edge_normals, self.cell_edge_midpoints - xk)
        # signed areas of (x_K, v_{j-1}, v_j)
        self.triangle_areas = 0.5 * ((a[:, 0] - xk[:, 0]) * (b[:, 1] - xk[:, 1])
                                     - (a[:, 1] - xk[:, 1]) * (b[:, 0] - xk[:, 0]))

    def _build_edges(self, loops):
        nce = len(self.cell_nodes)
        tail = self.cell_nodes[self.prev_node]
        head = self.cell_nodes
        table = {}
        edges = []
        owners = []
        cell_edges = np.empty(nce, dtype=int)
        sign = np.empty(nce, dtype=int)
        twin = np.full(nce, -1, dtype=int)
        first_flat = []
        for f in range(nce):
            key = (min(tail[f], head[f]), max(tail[f], head[f]))
            e = table.get(key)
            if e is None:
                e = len(edges)
                table[key] = e
                edges.append((tail[f], head[f]))
                owners.append([self.cell_of[f], -1])
                first_flat.append(f)
                sign[f] = 1
            else:
                if owners[e][1] != -1:
                    raise MeshError(f"edge {key} shared by more than two cells")
                if edges[e] != (head[f], tail[f]):
                    raise MeshError(f"edge {key} traversed twice in the same direction")
                owners[e][1] = self.cell_of[f]
                sign[f] = -1
                twin[f] = first_flat[e]
                twin[first_flat[e]] = f
            cell_edges[f] = e
        self.edges = np.array(edges, dtype=int)
        self.edge_cells = np.array(owners, dtype=int)
        self.n_edges = len(edges)
        self.cell_edges = cell_edges
        self.cell_edge_sign = sign
        self.cell_edge_twin = twin
        self.boundary_edges = self.edge_cells[:, 1] < 0
        p, q = self.vertices[self.edges[:, 0]], self.vertices[self.edges[:, 1]]
        d = q - p
        self.edge_lengths = np.hypot(d[:, 0], d[:, 1])
        self.edge_midpoints = 0.5 * (p + q)
        self.edge_normals = np.column_stack([d[:, 1], -d[:, 0]]) / self.edge_lengths[:, None]

    def _check(self):
        tol = 1e-12 * self.cell_edge_lengths.max() ** 2
        bad = np.flatnonzero(self.triangle_areas <= tol)
        if len(bad):
            cells = sorted(set(self.cell_of[bad].tolist()))
            raise MeshError(f"cells not star-shaped with respect to their centroid: {cells[:10]}")
        if np.any(self.porosity <= 0):
            raise MeshError("porosity must be positive")

    # -- queries ------------------------------------------------------------
    def cell_vertices(self, k):
        return self.cell_nodes[self.cell_ptr[k]:self.cell_ptr[k + 1]]

    def cell_slice(self, k):
        return slice(self.cell_ptr[k], self.cell_ptr[k + 1])

    @property
    def domain_area(self):
        """Area enclosed by the boundary edges (Green's formula)."""
        b = self.boundary_edges
        p, q = self.vertices[self.edges[b, 0]], self.vertices[self.edges[b, 1]]
        return 0.5 * float(np.sum(p[:, 0] * q[:, 1] - q[:, 0] * p[:, 1]))

    @property
    def bounding_box(self):
        lo, hi = self.vertices.min(axis=0), self.vertices.max(axis=0)
        return float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1])

    @property
    def domain_diameter(self):
        x0, y0, x1, y1 = self.bounding_box
        return math.hypot(x1 - x0, y1 - y0)

    def cell_bounding_boxes(self):
        out = np.empty((self.n_cells, 4))
        for k in range(self.n_cells):
            pts = self.vertices[self.cell_vertices(k)]
            out[k, :2] = pts.min(axis=0)
            out[k, 2:] = pts.max(axis=0)
        return out

    def find_cell(self, point):
        """Index of a cell containing ``point`` (closed cells; first match)."""
        x, y = float(point[0]), float(point[1])
        index = self._cell_index()
        for k in index.query(x, y, x, y):
            s = self.cell_slice(k)
            a = self.vertices[self.cell_nodes[self.prev_node[s]]]
            n = self.cell_edge_normals[s]
            if np.all(np.einsum("ij,ij->i", n, np.array([x, y]) - a) <= 1e-12 * self.diameters[k]):
                return k
            # non-convex cells: test the triangles
            xk = self.centers[k]
            b = self.vertices[self.cell_vertices(k)]
            for p, q in zip(a, b):
                if _in_triangle(x, y, xk, p, q):
                    return k
        raise MeshError(f"point {point} is outside the mesh")

    def _cell_index(self):
        if getattr(self, "_index", None) is None:
            self._index = GridIndex(self.cell_bounding_boxes())
        return self._index

    def with_materials(self, porosity=None, permeability=None):
        loops = [self.cell_vertices(k) for k in range(self.n_cells)]
        return PolygonalMesh(
            self.vertices, loops,
            self.porosity if porosity is None else porosity,
            self.permeability if permeability is None else permeability,
        )

    def __repr__(self):
        return f"PolygonalMesh(n_cells={self.n_cells}, n_edges={self.n_edges}, n_vertices={self.n_vertices})"


def _in_triangle(x, y, a, b, c, tol=1e-12):
    def cross(p, q):
        return (q[0] - p[0]) * (y - p[1]) - (q[1] - p[1]) * (x - p[0])
    scale = tol * ((b[0] - a[0]) ** 2 + (b[1] - a[1]) ** 2 + (c[0] - a[0]) ** 2 + (c[1] - a[1]) ** 2)
    return cross(a, b) >= -scale and cross(b, c) >= -scale and cross(c, a) >= -scale


class SubTriangulation:
    """Triangles ``(x_K, v_{j-1}, v_j)`` of every cell, in flat cell-edge order.

    Triangle edge ``k`` is the edge opposite triangle vertex ``k``: edge 0 is
    the cell edge ``sigma_j``, edge 1 the internal edge ``[v_j, x_K]`` and
    edge 2 the internal edge ``[x_K, v_{j-1}]``.
    """

    def __init__(self, mesh):
        self.mesh = mesh
        m = mesh
        nt = len(m.cell_nodes)
        self.n_triangles = nt
        self.cell = m.cell_of
        xk = m.centers[m.cell_of]
        a = m.vertices[m.cell_nodes[m.prev_node]]
        b = m.vertices[m.cell_nodes]
        self.vertices = np.stack([xk, a, b], axis=1)
        self.points = np.vstack([m.vertices, m.centers])
        self.point_ids = np.column_stack([m.n_vertices + m.cell_of, m.cell_nodes[m.prev_node], m.cell_nodes])
        self.areas = m.triangle_areas.copy()
        local = m.local_index
        ptr = m.cell_ptr[m.cell_of]
        size = m.cell_sizes[m.cell_of]
        nxt = ptr + (local + 1) % size
        prv = ptr + (local - 1) % size
        self.next = nxt
        self.prev = prv
        self.neighbors = np.column_stack([m.cell_edge_twin, nxt, prv])
        p0 = self.vertices
        p1 = np.roll(p0, -1, axis=1)
        p2 = np.roll(p0, -2, axis=1)
        d = p2 - p1  # edge opposite vertex k runs P_{k+1} -> P_{k+2}
        lengths = np.hypot(d[..., 0], d[..., 1])
        self.edge_lengths = lengths
        self.normals = np.stack([d[..., 1], -d[..., 0]], axis=-1) / lengths[..., None]
        self.offsets = np.einsum("tkj,tkj->tk", self.normals, p1)
        # internal edge sigma_j^* = [v_j, x_K]; |s*| n* = Rot(x_K - v_j), Rot = clockwise quarter turn
        r = xk - b
        self.internal_lengths = np.hypot(r[:, 0], r[:, 1])
        self.internal_normals = np.column_stack([r[:, 1], -r[:, 0]]) / self.internal_lengths[:, None]
        self.orthogonal_distances = m.cell_edge_distances.copy()
        self.boundary = m.cell_edge_twin < 0
        # point -> incident triangles
        order = np.argsort(self.point_ids.ravel(), kind="stable")
        counts = np.bincount(self.point_ids.ravel(), minlength=len(self.points))
        self.point_ptr = np.concatenate([[0], np.cumsum(counts)])
        self.point_triangles = (order // 3).astype(int)
        self.corner_points = self._domain_corners()
        self._index = None

    def _domain_corners(self):
        """Boundary vertices where the boundary turns (no-flow corners)."""
        m = self.mesh
        corners = np.zeros(len(self.points), dtype=bool)
        b = np.flatnonzero(m.boundary_edges)
        dirs = {}
        for e in b:
            p, q = m.edges[e]
            d = m.vertices[q] - m.vertices[p]
            d = d / np.hypot(*d)
            dirs.setdefault(p, []).append(d)
            dirs.setdefault(q, []).append(d)
        for v, ds in dirs.items():
            if len(ds) != 2 or abs(ds[0][0] * ds[1][1] - ds[0][1] * ds[1][0]) > 1e-10:
                corners[v] = True
        return corners

    def incident(self, point):
        return self.point_triangles[self.point_ptr[point]:self.point_ptr[point + 1]]

    def index(self):
        if self._index is None:
            v = self.vertices
            boxes = np.column_stack([v[..., 0].min(1), v[..., 1].min(1), v[..., 0].max(1), v[..., 1].max(1)])
            self._index = GridIndex(boxes)
        return self._index

    def barycentric(self, t, x):
        p0, p1, p2 = self.vertices[t]
        det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p1[1] - p0[1]) * (p2[0] - p0[0])
        l1 = ((x[0] - p0[0]) * (p2[1] - p0[1]) - (x[1] - p0[1]) * (p2[0] - p0[0])) / det
        l2 = ((p1[0] - p0[0]) * (x[1] - p0[1]) - (p1[1] - p0[1]) * (x[0] - p0[0])) / det
        return np.array([1.0 - l1 - l2, l1, l2])

    def containing(self, x, tol=1e-10):
        """Triangles whose closure contains ``x``, with barycentric coordinates."""
        x = (float(x[0]), float(x[1]))
        out = []
        for t in self.index().query(x[0], x[1], x[0], x[1]):
            lam = self.barycentric(t, x)
            if lam.min() >= -tol:
                out.append((t, lam))
        return out


def subtriangulate(mesh):
    """Split every cell into the triangles ``(x_K, v_{j-1}, v_j)``."""
    return SubTriangulation(mesh)


# -- regularity ----------------------------------------------------------------

def cell_regularity(mesh, k=None):
    """``diam(K)^2 / |K|`` for one cell, or for all cells if ``k`` is None."""
    if k is None:
        return mesh.diameters ** 2 / mesh.areas
    return float(mesh.diameters[k] ** 2 / mesh.areas[k])


def mesh_regularity(mesh):
    return float(np.max(cell_regularity(mesh)))


def _loops_regularity(vertices, loops):
    best = 0.0
    for lp in loops:
        pts = vertices[lp]
        diff = pts[:, None, :] - pts[None, :, :]
        best = max(best, (diff ** 2).sum(axis=2).max() / polygon_signed_area(pts))
    return best


# -- generators ----------------------------------------------------------------

def _check_dims(nx, ny, lx, ly):
    if int(nx) < 1 or int(ny) < 1:
        raise MeshError("nx and ny must be at least 1")
    if not (lx > 0 and ly > 0):
        raise MeshError("domain lengths must be positive")


def _lattice_loops(nx, ny):
    vid = lambda i, j: j * (nx + 1) + i  # noqa: E731
    return [[vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)]
            for j in range(ny) for i in range(nx)]


def build_cartesian(nx, ny, lx, ly, porosity=1.0, permeability=1.0):
    """Uniform ``nx`` by ``ny`` grid of rectangles on ``(0, lx) x (0, ly)``."""
    _check_dims(nx, ny, lx, ly)
    xs = np.linspace(0.0, lx, nx + 1)
    ys = np.linspace(0.0, ly, ny + 1)
    X, Y = np.meshgrid(xs, ys)
    verts = np.column_stack([X.ravel(), Y.ravel()])
    return PolygonalMesh(verts, _lattice_loops(nx, ny), porosity, permeability)


def _kershaw_profile(ny):
    """Row shift sign: +1 in the bottom and top thirds, -1 in the middle."""
    j1, j2 = round(ny / 3), round(2 * ny / 3)
    g = np.ones(ny + 1)
    g[j1 + 1:j2 + 1] = -1.0
    return g


def _kershaw_geometry(nx, ny, lx, ly, amplitude):
    s = np.linspace(0.0, 1.0, nx + 1)
    g = _kershaw_profile(ny)
    verts = []
    for j in range(ny + 1):
        x = s + amplitude * g[j] * s * (1.0 - s)
        for i in range(nx + 1):
            verts.append((x[i] * lx, j * ly / ny))
    return np.array(verts), _lattice_loops(nx, ny)


def _hexahedral_geometry(nx, ny, lx, ly, amplitude):
    hx, hy = lx / nx, ly / ny
    n_lat = (nx + 1) * (ny + 1)
    lat = lambda i, j: j * (nx + 1) + i  # noqa: E731
    mid = lambda i, j: n_lat + j * (nx + 1) + i  # noqa: E731
    verts = np.empty((n_lat + (nx + 1) * ny, 2))
    for j in range(ny + 1):
        for i in range(nx + 1):
            dy = (-1) ** i * amplitude * hy if 0 < j < ny else 0.0
            verts[lat(i, j)] = (i * hx, j * hy + dy)
    for j in range(ny):
        for i in range(nx + 1):
            dx = (-1) ** (i + j) * 0.5 * amplitude * hx if 0 < i < nx else 0.0
            ymid = 0.5 * (verts[lat(i, j), 1] + verts[lat(i, j + 1), 1])
            verts[mid(i, j)] = (i * hx + dx, ymid)
    loops = [[lat(i, j), lat(i + 1, j), mid(i + 1, j), lat(i + 1, j + 1), lat(i, j + 1), mid(i, j)]
             for j in range(ny) for i in range(nx)]
    return verts, loops


def _nonconforming_geometry(nx, ny, lx, ly, refine, pattern):
    rx, ry = refine
    boxes = []
    for j in range(ny):
        for i in range(nx):
            if pattern(i, j):
                for b in range(ry):
                    for a in range(rx):
                        boxes.append((i * rx + a, j * ry + b, i * rx + a + 1, j * ry + b + 1))
            else:
                boxes.append((i * rx, j * ry, (i + 1) * rx, (j + 1) * ry))
    corners = set()
    for x0, y0, x1, y1 in boxes:
        corners.update([(x0, y0), (x1, y0), (x1, y1), (x0, y1)])
    on_row, on_col = {}, {}
    for c in corners:
        on_row.setdefault(c[1], []).append(c[0])
        on_col.setdefault(c[0], []).append(c[1])
    ids = {c: n for n, c in enumerate(sorted(corners))}
    loops = []
    for x0, y0, x1, y1 in boxes:
        bottom = sorted(x for x in on_row[y0] if x0 <= x <= x1)
        right = sorted(y for y in on_col[x1] if y0 < y < y1)
        top = sorted((x for x in on_row[y1] if x0 <= x <= x1), reverse=True)
        left = sorted((y for y in on_col[x0] if y0 < y < y1), reverse=True)
        loop = [(x, y0) for x in bottom] + [(x1, y) for y in right] + [(x, y1) for x in top] + [(x0, y) for y in left]
        loops.append([ids[c] for c in loop])
    verts = np.array([(c[0] * lx / (nx * rx), c[1] * ly / (ny * ry)) for c in sorted(corners)])
    return verts, loops


def _checkerboard_patches(nx, ny, block=2):
    return lambda i, j: ((i // block) + (j // block)) % 2 == 1


# Regularity targets used when no amplitude is given (values of the reference tables).
KERSHAW_TARGET_REGULARITY = 32.0274
HEXAHEDRAL_TARGET_REGULARITY = 5.4772


def tune_amplitude(kind, target, nx=16, ny=16, lx=1.0, ly=1.0, bracket=None):
    """Amplitude for which the generated mesh reaches ``mesh_regularity == target``."""
    from scipy.optimize import brentq

    geometry = {"kershaw": _kershaw_geometry, "hexahedral": _hexahedral_geometry}[kind]
    lo, hi = bracket or {"kershaw": (0.0, 0.99), "hexahedral": (0.0, 0.45)}[kind]

    def f(amp):
        verts, loops = geometry(nx, ny, lx, ly, amp)
        return _loops_regularity(verts, loops) - target

    if f(lo) * f(hi) > 0:
        raise MeshError(f"regularity {target} not reachable for {kind} mesh with {nx}x{ny} cells")
    return brentq(f, lo, hi, xtol=1e-14)


def build_distorted(kind, nx=16, ny=16, lx=1.0, ly=1.0, amplitude=None,
                    porosity=1.0, permeability=1.0, refine=(1, 2), pattern=None):
    """Distorted logically-Cartesian meshes.

    ``kind`` is one of

    * ``"kershaw"``: vertical grid lines bent into a z-shape across three
      horizontal layers; ``amplitude`` in ``[0, 1)`` controls the shear.
    * ``"hexahedral"``: hexagonal cells from a zigzagging lattice with
      displaced side midpoints; ``amplitude`` in ``[0, 0.5)``.
    * ``"nonconforming"``: Cartesian grid whose patch cells are split into
      ``refine = (rx, ry)`` children, leaving hanging nodes on neighbours.

    When ``amplitude`` is None the Kershaw and hexahedral amplitudes are tuned
    so that the mesh regularity matches the reference values 32.0274 and
    5.4772.
    """
    _check_dims(nx, ny, lx, ly)
    if kind == "kershaw":
        if amplitude is None:
            amplitude = tune_amplitude("kershaw", KERSHAW_TARGET_REGULARITY, nx, ny, lx, ly)
        if not 0.0 <= amplitude < 1.0:
            raise MeshError("kershaw amplitude must lie in [0, 1)")
        verts, loops = _kershaw_geometry(nx, ny, lx, ly, amplitude)
    elif kind == "hexahedral":
        if amplitude is None:
            amplitude = tune_amplitude("hexahedral", HEXAHEDRAL_TARGET_REGULARITY, nx, ny, lx, ly)
        if not 0.0 <= amplitude < 0.5:
            raise MeshError("hexahedral amplitude must lie in [0, 0.5)")
        verts, loops = _hexahedral_geometry(nx, ny, lx, ly, amplitude)
    elif kind == "nonconforming":
        rx, ry = (int(r) for r in refine)
        if rx < 1 or ry < 1:
            raise MeshError("refinement factors must be positive")
        verts, loops = _nonconforming_geometry(nx, ny, lx, ly, (rx, ry), pattern or _checkerboard_patches(nx, ny))
    else:
        raise MeshError(f"unknown mesh kind {kind!r}")
    return PolygonalMesh(verts, loops, porosity, permeability)
