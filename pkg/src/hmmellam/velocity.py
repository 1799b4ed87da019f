"""Divergence-preserving RT0 velocity from cell-boundary fluxes.

Each cell is split into the triangles ``T_j = (x_K, v_{j-1}, v_j)``.  The
internal edge ``s_j* = [v_j, x_K]`` separates ``T_j`` from ``T_{j+1}``; its
flux ``F*_j`` is taken along ``Rot(x_K - v_j)``, which is outward from
``T_j``.  Imposing ``div u = (sum_s F_{K,s}) / |K|`` on every triangle fixes
the internal fluxes up to one constant ``t``:

    F*_k = t + sum_{j <= k} a_j,   a_j = |T_j| / |K| * sum_s F_{K,s} - F_j.

The KR closure picks the ``t`` of minimal Euclidean norm; the C closure picks
the ``t`` that makes the reconstruction exact on RT0 fields.
"""
from dataclasses import dataclass

import numpy as np


def barycentric_weights(mesh, k, tol=1e-12):
    """Vertex weights ``alpha_k = (|T_k| + |T_{k+1}|) / (2|K|)`` of cell ``k``.

    They satisfy ``sum alpha = 1`` and ``sum alpha_k v_k = x_K`` when ``x_K`` is
    the centroid; a ValueError is raised otherwise.
    """
    s = mesh.cell_slice(k)
    T = mesh.triangle_areas[s]
    alpha = (T + np.roll(T, -1)) / (2.0 * mesh.areas[k])
    v = mesh.vertices[mesh.cell_vertices(k)]
    scale = mesh.diameters[k]
    if abs(alpha.sum() - 1.0) > tol or np.abs(alpha @ v - mesh.centers[k]).max() > tol * scale:
        raise ValueError(f"cell {k}: interior point is not the centroid; no consistent weights")
    return alpha


def _increments(F, T, area):
    a = T / area[..., None] * F.sum(axis=-1, keepdims=True) - F
    return np.cumsum(a, axis=-1)


def close_fluxes_C(F, T, area, alpha):
    """Internal fluxes with ``sum_k alpha_k F*_k = 0``.  Arrays broadcast over leading axes."""
    s = _increments(F, T, area)
    t = -np.sum(alpha * s, axis=-1, keepdims=True)
    return t + s


def close_fluxes_KR(F, T, area):
    """Internal fluxes of minimal Euclidean norm."""
    s = _increments(F, T, area)
    return s - s.mean(axis=-1, keepdims=True)


def rt0_from_triangle_fluxes(P, fluxes):
    """Coefficients ``(a, b)`` of ``u = a x + b`` with given outward edge fluxes.

    ``P`` is (..., 3, 2) with edge ``e`` opposite vertex ``e``; the field is
    ``sum_e F_e (x - P_e) / (2|T|)``.
    """
    P = np.asarray(P, dtype=float)
    F = np.asarray(fluxes, dtype=float)
    d1, d2 = P[..., 1, :] - P[..., 0, :], P[..., 2, :] - P[..., 0, :]
    area = 0.5 * (d1[..., 0] * d2[..., 1] - d1[..., 1] * d2[..., 0])
    diam2 = np.maximum((d1 ** 2).sum(-1), np.maximum((d2 ** 2).sum(-1), ((d2 - d1) ** 2).sum(-1)))
    if np.any(np.abs(area) < 1e-14 * diam2):
        raise ValueError("degenerate triangle")
    a = F.sum(axis=-1) / (2.0 * area)
    b = -np.einsum("...e,...ei->...i", F, P) / (2.0 * area)[..., None]
    return a, b


@dataclass
class RT0Field:
    """Per-triangle velocity ``a x + b`` on a sub-triangulation.

    ``fluxes`` (nt, 3) are the outward normal fluxes (edge ``k`` opposite
    vertex ``k``); ``internal`` (nt,) are the fluxes ``F*_j``.
    """

    subtri: object
    a: np.ndarray
    b: np.ndarray
    fluxes: np.ndarray
    internal: np.ndarray

    def velocity(self, t, x):
        return self.a[t] * np.asarray(x, dtype=float) + self.b[t]

    def divergence(self):
        return 2.0 * self.a

    def edge_flux_mismatch(self):
        """Largest ``|F_T + F_T'|`` over pairs of triangles sharing an edge, and largest boundary flux."""
        st = self.subtri
        nb = st.neighbors
        worst = 0.0
        for k in range(3):
            other = nb[:, k]
            ok = other >= 0
            back = {0: 0, 1: 2, 2: 1}[k]
            worst = max(worst, np.abs(self.fluxes[ok, k] + self.fluxes[other[ok], back]).max(initial=0.0))
        worst = max(worst, np.abs(self.fluxes[st.boundary, 0]).max(initial=0.0))
        return worst

    def scale(self):
        return max(np.abs(self.fluxes).max(initial=0.0), 1e-300)


def reconstruct(mesh, subtri, F, closure="C"):
    """RT0 field from outward cell-edge fluxes ``F`` (FluxSet or flat array)."""
    values = np.asarray(getattr(F, "values", F), dtype=float)
    internal = np.empty(len(values))
    for r in np.unique(mesh.cell_sizes):
        cells = np.flatnonzero(mesh.cell_sizes == r)
        flat = mesh.cell_ptr[cells][:, None] + np.arange(r)[None, :]
        Fl = values[flat]
        T = mesh.triangle_areas[flat]
        area = mesh.areas[cells]
        if closure == "C":
            alpha = (T + np.roll(T, -1, axis=1)) / (2.0 * area[:, None])
            _check_weights(mesh, cells, flat, alpha)
            internal[flat] = close_fluxes_C(Fl, T, area, alpha)
        elif closure == "KR":
            internal[flat] = close_fluxes_KR(Fl, T, area)
        else:
            raise ValueError(f"unknown closure {closure!r}")
    tri_fluxes = np.column_stack([values, internal, -internal[subtri.prev]])
    a, b = rt0_from_triangle_fluxes(subtri.vertices, tri_fluxes)
    return RT0Field(subtri, a, b, tri_fluxes, internal)


def _check_weights(mesh, cells, flat, alpha, tol=1e-12):
    v = mesh.vertices[mesh.cell_nodes[flat]]
    bad = (np.abs(alpha.sum(axis=1) - 1.0) > tol) | (
        np.abs(np.einsum("nr,nri->ni", alpha, v) - mesh.centers[cells]).max(axis=1) > tol * mesh.diameters[cells])
    if np.any(bad):
        raise ValueError(f"cells {cells[bad][:10].tolist()}: interior point is not the centroid")


def exact_fluxes(mesh, a, b):
    """Outward cell-edge fluxes of ``u = a x + b`` (flat layout)."""
    u_mid = a * mesh.cell_edge_midpoints + np.asarray(b, dtype=float)
    return mesh.cell_edge_lengths * np.einsum("fi,fi->f", mesh.cell_edge_normals, u_mid)


def relative_l2_error(field, exact, triangles=None):
    """``||u_h - u|| / ||u||`` over the given triangles for an affine-or-constant ``exact(x)``.

    Uses the edge-midpoint rule, exact for quadratics.
    """
    st = field.subtri
    t = np.arange(st.n_triangles) if triangles is None else np.asarray(triangles)
    P = st.vertices[t]
    mids = 0.5 * (P + np.roll(P, -1, axis=1))  # (n, 3, 2)
    uh = field.a[t][:, None, None] * mids + field.b[t][:, None, :]
    ue = exact(mids.reshape(-1, 2)).reshape(uh.shape)
    w = st.areas[t] / 3.0
    num = np.sum(w[:, None] * ((uh - ue) ** 2).sum(-1))
    den = np.sum(w[:, None] * (ue ** 2).sum(-1))
    return float(np.sqrt(num / den))


def cell_reconstruction_error(mesh, subtri, k, velocity=(0.0, 1.0), closure="C"):
    """Relative L2 error of the reconstruction of a constant field on cell ``k``."""
    V = np.asarray(velocity, dtype=float)
    field = reconstruct(mesh, subtri, exact_fluxes(mesh, 0.0, V), closure)
    tris = np.arange(mesh.cell_ptr[k], mesh.cell_ptr[k + 1])
    return relative_l2_error(field, lambda x: np.broadcast_to(V, x.shape), tris)
