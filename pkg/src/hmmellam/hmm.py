"""Hybrid mimetic mixed (HMM) discretisation on polygonal meshes.

Unknowns are one value per cell and one per edge.  For a cell ``K`` with
``r`` edges the discrete gradient on the cone ``T_{K,s}`` over edge ``s`` is
the consistent gradient plus a stabilisation along ``n_{K,s}``; both depend
only on the differences ``w_s - w_K``.  The local matrix ``A_K`` (``r x r``)
maps ``w_K 1 - w_e`` to the outward fluxes ``F_{K,s}``.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

log = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)
DISPERSION_FLOOR = 1e-10


class SolverError(RuntimeError):
    """Raised when a linear system is singular or a solve does not converge."""


@dataclass
class DofVector:
    """Hybrid unknowns: ``cell`` (nc,) and ``edge`` (ne,) values."""

    cell: np.ndarray
    edge: np.ndarray

    @classmethod
    def zeros(cls, mesh):
        return cls(np.zeros(mesh.n_cells), np.zeros(mesh.n_edges))

    @classmethod
    def interpolate(cls, mesh, func):
        """Cell values at ``x_K`` and edge values at edge midpoints."""
        return cls(np.asarray(func(mesh.centers), dtype=float),
                   np.asarray(func(mesh.edge_midpoints), dtype=float))

    def local(self, mesh, k):
        """``(w_K, w_e)`` for cell ``k`` in local edge order."""
        return self.cell[k], self.edge[mesh.cell_edges[mesh.cell_slice(k)]]


@dataclass
class FluxSet:
    """Outward fluxes per cell-edge pair, in the mesh's flat cell-edge layout."""

    mesh: object
    values: np.ndarray

    def cell(self, k):
        return self.values[self.mesh.cell_slice(k)]

    def cell_totals(self):
        return np.add.reduceat(self.values, self.mesh.cell_ptr[:-1])

    def edge_values(self):
        """Flux through each edge, oriented outward from its first owner."""
        first = self.values * (self.mesh.cell_edge_sign > 0)
        return np.bincount(self.mesh.cell_edges, weights=first, minlength=self.mesh.n_edges)

    def conservativity_defect(self):
        """``max |F_{K,s} + F_{L,s}|`` over interior edges and ``max |F|`` on the boundary."""
        m = self.mesh
        twin = m.cell_edge_twin
        inner = twin >= 0
        d_in = np.abs(self.values[inner] + self.values[twin[inner]]).max(initial=0.0)
        d_bd = np.abs(self.values[~inner]).max(initial=0.0)
        return max(d_in, d_bd)


# -- local operators -------------------------------------------------------------

def _check_spd(tensor):
    t = np.asarray(tensor, dtype=float)
    if t.shape[-2:] != (2, 2):
        raise ValueError("tensor must be 2x2")
    if np.any(np.abs(t[..., 0, 1] - t[..., 1, 0]) > 1e-12 * np.abs(t).max(initial=1.0)):
        raise ValueError("tensor is not symmetric")
    tr = t[..., 0, 0] + t[..., 1, 1]
    det = t[..., 0, 0] * t[..., 1, 1] - t[..., 0, 1] * t[..., 1, 0]
    if np.any(det <= 0) or np.any(tr <= 0):
        raise ValueError("tensor is not positive definite")
    return t


def consistent_gradient(mesh, k, w):
    """``|K|^-1 sum_s |s| w_s n_{K,s}`` for cell ``k``."""
    _, we = w.local(mesh, k)
    s = mesh.cell_slice(k)
    return (mesh.cell_edge_lengths[s] * we) @ mesh.cell_edge_normals[s] / mesh.areas[k]


def stabilized_gradient(mesh, k, w):
    """Gradient on each cone ``T_{K,s}`` of cell ``k``, shape (r, 2)."""
    wk, we = w.local(mesh, k)
    s = mesh.cell_slice(k)
    g = consistent_gradient(mesh, k, w)
    n = mesh.cell_edge_normals[s]
    dx = mesh.cell_edge_midpoints[s] - mesh.centers[k]
    jump = we - wk - dx @ g
    return g + (SQRT2 / mesh.cell_edge_distances[s] * jump)[:, None] * n


def _gradient_operators(lengths, normals, dx, dist, area):
    """Batched ``B`` (n, r, 2, r): cone gradient as a map of ``w_e - w_K``."""
    n_cells, r = lengths.shape
    G = np.transpose(lengths[..., None] * normals, (0, 2, 1)) / area[:, None, None]  # (n, 2, r)
    proj = np.eye(r)[None, :, :] - np.einsum("nsi,nir->nsr", dx, G)  # (n, s, r)
    stab = (SQRT2 / dist)[..., None, None] * normals[..., :, None] * proj[:, :, None, :]
    return G[:, None, :, :] + stab


def local_flux_map(mesh, k, tensor):
    """Local matrix ``A`` with ``F_{K,s} = (A (w_K 1 - w_e))_s`` for cell ``k``."""
    t = _check_spd(tensor)
    s = mesh.cell_slice(k)
    B = _gradient_operators(
        mesh.cell_edge_lengths[s][None], mesh.cell_edge_normals[s][None],
        (mesh.cell_edge_midpoints[s] - mesh.centers[k])[None],
        mesh.cell_edge_distances[s][None], mesh.areas[k:k + 1],
    )[0]
    cone = mesh.triangle_areas[s]
    return np.einsum("s,sir,ij,sjq->rq", cone, B, t, B)


class HMMOperator:
    """Per-mesh geometric data for batched local matrices, grouped by cell valence."""

    def __init__(self, mesh):
        self.mesh = mesh
        self.groups = []
        for r in np.unique(mesh.cell_sizes):
            cells = np.flatnonzero(mesh.cell_sizes == r)
            flat = mesh.cell_ptr[cells][:, None] + np.arange(r)[None, :]
            B = _gradient_operators(
                mesh.cell_edge_lengths[flat], mesh.cell_edge_normals[flat],
                mesh.cell_edge_midpoints[flat] - mesh.centers[cells][:, None, :],
                mesh.cell_edge_distances[flat], mesh.areas[cells],
            )
            self.groups.append((cells, flat, mesh.cell_edges[flat], B, mesh.triangle_areas[flat]))

    def matrices(self, tensors):
        """Local matrices per group for per-cell tensors (nc, 2, 2)."""
        t = _check_spd(tensors)
        return [np.einsum("ns,nsir,nij,nsjq->nrq", cone, B, t[cells], B, optimize=True)
                for cells, _, _, B, cone in self.groups]

    def fluxes(self, mats, w):
        """Outward fluxes ``A (w_K 1 - w_e)`` in flat cell-edge layout."""
        out = np.empty(len(self.mesh.cell_nodes))
        for (cells, flat, edges, _, _), A in zip(self.groups, mats):
            d = w.cell[cells][:, None] - w.edge[edges]
            out[flat] = np.einsum("nrq,nq->nr", A, d)
        return FluxSet(self.mesh, out)

    def condensed(self, mats, mass, rhs, fixed_value=None):
        """Edge system after eliminating cell unknowns.

        Cell equation: ``mass_K w_K + scale 1^T A (w_K 1 - w_e) = rhs_K``, i.e.
        ``m_K = mass_K + scale 1^T A 1``.  Returns ``(S, b, recover)`` where
        ``recover(w_e)`` gives the cell values.  Cells with a finite
        ``fixed_value`` keep that value instead.
        """
        mesh = self.mesh
        ne = mesh.n_edges
        rows, cols, vals = [], [], []
        b = np.zeros(ne)
        parts = []
        for (cells, flat, edges, _, _), A in zip(self.groups, mats):
            a1 = A.sum(axis=2)
            m = mass[cells] + a1.sum(axis=1)
            S = A - np.einsum("nr,nq->nrq", a1, a1) / m[:, None, None]
            bl = a1 * (rhs[cells] / m)[:, None]
            if fixed_value is not None:
                fx = np.isfinite(fixed_value[cells])
                if np.any(fx):
                    S[fx] = A[fx]
                    bl[fx] = a1[fx] * fixed_value[cells][fx][:, None]
            r = edges.shape[1]
            rows.append(np.repeat(edges, r, axis=1).ravel())
            cols.append(np.tile(edges, (1, r)).ravel())
            vals.append(S.ravel())
            np.add.at(b, edges, bl)
            parts.append((cells, edges, a1, m))
        S = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(ne, ne))

        def recover(we):
            wc = np.empty(mesh.n_cells)
            for cells, edges, a1, m in parts:
                wc[cells] = (rhs[cells] + np.einsum("nr,nr->n", a1, we[edges])) / m
            if fixed_value is not None:
                fx = np.isfinite(fixed_value)
                wc[fx] = fixed_value[fx]
            return wc

        return S, b, recover


def _operator(mesh, op):
    if op is None:
        op = getattr(mesh, "_hmm_operator", None)
        if op is None:
            op = HMMOperator(mesh)
            mesh._hmm_operator = op
    return op


def _cg(S, b, tol=1e-12):
    diag = S.diagonal()
    M = sp.diags(1.0 / np.where(diag > 0, diag, 1.0))
    x, info = spla.cg(S, b, rtol=tol, atol=0.0, M=M, maxiter=10 * S.shape[0])
    res = np.linalg.norm(S @ x - b)
    if info != 0 and res > 1e-8 * max(np.linalg.norm(b), 1e-300):
        raise SolverError(f"CG did not converge (info={info}, residual={res:.3e})")
    return x


def solve_pressure(mesh, mobility, rates, solver="direct", op=None):
    """Pressure with per-cell tensors ``mobility`` (nc, 2, 2) and integrated rates.

    Imposes the cell balances ``sum_s F_{K,s} = rates_K``, conservativity on
    interior edges, zero flux on boundary edges and ``sum_K |K| p_K = 0``.
    Returns ``(p, F)`` with ``F`` exactly antisymmetric across edges.
    """
    op = _operator(mesh, op)
    rates = np.asarray(rates, dtype=float)
    scale = max(np.abs(rates).max(initial=0.0), 1e-300)
    if abs(rates.sum()) > 1e-12 * scale * len(rates):
        raise SolverError(f"well rates sum to {rates.sum():.3e}; the pressure system is singular")
    if not np.any(rates):
        return DofVector.zeros(mesh), FluxSet(mesh, np.zeros(len(mesh.cell_nodes)))
    mats = op.matrices(mobility)
    S, b, recover = op.condensed(mats, np.zeros(mesh.n_cells), rates)
    # zero mean of the recovered cell values is linear in the edge values
    g = np.zeros(mesh.n_edges)
    h = 0.0
    for (cells, flat, edges, _, _), A in zip(op.groups, mats):
        a1 = A.sum(axis=2)
        m = a1.sum(axis=1)
        wgt = mesh.areas[cells] / m
        np.add.at(g, edges, a1 * wgt[:, None])
        h += float(np.dot(wgt, rates[cells]))
    h = -h
    if solver == "direct":
        K = sp.bmat([[S, sp.csr_matrix(g[:, None])], [sp.csr_matrix(g[None, :]), None]], format="csc")
        x = spla.spsolve(K, np.append(b, h))
        if not np.all(np.isfinite(x)):
            raise SolverError("pressure system is singular")
        pe = x[:-1]
    elif solver == "cg":
        pe = _cg(S, b)
        pc = recover(pe)
        pe = pe - np.dot(mesh.areas, pc) / mesh.areas.sum()
    else:
        raise ValueError(f"unknown solver {solver!r}")
    p = DofVector(recover(pe), pe)
    res = np.abs(S @ pe - b).max()
    if res > 1e-8 * scale:
        raise SolverError(f"pressure solve residual {res:.3e}")
    F = op.fluxes(mats, p)
    return p, _antisymmetrize(F)


def _antisymmetrize(F):
    m = F.mesh
    v = F.values.copy()
    twin = m.cell_edge_twin
    first = (twin >= 0) & (m.cell_edge_sign > 0)
    f, g = np.flatnonzero(first), twin[first]
    avg = 0.5 * (v[f] - v[g])
    v[f], v[g] = avg, -avg
    v[twin < 0] = 0.0
    return FluxSet(m, v)


def solve_diffusion_step(mesh, tensors, dt, tilde_c, production=None, source=None,
                         fixed=None, floor=DISPERSION_FLOOR, solver="direct", op=None,
                         return_fluxes=False):
    """One implicit diffusion step.

    Per cell: ``phi|K|(c_K - tilde_c_K) + dt sum_s D_{K,s} + production_K c_K = source_K``
    where ``production_K = dt * int_K q^-`` and ``source_K`` is extra injected
    mass.  Boundary edges carry no flux.  ``fixed`` is an optional (nc,) array,
    NaN where free, holding cell values to impose.  The tensors receive
    ``floor * I`` before assembly.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    op = _operator(mesh, op)
    nc = mesh.n_cells
    D = np.asarray(tensors, dtype=float) + floor * np.eye(2)
    mats = op.matrices(D)
    mass = mesh.porosity * mesh.areas
    prod = np.zeros(nc) if production is None else np.asarray(production, dtype=float)
    src = np.zeros(nc) if source is None else np.asarray(source, dtype=float)
    # scale cell equations by 1/dt so the edge system is dt-independent in form
    rhs = (mass * np.asarray(tilde_c, dtype=float) + src) / dt
    S, b, recover = op.condensed(mats, (mass + prod) / dt, rhs,
                                 None if fixed is None else np.asarray(fixed, dtype=float))
    if solver == "direct":
        ce = spla.spsolve(S.tocsc(), b)
        if not np.all(np.isfinite(ce)):
            raise SolverError("diffusion system is singular")
    elif solver == "cg":
        ce = _cg(S, b)
    else:
        raise ValueError(f"unknown solver {solver!r}")
    c = DofVector(recover(ce), ce)
    if return_fluxes:
        return c, op.fluxes(mats, c)
    return c
