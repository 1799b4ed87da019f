"""Plane polygon utilities: areas, convex clipping, simplicity tests."""
from functools import lru_cache

import numpy as np


def signed_area(pts):
    """Shoelace area; positive for counter-clockwise loops."""
    n = len(pts)
    if n < 3:
        return 0.0
    s = 0.0
    x0, y0 = pts[-1]
    for x1, y1 in pts:
        s += x0 * y1 - x1 * y0
        x0, y0 = x1, y1
    return 0.5 * s


def clip_convex(subject, clipper):
    """Sutherland-Hodgman clipping of ``subject`` by a convex CCW ``clipper``.

    The subject may be non-convex; the result can then contain zero-width
    bridges, which do not affect its area.  Points are ``(x, y)`` tuples.
    """
    out = list(subject)
    cx0, cy0 = clipper[-1]
    for cx1, cy1 in clipper:
        if not out:
            break
        ex, ey = cx1 - cx0, cy1 - cy0
        inp, out = out, []
        sx, sy = inp[-1]
        ds = ex * (sy - cy0) - ey * (sx - cx0)
        for px, py in inp:
            dp = ex * (py - cy0) - ey * (px - cx0)
            if dp >= 0.0:
                if ds < 0.0:
                    t = ds / (ds - dp)
                    out.append((sx + t * (px - sx), sy + t * (py - sy)))
                out.append((px, py))
            elif ds >= 0.0:
                t = ds / (ds - dp)
                out.append((sx + t * (px - sx), sy + t * (py - sy)))
            sx, sy, ds = px, py, dp
        cx0, cy0 = cx1, cy1
    return out


def clipped_area(subject, clipper):
    return signed_area(clip_convex(subject, clipper))


def dedupe(pts, tol):
    """Drop consecutive points closer than ``tol`` (cyclically)."""
    out = []
    for p in pts:
        if not out or abs(p[0] - out[-1][0]) > tol or abs(p[1] - out[-1][1]) > tol:
            out.append(p)
    while len(out) > 1 and abs(out[0][0] - out[-1][0]) <= tol and abs(out[0][1] - out[-1][1]) <= tol:
        out.pop()
    return out


def is_simple(pts):
    """True if no two non-adjacent edges of the closed loop cross properly.

    Touching and collinear overlaps are not counted as crossings.
    """
    p = np.asarray(pts, dtype=float)
    n = len(p)
    if n < 4:
        return True
    a = p
    b = np.roll(p, -1, axis=0)
    d = b - a

    def orient(o, dv, q):
        return dv[..., 0] * (q[..., 1] - o[..., 1]) - dv[..., 1] * (q[..., 0] - o[..., 0])

    A, D = a[:, None, :], d[:, None, :]
    Bq, Bq2 = a[None, :, :], b[None, :, :]
    o1 = orient(A, D, Bq)
    o2 = orient(A, D, Bq2)
    Dj = d[None, :, :]
    o3 = orient(Bq, Dj, A)
    o4 = orient(Bq, Dj, b[:, None, :])
    scale = np.abs(d).max() ** 2 * 1e-12
    cross = (((o1 > scale) & (o2 < -scale)) | ((o1 < -scale) & (o2 > scale))) & \
            (((o3 > scale) & (o4 < -scale)) | ((o3 < -scale) & (o4 > scale)))
    i, j = _pairs(n)
    return not np.any(cross[i, j])


@lru_cache(maxsize=256)
def _pairs(n):
    """Index pairs of non-adjacent edges of a closed loop with ``n`` edges."""
    i, j = np.triu_indices(n, k=2)
    keep = ~((i == 0) & (j == n - 1))
    return i[keep], j[keep]
