"""Characteristic tracking through a piecewise-RT0 velocity field.

Inside a triangle with ``u = a x + b`` the signed flow ``dx/dtau = s u / phi``
(``s = +1`` forward, ``-1`` backward) has the closed form

    x(tau) = x0 + E(tau) v0,   v0 = s u(x0) / phi,   E(tau) = expm1(k tau) / k,

with ``k = s a / phi``; trajectories are straight rays from ``x0``.  Exit
times through each edge follow from one logarithm.  Vertices are handled by
cone tests on the incident triangles.
"""
import logging
import math

import numpy as np

log = logging.getLogger(__name__)

FORWARD, BACKWARD = 1, -1
EPS_A = 1e-12            # 1/day; below this the motion is linear
EPS_T = 1e-12            # days
VERTEX_SNAP = 1e-9       # relative to the domain diameter
MAX_TRANSITIONS = 10 ** 6
_CONE_TOL = 1e-12


class TrackingError(RuntimeError):
    """Raised when a trace cannot be completed; ``path`` holds the partial path."""

    def __init__(self, message, path=None):
        super().__init__(message)
        self.path = path or []


def _direction(direction):
    if direction in (FORWARD, "forward"):
        return 1
    if direction in (BACKWARD, "backward"):
        return -1
    raise ValueError(f"direction must be forward or backward, got {direction!r}")


def triangle_flow(a, b, phi, x0, tau, direction=FORWARD):
    """Position after signed time ``tau >= 0`` under ``dx/dtau = s (a x + b) / phi``."""
    s = _direction(direction)
    x0 = np.asarray(x0, dtype=float)
    v0 = s * (a * x0 + np.asarray(b, dtype=float)) / phi
    k = s * a / phi
    E = math.expm1(k * tau) / k if abs(a) > EPS_A else tau
    return x0 + E * v0


def _time_to_reach(k, m, linear):
    """Time at which ``E(tau) = m``, or None if never."""
    if linear:
        return m
    km = k * m
    if km <= -1.0:
        return None
    return math.log1p(km) / k


def triangle_exit(vertices, a, b, phi, x0, direction, t_max, exitable=(True, True, True), snap=0.0):
    """First exit of the ray from ``x0`` through the triangle boundary.

    Returns ``("stays", t_max, x)`` or ``("edge", t, x, e)`` or
    ``("vertex", t, x, i)``; edge ``e`` is opposite vertex ``e``.
    """
    s = _direction(direction)
    P = np.asarray(vertices, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    v0 = s * (a * x0 + np.asarray(b, dtype=float)) / phi
    k = s * a / phi
    linear = abs(a) <= EPS_A
    speed = math.hypot(v0[0], v0[1])
    best = None
    for e in range(3):
        if not exitable[e]:
            continue
        p, q = P[(e + 1) % 3], P[(e + 2) % 3]
        d = q - p
        n = np.array([d[1], -d[0]]) / math.hypot(d[0], d[1])
        nv = float(n @ v0)
        if nv <= 1e-12 * speed:
            continue
        g0 = min(float(n @ (x0 - p)), 0.0)
        tau = _time_to_reach(k, -g0 / nv, linear)
        if tau is not None and (best is None or tau < best[0]):
            best = (tau, e, -g0 / nv)
    if best is None or best[0] >= t_max:
        E = math.expm1(k * t_max) / k if not linear else t_max
        return ("stays", t_max, x0 + E * v0)
    tau, e, m = best
    x = x0 + m * v0
    for i in ((e + 1) % 3, (e + 2) % 3):
        if math.hypot(*(x - P[i])) <= snap:
            return ("vertex", tau, P[i].copy(), i)
    return ("edge", tau, x, e)


class Tracker:
    """Traces points through an :class:`RT0Field`.

    ``porosity`` is per cell of the parent mesh.
    """

    def __init__(self, field, porosity):
        st = field.subtri
        self.field = field
        self.subtri = st
        self.P = st.vertices.tolist()
        self.N = st.normals.tolist()
        self.C = st.offsets.tolist()
        self.nb = st.neighbors.tolist()
        self.pid = st.point_ids.tolist()
        self.points = st.points.tolist()
        self.a = field.a.tolist()
        self.b = field.b.tolist()
        self.F = field.fluxes.tolist()
        self.phi = np.asarray(porosity, dtype=float)[st.cell].tolist()
        self.corner = st.corner_points
        self.snap = VERTEX_SNAP * st.mesh.domain_diameter
        fscale = float(np.abs(field.fluxes).max(initial=0.0))
        self.ftol = 1e-13 * fscale
        speeds = np.abs(field.a)[:, None] * np.abs(st.vertices).sum(-1) + np.abs(field.b).sum(-1)[:, None]
        self.vtol = 1e-14 * max(float((speeds.max(axis=1) / np.array(self.phi)).max(initial=0.0)), 1e-300)
        self.fallbacks = 0

    # -- local kinematics ------------------------------------------------------
    def _vel(self, t, x, y, s):
        a, (bx, by), phi = self.a[t], self.b[t], self.phi[t]
        return s * (a * x + bx) / phi, s * (a * y + by) / phi

    def _exit(self, t, x, y, s, rem, skip=-1, only=-1):
        """Closed-form exit from triangle ``t``; see :func:`triangle_exit`."""
        vx, vy = self._vel(t, x, y, s)
        speed = math.hypot(vx, vy)
        a, phi = self.a[t], self.phi[t]
        k = s * a / phi
        linear = abs(a) <= EPS_A
        Fs, Ns, Cs = self.F[t], self.N[t], self.C[t]
        best_tau, best_e, best_m = None, -1, 0.0
        for e in range(3):
            if e == skip or (only >= 0 and e != only):
                continue
            if abs(Fs[e]) <= self.ftol or s * Fs[e] <= 0.0:
                continue
            nx, ny = Ns[e]
            nv = nx * vx + ny * vy
            if nv <= 1e-12 * speed:
                continue
            g0 = nx * x + ny * y - Cs[e]
            if g0 > 0.0:
                g0 = 0.0
            m = -g0 / nv
            if linear:
                tau = m
            else:
                km = k * m
                if km <= -1.0:
                    continue
                tau = math.log1p(km) / k
            if best_tau is None or tau < best_tau:
                best_tau, best_e, best_m = tau, e, m
        if best_tau is None or best_tau >= rem:
            E = rem if linear else math.expm1(k * rem) / k
            return None, rem, x + E * vx, y + E * vy
        return best_e, best_tau, x + best_m * vx, y + best_m * vy

    # -- vertex rules --------------------------------------------------------------
    def _cone(self, t, i, dx, dy, mode):
        """Cone test at local vertex ``i`` of ``t``; mode "open", "half" or "closed".

        Returns the smaller normalised cross product when the test passes, else None.
        """
        P = self.P[t]
        px, py = P[i]
        e1x, e1y = P[(i + 1) % 3][0] - px, P[(i + 1) % 3][1] - py
        e2x, e2y = P[(i + 2) % 3][0] - px, P[(i + 2) % 3][1] - py
        dn = math.hypot(dx, dy)
        c1 = (e1x * dy - e1y * dx) / (math.hypot(e1x, e1y) * dn)
        c2 = (dx * e2y - dy * e2x) / (math.hypot(e2x, e2y) * dn)
        if mode == "open":
            ok = c1 > _CONE_TOL and c2 > _CONE_TOL
        elif mode == "half":
            ok = c1 >= -_CONE_TOL and c2 > _CONE_TOL
        else:
            ok = c1 >= -_CONE_TOL and c2 >= -_CONE_TOL
        return min(c1, c2) if ok else None

    def _incident(self, point):
        st = self.subtri
        return st.point_triangles[st.point_ptr[point]:st.point_ptr[point + 1]].tolist()

    def resolve_vertex_start(self, point, direction=FORWARD):
        """First incident triangle whose own signed velocity at the point enters it.

        Returns None at stagnation points (all incident velocities vanish) and at
        domain corners.
        """
        s = _direction(direction)
        if self.corner[point]:
            return None
        x, y = self.points[point]
        tris = self._incident(point)
        dirs = []
        for t in tris:
            dx, dy = self._vel(t, x, y, s)
            dirs.append((t, self.pid[t].index(point), dx, dy, math.hypot(dx, dy) > self.vtol))
        for mode in ("open", "half", "closed"):
            for t, i, dx, dy, moving in dirs:
                if moving and self._cone(t, i, dx, dy, mode) is not None:
                    return t
        moving = [d for d in dirs if d[4]]
        if not moving:
            return None
        best, score = None, -math.inf
        for t, i, dx, dy, _ in moving:
            P = self.P[t]
            px, py = P[i]
            e1x, e1y = P[(i + 1) % 3][0] - px, P[(i + 1) % 3][1] - py
            e2x, e2y = P[(i + 2) % 3][0] - px, P[(i + 2) % 3][1] - py
            dn = math.hypot(dx, dy)
            c = min((e1x * dy - e1y * dx) / math.hypot(e1x, e1y), (dx * e2y - dy * e2x) / math.hypot(e2x, e2y)) / dn
            if c > score:
                best, score = t, c
        self.fallbacks += 1
        log.warning("no admissible start triangle at point %d (%.6g, %.6g); using %d", point, x, y, best)
        return best

    def _enters(self, t, point, s):
        x, y = self.points[point]
        dx, dy = self._vel(t, x, y, s)
        if math.hypot(dx, dy) <= self.vtol:
            return False
        return self._cone(t, self.pid[t].index(point), dx, dy, "closed") is not None

    def resolve_vertex_passage(self, point, arriving, direction=FORWARD):
        """Triangle in which to continue after reaching ``point`` from ``arriving``."""
        s = _direction(direction)
        if self.corner[point]:
            return None
        x, y = self.points[point]
        dx, dy = self._vel(arriving, x, y, s)
        if math.hypot(dx, dy) > self.vtol:
            for mode in ("half", "closed"):
                for t in self._incident(point):
                    i = self.pid[t].index(point)
                    if self._cone(t, i, dx, dy, mode) is not None:
                        ox, oy = self._vel(t, x, y, s)
                        if math.hypot(ox, oy) > self.vtol and self._cone(t, i, ox, oy, "closed") is not None:
                            return t
                        return self.resolve_vertex_start(point, s)
        return self.resolve_vertex_start(point, s)

    # -- location --------------------------------------------------------------------
    def locate(self, x, direction=FORWARD):
        """Start descriptor for a point: ``("point", id)`` or ``("triangle", t)``."""
        s = _direction(direction)
        cands = self.subtri.containing(x, tol=1e-9)
        if not cands:
            raise TrackingError(f"point {tuple(x)} lies outside the domain")
        for t, lam in cands:
            for i in range(3):
                px, py = self.P[t][i]
                if math.hypot(px - x[0], py - x[1]) <= self.snap:
                    return ("point", self.pid[t][i])
        for t, lam in cands:
            if lam.min() > 1e-12:
                return ("triangle", t)
        for t, lam in cands:
            dx, dy = self._vel(t, x[0], x[1], s)
            sp = math.hypot(dx, dy)
            if all(self.N[t][e][0] * dx + self.N[t][e][1] * dy <= 1e-12 * sp
                   for e in range(3) if lam[e] <= 1e-12):
                return ("triangle", t)
        return ("triangle", cands[0][0])

    def edge_start(self, f, direction=FORWARD):
        """Start triangle for a point inside cell-edge ``f`` (triangle ``f``'s edge 0)."""
        s = _direction(direction)
        twin = self.nb[f][0]
        if twin >= 0 and s * self.F[f][0] > 0.0:
            return twin
        return f

    # -- tracing -----------------------------------------------------------------------
    def trace(self, x0, duration, direction=FORWARD, start=None, record=False):
        """Move ``x0`` along the flow for ``duration`` days.

        ``start`` is ``("point", id)``, ``("triangle", t)`` or None (locate).
        Returns ``(x, y)``, or ``(x, y), path`` with ``path`` a list of
        ``(x, y, elapsed)`` samples at every transition when ``record`` is set.
        """
        s = _direction(direction)
        x, y = float(x0[0]), float(x0[1])
        if duration < 0:
            raise ValueError("duration must be non-negative")
        if start is None:
            start = self.locate((x, y), s)
        path = [(x, y, 0.0)] if record else None
        rem = float(duration)
        kind, ref = start
        t, point, arriving = (ref, -1, -1) if kind == "triangle" else (-1, ref, -1)
        transitions = 0
        stalled = 0
        while rem > 0.0:
            transitions += 1
            if transitions > MAX_TRANSITIONS:
                raise TrackingError(f"more than {MAX_TRANSITIONS} transitions from {tuple(x0)}", path)
            only = -1
            if point >= 0:
                x, y = self.points[point]
                t_new = (self.resolve_vertex_start(point, s) if arriving < 0
                         else self.resolve_vertex_passage(point, arriving, s))
                if t_new is None or not self._enters(t_new, point, s):
                    # no incident velocity enters its own triangle: every exit
                    # leads back to the vertex, so the point stays there
                    break
                t = t_new
                only = self.pid[t].index(point)  # leave through the opposite edge only
            vx, vy = self._vel(t, x, y, s)
            if math.hypot(vx, vy) <= self.vtol:
                break
            e, tau, nx, ny = self._exit(t, x, y, s, rem, only=only)
            if e is None:
                x, y = self._clamp(t, nx, ny)
                rem = 0.0
                break
            rem -= tau
            stalled = stalled + 1 if tau <= EPS_T else 0
            if stalled > 50:
                log.warning("trace from %s stalled at (%.6g, %.6g)", tuple(x0), nx, ny)
                break
            x, y = nx, ny
            if record:
                path.append((x, y, duration - rem))
            P = self.P[t]
            point = -1
            for i in ((e + 1) % 3, (e + 2) % 3):
                if math.hypot(P[i][0] - x, P[i][1] - y) <= self.snap:
                    point = self.pid[t][i]
                    break
            if point >= 0:
                arriving = t
                continue
            nxt = self.nb[t][e]
            if nxt < 0:
                log.warning("trace left through a boundary edge carrying flux; stopping at the boundary")
                break
            t = nxt
        if record:
            if path[-1][:2] != (x, y):
                path.append((x, y, duration - rem))
            return (x, y), path
        return (x, y)

    def _clamp(self, t, x, y):
        P = self.P[t]
        lam = self.subtri.barycentric(t, (x, y))
        if lam.min() >= -1e-9:
            return x, y
        lam = np.clip(lam, 0.0, None)
        lam /= lam.sum()
        p = np.asarray(P)
        return tuple((lam @ p).tolist())

    def trace_many(self, points, duration, direction=FORWARD, starts=None):
        out = np.empty((len(points), 2))
        for n, p in enumerate(points):
            out[n] = self.trace(p, duration, direction, None if starts is None else starts[n])
        return out
