"""Straight-line geometry on a half-translation surface.

Saddle connections are enumerated by developing the triangulation outward
from every cone-point corner.  Each branch of the search carries an open
angular window of directions that are still visible from the base point; a
developed vertex strictly inside the window and within the length bound is
the far end of a saddle connection.  Every saddle connection is reached once
from each of its two ends and kept from the end with the smaller
(cone, position) label.

Half-edge *positions* measure, counterclockwise and in radians, where a
straight segment leaves a cone point, starting from a fixed reference corner
of that cone.  They give an intrinsic cyclic order around each cone point and
are what the curve machinery uses for junction angles.
"""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .errors import BudgetExceeded, CutoffTooLarge, NotIncident
from .surface import HalfTranslationSurface, ccw_angle, cross, dot

DEFAULT_NODE_BUDGET = 10**7
WINDOW_EPS = 1e-11
POS_DIGITS = 7


def _canonical(v):
    """Return (canonical vector with direction in [0, pi), sign applied)."""
    x, y = v
    scale = math.hypot(x, y)
    if y < -1e-12 * scale or (abs(y) <= 1e-12 * scale and x < 0):
        return (0.0 - x, 0.0 - y), -1
    return (x + 0.0, y + 0.0), 1


def direction(v) -> float:
    """Direction of a canonical vector, in [0, pi)."""
    (x, y), _ = _canonical(v)
    a = math.atan2(y, x)
    if a < 0 or a >= math.pi - 1e-15:
        a = 0.0 if abs(y) <= 1e-12 * math.hypot(x, y) else a % math.pi
    return a


@dataclass(eq=False)
class SaddleConnection:
    """A straight segment joining two cone points with no cone point inside.

    ``vector`` is the displacement from ``start`` to ``end`` in the chart of
    ``start_corner``'s triangle; ``holonomy`` is the same vector with its
    direction normalised into [0, pi) and ``orientation`` records which of
    the two it is.
    """

    start: int
    end: int
    start_pos: float
    end_pos: float
    start_corner: tuple
    end_corner: tuple
    vector: tuple
    holonomy: tuple
    orientation: int
    length: float
    idx: int = -1
    _segments: list = field(default=None, repr=False)

    @property
    def key(self):
        return (self.start, round(self.start_pos, POS_DIGITS), self.end, round(self.end_pos, POS_DIGITS))

    @property
    def angle(self) -> float:
        return direction(self.holonomy)

    def __eq__(self, other):
        return isinstance(other, SaddleConnection) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def half_edge(self, sense: int, at_end: bool):
        """(cone, position) of the half-edge used when traversing with ``sense`` at its start or end."""
        if (sense == 1) != at_end:
            return self.start, self.start_pos
        return self.end, self.end_pos

    def developed(self, sense: int = 1):
        """Displacement vector of the traversal, in the start corner's chart (sense +1)."""
        return self.vector if sense == 1 else (-self.vector[0], -self.vector[1])


def _norm_pos(q: HalfTranslationSurface, cone: int, pos: float) -> float:
    total = q.cone_totals[cone]
    pos = pos % total
    if total - pos < 1e-12:
        pos = 0.0
    return pos


def make_saddle_connection(q, corner, start_pos, end_corner, end_pos, vector, end_sign) -> SaddleConnection:
    """Build the canonical record of a saddle connection found from ``corner``.

    ``end_sign`` is the chart sign of the end triangle relative to the start
    triangle; it is needed to express the vector in the end chart when the
    record is flipped.
    """
    tri = q.triangles
    s_cone = tri[corner[0]].cone[corner[1]]
    e_cone = tri[end_corner[0]].cone[end_corner[1]]
    start_pos = _norm_pos(q, s_cone, start_pos)
    end_pos = _norm_pos(q, e_cone, end_pos)
    if (e_cone, end_pos) < (s_cone, start_pos):
        corner, end_corner = end_corner, corner
        s_cone, e_cone = e_cone, s_cone
        start_pos, end_pos = end_pos, start_pos
        vector = (-end_sign * vector[0], -end_sign * vector[1])
    corner, vector = _leaving_corner(q, corner, vector)
    hol, orient = _canonical(vector)
    return SaddleConnection(
        s_cone, e_cone, start_pos, end_pos, corner, end_corner, vector, hol, orient, math.hypot(*vector)
    )


def _leaving_corner(q, corner, vector):
    """Move a start corner forward when ``vector`` runs along its incoming edge."""
    t, i = corner
    T = q.triangles[t]
    e = (T.pts[(i + 1) % 3][0] - T.pts[i][0], T.pts[(i + 1) % 3][1] - T.pts[i][1])
    ang = ccw_angle(e, vector)
    if ang < T.angle[i] - 1e-9 or ang > 2 * math.pi - 1e-9:
        return corner, vector
    t2, k2, s, _, _ = T.nbr[(i + 2) % 3]
    return (t2, k2), (s * vector[0], s * vector[1])


def _edge_end_pos(q, t, k):
    """Position, at the far vertex, of the half-edge running back along edge ``k`` of ``t``."""
    t2, k2 = q.triangles[t].nbr[k][:2]
    return q.triangles[t2].offset[k2]


def _seg_dist(p, r):
    """Distance from the origin to segment pr."""
    dx, dy = r[0] - p[0], r[1] - p[1]
    ll = dx * dx + dy * dy
    u = 0.0 if ll == 0 else max(0.0, min(1.0, -(p[0] * dx + p[1] * dy) / ll))
    return math.hypot(p[0] + u * dx, p[1] + u * dy)


def _explore_corner(q: HalfTranslationSurface, t: int, i: int, L: float, budget: int):
    """All saddle connections leaving corner (t, i) with length <= L, as raw tuples."""
    tri = q.triangles
    T = tri[t]
    ox, oy = T.pts[i]
    a = (T.pts[(i + 1) % 3][0] - ox, T.pts[(i + 1) % 3][1] - oy)
    b = (T.pts[(i + 2) % 3][0] - ox, T.pts[(i + 2) % 3][1] - oy)
    Lt = L * (1 + 1e-12)
    found = []
    if math.hypot(*a) <= Lt:
        found.append(((t, i), T.offset[i], ((t, (i + 1) % 3)), _edge_end_pos(q, t, i), a, 1))
    stack = [(t, (i + 1) % 3, 1, -ox, -oy, a, b)]
    nodes = 0
    while stack:
        ct, k, s, cx, cy, l, r = stack.pop()
        nodes += 1
        if nodes > budget:
            raise CutoffTooLarge(f"developed frontier exceeded {budget} nodes", nodes)
        C = tri[ct]
        p0, p1 = C.pts[k], C.pts[(k + 1) % 3]
        P = (s * p0[0] + cx, s * p0[1] + cy)
        R = (s * p1[0] + cx, s * p1[1] + cy)
        if _seg_dist(P, R) > Lt:
            continue
        t2, k2, se, ex, ey = C.nbr[k]
        s2 = s * se
        c2x, c2y = cx - s2 * ex, cy - s2 * ey
        D = tri[t2]
        ka = (k2 + 2) % 3
        ap = D.pts[ka]
        w = (s2 * ap[0] + c2x, s2 * ap[1] + c2y)
        nw = math.hypot(*w)
        in_l = cross(l, w) > WINDOW_EPS * math.hypot(*l) * nw
        in_r = cross(w, r) > WINDOW_EPS * math.hypot(*r) * nw
        if in_l and in_r:
            if nw <= Lt:
                e_dir = (D.pts[k2][0] - ap[0], D.pts[k2][1] - ap[1])
                back = (-s2 * w[0], -s2 * w[1])
                found.append(
                    ((t, i), T.offset[i] + ccw_angle(a, w), (t2, ka), D.offset[ka] + ccw_angle(e_dir, back), w, s2)
                )
            stack.append((t2, (k2 + 1) % 3, s2, c2x, c2y, l, w))
            stack.append((t2, ka, s2, c2x, c2y, w, r))
        elif not in_l:
            stack.append((t2, ka, s2, c2x, c2y, l, r))
        else:
            stack.append((t2, (k2 + 1) % 3, s2, c2x, c2y, l, r))
    return found, nodes


def _explore_job(args):
    q, t, i, L, budget = args
    return _explore_corner(q, t, i, L, budget)


def enumerate_saddle_connections(q: HalfTranslationSurface, L: float, node_budget: int = DEFAULT_NODE_BUDGET, workers: int = 1):
    """Every saddle connection of length at most ``L``, once each, sorted by (length, angle, start cone)."""
    if not L > 0:
        raise ValueError("length bound must be positive")
    corners = [(t, k) for ring in q.cone_rings for (t, k) in ring]
    jobs = [(q, t, k, L, node_budget) for t, k in corners]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_explore_job, jobs))
    else:
        results = [_explore_job(j) for j in jobs]
    total_nodes = sum(n for _, n in results)
    if total_nodes > node_budget:
        raise CutoffTooLarge(f"developed frontier exceeded {node_budget} nodes", total_nodes)
    seen = {}
    for found, _ in results:
        for corner, spos, ecorner, epos, w, s2 in found:
            sc = make_saddle_connection(q, corner, spos, ecorner, epos, w, s2)
            seen.setdefault(sc.key, sc)
    out = sorted(seen.values(), key=lambda e: (round(e.length, 9), round(e.angle, 9), e.start, e.start_pos))
    for n, sc in enumerate(out):
        sc.idx = n
    return out


# --------------------------------------------------------------------------
# straight-line walking


def _ray_hit(o, d, a, b):
    """Solve o + tau d = a + u (b - a); returns (tau, u) or None if parallel."""
    e = (b[0] - a[0], b[1] - a[1])
    den = cross(d, e)
    if abs(den) < 1e-300:
        return None
    ao = (a[0] - o[0], a[1] - o[1])
    return cross(ao, e) / den, cross(ao, d) / den


@dataclass
class Walk:
    """Record of a straight walk: per-triangle segments in chart coordinates."""

    segments: list  # (t, p_chart, q_chart, tau_in, tau_out, s, cx, cy)
    end: tuple | None  # (t, k) corner reached, or None when the budget ran out
    tau: float
    dev_end: tuple | None = None  # developed position of the end vertex


def walk(q: HalfTranslationSurface, t: int, origin, d, max_len: float, corner: int | None = None, hit_tol: float | None = None) -> Walk:
    """Walk a straight ray through the triangulation.

    ``origin`` and the unit direction ``d`` are in the chart of triangle ``t``;
    developed coordinates coincide with that chart.  When ``corner`` is given
    the ray starts at that vertex and must point into the corner.  The walk
    stops at the first vertex within ``hit_tol`` of the ray or after
    ``max_len``.
    """
    tri = q.triangles
    tol = q.tol if hit_tol is None else hit_tol
    s, cx, cy = 1, 0.0, 0.0
    o = origin
    segs = []
    tau = 0.0
    ct = t
    T = tri[ct]
    V = T.pts
    if corner is not None:
        i = corner
        e = (V[(i + 1) % 3][0] - V[i][0], V[(i + 1) % 3][1] - V[i][1])
        if abs(cross(e, d)) <= tol and dot(e, d) > 0:
            tau_end = math.hypot(*e)
            if tau_end > max_len:
                segs.append((ct, o, (o[0] + max_len * d[0], o[1] + max_len * d[1]), 0.0, max_len, s, cx, cy))
                return Walk(segs, None, max_len)
            segs.append((ct, V[i], V[(i + 1) % 3], 0.0, tau_end, s, cx, cy))
            return Walk(segs, (ct, (i + 1) % 3), tau_end, V[(i + 1) % 3])
        # the opposite vertex cannot lie on the ray: the direction is inside the corner
        k = (i + 1) % 3
        hit = _ray_hit(o, d, V[k], V[(k + 1) % 3])
        tau_out = hit[0]
    else:
        best = None
        for k in range(3):
            hit = _ray_hit(o, d, V[k], V[(k + 1) % 3])
            if hit is None:
                continue
            th, u = hit
            if th > tol and -1e-12 <= u <= 1 + 1e-12 and (best is None or th < best[0]):
                best = (th, k)
        if best is None:
            raise ValueError("ray does not leave its starting triangle")
        tau_out, k = best
        for kv in range(3):
            P = V[kv]
            rel = (P[0] - o[0], P[1] - o[1])
            along = dot(rel, d)
            if abs(cross(d, rel)) <= tol and tol < along <= tau_out + tol:
                if along > max_len:
                    break
                segs.append((ct, o, P, 0.0, along, s, cx, cy))
                return Walk(segs, (ct, kv), along, P)
    while True:
        if tau_out > max_len:
            end_pt = (o[0] + max_len * d[0], o[1] + max_len * d[1])
            segs.append((ct, _to_chart(tri[ct], s, cx, cy, (o[0] + tau * d[0], o[1] + tau * d[1])), _to_chart(tri[ct], s, cx, cy, end_pt), tau, max_len, s, cx, cy))
            return Walk(segs, None, max_len)
        p_in = (o[0] + tau * d[0], o[1] + tau * d[1])
        p_out = (o[0] + tau_out * d[0], o[1] + tau_out * d[1])
        segs.append((ct, _to_chart(tri[ct], s, cx, cy, p_in), _to_chart(tri[ct], s, cx, cy, p_out), tau, tau_out, s, cx, cy))
        tau = tau_out
        t2, k2, se, ex, ey = tri[ct].nbr[k]
        s = s * se
        cx, cy = cx - s * ex, cy - s * ey
        ct = t2
        D = tri[ct]
        ka = (k2 + 2) % 3
        A = (s * D.pts[ka][0] + cx, s * D.pts[ka][1] + cy)
        rel = (A[0] - o[0], A[1] - o[1])
        side = cross(d, rel)
        if abs(side) <= tol:
            along = dot(rel, d)
            if along > max_len:
                end_pt = (o[0] + max_len * d[0], o[1] + max_len * d[1])
                segs.append((ct, _to_chart(D, s, cx, cy, p_out), _to_chart(D, s, cx, cy, end_pt), tau, max_len, s, cx, cy))
                return Walk(segs, None, max_len)
            segs.append((ct, _to_chart(D, s, cx, cy, p_out), D.pts[ka], tau, along, s, cx, cy))
            return Walk(segs, (ct, ka), along, A)
        k = (k2 + 1) % 3 if side > 0 else ka
        P0 = (s * D.pts[k][0] + cx, s * D.pts[k][1] + cy)
        P1 = (s * D.pts[(k + 1) % 3][0] + cx, s * D.pts[(k + 1) % 3][1] + cy)
        hit = _ray_hit(o, d, P0, P1)
        tau_out = hit[0] if hit is not None else tau


def _to_chart(T, s, cx, cy, p):
    return (s * (p[0] - cx), s * (p[1] - cy))


def segments_of(q: HalfTranslationSurface, sc: SaddleConnection):
    """Per-triangle pieces of a saddle connection, from start to end, in chart coordinates."""
    if sc._segments is None:
        t, i = sc.start_corner
        L = sc.length
        d = (sc.vector[0] / L, sc.vector[1] / L)
        w = walk(q, t, q.triangles[t].pts[i], d, L * (1 + 1e-9) + q.tol, corner=i)
        tgt = (q.triangles[t].pts[i][0] + sc.vector[0], q.triangles[t].pts[i][1] + sc.vector[1])
        ok = w.end is not None and q.triangles[w.end[0]].cone[w.end[1]] == sc.end
        if not ok or math.hypot(w.dev_end[0] - tgt[0], w.dev_end[1] - tgt[1]) > 10 * q.tol:
            raise RuntimeError(f"retrace of saddle connection {sc.idx} did not reach its end corner")
        sc._segments = [(st, p, r) for st, p, r, *_ in w.segments]
    return sc._segments


def crossings_of(q: HalfTranslationSurface, sc: SaddleConnection):
    """Chart records (polygon id, entry edge, entry parameter) of the polygon edges crossed."""
    out = []
    for st, p, _ in segments_of(q, sc)[1:]:
        T = q.triangles[st]
        for k in range(3):
            if T.pedge[k] is None:
                continue
            a, b = T.pts[k], T.pts[(k + 1) % 3]
            e = (b[0] - a[0], b[1] - a[1])
            rel = (p[0] - a[0], p[1] - a[1])
            if abs(cross(e, rel)) <= q.tol * math.hypot(*e):
                u = dot(rel, e) / dot(e, e)
                if -1e-9 <= u <= 1 + 1e-9:
                    out.append((q.polygons[T.polygon].id, T.pedge[k], u))
                    break
    return out


# --------------------------------------------------------------------------
# angles at cone points


def junction_angles(q: HalfTranslationSurface, s_in, s_out):
    """(left, right) angles at the junction of traversal ``s_in`` into traversal ``s_out``.

    Traversals are (SaddleConnection, sense) pairs.  Left is the side on the
    left of the direction of travel.
    """
    e1, sg1 = s_in
    e2, sg2 = s_out
    c1, a_in = e1.half_edge(sg1, at_end=True)
    c2, a_out = e2.half_edge(sg2, at_end=False)
    if c1 != c2:
        raise NotIncident(f"saddle connection {e1.idx} ends at cone {c1} but {e2.idx} starts at cone {c2}")
    total = q.cone_totals[c1]
    left = (a_in - a_out) % total
    if left < 1e-12 or total - left < 1e-12:
        return 0.0, q.cones[c1].angle
    scale = q.cones[c1].angle / total
    return left * scale, (total - left) * scale


def angle_between(q: HalfTranslationSurface, s_in, s_out, side: str = "left") -> float:
    left, right = junction_angles(q, s_in, s_out)
    if side == "left":
        return left
    if side == "right":
        return right
    raise ValueError("side must be 'left' or 'right'")


# --------------------------------------------------------------------------
# cylinders


@dataclass
class MaximalCylinder:
    direction: float
    circumference: float
    height: float
    boundary_chains: tuple  # two tuples of (SaddleConnection, sense); each has the cylinder on its left

    @property
    def area(self) -> float:
        return self.circumference * self.height


@dataclass
class CylinderDecomposition:
    direction: float
    cylinders: list
    certified: bool
    saddle_connections: list
    _by_cycle: dict = field(default_factory=dict, repr=False)

    def _opposite_cycle(self, st, pt, dvec, ray_len):
        """Shoot along the left normal of a leaf; return (boundary cycle hit, distance)."""
        q, tri = self._q, self._q.triangles
        n = (-dvec[1], dvec[0])
        hit = _shoot(q, st, pt, n, self._pieces, ray_len)
        if hit is None:
            return None
        height, sc_i, seg_dir, nloc = hit
        other = self._sep_sc[sc_i]
        if other is None:
            return None
        # the traversal of `other` that has the swept region on its left
        fwd = dot((-seg_dir[1], seg_dir[0]), (-nloc[0], -nloc[1])) > 0
        corner = self._seps[sc_i][0]
        cone = tri[corner[0]].cone[corner[1]]
        pos = round(_norm_pos(q, cone, self._seps[sc_i][1]), POS_DIGITS)
        along = 1 if other.key[:2] == (cone, pos) else -1
        cyc = self._cycle_of.get((other.key, along if fwd else -along))
        return None if cyc is None else (cyc, height)

    def locate(self, t: int, pt, d):
        """Cylinder containing the leaf through ``pt`` (chart of triangle ``t``) with direction ``d``."""
        q = self._q
        found = self._opposite_cycle(t, pt, d, 2 * q.area / max(min((c.circumference for c in self.cylinders), default=1.0), 1e-300) + q.diameter)
        if found is None:
            return None
        return self._by_cycle.get(found[0])


def _separatrices(q, theta, max_len):
    u = (math.cos(theta), math.sin(theta))
    seps = []
    for ring in q.cone_rings:
        for t, i in ring:
            T = q.triangles[t]
            e = (T.pts[(i + 1) % 3][0] - T.pts[i][0], T.pts[(i + 1) % 3][1] - T.pts[i][1])
            for d in (u, (-u[0], -u[1])):
                ang = ccw_angle(e, d)
                if ang > 2 * math.pi - 1e-10:
                    ang = 0.0
                if ang >= T.angle[i] - 1e-10:
                    continue
                if ang <= 1e-10:
                    ang = 0.0
                w = walk(q, t, T.pts[i], d, max_len, corner=i)
                seps.append(((t, i), T.offset[i] + ang, d, w))
    return seps


def cylinders_in_direction(q: HalfTranslationSurface, theta: float, max_length: float | None = None, strict: bool = True):
    """Maximal cylinders whose core curves have direction ``theta``.

    Traces every separatrix in the direction up to ``max_length``.  A
    cylinder is reported once both of its boundary chains consist of closed
    separatrices.  With ``strict`` a direction that is not certified
    completely periodic raises :class:`BudgetExceeded` carrying the partial
    list; otherwise a :class:`CylinderDecomposition` with ``certified=False``
    is returned.
    """
    theta = theta % math.pi
    if max_length is None:
        max_length = 50.0 * max(q.diameter, math.sqrt(q.area))
    tri = q.triangles
    seps = _separatrices(q, theta, max_length)
    certified = True
    by_key = {}
    sep_sc = []
    for corner, pos, d, w in seps:
        if w.end is None:
            certified = False
            sep_sc.append(None)
            continue
        et, ek = w.end
        t0, i0 = corner
        vec = (w.dev_end[0] - tri[t0].pts[i0][0], w.dev_end[1] - tri[t0].pts[i0][1])
        # chart sign of the end triangle relative to the start chart
        s_end = w.segments[-1][5]
        back = (-s_end * vec[0], -s_end * vec[1])
        E = tri[et]
        if len(w.segments) == 1 and w.end == (t0, (i0 + 1) % 3) and w.segments[0][2] == tri[t0].pts[(i0 + 1) % 3]:
            epos = _edge_end_pos(q, t0, i0)
        else:
            edir = (E.pts[(ek + 1) % 3][0] - E.pts[ek][0], E.pts[(ek + 1) % 3][1] - E.pts[ek][1])
            epos = E.offset[ek] + ccw_angle(edir, back)
        sc = make_saddle_connection(q, corner, pos, w.end, epos, vec, s_end)
        sc = by_key.setdefault(sc.key, sc)
        if sc._segments is None and sc.start_corner == corner:
            sc._segments = [(st, p, r) for st, p, r, *_ in w.segments]
        sep_sc.append(sc)

    # traversal leaving each half-edge
    leaving = {}
    for (corner, pos, d, w), sc in zip(seps, sep_sc):
        cone = tri[corner[0]].cone[corner[1]]
        pos = _norm_pos(q, cone, pos)
        if sc is None:
            leaving[(cone, round(pos, POS_DIGITS))] = None
        else:
            sense = 1 if sc.key[:2] == (cone, round(pos, POS_DIGITS)) else -1
            leaving[(cone, round(pos, POS_DIGITS))] = (sc, sense)

    def lookup(cone, pos):
        pos = _norm_pos(q, cone, pos)
        key = (cone, round(pos, POS_DIGITS))
        if key in leaving:
            return leaving[key]
        total = q.cone_totals[cone]
        for (c, p), trav in leaving.items():
            if c == cone and min(abs(p - pos), total - abs(p - pos)) < 1e-7:
                return trav
        return None

    def nxt(trav):
        sc, sense = trav
        cone, a_in = sc.half_edge(sense, at_end=True)
        return lookup(cone, a_in - math.pi * q.cone_totals[cone] / q.cones[cone].angle)

    cycle_of = {}
    cycles = []
    for trav in list(leaving.values()):
        if trav is None or (trav[0].key, trav[1]) in cycle_of:
            continue
        chain = [trav]
        cur = trav
        ok = True
        while True:
            cur = nxt(cur)
            if cur is None:
                ok = False
                break
            if cur[0] == trav[0] and cur[1] == trav[1]:
                break
            chain.append(cur)
            if len(chain) > len(leaving) + 1:
                ok = False
                break
        if ok:
            cid = len(cycles)
            cycles.append(chain)
            for tr in chain:
                cycle_of[(tr[0].key, tr[1])] = cid

    # horizontal pieces by triangle for the height rays
    pieces = {}
    for sc_i, ((corner, pos, d, w), sc) in enumerate(zip(seps, sep_sc)):
        for st, p, r, *_ in w.segments:
            if p == r:
                continue
            pieces.setdefault(st, []).append((p, r, sc_i))
            T = tri[st]
            for k in range(3):
                a, b = T.pts[k], T.pts[(k + 1) % 3]
                if _on_line(a, b, p, q.tol) and _on_line(a, b, r, q.tol):
                    t2, k2, se, ex, ey = T.nbr[k]
                    pieces.setdefault(t2, []).append(
                        ((se * p[0] + ex, se * p[1] + ey), (se * r[0] + ex, se * r[1] + ey), sc_i)
                    )

    dec = CylinderDecomposition(theta, [], certified, [])
    dec._q, dec._pieces, dec._seps, dec._sep_sc, dec._cycle_of, dec._cycles = q, pieces, seps, sep_sc, cycle_of, cycles
    done = set()
    for cid, chain in enumerate(cycles):
        if cid in done:
            continue
        circ = sum(tr[0].length for tr in chain)
        sc, sense = chain[0]
        st, pt, dvec = point_along(q, sc, sense, 0.381966011250105)
        found = dec._opposite_cycle(st, pt, dvec, 1.01 * q.area / circ + q.diameter)
        if found is None:
            continue
        top, height = found
        done.add(cid)
        done.add(top)
        cyl = MaximalCylinder(theta, circ, height, (tuple(chain), tuple(cycles[top])))
        dec._by_cycle[cid] = dec._by_cycle[top] = cyl
        dec.cylinders.append(cyl)
    dec.cylinders.sort(key=lambda c: (round(c.circumference, 9), round(c.height, 9)))
    dec.saddle_connections = sorted(by_key.values(), key=lambda e: (round(e.length, 9), e.start, e.start_pos))
    if strict and not certified:
        raise BudgetExceeded(
            f"direction {theta!r} not certified periodic within separatrix length {max_length!r}",
            partial=dec.cylinders,
            certified=False,
        )
    return dec


def _on_line(a, b, p, tol):
    e = (b[0] - a[0], b[1] - a[1])
    return abs(cross(e, (p[0] - a[0], p[1] - a[1]))) <= tol * math.hypot(*e)


def point_along(q, sc: SaddleConnection, sense: int, frac: float):
    """(triangle, chart point, chart unit direction of travel) at fraction ``frac`` of a traversal."""
    segs = segments_of(q, sc)
    target = frac * sc.length
    if sense == -1:
        target = sc.length - target
    acc = 0.0
    for st, p, r in segs:
        ln = math.hypot(r[0] - p[0], r[1] - p[1])
        if acc + ln >= target or (st, p, r) == segs[-1]:
            f = (target - acc) / ln if ln > 0 else 0.0
            pt = (p[0] + f * (r[0] - p[0]), p[1] + f * (r[1] - p[1]))
            dvec = ((r[0] - p[0]) / ln, (r[1] - p[1]) / ln)
            if sense == -1:
                dvec = (-dvec[0], -dvec[1])
            return st, pt, dvec
        acc += ln
    raise RuntimeError("empty saddle connection")


def _shoot(q, st, pt, n, pieces, max_len):
    tri = q.triangles
    # a point on an edge is pushed into the triangle on the ray side
    T = tri[st]
    for k in range(3):
        a, b = T.pts[k], T.pts[(k + 1) % 3]
        if _on_line(a, b, pt, q.tol):
            e = (b[0] - a[0], b[1] - a[1])
            if cross(e, n) < 0:
                t2, k2, se, ex, ey = T.nbr[k]
                st, pt, n = t2, (se * pt[0] + ex, se * pt[1] + ey), (se * n[0], se * n[1])
            break
    w = walk(q, st, pt, n, max_len)
    best = None
    min_tau = 1e-9 * q.diameter
    for t, p_in, p_out, tau_in, tau_out, s, cx, cy in w.segments:
        dl = ((p_out[0] - p_in[0]), (p_out[1] - p_in[1]))
        ln = math.hypot(*dl)
        if ln == 0:
            continue
        dloc = (dl[0] / ln, dl[1] / ln)
        for a, b, sc_i in pieces.get(t, ()):
            hit = _ray_hit(p_in, dloc, a, b)
            if hit is None:
                continue
            th, u = hit
            tau = tau_in + th
            if -1e-9 <= u <= 1 + 1e-9 and -1e-12 <= th <= ln + 1e-9 and tau > min_tau:
                if best is None or tau < best[0] - 1e-12:
                    seg_dir = ((b[0] - a[0]), (b[1] - a[1]))
                    best = (tau, sc_i, seg_dir, dloc)
        if best is not None:
            return best
    return best


# --------------------------------------------------------------------------
# CSV emission and cache


def to_csv(scs) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["idx", "start", "end", "hx", "hy", "len"])
    for sc in scs:
        wr.writerow([sc.idx, sc.start, sc.end, f"{sc.holonomy[0]:.17g}", f"{sc.holonomy[1]:.17g}", f"{sc.length:.17g}"])
    return buf.getvalue()


@dataclass
class HolonomyRecord:
    """Light saddle-connection record as stored in the CSV cache."""

    idx: int
    start: int
    end: int
    holonomy: tuple
    length: float


def read_csv(text: str):
    rows = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    out = []
    for row in csv.DictReader(rows):
        out.append(
            HolonomyRecord(int(row["idx"]), int(row["start"]), int(row["end"]), (float(row["hx"]), float(row["hy"])), float(row["len"]))
        )
    return out


def cache_header(q: HalfTranslationSurface, L: float) -> str:
    return f"# surface={q.spec_hash()} L={L!r}"


def cached_holonomies(q: HalfTranslationSurface, L: float, cache_dir=None, **kw):
    """Holonomy records up to ``L``, reusing ``cache_dir`` only on an exact header match."""
    cache_dir = cache_dir if cache_dir is not None else os.environ.get("FLATSPEC_CACHE_DIR")
    header = cache_header(q, L)
    path = None
    if cache_dir:
        path = Path(cache_dir) / f"sc_{q.spec_hash()[:16]}_{L!r}.csv"
        if path.exists():
            text = path.read_text()
            first = text.split("\n", 1)[0]
            if first == header:
                return read_csv(text)
    scs = enumerate_saddle_connections(q, L, **kw)
    recs = [HolonomyRecord(sc.idx, sc.start, sc.end, sc.holonomy, sc.length) for sc in scs]
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(header + "\n" + to_csv(scs))
    return recs
