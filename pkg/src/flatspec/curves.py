"""Closed curves: tightening to flat geodesic representatives, classification, enumeration.

A closed geodesic on a half-translation surface either runs inside a flat
cylinder or is a cyclic chain of saddle connections whose junction angles
are at least pi on both sides.  Tightening works on the sequence of
triangle edges a curve crosses.  The crossing parameters are relaxed one at a
time (each move is the exact minimiser of the two adjacent chords), which
decreases length monotonically.  Crossings that end up clamped at a vertex
pin the curve to that cone point; if the side of the pin away from the
crossed edges subtends less than pi, the crossings are rerouted around the
other side of the vertex, which is strictly shorter.  Once nothing reroutes,
the saddle connections between consecutive pins are rebuilt exactly by
development.
"""

from __future__ import annotations

import itertools
import json
import math
from collections import defaultdict
from dataclasses import dataclass, field

from .errors import BudgetExceeded, Degenerate, InvalidPath, NoConvergence, NotIncident
from .geodesy import (
    MaximalCylinder,
    SaddleConnection,
    ccw_angle,
    cylinders_in_direction,
    direction,
    enumerate_saddle_connections,
    junction_angles,
    make_saddle_connection,
    segments_of,
)
from .surface import HalfTranslationSurface, cross, dot

CYLINDER = "cylinder"
CONSTANT_DIRECTION = "constantDirectionChain"
CROOKED = "crooked"

ANGLE_TOL = 1e-9
PARALLEL_TOL = 1e-9
SWEEP_BUDGET = 10**5


# --------------------------------------------------------------------------
# representations


@dataclass(frozen=True)
class CurvePath:
    """Cyclic list of (gluing id, t, dir) edge crossings.

    ``t`` in (0, 1) is measured along the ``a`` side of the gluing; ``dir``
    is +1 when passing from the ``a`` side's polygon into the ``b`` side's
    polygon and -1 for the opposite direction.
    """

    crossings: tuple

    @classmethod
    def from_json(cls, obj) -> "CurvePath":
        if isinstance(obj, (str, bytes)):
            obj = json.loads(obj)
        if obj.get("type") != "path":
            raise InvalidPath("curve file is not of type 'path'")
        out = []
        for c in obj["crossings"]:
            if len(c) not in (2, 3):
                raise InvalidPath(f"bad crossing record {c!r}")
            d = int(c[2]) if len(c) == 3 else 1
            if d not in (1, -1):
                raise InvalidPath(f"crossing direction must be +1 or -1, got {d}")
            out.append((int(c[0]), float(c[1]), d))
        if not out:
            raise InvalidPath("a path needs at least one crossing")
        return cls(tuple(out))

    def to_json(self) -> dict:
        return {"type": "path", "crossings": [[g, t, d] for g, t, d in self.crossings]}


@dataclass
class GeodesicRepresentative:
    kind: str  # "cylinder" or "chain"
    edges: tuple = ()
    cylinder: MaximalCylinder | None = None
    chosen_boundary: int = 0
    sweeps: list = field(default_factory=list, repr=False)

    def traversals(self) -> tuple:
        if self.kind == CYLINDER:
            return self.cylinder.boundary_chains[self.chosen_boundary]
        return self.edges

    def multiplicities(self) -> dict:
        m = {}
        for sc, _ in self.traversals():
            m[sc] = m.get(sc, 0) + 1
        return m

    def weighted_holonomies(self) -> list:
        return [(k * sc.holonomy[0], k * sc.holonomy[1]) for sc, k in self.multiplicities().items()]

    @property
    def length(self) -> float:
        return sum(sc.length for sc, _ in self.traversals())

    @property
    def length_h(self) -> float:
        return sum(abs(sc.holonomy[0]) for sc, _ in self.traversals())

    @property
    def length_v(self) -> float:
        return sum(abs(sc.holonomy[1]) for sc, _ in self.traversals())

    def word(self) -> tuple:
        return tuple((sc.idx, s) for sc, s in self.traversals())

    def canonical(self):
        if self.kind == CYLINDER:
            keys = sorted(sc.key for sc, _ in self.cylinder.boundary_chains[0] + self.cylinder.boundary_chains[1])
            return (CYLINDER, round(self.cylinder.direction, 9), tuple(keys))
        return ("chain", canonical_word([(sc.key, s) for sc, s in self.edges]))

    def to_json(self) -> dict:
        out = {
            "kind": self.kind,
            "length": self.length,
            "length_h": self.length_h,
            "length_v": self.length_v,
            "edges": [[sc.idx, s, list(sc.holonomy)] for sc, s in self.traversals()],
        }
        if self.kind == CYLINDER:
            c = self.cylinder
            out["cylinder"] = {"direction": c.direction, "circumference": c.circumference, "height": c.height}
            out["chosen_boundary"] = self.chosen_boundary
        return out


def canonical_word(word):
    """Lexicographically least rotation of the word and of its reversal."""
    word = list(word)
    rev = [(e, -s) for e, s in reversed(word)]
    best = None
    for w in (word, rev):
        for r in range(len(w)):
            cand = tuple(w[r:] + w[:r])
            if best is None or cand < best:
                best = cand
    return best


def is_primitive(word) -> bool:
    n = len(word)
    word = list(word)
    for d in range(1, n):
        if n % d == 0 and word[d:] + word[:d] == word:
            return False
    return True


# --------------------------------------------------------------------------
# junction angles and classification


@dataclass
class GeodesicCheck:
    ok: bool
    junctions: list  # (index, left, right)
    failures: list

    def __bool__(self):
        return self.ok


def junction_report(q, edges):
    out = []
    n = len(edges)
    for j in range(n):
        left, right = junction_angles(q, edges[j], edges[(j + 1) % n])
        out.append((j, left, right))
    return out


def validate_geodesic(q: HalfTranslationSurface, chain) -> GeodesicCheck:
    """Every junction must have angle at least pi on both sides."""
    edges = chain.traversals() if isinstance(chain, GeodesicRepresentative) else tuple(chain)
    rep = junction_report(q, edges)
    bad = [j for j, l, r in rep if l < math.pi - ANGLE_TOL or r < math.pi - ANGLE_TOL]
    return GeodesicCheck(not bad, rep, bad)


def _all_parallel(edges) -> bool:
    a0 = edges[0][0].angle
    for sc, _ in edges[1:]:
        d = abs(sc.angle - a0)
        if min(d, math.pi - d) > PARALLEL_TOL:
            return False
    return True


def classify(rep: GeodesicRepresentative) -> str:
    if rep.kind == CYLINDER:
        return CYLINDER
    return CONSTANT_DIRECTION if _all_parallel(rep.edges) else CROOKED


def _flat_side(q, edges):
    """'left'/'right' if every junction has angle exactly pi on that side."""
    if not _all_parallel(edges):
        return None
    rep = junction_report(q, edges)
    if all(abs(l - math.pi) <= ANGLE_TOL for _, l, _ in rep):
        return "left"
    if all(abs(r - math.pi) <= ANGLE_TOL for _, _, r in rep):
        return "right"
    return None


def _same_cycle(a, b) -> bool:
    ka = [(sc.key, s) for sc, s in a]
    kb = [(sc.key, s) for sc, s in b]
    if len(ka) != len(kb):
        return False
    return any(kb[r:] + kb[:r] == ka for r in range(len(kb)))


def cylinder_of_chain(q, edges):
    """Cylinder bounded by a constant-direction chain on its flat side, if any."""
    side = _flat_side(q, edges)
    if side is None:
        return None
    chain = list(edges) if side == "left" else [(sc, -s) for sc, s in reversed(edges)]
    theta = chain[0][0].angle
    total = sum(sc.length for sc, _ in chain)
    dec = cylinders_in_direction(q, theta, max_length=total * (1 + 1e-9) + q.tol, strict=False)
    for cyl in dec.cylinders:
        for i, bc in enumerate(cyl.boundary_chains):
            if _same_cycle(chain, bc):
                return GeodesicRepresentative(CYLINDER, cylinder=cyl, chosen_boundary=i)
    return None


# --------------------------------------------------------------------------
# crossings between saddle connections


def _pieces(q, sc):
    """Chart pieces by triangle, with edge-lying pieces copied to the neighbouring triangle."""
    out = defaultdict(list)
    for t, p, r in segments_of(q, sc):
        out[t].append((p, r))
        T = q.triangles[t]
        for k in range(3):
            a, b = T.pts[k], T.pts[(k + 1) % 3]
            e = (b[0] - a[0], b[1] - a[1])
            tol = q.tol * math.hypot(*e)
            if abs(cross(e, (p[0] - a[0], p[1] - a[1]))) <= tol and abs(cross(e, (r[0] - a[0], r[1] - a[1]))) <= tol:
                t2, _, s, cx, cy = T.nbr[k]
                out[t2].append(((s * p[0] + cx, s * p[1] + cy), (s * r[0] + cx, s * r[1] + cy)))
    return out


def _near_vertex(T, x, tol):
    return any(math.hypot(x[0] - v[0], x[1] - v[1]) <= tol for v in T.pts)


def _cross_in(T, s1, s2, tol) -> bool:
    (p1, r1), (p2, r2) = s1, s2
    d1 = (r1[0] - p1[0], r1[1] - p1[1])
    d2 = (r2[0] - p2[0], r2[1] - p2[1])
    den = cross(d1, d2)
    if abs(den) <= 1e-14 * math.hypot(*d1) * math.hypot(*d2):
        return False
    w = (p2[0] - p1[0], p2[1] - p1[1])
    u = cross(w, d2) / den
    v = cross(w, d1) / den
    eps = 1e-12
    if not (-eps <= u <= 1 + eps and -eps <= v <= 1 + eps):
        return False
    x = (p1[0] + u * d1[0], p1[1] + u * d1[1])
    return not _near_vertex(T, x, tol)


class CrossingTable:
    """Which saddle connections cross each other (or themselves) in their interiors."""

    def __init__(self, q: HalfTranslationSurface, scs):
        self.q = q
        self.scs = list(scs)
        by_tri = defaultdict(list)
        for i, sc in enumerate(self.scs):
            for t, segs in _pieces(q, sc).items():
                for s in segs:
                    by_tri[t].append((i, s))
        self.cross = defaultdict(set)
        self.self_cross = set()
        tol = 10 * q.tol
        for t, items in by_tri.items():
            T = q.triangles[t]
            for (i, s1), (j, s2) in itertools.combinations(items, 2):
                if i == j and i in self.self_cross:
                    continue
                if i != j and j in self.cross[i]:
                    continue
                if _cross_in(T, s1, s2, tol):
                    if i == j:
                        self.self_cross.add(i)
                    else:
                        self.cross[i].add(j)
                        self.cross[j].add(i)

    def crosses(self, i: int, j: int) -> bool:
        return j in self.cross[i] if i != j else i in self.self_cross


# --------------------------------------------------------------------------
# simplicity


def _interleave(a, b, c, d) -> bool:
    if a > b:
        a, b = b, a
    return (a < c < b) != (a < d < b)


def _junction_chords(edges):
    # per junction: cone, (end position, index, sign), (start position, index, sign)
    n = len(edges)
    out = []
    for j in range(n):
        sc1, s1 = edges[j]
        sc2, s2 = edges[(j + 1) % n]
        k = (j + 1) % n
        end = (round(sc1.end_pos, 7), j, -1) if s1 == 1 else (round(sc1.start_pos, 7), j, 1)
        beg = (round(sc2.start_pos, 7), k, 1) if s2 == 1 else (round(sc2.end_pos, 7), k, -1)
        out.append((sc1.end if s1 == 1 else sc1.start, end, beg))
    return out


def _junctions_planar(chords, rank) -> bool:
    by_cone = defaultdict(list)
    for cone, (pa, ja, sa), (pb, jb, sb) in chords:
        by_cone[cone].append(((pa, sa * rank[ja]), (pb, sb * rank[jb])))
    for lst in by_cone.values():
        for (a, b), (c, d) in itertools.combinations(lst, 2):
            if _interleave(a, b, c, d):
                return False
    return True


def _strands_ok(q, edges, max_combos=20000) -> bool:
    chords = _junction_chords(edges)
    by_cone = defaultdict(list)
    for cone, a, b in chords:
        by_cone[cone].append((a[0], b[0]))
    # pairs with four distinct positions interleave or not whatever the ranks
    for lst in by_cone.values():
        for (a, b), (c, d) in itertools.combinations(lst, 2):
            if len({a, b, c, d}) == 4 and _interleave(a, b, c, d):
                return False
    occ = defaultdict(list)
    for j, (sc, _) in enumerate(edges):
        occ[sc.key].append(j)
    groups = list(occ.values())
    perms = [list(itertools.permutations(range(len(g)))) for g in groups]
    for n_tried, combo in enumerate(itertools.product(*perms)):
        if n_tried >= max_combos:
            break
        rank = {}
        for g, perm in zip(groups, combo):
            for j, r in zip(g, perm):
                rank[j] = r
        if _junctions_planar(chords, rank):
            return True
    return False


def is_simple(q: HalfTranslationSurface, rep, table: CrossingTable | None = None) -> bool:
    """No transverse self-crossing after pushing the chain off its cone points."""
    if isinstance(rep, GeodesicRepresentative) and rep.kind == CYLINDER:
        return True
    edges = rep.traversals() if isinstance(rep, GeodesicRepresentative) else tuple(rep)
    if not is_primitive([(sc.key, s) for sc, s in edges]):
        return False
    distinct = list({sc.key: sc for sc, _ in edges}.values())
    if table is not None and all(sc.idx >= 0 and sc.idx < len(table.scs) and table.scs[sc.idx] == sc for sc in distinct):
        ids = [sc.idx for sc in distinct]
        if any(table.crosses(i, i) for i in ids) or any(table.crosses(i, j) for i, j in itertools.combinations(ids, 2)):
            return False
    else:
        local = CrossingTable(q, distinct)
        n = len(distinct)
        if local.self_cross or any(local.cross[i] for i in range(n)):
            return False
    return _strands_ok(q, edges)


# --------------------------------------------------------------------------
# tightening


def _edge_point(T, k, x):
    a, b = T.pts[k], T.pts[(k + 1) % 3]
    return (a[0] + x * (b[0] - a[0]), a[1] + x * (b[1] - a[1]))


def _fwd(T, k, z):
    _, _, s, cx, cy = T.nbr[k]
    return (s * z[0] + cx, s * z[1] + cy)


def _back(T, k, z):
    _, _, s, cx, cy = T.nbr[k]
    return (s * (z[0] - cx), s * (z[1] - cy))


def _chord_crossings(q, t, ke, p, target_t, target):
    """Diagonal crossings of the straight chord from ``p`` (on edge ke of t) to ``target`` (in target_t)."""
    tri = q.triangles
    out = []
    d = (target[0] - p[0], target[1] - p[1])
    if math.hypot(*d) <= q.tol:
        return out
    for _ in range(4 * len(tri) + 4):
        if t == target_t:
            return out
        T = tri[t]
        best = None
        for k in range(3):
            if k == ke:
                continue
            a, b = T.pts[k], T.pts[(k + 1) % 3]
            e = (b[0] - a[0], b[1] - a[1])
            den = cross(d, e)
            if abs(den) < 1e-300:
                continue
            ap = (a[0] - p[0], a[1] - p[1])
            tau = cross(ap, e) / den
            u = cross(ap, d) / den
            if tau > 1e-12 and -1e-12 <= u <= 1 + 1e-12 and (best is None or tau < best[0]):
                best = (tau, k, u)
        if best is None or best[0] > 1 + 1e-9:
            raise InvalidPath("chord between consecutive crossings leaves its polygon")
        tau, k, u = best
        if T.pedge[k] is not None:
            raise InvalidPath("chord between consecutive crossings leaves its polygon")
        if u <= 1e-12 or u >= 1 - 1e-12:
            raise InvalidPath("chord between consecutive crossings passes through a vertex")
        out.append([t, k, u])
        p = (p[0] + tau * d[0], p[1] + tau * d[1])
        d = (target[0] - p[0], target[1] - p[1])
        t, ke = T.nbr[k][0], T.nbr[k][1]
    raise InvalidPath("chord walk did not terminate")


def path_to_crossings(q: HalfTranslationSurface, path: CurvePath) -> list:
    """Triangle-edge crossings [t, k, x] of a polygon-level path."""
    tri = q.triangles
    exits = []
    for g, t, d in path.crossings:
        if not (0 <= g < len(q.gluings)):
            raise InvalidPath(f"unknown gluing id {g}")
        if not (0.0 < t < 1.0):
            raise InvalidPath(f"crossing parameter {t!r} not in (0, 1)")
        G = q.gluings[g]
        P, i = G.a if d == 1 else G.b
        x = t if d == 1 else 1.0 - t
        ti, ki = q.polygon_edge_triangle(P, i)
        exits.append((ti, ki, x))
    out = []
    n = len(exits)
    for j, (ti, ki, x) in enumerate(exits):
        out.append([ti, ki, x])
        t2, k2 = tri[ti].nbr[ki][:2]
        entry = _edge_point(tri[t2], k2, 1.0 - x)
        nt, nk, nx = exits[(j + 1) % n]
        if tri[t2].polygon != tri[nt].polygon:
            raise InvalidPath(f"crossings {j} and {(j + 1) % n} are not on a common polygon")
        out.extend(_chord_crossings(q, t2, k2, entry, nt, _edge_point(tri[nt], nk, nx)))
    return out


def _next_tri(q, c):
    return q.triangles[c[0]].nbr[c[1]][:2]


def _remove_backtracks(q, cr):
    changed = True
    while changed and cr:
        changed = False
        n = len(cr)
        for j in range(n):
            a, b = cr[j], cr[(j + 1) % n]
            if n == 1:
                break
            t2, k2 = _next_tri(q, a)
            if b[0] == t2 and b[1] == k2:
                if n == 2:
                    cr.clear()
                else:
                    idx = sorted((j, (j + 1) % n), reverse=True)
                    for i in idx:
                        cr.pop(i)
                changed = True
                break
    return cr


def _check_cyclic(q, cr):
    n = len(cr)
    for j in range(n):
        t2, _ = _next_tri(q, cr[j])
        if cr[(j + 1) % n][0] != t2:
            raise InvalidPath("crossing sequence is not a closed walk through the triangulation")


def _curve_length(q, cr):
    tri = q.triangles
    n = len(cr)
    total = 0.0
    for j in range(n):
        t, k, x = cr[j]
        nt, nk, nx = cr[(j + 1) % n]
        a = _fwd(tri[t], k, _edge_point(tri[t], k, x))
        b = _edge_point(tri[nt], nk, nx)
        total += math.hypot(b[0] - a[0], b[1] - a[1])
    return total


def _relax_one(q, cr, j):
    tri = q.triangles
    n = len(cr)
    t, k, _ = cr[j]
    pt, pk, px = cr[j - 1]
    nt, nk, nx = cr[(j + 1) % n]
    T = tri[t]
    A = _fwd(tri[pt], pk, _edge_point(tri[pt], pk, px))
    B = _back(T, k, _edge_point(tri[nt], nk, nx))
    P0, P1 = T.pts[k], T.pts[(k + 1) % 3]
    e = (P1[0] - P0[0], P1[1] - P0[1])
    sa = cross(e, (A[0] - P0[0], A[1] - P0[1]))
    sb = cross(e, (B[0] - P0[0], B[1] - P0[1]))
    ee = dot(e, e)
    if sa * sb > 0:
        # reflect B across the edge line
        f = 2 * sb / ee
        B = (B[0] + f * e[1], B[1] - f * e[0])
        sb = -sb
    if sa == sb:
        X = ((A[0] + B[0]) / 2, (A[1] + B[1]) / 2)
    else:
        lam = sa / (sa - sb)
        X = (A[0] + lam * (B[0] - A[0]), A[1] + lam * (B[1] - A[1]))
    x = dot((X[0] - P0[0], X[1] - P0[1]), e) / ee
    cr[j][2] = 0.0 if x <= 0 else (1.0 if x >= 1 else x)


def _relax(q, cr, tol, history, budget):
    n = len(cr)
    prev = _curve_length(q, cr)
    if not history:
        history.append(prev)
    while True:
        if len(history) > budget:
            raise NoConvergence(
                f"tightening exceeded {budget} sweeps", {"sweeps": len(history), "length": history[-1]}
            )
        for j in range(n):
            _relax_one(q, cr, j)
        for j in range(n - 1, -1, -1):
            _relax_one(q, cr, j)
        cur = _curve_length(q, cr)
        cur = min(cur, prev)
        history.append(cur)
        if prev - cur <= tol * cur:
            return cur
        prev = cur


def _vertex_corners(q, c):
    """(corner in exit triangle, corner in entry triangle) if the crossing sits at a vertex."""
    t, k, x = c
    if 0.0 < x < 1.0:
        return None
    t2, k2 = _next_tri(q, c)
    if x == 0.0:
        return (k, (k2 + 1) % 3)
    return ((k + 1) % 3, k2)


def _snap(q, cr, eta):
    tri = q.triangles
    out = []
    for t, k, x in cr:
        T = tri[t]
        a, b = T.pts[k], T.pts[(k + 1) % 3]
        ln = math.hypot(b[0] - a[0], b[1] - a[1])
        if x * ln <= eta:
            x = 0.0
        elif (1 - x) * ln <= eta:
            x = 1.0
        out.append([t, k, x])
    return out


def _exact_fit(q, cr, groups) -> bool:
    """Straighten the curve between consecutive pins in place; False if a chord leaves its edges."""
    tri = q.triangles
    n = len(cr)
    m = len(groups)
    for i in range(m):
        b = groups[i][1]
        a2 = groups[(i + 1) % m][0]
        t0, _ = _next_tri(q, cr[b])
        V = tri[t0].pts[_vertex_corners(q, cr[b])[1]]
        # developed edges between the pins, then the far vertex
        s, cx, cy = 1, 0.0, 0.0
        devs = []
        j = (b + 1) % n
        while j != a2:
            t, k, _ = cr[j]
            T = tri[t]
            P0, P1 = T.pts[k], T.pts[(k + 1) % 3]
            devs.append((j, (s * P0[0] + cx, s * P0[1] + cy), (s * P1[0] + cx, s * P1[1] + cy)))
            _, _, se, ex, ey = T.nbr[k]
            s = s * se
            cx, cy = cx - s * ex, cy - s * ey
            j = (j + 1) % n
        W = tri[cr[a2][0]].pts[_vertex_corners(q, cr[a2])[0]]
        Wd = (s * W[0] + cx, s * W[1] + cy)
        d = (Wd[0] - V[0], Wd[1] - V[1])
        for j, P0, P1 in devs:
            e = (P1[0] - P0[0], P1[1] - P0[1])
            den = cross(d, e)
            if abs(den) <= 1e-15 * math.hypot(*d) * math.hypot(*e):
                return False
            vp = (P0[0] - V[0], P0[1] - V[1])
            x = cross(vp, d) / den
            if x < -1e-9 or x > 1 + 1e-9:
                return False
            cr[j][2] = min(1.0, max(0.0, x))
    return True


def _settle(q, cr):
    """Pin crossings that sit (numerically) at vertices and straighten between pins."""
    scale = q.diameter
    fallback = None
    for eta in (0.0, 1e-9 * scale, 1e-7 * scale, 1e-5 * scale):
        trial = _snap(q, cr, eta) if eta > 0 else [list(c) for c in cr]
        groups = _pin_groups(q, trial)
        if groups is None:
            return trial, None
        if not groups:
            if fallback is None:
                fallback = (trial, groups)
            continue
        for _ in range(len(trial) + 1):
            if not _exact_fit(q, trial, groups):
                break
            # a fitted chord can pass straight through another vertex
            trial[:] = _snap(q, trial, max(eta, 1e-12 * scale))
            again = _pin_groups(q, trial)
            if again == groups:
                if all(_fan_angle(q, trial, a, b)[0] >= math.pi - ANGLE_TOL for a, b in groups):
                    return trial, groups
                break
            if not again:
                break
            groups = again
    if fallback is not None:
        return fallback
    return cr, _pin_groups(q, cr)


def _pin_groups(q, cr):
    """Maximal cyclic runs of consecutive crossings through one vertex, as (a, b) index pairs."""
    n = len(cr)
    vc = [_vertex_corners(q, c) for c in cr]
    linked = []
    for j in range(n):
        nj = (j + 1) % n
        linked.append(vc[j] is not None and vc[nj] is not None and vc[j][1] == vc[nj][0])
    if all(v is not None for v in vc) and all(linked):
        return None  # the whole curve sits at one vertex
    groups = []
    start = next((j for j in range(n) if vc[j] is not None and not linked[j - 1]), None)
    if start is None:
        return []
    j = start
    seen = 0
    while seen < n:
        if vc[j] is not None and not linked[j - 1]:
            a = j
            b = j
            while linked[b]:
                b = (b + 1) % n
            groups.append((a, b))
        j = (j + 1) % n
        seen += 1
    return groups


def _angle(u, v):
    return math.atan2(abs(cross(u, v)), dot(u, v))


def _fan_angle(q, cr, a, b):
    tri = q.triangles
    n = len(cr)
    ta, ka, _ = cr[a]
    Ta = tri[ta]
    ca = _vertex_corners(q, cr[a])[0]
    V = Ta.pts[ca]
    pt, pk, px = cr[a - 1]
    A = _fwd(tri[pt], pk, _edge_point(tri[pt], pk, px))
    other = Ta.pts[(ka + 1) % 3] if ca == ka else Ta.pts[ka]
    th = _angle((A[0] - V[0], A[1] - V[1]), (other[0] - V[0], other[1] - V[1]))
    j = a
    while j != b:
        j = (j + 1) % n
        cj = _vertex_corners(q, cr[j])[0]
        th += tri[cr[j][0]].angle[cj]
    tb, k2 = _next_tri(q, cr[b])
    Tb = tri[tb]
    cb = _vertex_corners(q, cr[b])[1]
    Vb = Tb.pts[cb]
    nt, nk, nx = cr[(b + 1) % n]
    B = _edge_point(tri[nt], nk, nx)
    other = Tb.pts[(k2 + 1) % 3] if cb == k2 else Tb.pts[k2]
    th += _angle((other[0] - Vb[0], other[1] - Vb[1]), (B[0] - Vb[0], B[1] - Vb[1]))
    return th, Ta.cone[ca]


def _complement_route(q, cr, a, b):
    """Crossings that go from the corner before the fan to the corner after it the other way round."""
    tri = q.triangles
    ta, ka, _ = cr[a]
    ca = _vertex_corners(q, cr[a])[0]
    tb, _ = _next_tri(q, cr[b])
    cb = _vertex_corners(q, cr[b])[1]
    t, c = ta, ca
    exit_k = (c - 1) % 3 if ka == c else c
    out = []
    ring = max(len(r) for r in q.cone_rings) + 2
    for _ in range(ring):
        x = 0.0 if exit_k == c else 1.0
        out.append([t, exit_k, x])
        t2, k2 = tri[t].nbr[exit_k][:2]
        c2 = (k2 + 1) % 3 if x == 0.0 else k2
        t, c = t2, c2
        if (t, c) == (tb, cb):
            return out
        exit_k = (c - 1) % 3 if k2 == c else c
    raise NoConvergence("rerouting around a vertex did not close up")


def _rotate(cr, start):
    return cr[start:] + cr[:start]


def _develop_between(q, cr, b, a2):
    """Saddle connection from the vertex after crossing b to the vertex at crossing a2."""
    tri = q.triangles
    n = len(cr)
    t0, _ = _next_tri(q, cr[b])
    c0 = _vertex_corners(q, cr[b])[1]
    V = tri[t0].pts[c0]
    s, cx, cy = 1, 0.0, 0.0
    j = (b + 1) % n
    while j != a2:
        t, k, _ = cr[j]
        _, _, se, ex, ey = tri[t].nbr[k]
        s = s * se
        cx, cy = cx - s * ex, cy - s * ey
        j = (j + 1) % n
    t1, _, _ = cr[a2]
    c1 = _vertex_corners(q, cr[a2])[0]
    W = tri[t1].pts[c1]
    Wd = (s * W[0] + cx, s * W[1] + cy)
    w = (Wd[0] - V[0], Wd[1] - V[1])
    T0, T1 = tri[t0], tri[t1]
    e0 = (T0.pts[(c0 + 1) % 3][0] - V[0], T0.pts[(c0 + 1) % 3][1] - V[1])
    a0 = ccw_angle(e0, w)
    if a0 > 2 * math.pi - 1e-9:
        a0 = 0.0
    back = (-s * w[0], -s * w[1])
    e1 = (T1.pts[(c1 + 1) % 3][0] - W[0], T1.pts[(c1 + 1) % 3][1] - W[1])
    a1 = ccw_angle(e1, back)
    if a1 > 2 * math.pi - 1e-9:
        a1 = 0.0
    sc = make_saddle_connection(q, (t0, c0), T0.offset[c0] + a0, (t1, c1), T1.offset[c1] + a1, w, s)
    cone0 = T0.cone[c0]
    sense = 1 if sc.start_corner == (t0, c0) and sc.start == cone0 else -1
    return sc, sense


def _loop_holonomy(q, cr):
    tri = q.triangles
    s, cx, cy = 1, 0.0, 0.0
    for t, k, _ in cr:
        _, _, se, ex, ey = tri[t].nbr[k]
        s = s * se
        cx, cy = cx - s * ex, cy - s * ey
    return s, (cx, cy)


def _intern(sc, lookup):
    if lookup is None:
        return sc
    return lookup.get(sc.key, sc)


def tighten(q: HalfTranslationSurface, path, tol: float = 1e-12, sweep_budget: int = SWEEP_BUDGET, lookup=None) -> GeodesicRepresentative:
    """Flat geodesic representative of the free homotopy class of ``path``.

    ``lookup`` optionally maps saddle-connection keys to enumerated records
    so the result refers to indexed saddle connections.
    """
    cr = path_to_crossings(q, path) if isinstance(path, CurvePath) else [list(c) for c in path]
    _check_cyclic(q, cr)
    history = []
    scale = q.diameter
    for _ in range(10 * len(q.triangles) + 1000):
        _remove_backtracks(q, cr)
        if not cr:
            raise Degenerate("curve is null-homotopic")
        length = _relax(q, cr, tol, history, sweep_budget)
        if length <= 1e-9 * scale:
            raise Degenerate("curve shrinks to a point")
        cr, groups = _settle(q, cr)
        if groups is None:
            raise Degenerate("curve shrinks to a cone point")
        flip = None
        for a, b in groups:
            fan, cone = _fan_angle(q, cr, a, b)
            C = q.cones[cone].angle
            if fan > C + ANGLE_TOL:
                raise NoConvergence("curve winds around a cone point", {"sweeps": len(history), "length": length})
            if C - fan < math.pi - ANGLE_TOL:
                flip = (a, b)
                break
        if flip is None:
            break
        a, b = flip
        cr = _rotate(cr, a)
        b = (b - a) % len(cr)
        new = _complement_route(q, cr, 0, b)
        cr = new + cr[b + 1 :]
    else:
        raise NoConvergence("rerouting did not settle", {"sweeps": len(history)})

    if not groups:
        s, hol = _loop_holonomy(q, cr)
        if s != 1:
            raise NoConvergence("straight loop with reversing holonomy", {"sweeps": len(history)})
        L = math.hypot(*hol)
        theta = direction(hol)
        dec = cylinders_in_direction(q, theta, max_length=L * (1 + 1e-9) + q.tol, strict=False)
        cyl = None
        sgn = 1
        tri = q.triangles
        for j in range(len(cr)):
            # leaf direction in the chart of the triangle entered by crossing j - 1
            t, k, x = cr[j - 1]
            t0, _ = _next_tri(q, cr[j - 1])
            a = _fwd(tri[t], k, _edge_point(tri[t], k, x))
            b = _edge_point(tri[t0], cr[j][1], cr[j][2])
            mid = ((a[0] + b[0]) / 2, (a[1] + b[1]) / 2)
            cyl = dec.locate(t0, mid, (sgn * hol[0] / L, sgn * hol[1] / L))
            if cyl is not None:
                break
            sgn *= tri[cr[j][0]].nbr[cr[j][1]][2]
        if cyl is None:
            raise NoConvergence("closed straight loop not matched to a cylinder", {"sweeps": len(history)})
        if lookup is not None:
            cyl.boundary_chains = tuple(tuple((_intern(sc, lookup), s_) for sc, s_ in bc) for bc in cyl.boundary_chains)
        return GeodesicRepresentative(CYLINDER, cylinder=cyl, chosen_boundary=0, sweeps=history)

    edges = []
    m = len(groups)
    for i in range(m):
        b = groups[i][1]
        a2 = groups[(i + 1) % m][0]
        sc, sense = _develop_between(q, cr, b, a2)
        edges.append((_intern(sc, lookup), sense))
    edges = tuple(edges)
    cyl = cylinder_of_chain(q, edges)
    if cyl is not None:
        cyl.sweeps = history
        return cyl
    return GeodesicRepresentative("chain", edges=edges, sweeps=history)


# --------------------------------------------------------------------------
# enumeration


def _pi_raw(q, cone):
    return math.pi * q.cone_totals[cone] / q.cones[cone].angle


def _successors(q, scs, table):
    """Allowed next traversals after each traversal, by the angle-at-least-pi rule."""
    out_by_cone = defaultdict(list)
    for sc in scs:
        if sc.idx in table.self_cross:
            continue
        out_by_cone[sc.start].append((sc.start_pos, sc.idx, 1))
        out_by_cone[sc.end].append((sc.end_pos, sc.idx, -1))
    succ = {}
    for sc in scs:
        for sense in (1, -1):
            cone, a_in = sc.half_edge(sense, at_end=True)
            total = q.cone_totals[cone]
            pr = _pi_raw(q, cone)
            eps = 1e-9
            nxt = []
            for a_out, j, s2 in out_by_cone[cone]:
                left = (a_in - a_out) % total
                if pr - eps <= left <= total - pr + eps:
                    nxt.append((j, s2))
            succ[(sc.idx, sense)] = nxt
    return succ


def enumerate_simple_closed_geodesics(q: HalfTranslationSurface, L: float, scs=None, node_budget: int = 2 * 10**6, include_cylinders: bool = True):
    """Simple closed geodesics of length at most ``L``, one per free homotopy class."""
    if scs is None:
        scs = enumerate_saddle_connections(q, L)
    scs = [sc for sc in scs if sc.length <= L * (1 + 1e-12)]
    table = CrossingTable(q, scs)
    succ = _successors(q, scs, table)
    lookup = {sc.key: sc for sc in scs}
    found = {}
    rejected = set()
    nodes = 0
    partial_exc = None

    def emit(word):
        edges = tuple((scs[i], s) for i, s in word)
        key = ("chain", canonical_word([(sc.key, s) for sc, s in edges]))
        if key in found or key in rejected:
            return
        if not is_primitive(word) or not _strands_ok(q, edges):
            rejected.add(key)
            return
        if _flat_side(q, edges) is not None:
            return  # a cylinder boundary; the cylinder is added separately
        found[key] = GeodesicRepresentative("chain", edges=edges)

    try:
        for root in scs:
            for rs in (1, -1):
                r = (root.idx, rs)
                stack = [([r], root.length, table.cross[root.idx] | set())]
                while stack:
                    word, length, banned = stack.pop()
                    nodes += 1
                    if nodes > node_budget:
                        raise BudgetExceeded("closed-geodesic search exceeded its node budget", partial=None)
                    last = word[-1]
                    if r in succ[last]:
                        emit(word)
                    for j, s2 in succ[last]:
                        if j < root.idx or j in banned:
                            continue
                        nl = length + scs[j].length
                        if nl > L * (1 + 1e-12):
                            continue
                        stack.append((word + [(j, s2)], nl, banned | table.cross[j]))
    except BudgetExceeded as exc:
        partial_exc = exc

    if include_cylinders:
        seen_dirs = []
        for sc in scs:
            a = sc.angle
            if any(min(abs(a - b), math.pi - abs(a - b)) <= 1e-12 for b in seen_dirs):
                continue
            seen_dirs.append(a)
            dec = cylinders_in_direction(q, a, max_length=L * (1 + 1e-9) + q.tol, strict=False)
            for cyl in dec.cylinders:
                if cyl.circumference > L * (1 + 1e-12):
                    continue
                cyl.boundary_chains = tuple(tuple((_intern(s, lookup), sg) for s, sg in bc) for bc in cyl.boundary_chains)
                rep = GeodesicRepresentative(CYLINDER, cylinder=cyl)
                found.setdefault(rep.canonical(), rep)

    out = sorted(found.values(), key=lambda r: (round(r.length, 9), r.kind, r.canonical()))
    if partial_exc is not None:
        raise BudgetExceeded(str(partial_exc), partial=out, certified=False)
    return out


def chain_from_json(q, obj, scs) -> GeodesicRepresentative:
    """Chain curve file: {"type": "chain", "edges": [[scIdx, sense], ...]} against an enumeration."""
    if isinstance(obj, (str, bytes)):
        obj = json.loads(obj)
    edges = []
    for i, s in obj["edges"]:
        if not (0 <= i < len(scs)) or s not in (1, -1):
            raise InvalidPath(f"bad chain edge {[i, s]!r}")
        edges.append((scs[i], int(s)))
    edges = tuple(edges)
    for j in range(len(edges)):
        a, b = edges[j], edges[(j + 1) % len(edges)]
        if a[0].half_edge(a[1], True)[0] != b[0].half_edge(b[1], False)[0]:
            raise NotIncident(f"chain edges {j} and {(j + 1) % len(edges)} do not meet")
    cyl = cylinder_of_chain(q, edges)
    return cyl if cyl is not None else GeodesicRepresentative("chain", edges=edges)
