"""Half-translation surfaces glued from planar polygons.

A surface is a list of counterclockwise polygons plus a perfect matching of
their edges, each pair identified by ``z -> z + c`` (sign +1) or
``z -> -z + c`` (sign -1).  Internally every polygon is ear-clipped into
triangles; all straight-line machinery in :mod:`flatspec.geodesy` and
:mod:`flatspec.curves` walks this triangulation.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    BadConeAngle,
    EulerMismatch,
    HolonomyMismatch,
    InvalidPolygon,
    NotUnimodular,
    SurfaceError,
    UnmatchedEdge,
)

CONE_SNAP_TOL = 1e-6
GEOM_TOL = 1e-9
DET_TOL = 1e-12


def cross(a, b):
    return a[0] * b[1] - a[1] * b[0]


def dot(a, b):
    return a[0] * b[0] + a[1] * b[1]


def sub(a, b):
    return (a[0] - b[0], a[1] - b[1])


def signed_area(vertices: Sequence[tuple]) -> float:
    n = len(vertices)
    s = 0.0
    for i in range(n):
        s += cross(vertices[i], vertices[(i + 1) % n])
    return 0.5 * s


def corner_angle(prev_pt, pt, next_pt) -> float:
    """Interior angle at ``pt`` of a counterclockwise polygon, in (0, 2pi)."""
    e = sub(next_pt, pt)
    f = sub(prev_pt, pt)
    ang = math.atan2(cross(e, f), dot(e, f))
    return ang if ang > 0 else ang + 2 * math.pi


def ccw_angle(a, b) -> float:
    """Counterclockwise angle from vector ``a`` to vector ``b`` in [0, 2pi)."""
    ang = math.atan2(cross(a, b), dot(a, b))
    return ang if ang >= 0 else ang + 2 * math.pi


def _segments_intersect(p1, p2, p3, p4, tol) -> bool:
    d1 = cross(sub(p2, p1), sub(p3, p1))
    d2 = cross(sub(p2, p1), sub(p4, p1))
    d3 = cross(sub(p4, p3), sub(p1, p3))
    d4 = cross(sub(p4, p3), sub(p2, p3))
    if ((d1 > tol and d2 < -tol) or (d1 < -tol and d2 > tol)) and (
        (d3 > tol and d4 < -tol) or (d3 < -tol and d4 > tol)
    ):
        return True

    def on_seg(a, b, c):
        return (
            abs(cross(sub(b, a), sub(c, a))) <= tol
            and min(a[0], b[0]) - tol <= c[0] <= max(a[0], b[0]) + tol
            and min(a[1], b[1]) - tol <= c[1] <= max(a[1], b[1]) + tol
        )

    return on_seg(p1, p2, p3) or on_seg(p1, p2, p4) or on_seg(p3, p4, p1) or on_seg(p3, p4, p2)


# --------------------------------------------------------------------------
# SL(2,R) helpers


def as_sl2(A) -> np.ndarray:
    """Return ``A`` as a float 2x2 array, checking ``det A = 1``."""
    M = np.asarray(A, dtype=float)
    if M.shape != (2, 2):
        raise NotUnimodular(f"expected a 2x2 matrix, got shape {M.shape}")
    det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    if abs(det - 1.0) > DET_TOL * max(1.0, float(np.abs(M).max()) ** 2):
        raise NotUnimodular(f"det = {det!r} is not 1")
    return M


def rotation_matrix(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def project_to_sl2(M) -> np.ndarray:
    """Scale a matrix with positive determinant to determinant one."""
    M = np.asarray(M, dtype=float)
    det = np.linalg.det(M)
    if det <= 0:
        raise NotUnimodular("determinant must be positive to project onto SL(2,R)")
    return M / math.sqrt(det)


# --------------------------------------------------------------------------
# Domain types


@dataclass(frozen=True)
class PlanarPolygon:
    id: object
    vertices: tuple

    @property
    def n(self) -> int:
        return len(self.vertices)

    def edge_vector(self, i: int) -> tuple:
        return sub(self.vertices[(i + 1) % self.n], self.vertices[i])

    @property
    def area(self) -> float:
        return signed_area(self.vertices)


@dataclass(frozen=True)
class EdgeGluing:
    """Identification of edge slot ``a`` with edge slot ``b``; slots are (polygon index, edge index)."""

    a: tuple
    b: tuple
    sign: int


@dataclass(frozen=True)
class ConePoint:
    index: int
    corners: tuple  # (polygon index, vertex index), counterclockwise around the point
    angle: float  # snapped to multiple * pi
    multiple: int
    marked: bool

    @property
    def order(self) -> int:
        return self.multiple - 2


@dataclass
class Triangle:
    """One triangle of the internal triangulation, in its polygon's coordinates."""

    index: int
    polygon: int
    pverts: tuple  # polygon vertex indices
    pts: tuple  # three points
    # per edge k (pts[k] -> pts[k+1]):
    nbr: list = field(default_factory=lambda: [None, None, None])  # (t2, k2, sign, cx, cy)
    pedge: list = field(default_factory=lambda: [None, None, None])  # polygon edge index or None
    cone: list = field(default_factory=lambda: [None, None, None])
    angle: list = field(default_factory=lambda: [0.0, 0.0, 0.0])
    offset: list = field(default_factory=lambda: [0.0, 0.0, 0.0])


def _triangulate(vertices: Sequence[tuple], tol: float) -> list:
    idx = list(range(len(vertices)))
    tris = []
    while len(idx) > 3:
        m = len(idx)
        for k in range(m):
            i0, i1, i2 = idx[k - 1], idx[k], idx[(k + 1) % m]
            a, b, c = vertices[i0], vertices[i1], vertices[i2]
            if cross(sub(b, a), sub(c, b)) <= tol:
                continue
            blocked = False
            for j in idx:
                if j in (i0, i1, i2):
                    continue
                p = vertices[j]
                if (
                    cross(sub(b, a), sub(p, a)) >= -tol
                    and cross(sub(c, b), sub(p, b)) >= -tol
                    and cross(sub(a, c), sub(p, c)) >= -tol
                ):
                    blocked = True
                    break
            if not blocked:
                tris.append((i0, i1, i2))
                idx.pop(k)
                break
        else:
            raise InvalidPolygon("ear clipping failed; polygon is not simple")
    tris.append(tuple(idx))
    return tris


class HalfTranslationSurface:
    """An immutable half-translation surface built from glued polygons.

    The preferred vertical direction is the y-axis of the input coordinates.
    """

    def __init__(self, polygons: Sequence[PlanarPolygon], gluings: Sequence[EdgeGluing], marked: Iterable[tuple] = ()):
        self.polygons = tuple(polygons)
        self.gluings = tuple(gluings)
        self.marked_corners = tuple(sorted({(int(p), int(v)) for p, v in marked}))
        if not self.polygons:
            raise SurfaceError("surface needs at least one polygon")
        self.diameter = max(
            math.hypot(
                max(x for x, _ in P.vertices) - min(x for x, _ in P.vertices),
                max(y for _, y in P.vertices) - min(y for _, y in P.vertices),
            )
            for P in self.polygons
        )
        self.tol = GEOM_TOL * self.diameter
        self._check_polygons()
        self._partner = self._check_gluings()
        self._build_triangles()
        self._build_cones()
        self.area = float(sum(P.area for P in self.polygons))
        self._check_topology()

    # ---------------------------------------------------------------- checks

    def _check_polygons(self):
        for P in self.polygons:
            n = P.n
            if n < 3:
                raise InvalidPolygon(f"polygon {P.id!r} has fewer than 3 vertices")
            for i in range(n):
                if math.hypot(*P.edge_vector(i)) <= self.tol:
                    raise InvalidPolygon(f"polygon {P.id!r} has coincident consecutive vertices at {i}")
            if P.area <= 0:
                raise InvalidPolygon(f"polygon {P.id!r} is not counterclockwise")
            for i in range(n):
                for j in range(i + 1, n):
                    if j == i + 1 or (i == 0 and j == n - 1):
                        continue
                    if _segments_intersect(
                        P.vertices[i], P.vertices[(i + 1) % n], P.vertices[j], P.vertices[(j + 1) % n], self.tol * self.diameter
                    ):
                        raise InvalidPolygon(f"polygon {P.id!r} is not simple (edges {i} and {j} meet)")

    def _check_gluings(self) -> dict:
        partner = {}
        for g in self.gluings:
            if g.sign not in (1, -1):
                raise SurfaceError(f"gluing sign must be +1 or -1, got {g.sign!r}")
            for slot in (g.a, g.b):
                p, e = slot
                if not (0 <= p < len(self.polygons)) or not (0 <= e < self.polygons[p].n):
                    raise SurfaceError(f"gluing refers to a nonexistent edge {slot}")
                if slot in partner:
                    raise SurfaceError(f"edge {slot} appears in more than one gluing")
            if g.a == g.b:
                raise SurfaceError(f"edge {g.a} is glued to itself")
            partner[g.a] = (g.b, g.sign)
            partner[g.b] = (g.a, g.sign)
            va = self.polygons[g.a[0]].edge_vector(g.a[1])
            vb = self.polygons[g.b[0]].edge_vector(g.b[1])
            target = (-va[0], -va[1]) if g.sign == 1 else va
            if math.hypot(vb[0] - target[0], vb[1] - target[1]) > self.tol:
                raise HolonomyMismatch(
                    f"edges {g.a} and {g.b} with sign {g.sign:+d}: vectors {va} and {vb} violate the gluing rule"
                )
        for p, P in enumerate(self.polygons):
            for e in range(P.n):
                if (p, e) not in partner:
                    raise UnmatchedEdge(f"edge {e} of polygon {P.id!r} has no gluing")
        return partner

    # ---------------------------------------------------------- triangulation

    def _build_triangles(self):
        self.triangles: list[Triangle] = []
        by_pedge = {}
        by_diag = {}
        self._vertex_corner = {}  # (polygon, vertex) -> list of (t, k)
        for p, P in enumerate(self.polygons):
            for tv in _triangulate(P.vertices, self.tol * self.diameter):
                t = len(self.triangles)
                T = Triangle(t, p, tuple(tv), tuple(P.vertices[i] for i in tv))
                self.triangles.append(T)
                for k in range(3):
                    a, b = tv[k], tv[(k + 1) % 3]
                    self._vertex_corner.setdefault((p, a), []).append((t, k))
                    if b == (a + 1) % P.n:
                        T.pedge[k] = a
                        by_pedge[(p, a)] = (t, k)
                    else:
                        by_diag[(p, a, b)] = (t, k)
        for T in self.triangles:
            p = T.polygon
            for k in range(3):
                if T.pedge[k] is not None:
                    (q, j), s = self._partner[(p, T.pedge[k])]
                    t2, k2 = by_pedge[(q, j)]
                    v = self.polygons[p].vertices[T.pedge[k]]
                    w_end = self.polygons[q].vertices[(j + 1) % self.polygons[q].n]
                    T.nbr[k] = (t2, k2, s, w_end[0] - s * v[0], w_end[1] - s * v[1])
                else:
                    a, b = T.pverts[k], T.pverts[(k + 1) % 3]
                    t2, k2 = by_diag[(p, b, a)]
                    T.nbr[k] = (t2, k2, 1, 0.0, 0.0)
            for k in range(3):
                T.angle[k] = corner_angle(T.pts[k - 1], T.pts[k], T.pts[(k + 1) % 3])

    def _build_cones(self):
        seen = {}
        cones_corners = []
        for T in self.triangles:
            for k in range(3):
                if (T.index, k) in seen:
                    continue
                cid = len(cones_corners)
                ring = []
                c = (T.index, k)
                while c not in seen:
                    seen[c] = cid
                    ring.append(c)
                    t, i = c
                    t2, k2 = self.triangles[t].nbr[(i - 1) % 3][:2]
                    c = (t2, k2)
                if c != ring[0]:
                    raise SurfaceError("corner chasing did not close up; gluings are inconsistent")
                cones_corners.append(ring)
        self.cone_rings = [tuple(r) for r in cones_corners]
        marked_cones = set()
        for p, v in self.marked_corners:
            if (p, v) not in self._vertex_corner:
                raise SurfaceError(f"marked corner {(p, v)} does not exist")
            marked_cones.add(seen[self._vertex_corner[(p, v)][0]])
        cones = []
        self.cone_totals = []  # unsnapped angle sums; half-edge positions live in [0, total)
        for cid, ring in enumerate(cones_corners):
            total = 0.0
            for t, k in ring:
                T = self.triangles[t]
                T.cone[k] = cid
                T.offset[k] = total
                total += T.angle[k]
            mult = int(round(total / math.pi))
            if mult < 1 or abs(total - mult * math.pi) > CONE_SNAP_TOL:
                raise BadConeAngle(f"cone point {cid} has angle {total!r}, not a multiple of pi")
            marked = cid in marked_cones
            if not marked and mult < 3:
                raise BadConeAngle(
                    f"unmarked cone point {cid} has angle {mult}*pi; unmarked points need at least 3*pi"
                )
            self.cone_totals.append(total)
            pcorners = []
            for t, k in ring:
                pc = (self.triangles[t].polygon, self.triangles[t].pverts[k])
                if pc not in pcorners:
                    pcorners.append(pc)
            cones.append(ConePoint(cid, tuple(pcorners), mult * math.pi, mult, marked))
        self.cones = tuple(cones)

    def _check_topology(self):
        # connectedness
        reach = {0}
        stack = [0]
        adj = {}
        for g in self.gluings:
            adj.setdefault(g.a[0], set()).add(g.b[0])
            adj.setdefault(g.b[0], set()).add(g.a[0])
        while stack:
            p = stack.pop()
            for q in adj.get(p, ()):
                if q not in reach:
                    reach.add(q)
                    stack.append(q)
        if len(reach) != len(self.polygons):
            raise SurfaceError("the glued surface is not connected")
        chi = len(self.cones) - len(self.gluings) + len(self.polygons)
        if chi % 2:
            raise EulerMismatch(f"Euler characteristic {chi} is odd")
        self.genus = (2 - chi) // 2
        if self.genus < 0:
            raise EulerMismatch(f"negative genus from Euler characteristic {chi}")
        total_order = sum(c.order for c in self.cones)
        if total_order != 4 * self.genus - 4:
            raise EulerMismatch(f"sum of cone orders {total_order} != 4g-4 = {4 * self.genus - 4}")
        self.num_marked = sum(1 for c in self.cones if c.marked)
        if 3 * self.genus - 3 + self.num_marked < 1:
            raise EulerMismatch("need 3g - 3 + p >= 1")

    # ------------------------------------------------------------ accessors

    def cone_of(self, polygon: int, vertex: int) -> int:
        t, k = self._vertex_corner[(polygon, vertex)][0]
        return self.triangles[t].cone[k]

    def edge_map(self, t: int, k: int):
        """Neighbour across edge ``k`` of triangle ``t`` as (t2, k2, sign, cx, cy)."""
        return self.triangles[t].nbr[k]

    def polygon_edge_triangle(self, polygon: int, edge: int) -> tuple:
        for t, k in self._vertex_corner[(polygon, edge)]:
            if self.triangles[t].pedge[k] == edge:
                return t, k
        raise KeyError((polygon, edge))

    def summary(self) -> str:
        return f"genus={self.genus} cones={len(self.cones)} area={self.area:.17g}"

    def to_spec(self) -> dict:
        return {
            "polygons": [{"id": P.id, "vertices": [list(v) for v in P.vertices]} for P in self.polygons],
            "gluings": [
                {"a": [self.polygons[g.a[0]].id, g.a[1]], "b": [self.polygons[g.b[0]].id, g.b[1]], "sign": g.sign}
                for g in self.gluings
            ],
            "marked": [[self.polygons[p].id, v] for p, v in self.marked_corners],
        }

    def spec_hash(self) -> str:
        return hashlib.sha256(canonical_json(self.to_spec()).encode()).hexdigest()

    def vertices_array(self) -> np.ndarray:
        return np.array([v for P in self.polygons for v in P.vertices], dtype=float)

    def __repr__(self):
        return f"HalfTranslationSurface({len(self.polygons)} polygons, {self.summary()})"


# --------------------------------------------------------------------------
# construction and SL(2,R) action


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def build_surface(spec) -> HalfTranslationSurface:
    """Build a surface from a spec dict or its JSON text."""
    if isinstance(spec, (str, bytes)):
        try:
            spec = json.loads(spec)
        except json.JSONDecodeError as exc:
            raise SurfaceError(f"surface spec is not valid JSON: {exc}") from None
    try:
        raw_polys = spec["polygons"]
        raw_glue = spec["gluings"]
    except (KeyError, TypeError):
        raise SurfaceError("surface spec needs 'polygons' and 'gluings'") from None
    ids = {}
    polygons = []
    for entry in raw_polys:
        pid = entry["id"]
        if pid in ids:
            raise SurfaceError(f"duplicate polygon id {pid!r}")
        ids[pid] = len(polygons)
        verts = tuple((float(x), float(y)) for x, y in entry["vertices"])
        polygons.append(PlanarPolygon(pid, verts))

    def slot(ref):
        pid, e = ref
        if pid not in ids:
            raise SurfaceError(f"unknown polygon id {pid!r}")
        return (ids[pid], int(e))

    gluings = [EdgeGluing(slot(g["a"]), slot(g["b"]), int(g["sign"])) for g in raw_glue]
    marked = [slot(m) for m in spec.get("marked", [])]
    return HalfTranslationSurface(polygons, gluings, marked)


def load_surface(path) -> HalfTranslationSurface:
    """Load a surface file; bare names of bundled examples are also accepted."""
    p = Path(path)
    if p.exists():
        return build_surface(p.read_text())
    name = p.name
    data = resources.files("flatspec") / "data" / name
    if data.is_file():
        return build_surface(data.read_text())
    raise FileNotFoundError(f"no surface file {str(path)!r}")


def bundled_surface(name: str) -> HalfTranslationSurface:
    if not name.endswith(".json"):
        name += ".json"
    return build_surface((resources.files("flatspec") / "data" / name).read_text())


def _remap(q: HalfTranslationSurface, fn) -> HalfTranslationSurface:
    polys = [PlanarPolygon(P.id, tuple(fn(v) for v in P.vertices)) for P in q.polygons]
    return HalfTranslationSurface(polys, q.gluings, q.marked_corners)


def apply_sl2(q: HalfTranslationSurface, A) -> HalfTranslationSurface:
    """Post-compose every chart with ``A``; gluings and signs are unchanged."""
    M = as_sl2(A)
    a, b, c, d = M[0, 0], M[0, 1], M[1, 0], M[1, 1]
    return _remap(q, lambda v: (a * v[0] + b * v[1], c * v[0] + d * v[1]))


def rotate(q: HalfTranslationSurface, theta: float) -> HalfTranslationSurface:
    return apply_sl2(q, rotation_matrix(theta))


def normalize_area(q: HalfTranslationSurface) -> HalfTranslationSurface:
    s = 1.0 / math.sqrt(q.area)
    if abs(s - 1.0) <= 1e-15:
        return q
    return _remap(q, lambda v: (s * v[0], s * v[1]))


# --------------------------------------------------------------------------
# example families


def torus_spec(width: float = 1.0, height: float = 1.0) -> dict:
    return {
        "polygons": [{"id": 0, "vertices": [[0, 0], [width, 0], [width, height], [0, height]]}],
        "gluings": [{"a": [0, 0], "b": [0, 2], "sign": 1}, {"a": [0, 1], "b": [0, 3], "sign": 1}],
        "marked": [[0, 0]],
    }


def regular_octagon_spec(side: float = 1.0) -> dict:
    verts = []
    x, y = 0.0, 0.0
    for i in range(8):
        verts.append([x, y])
        x += side * math.cos(i * math.pi / 4)
        y += side * math.sin(i * math.pi / 4)
    return {
        "polygons": [{"id": 0, "vertices": verts}],
        "gluings": [{"a": [0, i], "b": [0, i + 4], "sign": 1} for i in range(4)],
        "marked": [],
    }


def lshape_spec(arm: float = 1.0, tower: float = 1.0) -> dict:
    """Unit square with a right arm of width ``arm`` and a top tower of height ``tower``.

    ``lshape_spec(1, 1)`` is the three-square square-tiled surface.
    """
    a, b = float(arm), float(tower)
    verts = [[0, 0], [1, 0], [1 + a, 0], [1 + a, 1], [1, 1], [1, 1 + b], [0, 1 + b], [0, 1]]
    glue = [(0, 5), (1, 3), (2, 7), (4, 6)]
    return {
        "polygons": [{"id": 0, "vertices": verts}],
        "gluings": [{"a": [0, i], "b": [0, j], "sign": 1} for i, j in glue],
        "marked": [],
    }
