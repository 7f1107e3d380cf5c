"""Centrally symmetric convex polygons given as Minkowski sums of segments.

A zonogon with generators w_1..w_k (directions sorted in [0, pi)) is the set
of points sum t_i w_i with |t_i| <= 1/2.  Its boundary runs from -p through
w_1, ..., w_k to p = sum w_i / 2 and back through -w_1, ..., -w_k.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ZeroGenerator

ANGLE_TOL = 1e-12


def _canon(v):
    x, y = float(v[0]), float(v[1])
    if x == 0.0 and y == 0.0:
        raise ZeroGenerator("zonogon generators must be nonzero")
    if y < 0 or (y == 0 and x < 0):
        x, y = -x, -y
    return x + 0.0, y + 0.0


def _theta(v):
    a = math.atan2(v[1], v[0])
    return 0.0 if a >= math.pi else a


def _canonical_generators(vectors):
    gens = sorted((_canon(v) for v in vectors), key=_theta)
    merged = []
    for g in gens:
        if merged and _theta(g) - _theta(merged[-1]) <= ANGLE_TOL:
            merged[-1] = (merged[-1][0] + g[0], merged[-1][1] + g[1])
        else:
            merged.append(g)
    # a direction just below pi is parallel to one at 0
    if len(merged) > 1 and math.pi - _theta(merged[-1]) + _theta(merged[0]) <= ANGLE_TOL:
        last = merged.pop()
        merged[0] = (merged[0][0] - last[0], merged[0][1] - last[1])
        merged[0] = _canon(merged[0])
    return tuple(merged)


@dataclass(frozen=True)
class Zonogon:
    generators: tuple

    @cached_property
    def _g(self):
        return np.array(self.generators, dtype=float).reshape(-1, 2)

    @property
    def degenerate(self) -> bool:
        return len(self.generators) <= 1

    @cached_property
    def vertices(self) -> np.ndarray:
        g = self._g
        p = g.sum(axis=0) / 2
        if self.degenerate:
            return np.array([-p, p])
        half = -p + np.cumsum(g, axis=0)
        return np.vstack([-p, half[:-1], p, p - np.cumsum(g, axis=0)[:-1]])

    @property
    def scale(self) -> float:
        return self.r_plus

    @cached_property
    def area(self) -> float:
        g = self._g
        c = np.abs(np.outer(g[:, 0], g[:, 1]) - np.outer(g[:, 1], g[:, 0]))
        return float(np.triu(c, 1).sum())

    @property
    def perimeter(self) -> float:
        return float(2 * np.hypot(self._g[:, 0], self._g[:, 1]).sum())

    def support(self, u) -> float:
        u = np.asarray(u, dtype=float)
        return float(np.abs(self._g @ u).sum() / 2)

    def width(self, theta: float) -> float:
        """Extent of the zonogon measured along the unit vector at angle ``theta``."""
        return 2 * self.support((math.cos(theta), math.sin(theta)))

    @cached_property
    def profile(self) -> "WidthProfile":
        return WidthProfile.of(self)

    @cached_property
    def radii(self):
        r_plus = float(np.hypot(self.vertices[:, 0], self.vertices[:, 1]).max())
        if self.degenerate:
            return 0.0, r_plus
        # edge normals are perpendicular to the generators
        n = np.stack([-self._g[:, 1], self._g[:, 0]], axis=1)
        n /= np.hypot(n[:, 0], n[:, 1])[:, None]
        h = np.abs(n @ self._g.T).sum(axis=1) / 2
        return float(h.min()), r_plus

    @property
    def r_minus(self) -> float:
        return self.radii[0]

    @property
    def r_plus(self) -> float:
        return self.radii[1]

    @property
    def ecc(self) -> float:
        rm, rp = self.radii
        return math.inf if rm == 0 else rp / rm

    def shoelace_area(self) -> float:
        v = self.vertices
        x, y = v[:, 0], v[:, 1]
        return float(abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))) / 2)

    def to_json(self) -> dict:
        ecc = self.ecc
        return {
            "generators": [list(g) for g in self.generators],
            "vertices": self.vertices.tolist(),
            "area": self.area,
            "perimeter": self.perimeter,
            "r_minus": self.r_minus,
            "r_plus": self.r_plus,
            "ecc": ecc if math.isfinite(ecc) else "inf",
        }


def build_zonogon(vectors) -> Zonogon:
    vectors = list(vectors)
    if not vectors:
        raise ZeroGenerator("a zonogon needs at least one generator")
    return Zonogon(_canonical_generators(vectors))


def apply_sl2(Z: Zonogon, A) -> Zonogon:
    A = np.asarray(A, dtype=float)
    return build_zonogon([tuple(A @ np.array(g)) for g in Z.generators])


def auxiliary_polygon(rep) -> Zonogon:
    """Zonogon generated by m_e v_e over the distinct saddle connections of a representative."""
    return build_zonogon(rep.weighted_holonomies())


@dataclass(frozen=True)
class WidthProfile:
    """Width as a function of direction on [0, pi).

    On the arc between consecutive breakpoints the width is <d, u(theta)>
    for the vector ``d`` stored with that arc.
    """

    breaks: tuple  # ascending, starting at 0.0, each arc [breaks[i], breaks[i+1])
    dvecs: tuple

    @classmethod
    def of(cls, Z: Zonogon) -> "WidthProfile":
        g = Z._g
        cuts = sorted({0.0, *(((_theta(tuple(w)) + math.pi / 2) % math.pi) for w in g)})
        ends = cuts[1:] + [math.pi]
        dvecs = []
        for a, b in zip(cuts, ends):
            m = (a + b) / 2
            u = np.array([math.cos(m), math.sin(m)])
            s = np.sign(g @ u)
            dvecs.append(tuple((s[:, None] * g).sum(axis=0)))
        return cls(tuple(cuts), tuple(dvecs))

    def __call__(self, theta: float) -> float:
        theta %= math.pi
        i = max(0, int(np.searchsorted(self.breaks, theta, side="right")) - 1)
        d = self.dvecs[i]
        return d[0] * math.cos(theta) + d[1] * math.sin(theta)

    def integral(self) -> float:
        total = 0.0
        ends = list(self.breaks[1:]) + [math.pi]
        for a, b, d in zip(self.breaks, ends, self.dvecs):
            total += d[0] * (math.sin(b) - math.sin(a)) - d[1] * (math.cos(b) - math.cos(a))
        return total


def _support_vertex(V, u):
    return V[int(np.argmax(V @ u))]


def hausdorff(Z1: Zonogon, Z2: Zonogon) -> float:
    """Exact sup over unit u of |h1(u) - h2(u)|."""
    cuts = {0.0}
    for Z in (Z1, Z2):
        for w in Z.generators:
            t = (_theta(w) + math.pi / 2) % math.pi
            cuts.update((t, t + math.pi))
    cuts = sorted(c % (2 * math.pi) for c in cuts)
    ends = cuts[1:] + [cuts[0] + 2 * math.pi]
    V1, V2 = Z1.vertices, Z2.vertices
    best = 0.0
    for a, b in zip(cuts, ends):
        if b - a <= 0:
            continue
        m = (a + b) / 2
        um = np.array([math.cos(m), math.sin(m)])
        d = _support_vertex(V1, um) - _support_vertex(V2, um)
        cands = [a, b]
        phi = math.atan2(d[1], d[0])
        for ph in (phi, phi + math.pi):
            k = math.ceil((a - ph) / (2 * math.pi))
            x = ph + 2 * math.pi * k
            if a <= x <= b:
                cands.append(x)
        for x in cands:
            best = max(best, abs(d[0] * math.cos(x) + d[1] * math.sin(x)))
    return best


def width_sup_difference(Z1: Zonogon, Z2: Zonogon) -> float:
    """sup over theta of |w1 - w2|, exact over the merged breakpoint arcs."""
    p1, p2 = Z1.profile, Z2.profile
    cuts = sorted(set(p1.breaks) | set(p2.breaks))
    ends = cuts[1:] + [math.pi]
    best = 0.0
    for a, b in zip(cuts, ends):
        m = (a + b) / 2
        i1 = max(0, int(np.searchsorted(p1.breaks, m, side="right")) - 1)
        i2 = max(0, int(np.searchsorted(p2.breaks, m, side="right")) - 1)
        d = np.subtract(p1.dvecs[i1], p2.dvecs[i2])
        cands = [a, b]
        phi = math.atan2(d[1], d[0]) % math.pi
        if a <= phi <= b:
            cands.append(phi)
        for x in cands:
            best = max(best, abs(d[0] * math.cos(x) + d[1] * math.sin(x)))
    return best
