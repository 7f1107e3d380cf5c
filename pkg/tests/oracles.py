"""Brute-force reference computations used only by the test-suite."""

import math

import numpy as np


def primitive_vectors(L):
    """Primitive integer vectors of norm <= L up to sign."""
    out = []
    n = int(L)
    for x in range(-n, n + 1):
        for y in range(0, n + 1):
            if (y == 0 and x <= 0) or x * x + y * y > L * L:
                continue
            if math.gcd(abs(x), y) == 1:
                out.append((x, y))
    return out


def _hit_vertex(P, p, tol):
    for k, v in enumerate(P):
        if math.hypot(v[0] - p[0], v[1] - p[1]) < tol:
            return k
    return None


def polygon_ray_hits(verts, glue, L, candidates, tol=1e-9):
    """Count (corner, vector) pairs whose straight ray inside a single glued polygon
    reaches a vertex at exactly the vector's end without meeting one before.

    ``glue`` maps edge i -> partner edge j under a translation.  Only rays
    starting at polygon corners are shot, so this is independent of any
    triangulation.
    """
    n = len(verts)
    P = [tuple(map(float, v)) for v in verts]
    partner = {}
    for i, j in glue:
        partner[i] = j
        partner[j] = i
    hits = []
    for c in range(n):
        a = P[c]
        e_out = (P[(c + 1) % n][0] - a[0], P[(c + 1) % n][1] - a[1])
        e_in = (P[c - 1][0] - a[0], P[c - 1][1] - a[1])
        a_out = math.atan2(e_out[1], e_out[0])
        span = (math.atan2(e_in[1], e_in[0]) - a_out) % (2 * math.pi)
        for v in candidates:
            for sgn in (1, -1):
                d = (sgn * v[0], sgn * v[1])
                ang = (math.atan2(d[1], d[0]) - a_out) % (2 * math.pi)
                if ang >= span - 1e-12 and ang > 1e-12:
                    continue
                if _trace(P, partner, c, d, tol):
                    hits.append((c, d))
    return hits


def _trace(P, partner, c, d, tol):
    n = len(P)
    length = math.hypot(*d)
    u = (d[0] / length, d[1] / length)
    p = P[c]
    travelled = 0.0
    skip = {(c - 1) % n, c}
    for _ in range(10000):
        best = None
        for i in range(n):
            if i in skip:
                continue
            a, b = P[i], P[(i + 1) % n]
            e = (b[0] - a[0], b[1] - a[1])
            den = u[0] * e[1] - u[1] * e[0]
            if abs(den) < 1e-15:
                continue
            w = (a[0] - p[0], a[1] - p[1])
            t = (w[0] * e[1] - w[1] * e[0]) / den
            s = (w[0] * u[1] - w[1] * u[0]) / den
            if t > tol and -tol <= s <= 1 + tol and (best is None or t < best[0]):
                best = (t, i, s)
        for k, v in enumerate(P):
            w = (v[0] - p[0], v[1] - p[1])
            t = w[0] * u[0] + w[1] * u[1]
            if t > tol and abs(w[0] * u[1] - w[1] * u[0]) < tol and (best is None or t < best[0] - tol):
                best = (t, None, None)
        if best is None:
            return False
        t, i, s = best
        if travelled + t > length + tol:
            return False
        q = (p[0] + t * u[0], p[1] + t * u[1])
        if _hit_vertex(P, q, tol) is not None:
            return abs(travelled + t - length) < 1e-7
        j = partner[i]
        # translation taking edge i onto edge j reversed
        off = (P[j][0] - P[(i + 1) % n][0], P[j][1] - P[(i + 1) % n][1])
        p = (q[0] + off[0], q[1] + off[1])
        travelled += t
        skip = {j}
    raise RuntimeError("ray did not terminate")


def _rot(x):
    return np.array([[math.cos(x), -math.sin(x)], [math.sin(x), math.cos(x)]])


def random_sl2(rng, max_stretch=4.0):
    """Random determinant-one matrix with stretch factor at most ``max_stretch``."""
    t = rng.uniform(0, math.log(max_stretch))
    a, b = rng.uniform(0, math.pi, 2)
    return _rot(a) @ np.diag([math.exp(t), math.exp(-t)]) @ _rot(b)


def path_chords(q, crossings):
    """Straight chords of a crossing path on a one-polygon surface, in polygon coordinates."""
    P = q.polygons[0].vertices
    m = len(P)

    def at(e, t):
        a, b = P[e], P[(e + 1) % m]
        return (a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]))

    out = []
    n = len(crossings)
    for j, c in enumerate(crossings):
        g, t = c[0], c[1]
        d = c[2] if len(c) > 2 else 1
        G = q.gluings[g]
        _, i = G.b if d == 1 else G.a
        start = at(i, 1 - t if d == 1 else t)
        c2 = crossings[(j + 1) % n]
        g2, t2 = c2[0], c2[1]
        d2 = c2[2] if len(c2) > 2 else 1
        G2 = q.gluings[g2]
        _, i2 = G2.a if d2 == 1 else G2.b
        out.append((start, at(i2, t2 if d2 == 1 else 1 - t2)))
    return out


def path_is_embedded(q, crossings):
    """True when no two chords of the path cross transversally."""

    def turn(o, p, r):
        return (p[0] - o[0]) * (r[1] - o[1]) - (p[1] - o[1]) * (r[0] - o[0])

    ch = path_chords(q, crossings)
    for x in range(len(ch)):
        for y in range(x + 1, len(ch)):
            (a, b), (c, d) = ch[x], ch[y]
            if turn(a, b, c) * turn(a, b, d) < 0 and turn(c, d, a) * turn(c, d, b) < 0:
                return False
    return True


def two_square_torus_spec():
    """Two unit squares side by side forming a 2x1 torus with both corner classes marked."""
    return {
        "polygons": [
            {"id": "A", "vertices": [[0, 0], [1, 0], [1, 1], [0, 1]]},
            {"id": "B", "vertices": [[1, 0], [2, 0], [2, 1], [1, 1]]},
        ],
        "gluings": [
            {"a": ["A", 1], "b": ["B", 3], "sign": 1},
            {"a": ["B", 1], "b": ["A", 3], "sign": 1},
            {"a": ["A", 0], "b": ["A", 2], "sign": 1},
            {"a": ["B", 0], "b": ["B", 2], "sign": 1},
        ],
        "marked": [["A", 0], ["A", 1]],
    }
