import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flatspec.errors import BudgetExceeded, NotIncident
from flatspec.geodesy import (
    angle_between,
    cached_holonomies,
    cylinders_in_direction,
    enumerate_saddle_connections,
    junction_angles,
    read_csv,
    segments_of,
    to_csv,
)
from flatspec.sl2opt import svd_stretch
from flatspec.surface import apply_sl2, bundled_surface, lshape_spec, rotation_matrix

from oracles import polygon_ray_hits, primitive_vectors


def hol_set(scs, digits=9):
    return sorted((round(s.holonomy[0], digits) + 0.0, round(s.holonomy[1], digits) + 0.0) for s in scs)


def traversal(scs, v):
    for s in scs:
        if np.allclose(s.vector, v):
            return s, 1
        if np.allclose(s.vector, (-v[0], -v[1])):
            return s, -1
    raise LookupError(v)


def test_torus_L2():
    q = bundled_surface("torus")
    assert hol_set(enumerate_saddle_connections(q, 2)) == sorted([(1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (-1.0, 1.0)])


@pytest.mark.parametrize("L", [5, 10, 20])
def test_torus_primitive_vectors(L):
    scs = enumerate_saddle_connections(bundled_surface("torus"), L)
    expect = sorted((float(x), float(y)) for x, y in primitive_vectors(L))
    assert hol_set(scs) == expect
    assert len(scs) == len(expect)


def test_below_shortest_is_empty():
    for name in ("torus", "octagon", "three_square"):
        assert enumerate_saddle_connections(bundled_surface(name), 0.5) == []


def test_canonical_direction_and_indices():
    scs = enumerate_saddle_connections(bundled_surface("octagon"), 5)
    assert [s.idx for s in scs] == list(range(len(scs)))
    for s in scs:
        assert 0 <= s.angle < math.pi
        assert s.length == pytest.approx(math.hypot(*s.holonomy))
    lengths = [s.length for s in scs]
    assert all(b >= a - 1e-12 for a, b in zip(lengths, lengths[1:]))


@pytest.mark.parametrize("L", [4, 6])
def test_lshape_matches_polygon_ray_oracle(L):
    b = 1.2345678
    spec = lshape_spec(1, b)
    cands = set()
    for x in range(-L, L + 1):
        for m in range(-3 * L, 3 * L + 1):
            for k in range(-L, L + 1):
                y = m + k * b
                if (y > 1e-12 or (abs(y) < 1e-12 and x > 0)) and x * x + y * y <= L * L + 1e-9:
                    cands.add((x, round(y, 12)))
    glue = [(g["a"][1], g["b"][1]) for g in spec["gluings"]]
    hits = polygon_ray_hits(spec["polygons"][0]["vertices"], glue, L, sorted(cands))
    scs = enumerate_saddle_connections(bundled_surface("lshape_1_1.2345678"), L)
    assert len(hits) == 2 * len(scs)
    oracle = sorted({(round(abs(d[0]), 7), round(abs(d[1]), 7)) for _, d in hits})
    ours = sorted({(round(abs(s.holonomy[0]), 7), round(abs(s.holonomy[1]), 7)) for s in scs})
    assert oracle == ours


@pytest.mark.parametrize("name", ["octagon", "three_square", "lshape_1_1.2345678"])
def test_retrace_displacement(name):
    q = bundled_surface(name)
    for s in enumerate_saddle_connections(q, 4):
        segs = segments_of(q, s)
        assert segs
        walked = sum(math.hypot(g[2][0] - g[1][0], g[2][1] - g[1][1]) for g in segs)
        assert walked == pytest.approx(s.length, rel=1e-9)


def test_parallel_workers_agree():
    q = bundled_surface("octagon")
    a = enumerate_saddle_connections(q, 5)
    b = enumerate_saddle_connections(q, 5, workers=2)
    assert [s.key for s in a] == [s.key for s in b]


@settings(max_examples=5, deadline=None)
@given(st.floats(0, math.pi), st.floats(0, 0.6), st.floats(-1, 1))
def test_sl2_equivariance(phi, logt, shear):
    A = rotation_matrix(phi) @ np.diag([math.exp(logt), math.exp(-logt)]) @ np.array([[1, shear], [0, 1]])
    lam = svd_stretch(A)
    if lam > 2:
        return
    q = bundled_surface("octagon")
    L = 3.0
    base = enumerate_saddle_connections(q, L)
    moved = enumerate_saddle_connections(apply_sl2(q, A), lam * L * (1 + 1e-9))
    H = np.array([s.holonomy for s in moved])
    for s in base:
        w = A @ np.array(s.holonomy)
        d = np.minimum(np.hypot(*(H - w).T), np.hypot(*(H + w).T))
        assert d.min() < 1e-9 * max(1.0, s.length)


def test_torus_angles():
    q = bundled_surface("torus")
    scs = enumerate_saddle_connections(q, 1.5)
    s_in, s_out = traversal(scs, (1, 0)), traversal(scs, (0, 1))
    assert angle_between(q, s_in, s_out, "left") == pytest.approx(math.pi / 2)
    assert angle_between(q, s_in, s_out, "right") == pytest.approx(3 * math.pi / 2)
    with pytest.raises(ValueError):
        angle_between(q, s_in, s_out, "up")


def test_reverse_traversal_splits_full_angle():
    q = bundled_surface("octagon")
    s = enumerate_saddle_connections(q, 1.5)[0]
    left, right = junction_angles(q, (s, 1), (s, -1))
    assert left + right == pytest.approx(6 * math.pi)


def test_octagon_parallel_pair_bounds_three_pi():
    q = bundled_surface("octagon")
    scs = enumerate_saddle_connections(q, 3)
    found = False
    for a in scs:
        for b in scs:
            if abs(a.angle - b.angle) > 1e-9:
                continue
            for sa in (1, -1):
                for sb in (1, -1):
                    try:
                        left, right = junction_angles(q, (a, sa), (b, sb))
                    except NotIncident:
                        continue
                    va, vb = a.developed(sa), b.developed(sb)
                    if va[0] * vb[0] + va[1] * vb[1] > 0 and abs(left - 3 * math.pi) < 1e-9:
                        found = True
                    assert left + right == pytest.approx(6 * math.pi)
    assert found


def test_torus_horizontal_cylinder():
    dec = cylinders_in_direction(bundled_surface("torus"), 0.0)
    assert dec.certified and len(dec.cylinders) == 1
    c = dec.cylinders[0]
    assert c.circumference == pytest.approx(1) and c.height == pytest.approx(1)


def test_torus_slope_half_cylinder():
    dec = cylinders_in_direction(bundled_surface("torus"), math.atan(0.5))
    (c,) = dec.cylinders
    assert c.circumference == pytest.approx(math.sqrt(5))
    assert c.height == pytest.approx(1 / math.sqrt(5))
    assert c.area == pytest.approx(1.0)


@pytest.mark.parametrize("name", ["octagon", "three_square", "lshape_1_1.2345678"])
def test_cylinder_invariants(name):
    q = bundled_surface(name)
    for theta in sorted({s.angle for s in enumerate_saddle_connections(q, 3)})[:6]:
        try:
            dec = cylinders_in_direction(q, theta, max_length=50)
        except BudgetExceeded as exc:
            assert sum(c.area for c in exc.partial) <= q.area * (1 + 1e-9)
            continue
        assert sum(c.area for c in dec.cylinders) == pytest.approx(q.area, rel=1e-9)
        u = np.array([math.cos(theta), math.sin(theta)])
        for c in dec.cylinders:
            for chain in c.boundary_chains:
                tot = sum(np.array(s.developed(sg)) for s, sg in chain)
                assert abs(tot[0] * u[1] - tot[1] * u[0]) < 1e-9 * c.circumference
                assert np.linalg.norm(tot) == pytest.approx(c.circumference, rel=1e-9)
                for s, _ in chain:
                    assert min(abs(s.angle - theta), math.pi - abs(s.angle - theta)) < 1e-9


def test_octagon_irrational_direction_not_certified():
    q = bundled_surface("octagon")
    theta = math.pi / (4 + math.sqrt(2))
    with pytest.raises(BudgetExceeded) as info:
        cylinders_in_direction(q, theta, max_length=30)
    assert info.value.certified is False
    dec = cylinders_in_direction(q, theta, max_length=30, strict=False)
    assert not dec.certified
    assert dec.cylinders == []


def test_csv_roundtrip():
    scs = enumerate_saddle_connections(bundled_surface("octagon"), 3)
    recs = read_csv(to_csv(scs))
    assert [r.holonomy for r in recs] == [s.holonomy for s in scs]
    assert [r.length for r in recs] == [s.length for s in scs]


def test_cache_keyed_by_surface_and_cutoff(tmp_path):
    q = bundled_surface("torus")
    a = cached_holonomies(q, 3, cache_dir=tmp_path)
    files = list(tmp_path.iterdir())
    assert len(files) == 1
    b = cached_holonomies(q, 3, cache_dir=tmp_path)
    assert [r.holonomy for r in a] == [r.holonomy for r in b]
    cached_holonomies(q, 4, cache_dir=tmp_path)
    cached_holonomies(bundled_surface("octagon"), 3, cache_dir=tmp_path)
    assert len(list(tmp_path.iterdir())) == 3
    # a tampered header is not trusted
    files[0].write_text("# surface=bogus L=3\n" + files[0].read_text().split("\n", 1)[1])
    c = cached_holonomies(q, 3, cache_dir=tmp_path)
    assert [r.holonomy for r in c] == [r.holonomy for r in a]
