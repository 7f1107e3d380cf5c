import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flatspec.errors import ZeroGenerator
from flatspec.sl2opt import svd_stretch
from flatspec.zonogon import apply_sl2, build_zonogon, hausdorff, width_sup_difference

from oracles import random_sl2

coord = st.floats(-10, 10, allow_nan=False).filter(lambda x: abs(x) > 1e-3)
vec = st.tuples(coord, coord)
gens = st.lists(vec, min_size=1, max_size=12)


def minkowski_hull(vectors):
    """Convex hull of all 2^k signed half-sums: a brute-force zonogon oracle."""
    pts = []
    for signs in itertools.product((-0.5, 0.5), repeat=len(vectors)):
        pts.append(tuple(sum(s * v[i] for s, v in zip(signs, vectors)) for i in range(2)))
    pts = sorted(set(pts))

    def turn(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and turn(lower[-2], lower[-1], p) <= 1e-12:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and turn(upper[-2], upper[-1], p) <= 1e-12:
            upper.pop()
        upper.append(p)
    return np.array(lower[:-1] + upper[:-1])


def test_unit_square():
    Z = build_zonogon([(1, 0), (0, 1)])
    assert sorted(map(tuple, Z.vertices.tolist())) == sorted([(-0.5, -0.5), (0.5, -0.5), (0.5, 0.5), (-0.5, 0.5)])
    assert Z.area == 1 and Z.perimeter == 4
    assert Z.support((1, 0)) == 0.5
    assert Z.width(math.pi / 4) == pytest.approx(math.sqrt(2))
    assert Z.width(0) == pytest.approx(1.0)
    assert Z.radii == pytest.approx((0.5, math.sqrt(2) / 2))
    assert Z.ecc == pytest.approx(math.sqrt(2))


def test_hexagon():
    Z = build_zonogon([(1, 0), (1, 1), (0, 1)])
    assert len(Z.vertices) == 6
    assert Z.vertices.max(axis=0) == pytest.approx([1, 1])
    assert Z.area == pytest.approx(3) and Z.shoelace_area() == pytest.approx(3)
    assert Z.perimeter == pytest.approx(2 * (2 + math.sqrt(2)))
    H = minkowski_hull([(1, 0), (1, 1), (0, 1)])
    assert sorted(map(tuple, np.round(H, 12))) == sorted(map(tuple, np.round(Z.vertices, 12)))


def test_degenerate():
    Z = build_zonogon([(1, 0), (2, 0)])
    assert Z.degenerate
    assert sorted(Z.vertices[:, 0]) == [-1.5, 1.5]
    assert Z.area == 0 and Z.ecc == math.inf and Z.r_minus == 0
    assert build_zonogon([(3, 0)]).perimeter == 6
    assert Z.to_json()["ecc"] == "inf"


def test_parallel_merge_and_canonical_direction():
    Z = build_zonogon([(1, 0), (-2, 0), (0, 1), (0, -1)])
    assert Z.generators == ((3.0, 0.0), (0.0, 2.0))
    Z2 = build_zonogon([(-1, -1e-17), (0, 1)])
    assert len(Z2.generators) == 2


def test_zero_generator():
    with pytest.raises(ZeroGenerator):
        build_zonogon([(1, 0), (0, 0)])
    with pytest.raises(ZeroGenerator):
        build_zonogon([])


def test_regular_polygons_tend_to_round():
    eccs = []
    for n in (4, 8, 32, 128):
        Z = build_zonogon([(math.cos(math.pi * k / n), math.sin(math.pi * k / n)) for k in range(n)])
        eccs.append(Z.ecc)
        assert Z.ecc == pytest.approx(1 / math.cos(math.pi / (2 * n)))
    assert eccs == sorted(eccs, reverse=True)


def test_apply_sl2_examples():
    Z = build_zonogon([(1, 0), (0, 1)])
    assert apply_sl2(Z, np.eye(2)).generators == Z.generators
    R = apply_sl2(Z, np.diag([2, 0.5]))
    assert R.vertices.max(axis=0) == pytest.approx([1, 0.25])
    assert R.area == pytest.approx(1)


@settings(max_examples=300, deadline=None)
@given(gens)
def test_area_matches_shoelace(vs):
    Z = build_zonogon(vs)
    scale = Z.r_plus
    assert abs(Z.area - Z.shoelace_area()) <= 1e-12 * max(Z.area, scale * scale)


@settings(max_examples=100, deadline=None)
@given(st.lists(vec, min_size=1, max_size=7))
def test_vertices_match_brute_force_hull(vs):
    Z = build_zonogon(vs)
    if Z.degenerate:
        return
    H = minkowski_hull(vs)
    assert len(H) == len(Z.vertices)
    for v in Z.vertices:
        assert np.min(np.hypot(*(H - v).T)) < 1e-9 * Z.r_plus


@settings(max_examples=200, deadline=None)
@given(gens)
def test_perimeter_identities(vs):
    Z = build_zonogon(vs)
    assert Z.perimeter == pytest.approx(2 * sum(math.hypot(*v) for v in vs), rel=1e-12)
    assert Z.profile.integral() == pytest.approx(Z.perimeter, abs=1e-10 * max(1, Z.perimeter))


@settings(max_examples=200, deadline=None)
@given(gens, st.floats(0, math.pi))
def test_support_is_vertex_max(vs, th):
    Z = build_zonogon(vs)
    u = np.array([math.cos(th), math.sin(th)])
    assert Z.support(u) == pytest.approx(float((Z.vertices @ u).max()), abs=1e-12 * max(1, Z.r_plus))
    assert Z.profile(th) == pytest.approx(Z.width(th), abs=1e-10 * max(1, Z.r_plus))


def test_hausdorff_examples():
    sq = build_zonogon([(1, 0), (0, 1)])
    assert hausdorff(sq, sq) == 0
    assert hausdorff(sq, build_zonogon([(2, 0), (0, 2)])) == pytest.approx(math.sqrt(2) / 2)
    assert hausdorff(build_zonogon([(2, 0)]), sq) == pytest.approx(0.5)


@settings(max_examples=300, deadline=None)
@given(gens, gens)
def test_hausdorff_width_embedding(a, b):
    Z1, Z2 = build_zonogon(a), build_zonogon(b)
    d = hausdorff(Z1, Z2)
    assert 2 * d == pytest.approx(width_sup_difference(Z1, Z2), abs=1e-12 * max(1, Z1.r_plus, Z2.r_plus))
    # sampled lower bound
    for th in np.linspace(0, 2 * math.pi, 64):
        u = (math.cos(th), math.sin(th))
        assert abs(Z1.support(u) - Z2.support(u)) <= d + 1e-9 * max(1, Z1.r_plus, Z2.r_plus)


def test_stretch_inequalities_random():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        k1, k2 = rng.integers(2, 8, 2)
        Z1 = build_zonogon(rng.uniform(-10, 10, (k1, 2)))
        Z2 = build_zonogon(rng.uniform(-10, 10, (k2, 2)))
        A = random_sl2(rng)
        lam = svd_stretch(A)
        d = hausdorff(Z1, Z2)
        assert hausdorff(apply_sl2(Z1, A), apply_sl2(Z2, A)) <= lam * d * (1 + 1e-9) + 1e-12
        AZ = apply_sl2(Z1, A)
        rm, rp = Z1.radii
        assert rm / lam * (1 - 1e-9) <= AZ.r_minus <= rp / lam * (1 + 1e-9)
        assert lam * rm * (1 - 1e-9) <= AZ.r_plus <= lam * rp * (1 + 1e-9)
        assert AZ.area == pytest.approx(Z1.area, rel=1e-12)
