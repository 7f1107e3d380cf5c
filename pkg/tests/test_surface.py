import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flatspec.errors import (
    BadConeAngle,
    EulerMismatch,
    HolonomyMismatch,
    InvalidPolygon,
    NotUnimodular,
    SurfaceError,
    UnmatchedEdge,
)
from flatspec.surface import (
    apply_sl2,
    build_surface,
    bundled_surface,
    lshape_spec,
    load_surface,
    normalize_area,
    project_to_sl2,
    regular_octagon_spec,
    rotate,
    torus_spec,
)


def verts(q):
    return np.array([v for P in q.polygons for v in P.vertices], dtype=float)


def test_unit_torus():
    q = build_surface(torus_spec())
    assert q.genus == 1
    assert len(q.cones) == 1
    assert q.cones[0].marked
    assert q.cones[0].angle == pytest.approx(2 * math.pi)
    assert q.area == pytest.approx(1.0)
    assert q.summary() == "genus=1 cones=1 area=1"


@pytest.mark.parametrize("s", [1.0, 0.5, 2.0])
def test_regular_octagon(s):
    q = build_surface(regular_octagon_spec(s))
    assert q.genus == 2
    assert len(q.cones) == 1
    assert q.cones[0].angle == 6 * math.pi
    assert not q.cones[0].marked
    assert q.area == pytest.approx(2 * (1 + math.sqrt(2)) * s * s, rel=1e-12)


def test_octagon_corner_chasing_oracle():
    # every corner of the regular octagon has angle 3pi/4 and opposite-side
    # translations identify all eight corners
    spec = regular_octagon_spec()
    V = np.array(spec["polygons"][0]["vertices"])
    n = len(V)
    for i in range(n):
        a, b, c = V[i - 1], V[i], V[(i + 1) % n]
        u, w = a - b, c - b
        ang = math.acos(np.dot(u, w) / np.linalg.norm(u) / np.linalg.norm(w))
        assert ang == pytest.approx(3 * math.pi / 4)
    assert 8 * 3 * math.pi / 4 == pytest.approx(bundled_surface("octagon").cones[0].angle)


def test_flip_gluing_needs_equal_vectors():
    spec = torus_spec()
    spec["gluings"][1]["sign"] = -1
    with pytest.raises(HolonomyMismatch):
        build_surface(spec)


def test_pillowcase_flip_gluings():
    # 2x1 rectangle, bottom and top halves folded onto each other: four pi-poles
    spec = {
        "polygons": [{"id": 0, "vertices": [[0, 0], [1, 0], [2, 0], [2, 1], [1, 1], [0, 1]]}],
        "gluings": [
            {"a": [0, 0], "b": [0, 1], "sign": -1},
            {"a": [0, 3], "b": [0, 4], "sign": -1},
            {"a": [0, 2], "b": [0, 5], "sign": 1},
        ],
        "marked": [[0, v] for v in range(6)],
    }
    q = build_surface(spec)
    assert q.genus == 0
    assert sorted(c.angle for c in q.cones) == pytest.approx([math.pi] * 4)


def test_translation_double_of_square():
    spec = {
        "polygons": [
            {"id": "A", "vertices": [[0, 0], [1, 0], [1, 1], [0, 1]]},
            {"id": "B", "vertices": [[0, 0], [1, 0], [1, 1], [0, 1]]},
        ],
        "gluings": [{"a": ["A", i], "b": ["B", i], "sign": -1} for i in range(4)],
        "marked": [["A", v] for v in range(4)],
    }
    q = build_surface(spec)
    assert q.genus == 1 and len(q.cones) == 2


def test_unmatched_edge():
    spec = torus_spec()
    spec["gluings"].pop()
    with pytest.raises(UnmatchedEdge):
        build_surface(spec)


def test_clockwise_polygon_rejected():
    spec = torus_spec()
    spec["polygons"][0]["vertices"].reverse()
    with pytest.raises(InvalidPolygon):
        build_surface(spec)


def test_unmarked_regular_point_rejected():
    spec = torus_spec()
    spec["marked"] = []
    with pytest.raises((BadConeAngle, EulerMismatch)):
        build_surface(spec)


def test_bad_json():
    with pytest.raises(SurfaceError):
        build_surface("{not json")


def test_errors_are_value_errors():
    assert issubclass(SurfaceError, ValueError)


def test_load_surface_by_bundled_name_and_missing():
    assert load_surface("torus.json").area == pytest.approx(1.0)
    with pytest.raises(FileNotFoundError):
        load_surface("does-not-exist.json")


def test_lshape_one_one_is_three_square():
    q = build_surface(lshape_spec(1, 1))
    assert q.genus == 2 and q.area == pytest.approx(3.0)
    assert q.spec_hash() == bundled_surface("three_square").spec_hash()


def test_bundled_examples_gauss_bonnet():
    for name in ("torus", "octagon", "lshape_1_1.2345678", "three_square"):
        q = bundled_surface(name)
        orders = sum(round(c.angle / math.pi) - 2 for c in q.cones)
        assert orders == 4 * q.genus - 4


def test_spec_roundtrip():
    q = bundled_surface("octagon")
    q2 = build_surface(json.dumps(q.to_spec()))
    assert q2.spec_hash() == q.spec_hash()


def test_identity_and_stretch():
    q = bundled_surface("torus")
    assert np.allclose(verts(apply_sl2(q, np.eye(2))), verts(q))
    r = apply_sl2(q, np.diag([2.0, 0.5]))
    V = verts(r)
    assert V[:, 0].max() == pytest.approx(2.0) and V[:, 1].max() == pytest.approx(0.5)
    assert r.area == pytest.approx(1.0)


def test_non_unimodular_rejected():
    with pytest.raises(NotUnimodular):
        apply_sl2(bundled_surface("torus"), np.diag([2.0, 2.0]))


def test_rotate():
    q = bundled_surface("torus")
    assert np.allclose(verts(rotate(q, 0.0)), verts(q))
    r = rotate(q, math.pi / 4)
    v = np.array(r.polygons[0].edge_vector(0))
    assert np.allclose(v, [math.sqrt(2) / 2, math.sqrt(2) / 2])
    assert rotate(q, math.pi).genus == 1


def test_normalize_area():
    assert normalize_area(bundled_surface("torus")).area == pytest.approx(1.0)
    assert normalize_area(build_surface(torus_spec(2, 2))).area == pytest.approx(1.0, abs=1e-12)
    q = build_surface(regular_octagon_spec(math.sqrt(5 / (2 * (1 + math.sqrt(2))))))
    assert q.area == pytest.approx(5.0)
    assert normalize_area(q).area == pytest.approx(1.0, abs=1e-12)


mat_entry = st.floats(-5, 5, allow_nan=False)


def _sl2(a, b, c, d):
    M = np.array([[a, b], [c, d]])
    det = np.linalg.det(M)
    if det < 0.05:
        M[:, 0] *= -1
        det = -det
    if det < 0.05:
        return None
    return project_to_sl2(M)


@settings(max_examples=200, deadline=None)
@given(mat_entry, mat_entry, mat_entry, mat_entry)
def test_sl2_preserves_area(a, b, c, d):
    A = _sl2(a, b, c, d)
    if A is None:
        return
    q = bundled_surface("octagon")
    assert apply_sl2(q, A).area == pytest.approx(q.area, rel=1e-12)


@settings(max_examples=50, deadline=None)
@given(*(mat_entry,) * 8)
def test_left_action(a, b, c, d, e, f, g, h):
    A, B = _sl2(a, b, c, d), _sl2(e, f, g, h)
    if A is None or B is None:
        return
    q = bundled_surface("lshape_1_1.2345678")
    lhs = verts(apply_sl2(apply_sl2(q, B), A))
    rhs = verts(apply_sl2(q, project_to_sl2(A @ B)))
    assert np.allclose(lhs, rhs, atol=1e-10 * max(1.0, np.abs(lhs).max()))
