import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.spatial import ConvexHull

from invgame.errors import UnboundedPolyhedronError
from invgame.polyhedron import build_polyhedron, enumerate_vertices, is_bounded


def _sorted(vs):
    return sorted(tuple(np.round(v, 9)) for v in vs)


def test_unit_box():
    A = [[1, 0], [-1, 0], [0, 1], [0, -1]]
    b = [1, 0, 1, 0]
    assert _sorted(enumerate_vertices(A, b)) == [(0, 0), (0, 1), (1, 0), (1, 1)]


def test_half_space_unbounded():
    with pytest.raises(UnboundedPolyhedronError):
        enumerate_vertices([[1.0, 0.0]], [1.0])
    assert not is_bounded(np.array([[1.0, 0.0]]), np.array([1.0]))


def test_triangle():
    A = [[-1, 0], [0, -1], [1, 1]]
    assert _sorted(enumerate_vertices(A, [0, 0, 1])) == [(0, 0), (0, 1), (1, 0)]


def test_empty():
    assert enumerate_vertices([[1.0], [-1.0]], [0.0, -1.0]) == []


def test_flat_segment_via_implicit_equality():
    # x + y <= 1 and x + y >= 1 inside the unit box: the anti-diagonal
    A = [[1, 1], [-1, -1], [1, 0], [-1, 0], [0, 1], [0, -1]]
    b = [1, -1, 1, 0, 1, 0]
    assert _sorted(enumerate_vertices(A, b)) == [(0, 1), (1, 0)]


def test_explicit_equality():
    A = [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]]
    b = [1, 0, 1, 0, 1, 0]
    vs = enumerate_vertices(A, b, [[0, 0, 1]], [0.5])
    assert _sorted(vs) == [(0, 0, 0.5), (0, 1, 0.5), (1, 0, 0.5), (1, 1, 0.5)]


def _random_polytope(seed, d, m):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(m, d))
    A = np.vstack([A, np.eye(d), -np.eye(d)])
    b = np.concatenate([rng.uniform(0.2, 1.0, m), np.full(2 * d, 1.5)])
    return A, b


@given(st.integers(0, 10_000), st.integers(2, 3), st.integers(3, 15))
def test_vertices_have_d_independent_tight_rows(seed, d, m):
    A, b = _random_polytope(seed, d, m)
    vs = enumerate_vertices(A, b)
    assert vs
    for v in vs:
        assert np.all(A @ v <= b + 1e-9)
        tight = np.abs(A @ v - b) <= 1e-8
        assert np.linalg.matrix_rank(A[tight], tol=1e-8) == d


@given(st.integers(0, 10_000), st.integers(2, 3), st.integers(3, 15))
def test_vertices_match_convex_hull(seed, d, m):
    A, b = _random_polytope(seed, d, m)
    vs = np.array(enumerate_vertices(A, b))
    hull = ConvexHull(vs)
    # every hull extreme point is a returned vertex and vice versa
    assert len(hull.vertices) == len(vs)


def test_large_system_uses_qhull_path():
    # many rows tangent to a circle: C(m, 2) beyond the exhaustive limit
    t = np.linspace(0, 2 * np.pi, 800, endpoint=False)
    A = np.stack([np.cos(t), np.sin(t)], axis=1)
    b = np.ones(len(t))
    vs = enumerate_vertices(A, b)
    assert len(vs) == 800
    assert np.allclose([np.linalg.norm(v) for v in vs], 1.0 / np.cos(np.pi / 800))


def test_build_polyhedron_membership():
    P = build_polyhedron([[1, 0], [-1, 0], [0, 1], [0, -1]], [1, 0, 1, 0])
    assert P.bounded and len(P.vertices) == 4
    assert P.contains([0.5, 0.5]) and not P.contains([2, 0])
    assert P.violation([2, 0]) == pytest.approx(1.0)
    assert set(P.to_dict()) == {"dim", "inequalities", "equalities", "bounded", "vertices"}
