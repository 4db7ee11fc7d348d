"""H-polyhedra ``{x : A x <= b, E x = f}`` and their vertices.

Vertices are found in the affine hull of the polyhedron: equalities
(explicit ones, plus implicit ones detected through LP duals) are
eliminated first, then every ``d``-subset of the remaining rows is tried
when that is cheap. Large systems go through qhull's halfspace
intersection from a Chebyshev center; each vertex it returns is then
re-solved from its tight rows so the output is exact to working precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.linalg import null_space
from scipy.spatial import HalfspaceIntersection

from .errors import DataError, UnboundedPolyhedronError
from .lp import StandardLP, Status, solve_lp

MAX_VERTEX_DIM = 6
EXHAUSTIVE_LIMIT = 200_000
VERTEX_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class SolutionPolyhedron:
    dim: int
    A: np.ndarray
    b: np.ndarray
    E: np.ndarray
    f: np.ndarray
    vertices: tuple = ()
    bounded: bool = False

    def contains(self, theta, tol: float = VERTEX_TOL) -> bool:
        return max_violation(self.A, self.b, self.E, self.f, theta) <= tol

    def violation(self, theta) -> float:
        return max_violation(self.A, self.b, self.E, self.f, theta)

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "inequalities": {"A": self.A.tolist(), "b": self.b.tolist()},
            "equalities": {"E": self.E.tolist(), "f": self.f.tolist()},
            "bounded": self.bounded,
            "vertices": [v.tolist() for v in self.vertices],
        }


def max_violation(A, b, E, f, x) -> float:
    x = np.asarray(x, dtype=float)
    v = 0.0
    if len(b):
        v = max(v, float(np.max(A @ x - b)))
    if len(f):
        v = max(v, float(np.max(np.abs(E @ x - f))))
    return v


def _clean_rows(A, b, tol):
    """Normalize rows, drop zero rows, merge duplicates. Returns None if a
    zero row is violated (empty set)."""
    if A.shape[0] == 0:
        return A, b
    norms = np.linalg.norm(A, axis=1)
    zero = norms <= 1e-12
    if np.any(b[zero] < -tol):
        return None
    A = A[~zero] / norms[~zero, None]
    b = b[~zero] / norms[~zero]
    if A.shape[0] == 0:
        return A, b
    key = np.round(A, 12)
    _, inv = np.unique(key, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    best = {}
    for r, g in enumerate(inv):
        if g not in best or b[r] < b[best[g]]:
            best[g] = r
    idx = np.array(sorted(best.values()))
    return A[idx], b[idx]


def _affine_hull(A, b, E, f, tol):
    """Parameterize ``{E x = f}`` as ``x0 + N u``; None when inconsistent."""
    n = A.shape[1] if A.size else E.shape[1]
    if E.shape[0] == 0:
        return np.zeros(n), np.eye(n)
    x0, *_ = np.linalg.lstsq(E, f, rcond=None)
    if np.max(np.abs(E @ x0 - f)) > 1e-8 * max(1.0, np.abs(f).max()):
        return None
    return x0, null_space(E, rcond=1e-10)


def _chebyshev(Au, bu):
    """max t s.t. Au u + t <= bu, t <= 1 (rows unit-normalized)."""
    d = Au.shape[1]
    A = np.hstack([Au, np.ones((Au.shape[0], 1))])
    c = np.zeros(d + 1)
    c[-1] = -1.0
    bounds = [None] * d + [(None, 1.0)]
    return solve_lp(StandardLP(c, A, bu, bounds=bounds))


def _coordinate_ranges(Au, bu):
    """Per-coordinate (min point, max point); raises when unbounded."""
    d = Au.shape[1]
    pts = []
    for k in range(d):
        for sgn in (1.0, -1.0):
            c = np.zeros(d)
            c[k] = sgn
            sol = solve_lp(StandardLP(c, Au if len(bu) else None, bu if len(bu) else None))
            if sol.status is Status.UNBOUNDED:
                raise UnboundedPolyhedronError(f"polyhedron is unbounded along coordinate {k}")
            if sol.status is Status.INFEASIBLE:
                return None
            pts.append(sol.x)
    return pts


def _dedupe(points, tol=1e-8):
    out = []
    for p in sorted(points, key=lambda v: tuple(np.round(v, 9))):
        scale = max(1.0, float(np.abs(p).max(initial=0.0)))
        if not any(np.max(np.abs(p - q)) <= tol * scale for q in out):
            out.append(p)
    return out


def _exhaustive(Au, bu, tol):
    m, d = Au.shape
    verts = []
    combos = combinations(range(m), d)
    while True:
        chunk = np.array([c for _, c in zip(range(20_000), combos)], dtype=int)
        if chunk.size == 0:
            break
        M = Au[chunk]  # (K, d, d)
        rhs = bu[chunk]
        sv = np.linalg.svd(M, compute_uv=False)
        ok = sv[:, -1] > 1e-10 * np.maximum(1.0, sv[:, 0])
        if not np.any(ok):
            continue
        sol = np.linalg.solve(M[ok], rhs[ok][..., None])[..., 0]
        feas = np.all(sol @ Au.T <= bu + tol, axis=1)
        verts.extend(sol[feas])
    return verts


def _qhull(Au, bu, interior, tol):
    hs = np.hstack([Au, -bu[:, None]])
    raw = HalfspaceIntersection(hs, interior).intersections
    verts = []
    for v in raw:
        slack = bu - Au @ v
        tight = np.flatnonzero(slack <= 1e-6 * max(1.0, np.abs(v).max()))
        if tight.size < Au.shape[1] or np.linalg.matrix_rank(Au[tight], tol=1e-9) < Au.shape[1]:
            continue
        v2, *_ = np.linalg.lstsq(Au[tight], bu[tight], rcond=None)
        if np.all(Au @ v2 <= bu + tol):
            verts.append(v2)
    return verts


def _implicit_equalities(Au, bu, tol):
    """Rows that hold with equality on the whole set; empty when the set
    has interior. Returns (indices, interior_point_or_None)."""
    sol = _chebyshev(Au, bu)
    if not sol.optimal:
        return None, None
    t = sol.x[-1]
    if t > 1e-9:
        return np.array([], dtype=int), sol.x[:-1]
    y = sol.duals_ub[: Au.shape[0]]
    support = np.flatnonzero(y > 1e-12)
    if support.size == 0:
        support = np.flatnonzero(bu - Au @ sol.x[:-1] <= tol)
    return support, None


def enumerate_vertices(A, b, E=None, f=None, tol: float = VERTEX_TOL,
                       max_dim: int = MAX_VERTEX_DIM) -> list:
    """All vertices of ``{x : A x <= b, E x = f}``.

    Returns ``[]`` for an empty set and raises ``UnboundedPolyhedronError``
    when the set has a recession direction.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float).reshape(-1)
    n = A.shape[1] if A.ndim == 2 and A.shape[1] else np.asarray(E).shape[1]
    A = A.reshape(-1, n)
    E = np.zeros((0, n)) if E is None else np.asarray(E, dtype=float).reshape(-1, n)
    f = np.zeros(0) if f is None else np.asarray(f, dtype=float).reshape(-1)
    if n > max_dim:
        raise DataError(f"vertex enumeration is limited to dimension {max_dim}, got {n}")
    An, bn = _unit_rows(A, b)
    return _enumerate(A, b, E, f, tol, An, bn, E, f)


def _unit_rows(A, b):
    norms = np.linalg.norm(A, axis=1)
    norms[norms == 0] = 1.0
    return A / norms[:, None], b / norms


def _enumerate(A, b, E, f, tol, A0, b0, E0, f0):
    hull = _affine_hull(A, b, E, f, tol)
    if hull is None:
        return []
    x0, N = hull
    d = N.shape[1]
    Au, bu = A @ N, b - A @ x0
    cleaned = _clean_rows(Au, bu, tol)
    if cleaned is None:
        return []
    Au, bu = cleaned
    if d == 0:
        return [x0] if max_violation(A0, b0, E0, f0, x0) <= tol else []

    ranges = _coordinate_ranges(Au, bu)
    if ranges is None:
        return []
    support, interior = _implicit_equalities(Au, bu, tol)
    if support is None:
        return []
    if support.size:
        # lift the implicit equalities back to x-space and recurse
        Eu = Au[support] @ N.T
        fu = bu[support] + Au[support] @ N.T @ x0
        keep = np.setdiff1d(np.arange(Au.shape[0]), support)
        A_next = Au[keep] @ N.T
        b_next = bu[keep] + A_next @ x0
        return _enumerate(A_next, b_next, np.vstack([E, Eu]), np.concatenate([f, fu]),
                          tol, A0, b0, E0, f0)

    if d == 1:
        verts = list(ranges)
    elif math.comb(Au.shape[0], d) <= EXHAUSTIVE_LIMIT:
        verts = _exhaustive(Au, bu, tol)
    else:
        verts = _qhull(Au, bu, interior, tol)
    xs = [x0 + N @ u for u in verts]
    xs = [x for x in xs if max_violation(A0, b0, E0, f0, x) <= tol * max(1.0, np.abs(x).max())]
    return _dedupe(xs)


def is_bounded(A, b, E=None, f=None) -> bool:
    A = np.asarray(A, dtype=float)
    n = A.shape[1]
    E = np.zeros((0, n)) if E is None else np.asarray(E, dtype=float).reshape(-1, n)
    f = np.zeros(0) if f is None else np.asarray(f, dtype=float)
    for k in range(n):
        for sgn in (1.0, -1.0):
            c = np.zeros(n)
            c[k] = sgn
            sol = solve_lp(StandardLP(c, A if len(b) else None, b if len(b) else None,
                                      E if len(f) else None, f if len(f) else None))
            if sol.status is Status.UNBOUNDED:
                return False
            if sol.status is Status.INFEASIBLE:
                return True
    return True


def build_polyhedron(A, b, E=None, f=None, enumerate: bool = True,
                     tol: float = VERTEX_TOL, max_dim: int = MAX_VERTEX_DIM) -> SolutionPolyhedron:
    A = np.asarray(A, dtype=float)
    n = A.shape[1]
    b = np.asarray(b, dtype=float).reshape(-1)
    E = np.zeros((0, n)) if E is None else np.asarray(E, dtype=float).reshape(-1, n)
    f = np.zeros(0) if f is None else np.asarray(f, dtype=float).reshape(-1)
    cleaned = _clean_rows(A, b, tol)
    bounded = is_bounded(*cleaned, E, f) if cleaned is not None else True
    vertices: list = []
    if enumerate and bounded and n <= max_dim and cleaned is not None:
        An, bn = _unit_rows(A, b)
        vertices = _enumerate(cleaned[0], cleaned[1], E, f, tol, An, bn, E, f)
    return SolutionPolyhedron(n, A, b, E, f, tuple(vertices), bounded)
