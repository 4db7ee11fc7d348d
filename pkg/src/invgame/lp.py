"""Small dense linear programs.

Problems are stated as

    minimize    c @ x
    subject to  A_ub @ x <= b_ub
                A_eq @ x == b_eq
                lo <= x <= hi        (optional, infinite entries allowed)

with free variables by default. The estimation LPs have a handful of
variables but thousands of rows, so the two-phase tableau simplex is run on
the dual (one tableau row per primal variable) and the primal vertex is
recovered from the optimal dual basis. Pivoting uses Bland's rule, so
results are deterministic for identical input.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DataError

FEAS_TOL = 1e-9
COST_TOL = 1e-9
PIVOT_TOL = 1e-10


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


def _as_matrix(a, ncols: int, name: str) -> np.ndarray:
    if a is None:
        return np.zeros((0, ncols))
    arr = np.array(a, dtype=float)
    if arr.size == 0:
        return np.zeros((0, ncols))
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[1] != ncols:
        raise DataError(f"{name} must have {ncols} columns, got shape {arr.shape}")
    return arr


def _as_vector(v, n: int, name: str) -> np.ndarray:
    if v is None:
        return np.zeros(0)
    arr = np.array(v, dtype=float).reshape(-1)
    if arr.shape[0] != n:
        raise DataError(f"{name} must have length {n}, got {arr.shape[0]}")
    return arr


@dataclass(frozen=True)
class StandardLP:
    objective: np.ndarray
    A_ub: np.ndarray = None
    b_ub: np.ndarray = None
    A_eq: np.ndarray = None
    b_eq: np.ndarray = None
    bounds: Optional[tuple] = None

    def __post_init__(self):
        c = np.array(self.objective, dtype=float).reshape(-1)
        n = c.shape[0]
        A_ub = _as_matrix(self.A_ub, n, "A_ub")
        A_eq = _as_matrix(self.A_eq, n, "A_eq")
        b_ub = _as_vector(self.b_ub, A_ub.shape[0], "b_ub")
        b_eq = _as_vector(self.b_eq, A_eq.shape[0], "b_eq")
        for name, arr in (("objective", c), ("A_ub", A_ub), ("b_ub", b_ub),
                          ("A_eq", A_eq), ("b_eq", b_eq)):
            if not np.all(np.isfinite(arr)):
                raise DataError(f"LP {name} contains NaN or infinite entries")
            arr.setflags(write=False)
        bounds = None
        if self.bounds is not None:
            if len(self.bounds) != n:
                raise DataError(f"bounds must have {n} entries")
            bounds = []
            for entry in self.bounds:
                lo, hi = (-math.inf, math.inf) if entry is None else entry
                lo = -math.inf if lo is None else float(lo)
                hi = math.inf if hi is None else float(hi)
                if math.isnan(lo) or math.isnan(hi):
                    raise DataError("LP bounds contain NaN")
                bounds.append((lo, hi))
            bounds = tuple(bounds)
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "A_ub", A_ub)
        object.__setattr__(self, "b_ub", b_ub)
        object.__setattr__(self, "A_eq", A_eq)
        object.__setattr__(self, "b_eq", b_eq)
        object.__setattr__(self, "bounds", bounds)

    @property
    def num_vars(self) -> int:
        return self.objective.shape[0]

    def inequality_system(self) -> tuple[np.ndarray, np.ndarray]:
        """A_ub rows followed by finite bound rows (lower bounds first)."""
        rows, rhs = [self.A_ub], [self.b_ub]
        if self.bounds is not None:
            n = self.num_vars
            for j, (lo, _) in enumerate(self.bounds):
                if math.isfinite(lo):
                    r = np.zeros(n)
                    r[j] = -1.0
                    rows.append(r[None, :])
                    rhs.append(np.array([-lo]))
            for j, (_, hi) in enumerate(self.bounds):
                if math.isfinite(hi):
                    r = np.zeros(n)
                    r[j] = 1.0
                    rows.append(r[None, :])
                    rhs.append(np.array([hi]))
        return np.vstack(rows), np.concatenate(rhs)


@dataclass(frozen=True)
class LpSolution:
    status: Status
    x: Optional[np.ndarray]
    objective_value: float
    active_set: tuple = ()
    duals_ub: Optional[np.ndarray] = None
    duals_eq: Optional[np.ndarray] = None
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


@dataclass
class _Tableau:
    T: np.ndarray
    basis: list
    ncols: int  # structural columns (artificials excluded)
    iterations: int = 0
    rows: list = field(default_factory=list)

    def pivot(self, r: int, e: int) -> None:
        T = self.T
        T[r] /= T[r, e]
        col = T[:, e].copy()
        col[r] = 0.0
        T -= np.outer(col, T[r])
        self.basis[r] = e
        self.iterations += 1

    def run(self, cost_tol: float, max_iter: int) -> str:
        T = self.T
        nrow = T.shape[0] - 1
        while True:
            if self.iterations > max_iter:
                raise RuntimeError("simplex iteration limit exceeded")
            reduced = T[-1, : self.ncols]
            cand = np.flatnonzero(reduced < -cost_tol)
            if cand.size == 0:
                return "optimal"
            e = int(cand[0])
            col = T[:nrow, e]
            pos = np.flatnonzero(col > PIVOT_TOL)
            if pos.size == 0:
                return "unbounded"
            ratios = T[pos, -1] / col[pos]
            best = ratios.min()
            ties = pos[ratios <= best + FEAS_TOL * max(1.0, abs(best))]
            r = int(min(ties, key=lambda i: self.basis[i]))
            self.pivot(r, e)


def _dual_simplex_core(M: np.ndarray, g: np.ndarray, d: np.ndarray,
                       cost_tol: float, feas_tol: float, max_iter: int):
    """Solve min d@w s.t. M@w == g, w >= 0 (M is n x W, n small).

    Returns (status, w, basis_columns, kept_rows, iterations).
    """
    n, W = M.shape
    sign = np.where(g < 0, -1.0, 1.0)
    T = np.zeros((n + 1, W + n + 1))
    T[:n, :W] = M * sign[:, None]
    T[:n, W:W + n] = np.eye(n)
    T[:n, -1] = g * sign
    T[-1, :W] = -T[:n, :W].sum(axis=0)
    T[-1, -1] = -T[:n, -1].sum()
    tab = _Tableau(T, list(range(W, W + n)), W)
    status = tab.run(cost_tol, max_iter)
    assert status == "optimal"  # phase-1 objective is bounded below by 0
    scale = max(1.0, float(np.abs(g).max(initial=0.0)))
    if -T[-1, -1] > feas_tol * scale:
        return "infeasible", None, None, None, tab.iterations

    # drive artificial variables out of the basis
    keep = []
    for i in range(n):
        if tab.basis[i] >= W:
            row = T[i, :W]
            nz = np.flatnonzero(np.abs(row) > 1e-9)
            if nz.size == 0:
                continue  # redundant row
            tab.pivot(i, int(nz[0]))
        keep.append(i)
    T = T[keep + [n]][:, list(range(W)) + [W + n]]
    tab = _Tableau(T, [tab.basis[i] for i in keep], W, tab.iterations)
    cB = d[tab.basis] if keep else np.zeros(0)
    T[-1, :W] = d - cB @ T[:-1, :W]
    T[-1, -1] = -cB @ T[:-1, -1]
    status = tab.run(cost_tol, max_iter)
    if status == "unbounded":
        return "unbounded", None, None, None, tab.iterations
    w = np.zeros(W)
    w[tab.basis] = np.maximum(T[:-1, -1], 0.0)
    # map kept tableau rows back to original rows of M
    return "optimal", w, list(tab.basis), keep, tab.iterations


def _primal_feasible(A: np.ndarray, b: np.ndarray, E: np.ndarray, f: np.ndarray,
                     tol: float, max_iter: int) -> bool:
    n = A.shape[1]
    M = np.hstack([A.T, E.T, -E.T])
    d = np.concatenate([b, f, -f])
    status, *_ = _dual_simplex_core(M, np.zeros(n), d, tol, tol, max_iter)
    return status == "optimal"


def solve_lp(lp: StandardLP, tol: float = FEAS_TOL, max_iter: int = 200_000) -> LpSolution:
    """Solve ``lp``; returns an ``LpSolution`` with a vertex when optimal."""
    c = lp.objective
    n = lp.num_vars
    A, b = lp.inequality_system()
    E, f = lp.A_eq, lp.b_eq
    m, q = A.shape[0], E.shape[0]
    M = np.hstack([A.T, E.T, -E.T])
    d = np.concatenate([b, f, -f])
    status, w, basis, keep, iters = _dual_simplex_core(M, -c, d, tol, tol, max_iter)
    if status == "infeasible":
        verdict = Status.UNBOUNDED if _primal_feasible(A, b, E, f, tol, max_iter) else Status.INFEASIBLE
        value = -math.inf if verdict is Status.UNBOUNDED else math.inf
        return LpSolution(verdict, None, value, iterations=iters)
    if status == "unbounded":
        return LpSolution(Status.INFEASIBLE, None, math.inf, iterations=iters)

    x = np.zeros(n)
    if keep:
        B = M[keep][:, basis]
        try:
            x[keep] = np.linalg.solve(B.T, d[basis])
        except np.linalg.LinAlgError:
            x[keep] = np.linalg.lstsq(B.T, d[basis], rcond=None)[0]
    x[np.abs(x) < 1e-15] = 0.0
    slack = b - A @ x
    scale = np.maximum(1.0, np.abs(b))
    active = tuple(int(i) for i in np.flatnonzero(slack <= tol * scale) if i < lp.A_ub.shape[0])
    y = w[:m]
    z = w[m:m + q] - w[m + q:]
    return LpSolution(Status.OPTIMAL, x, float(c @ x), active,
                      duals_ub=y, duals_eq=z, iterations=iters)


def find_feasible_point(rows: Sequence, bounds: Optional[Sequence] = None,
                        equalities: Sequence = (), dim: Optional[int] = None,
                        tol: float = FEAS_TOL) -> Optional[np.ndarray]:
    """Witness of ``{x : g@x <= h for (g, h) in rows, ...}`` or ``None``."""
    if dim is None:
        if rows:
            dim = len(rows[0][0])
        elif equalities:
            dim = len(equalities[0][0])
        elif bounds is not None:
            dim = len(bounds)
        else:
            return np.zeros(0)
    A = [r for r, _ in rows]
    b = [h for _, h in rows]
    E = [r for r, _ in equalities]
    f = [v for _, v in equalities]
    lp = StandardLP(np.zeros(dim), A or None, b or None, E or None, f or None, bounds)
    sol = solve_lp(lp, tol)
    return sol.x if sol.optimal else None


def check_feasible(rows: Sequence, bounds: Optional[Sequence] = None,
                   equalities: Sequence = (), dim: Optional[int] = None,
                   tol: float = FEAS_TOL) -> bool:
    """True iff the constraint system admits a point (phase-1 probe)."""
    return find_feasible_point(rows, bounds, equalities, dim, tol) is not None


def dump_lp(lp: StandardLP) -> str:
    """Fixed plain-text layout, one constraint per line::

        LP <n_vars> <n_ineq> <n_eq>
        MIN <c_1> ... <c_n>
        LE <a_1> ... <a_n> <b>      (n_ineq lines)
        EQ <e_1> ... <e_n> <f>      (n_eq lines)
        BOUND <j> <lo> <hi>         (only when bounds are set)
        END
    """
    fmt = lambda v: repr(float(v))  # noqa: E731
    n = lp.num_vars
    lines = [f"LP {n} {lp.A_ub.shape[0]} {lp.A_eq.shape[0]}",
             "MIN " + " ".join(map(fmt, lp.objective))]
    for row, rhs in zip(lp.A_ub, lp.b_ub):
        lines.append("LE " + " ".join(map(fmt, row)) + " " + fmt(rhs))
    for row, rhs in zip(lp.A_eq, lp.b_eq):
        lines.append("EQ " + " ".join(map(fmt, row)) + " " + fmt(rhs))
    if lp.bounds is not None:
        for j, (lo, hi) in enumerate(lp.bounds):
            lines.append(f"BOUND {j} {fmt(lo)} {fmt(hi)}")
    lines.append("END")
    return "\n".join(lines) + "\n"


def parse_lp(text: str) -> StandardLP:
    lines = [ln.split() for ln in text.strip().splitlines()]
    if not lines or lines[0][0] != "LP" or lines[-1] != ["END"]:
        raise DataError("not an LP dump")
    n = int(lines[0][1])
    c = [float(v) for v in lines[1][1:]]
    A, b, E, f, bounds = [], [], [], [], None
    for ln in lines[2:-1]:
        vals = [float(v) for v in ln[1:]]
        if ln[0] == "LE":
            A.append(vals[:n])
            b.append(vals[n])
        elif ln[0] == "EQ":
            E.append(vals[:n])
            f.append(vals[n])
        elif ln[0] == "BOUND":
            bounds = bounds or [(-math.inf, math.inf)] * n
            bounds[int(vals[0])] = (vals[1], vals[2])
        else:
            raise DataError(f"unknown LP dump record {ln[0]!r}")
    return StandardLP(c, A or None, b or None, E or None, f or None, bounds)
