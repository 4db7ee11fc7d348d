"""Utility-parameter estimation from observed behaviour.

For one player, each data point contributes a linear error row ``r`` with
error ``r @ theta``. The irrationality loss is the largest positive error
over all contexts and points; its minimizers over the parameter space are
found with one epigraph LP in ``(theta, eps)`` and the complete set of
minimizers is the polyhedron ``{theta in Theta : r @ theta <= eps_hat}``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .datasets import ContextualDataset, Provenance
from .errors import ConvergenceError, DataError, DimensionError, EmptyDataError, LPFailure, RankDeficientError
from .game import LinearUtilityModel, ParameterSpace
from .lp import FEAS_TOL, StandardLP, solve_lp
from .polyhedron import MAX_VERTEX_DIM, SolutionPolyhedron, build_polyhedron


class ComparisonMode(str, enum.Enum):
    """How the chosen action of a dynamic data point is evaluated.

    ``fixed-opponent`` holds the opponents at the baseline step ``a_-i(j)``;
    ``joint-profile`` evaluates the chosen action at the full next profile
    ``a(j+1)``. Static points are unaffected.
    """

    FIXED_OPPONENT = "fixed-opponent"
    JOINT_PROFILE = "joint-profile"


@dataclass(frozen=True, eq=False)
class ConstraintSystem:
    player: int
    rows: np.ndarray
    row_meta: tuple  # (context index k, point index j) per row
    provenance: tuple = ()  # Provenance per row
    mode: ComparisonMode = ComparisonMode.JOINT_PROFILE

    @property
    def param_dim(self) -> int:
        return self.rows.shape[1]

    def __len__(self) -> int:
        return self.rows.shape[0]


def build_constraints(model: LinearUtilityModel, data: ContextualDataset,
                      mode: ComparisonMode | str = ComparisonMode.JOINT_PROFILE) -> ConstraintSystem:
    mode = ComparisonMode(mode)
    i = model.player
    per_player = data.for_player(i)
    game = data.game
    n_players = game.num_players
    base = [[] for _ in range(n_players)]
    cand = [[] for _ in range(n_players)]
    ctx, meta, prov = [], [], []
    for k, (xi, obs) in enumerate(per_player):
        for j, p in enumerate(obs.points):
            b = p.baseline_profile.actions
            if mode is ComparisonMode.JOINT_PROFILE and p.next_profile is not None:
                c = list(p.next_profile.actions)
                c[i] = p.chosen_action
            else:
                c = list(b)
                c[i] = p.chosen_action
            for q in range(n_players):
                base[q].append(b[q])
                cand[q].append(c[q])
            ctx.append(xi.values)
            meta.append((k, j))
            prov.append(obs.provenance)
    if not meta:
        raise EmptyDataError("dataset has no points for this player")
    contexts = np.array(ctx, dtype=float).reshape(len(meta), -1)
    base_arr = [np.array(a, dtype=float).reshape(len(meta), -1) for a in base]
    cand_arr = [np.array(a, dtype=float).reshape(len(meta), -1) for a in cand]
    rows = model.feature_batch(base_arr, contexts) - model.feature_batch(cand_arr, contexts)
    return ConstraintSystem(i, rows, tuple(meta), tuple(prov), mode)


def infer_mode(data: ContextualDataset) -> ComparisonMode:
    """``fixed-opponent`` when no dynamic step changes more than one action
    (round-robin play, where the two modes agree on every mover's row and
    ``joint-profile`` would add rows driven only by opponents); otherwise
    ``joint-profile``."""
    for _, obs in data.batches:
        for s in obs.values():
            for p in s.points:
                if p.next_profile is None:
                    continue
                moved = sum(not np.array_equal(x, y) for x, y in
                            zip(p.baseline_profile.actions, p.next_profile.actions))
                if moved > 1:
                    return ComparisonMode.JOINT_PROFILE
    return ComparisonMode.FIXED_OPPONENT


def constraint_system_from_rows(rows, player: int = 0, row_meta=None) -> ConstraintSystem:
    """Wrap precomputed error rows (one row per data point)."""
    R = np.asarray(rows, dtype=float)
    if R.ndim != 2 or R.shape[0] == 0:
        raise EmptyDataError("need a non-empty 2-D array of rows")
    if not np.all(np.isfinite(R)):
        raise DataError("rows contain NaN or infinite entries")
    meta = tuple(tuple(m) for m in row_meta) if row_meta is not None else tuple((k, 0) for k in range(len(R)))
    return ConstraintSystem(player, R, meta, (Provenance.DYNAMIC,) * len(R))


def _theta(system: ConstraintSystem, theta) -> np.ndarray:
    th = np.asarray(theta, dtype=float).reshape(-1)
    if th.shape[0] != system.param_dim:
        raise DimensionError(f"theta has length {th.shape[0]}, system rows have length {system.param_dim}")
    return th


def errors(system: ConstraintSystem, theta) -> np.ndarray:
    """Signed error of every data point under ``theta``."""
    return system.rows @ _theta(system, theta)


def irrationality_loss(system: ConstraintSystem, theta) -> float:
    e = errors(system, theta)
    return float(max(0.0, e.max(initial=0.0)))


def l2_loss(system: ConstraintSystem, theta) -> float:
    """Root-mean-square of the positive errors."""
    e = np.maximum(errors(system, theta), 0.0)
    return float(np.sqrt(np.mean(e ** 2)))


@dataclass(frozen=True, eq=False)
class EstimationResult:
    player: int
    epsilon_hat: float
    theta_hat: np.ndarray
    polyhedron: SolutionPolyhedron
    lp_iterations: int = 0
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "player": self.player,
            "estimator": "linf",
            "epsilon_hat": self.epsilon_hat,
            "theta_hat": self.theta_hat.tolist(),
            "polyhedron": self.polyhedron.to_dict(),
            "meta": self.meta,
        }


def epigraph_lp(system: ConstraintSystem, space: ParameterSpace) -> StandardLP:
    """The LP ``min eps s.t. R theta - eps <= 0, eps >= 0, theta in Theta``."""
    p = system.param_dim
    if space.dim != p:
        raise DimensionError(f"parameter space has dimension {space.dim}, rows have {p}")
    R = system.rows
    A = [np.hstack([R, -np.ones((len(R), 1))])]
    b = [np.zeros(len(R))]
    eps_row = np.zeros((1, p + 1))
    eps_row[0, -1] = -1.0
    A.append(eps_row)
    b.append(np.zeros(1))
    if space.inequality_rows:
        A.append(np.hstack([space.G, np.zeros((len(space.h), 1))]))
        b.append(space.h)
    E = np.hstack([space.E, np.zeros((len(space.f), 1))]) if space.equality_rows else None
    c = np.zeros(p + 1)
    c[-1] = 1.0
    return StandardLP(c, np.vstack(A), np.concatenate(b), E, space.f if space.equality_rows else None)


def solution_polyhedron(system: ConstraintSystem, space: ParameterSpace, epsilon_hat: float,
                        enumerate: bool = True) -> SolutionPolyhedron:
    """``{theta in Theta : r @ theta <= epsilon_hat for every row}``."""
    A = np.vstack([system.rows, space.G]) if space.inequality_rows else system.rows
    b = np.concatenate([np.full(len(system), epsilon_hat), space.h])
    return build_polyhedron(A, b, space.E if space.equality_rows else None,
                            space.f if space.equality_rows else None,
                            enumerate=enumerate and system.param_dim <= MAX_VERTEX_DIM)


def estimate_linf(system: ConstraintSystem, space: ParameterSpace, tol: float = FEAS_TOL,
                  enumerate: bool = True) -> EstimationResult:
    lp = epigraph_lp(system, space)
    sol = solve_lp(lp, tol)
    if not sol.optimal:
        # cannot happen for a nonempty parameter space: (theta_bar, max(0, max error)) is feasible
        raise LPFailure(f"epigraph LP returned {sol.status.value}")
    theta = sol.x[:-1].copy()
    eps = max(0.0, float(sol.x[-1]))
    check = irrationality_loss(system, theta)
    if abs(check - eps) > 1e-7 * max(1.0, float(np.abs(system.rows).max(initial=0.0)) * max(1.0, np.abs(theta).max())):
        raise LPFailure(f"LP objective {eps} disagrees with the loss at its solution {check}")
    poly = solution_polyhedron(system, space, eps, enumerate)
    meta = {"rows": len(system), "mode": system.mode.value}
    return EstimationResult(system.player, eps, theta, poly, sol.iterations, meta)


# ---------------------------------------------------------------------------
# certificates

@dataclass(frozen=True)
class Certificate:
    epsilon_bar: float
    worst: Optional[tuple]  # (context index, point index) of the largest error
    interpretation: str

    def to_dict(self) -> dict:
        return {"epsilon_bar": self.epsilon_bar,
                "worst": list(self.worst) if self.worst is not None else None,
                "interpretation": self.interpretation}


def certify(system: ConstraintSystem, theta, data: Optional[ContextualDataset] = None) -> Certificate:
    """Largest positive error under ``theta`` and what it certifies.

    Dynamic rows certify an eps-better-response trajectory; static rows
    certify an eps-Nash equilibrium relative to the supplied alternatives
    (exact over the action set only if the alternatives exhaust it).
    """
    e = errors(system, theta)
    eps = float(max(0.0, e.max(initial=0.0)))
    worst = system.row_meta[int(np.argmax(e))] if len(e) else None
    provs = set(system.provenance)
    if data is not None:
        provs = {s.provenance for _, s in data.for_player(system.player)}
    if provs == {Provenance.DYNAMIC}:
        text = "eps-better-response dynamics"
    elif provs == {Provenance.STATIC}:
        text = "eps-Nash equilibrium over the supplied alternatives"
    else:
        text = "mixed dynamic/static data: eps bounds every better-response and best-response violation"
    return Certificate(eps, worst, text)


# ---------------------------------------------------------------------------
# L2 variant

def project(space: ParameterSpace, theta, max_cycles: int = 20_000, tol: float = 1e-13) -> np.ndarray:
    """Euclidean projection onto the parameter space.

    Exact clipping when every row is a coordinate bound; Dykstra's
    alternating projections otherwise.
    """
    th = np.asarray(theta, dtype=float).copy()
    bounds = space.coordinate_bounds()
    if bounds is not None:
        return np.clip(th, *bounds)
    sets = []
    if space.equality_rows:
        E, f = space.E, space.f
        pinv = np.linalg.pinv(E)
        sets.append(lambda x: x - pinv @ (E @ x - f))
    for g, h in space.inequality_rows:
        g = np.array(g)
        gg = g @ g
        sets.append(lambda x, g=g, h=h, gg=gg: x - max(0.0, (g @ x - h) / gg) * g)
    incr = [np.zeros_like(th) for _ in sets]
    for _ in range(max_cycles):
        prev = th.copy()
        for s, proj in enumerate(sets):
            y = proj(th + incr[s])
            incr[s] = th + incr[s] - y
            th = y
        if np.max(np.abs(th - prev)) <= tol:
            break
    return th


def estimate_l2(system: ConstraintSystem, space: ParameterSpace, tol: float = 1e-8,
                max_iter: int = 200_000, start=None) -> tuple:
    """Minimize the root-mean-square positive error over the parameter space.

    Accelerated projected gradient on the mean squared positive error (a
    convex, continuously differentiable, piecewise-quadratic function) with
    adaptive restarts. Returns ``(theta, loss)``.
    """
    R = system.rows
    m = len(R)
    if space.dim != system.param_dim:
        raise DimensionError("parameter space and rows disagree in dimension")
    L = 2.0 / m * float(np.linalg.norm(R, 2) ** 2)
    if L == 0.0:
        th = project(space, np.zeros(space.dim) if start is None else start)
        return th, l2_loss(system, th)

    def grad(x):
        return (2.0 / m) * (R.T @ np.maximum(R @ x, 0.0))

    def obj(x):
        return float(np.mean(np.maximum(R @ x, 0.0) ** 2))

    x = project(space, np.zeros(space.dim) if start is None else start)
    y, t = x.copy(), 1.0
    best, best_val = x.copy(), obj(x)
    step = 1.0 / L
    for _ in range(max_iter):
        x_new = project(space, y - step * grad(y))
        val = obj(x_new)
        if val < best_val:
            best, best_val = x_new.copy(), val
        # gradient mapping at x_new measures stationarity
        gm = np.linalg.norm(x_new - project(space, x_new - step * grad(x_new)))
        if gm <= tol * max(1.0, np.linalg.norm(x_new)) or val == 0.0:
            return x_new, math.sqrt(val)
        t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        if (y - x_new) @ (x_new - x) > 0:  # restart when momentum points uphill
            y, t_new = x_new.copy(), 1.0
        else:
            y = x_new + ((t - 1.0) / t_new) * (x_new - x)
        x, t = x_new, t_new
    raise ConvergenceError("L2 estimator did not converge", best, math.sqrt(best_val))


# ---------------------------------------------------------------------------
# OLS on market-share increments

@dataclass(frozen=True, eq=False)
class OlsResult:
    k1: float
    k2: float
    residual: float  # root-mean-square one-step residual
    clipped: bool
    raw: tuple

    @property
    def theta(self) -> np.ndarray:
        return np.array([self.k1, self.k2])


def share_regressors(shares, advertising, kind: str) -> tuple:
    """Regressors and targets of the one-step share increment.

    ``advertising`` is an ``(T, 2)`` array aligned with ``shares`` (length
    T); step ``t`` regresses ``M(t+1) - M(t)`` on the gain and loss terms
    evaluated at ``a(t+1)`` and ``M(t)``.
    """
    M = np.asarray(shares, dtype=float)
    a = np.asarray(advertising, dtype=float)
    if a.shape != (len(M), 2):
        raise DimensionError(f"advertising must have shape ({len(M)}, 2), got {a.shape}")
    if np.any(a < 0):
        raise DataError("advertising expenditures must be nonnegative")
    Mt, a1, a2 = M[:-1], a[1:, 0], a[1:, 1]
    if kind == "lanchester":
        gain, loss = np.sqrt(a1) * (1.0 - Mt), np.sqrt(a2) * Mt
    elif kind == "sorger":
        gain, loss = np.sqrt(a1) * np.sqrt(1.0 - Mt), np.sqrt(a2) * np.sqrt(Mt)
    else:
        raise DataError(f"unknown market-share model {kind!r}")
    return np.column_stack([gain, -loss]), np.diff(M)


def estimate_ols_market_share(shares, advertising, kind: str = "lanchester") -> OlsResult:
    M = np.asarray(shares, dtype=float)
    if len(M) < 3:
        raise EmptyDataError("OLS needs at least 3 time steps")
    X, y = share_regressors(M, advertising, kind)
    if np.linalg.matrix_rank(X) < 2:
        raise RankDeficientError("share-increment regressors are rank deficient")
    k = np.linalg.solve(X.T @ X, X.T @ y)
    raw = (float(k[0]), float(k[1]))
    clipped = bool(np.any(k < 0))
    k = np.maximum(k, 0.0)
    resid = y - X @ k
    return OlsResult(float(k[0]), float(k[1]), float(np.sqrt(np.mean(resid ** 2))), clipped, raw)
