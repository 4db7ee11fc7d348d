"""Forward games used to generate data and check estimates.

Bertrand duopoly with linear demand
``D_i = t0 + t1 p1 + t2 p2 + t3 xi`` and revenue ``U_i = p_i D_i``;
grid best responses and better-response dynamics for any linear utility
model; Lanchester and Sorger market-share dynamics driven by square-root
advertising effectiveness.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .datasets import GridSpec, regular_grid
from .errors import BoundsError, DataError
from .game import (EMPTY_CONTEXT, ActionProfile, Context, GameDefinition, LinearUtilityModel,
                   action, context, negate, one_minus, sqrt)

# ---------------------------------------------------------------------------
# Bertrand duopoly


def bertrand_models() -> tuple:
    """Revenue models of both firms; parameters are the demand coefficients
    ``(t0, t1, t2, t3)`` and the context is the scalar demand shifter."""
    p1, p2, xi = action(0), action(1), context(0)
    firm1 = LinearUtilityModel(0, (p1, p1 * p1, p1 * p2, p1 * xi))
    firm2 = LinearUtilityModel(1, (p2, p1 * p2, p2 * p2, p2 * xi))
    return firm1, firm2


@dataclass(frozen=True)
class BertrandDuopoly:
    theta1: tuple
    theta2: tuple
    price_bounds: tuple = (0.0, math.inf)

    def __post_init__(self):
        t1 = tuple(float(v) for v in self.theta1)
        t2 = tuple(float(v) for v in self.theta2)
        if len(t1) != 4 or len(t2) != 4:
            raise DataError("demand parameters must be 4-vectors")
        if t1[1] > 0 or t2[2] > 0:
            raise DataError("own-price demand coefficients must be <= 0")
        if t1[2] < 0 or t2[1] < 0:
            raise DataError("cross-price demand coefficients must be >= 0")
        object.__setattr__(self, "theta1", t1)
        object.__setattr__(self, "theta2", t2)
        object.__setattr__(self, "price_bounds", tuple(float(v) for v in self.price_bounds))

    def theta(self, firm: int) -> np.ndarray:
        return np.array(self.theta1 if firm == 0 else self.theta2)

    def game(self) -> GameDefinition:
        lo, hi = self.price_bounds
        return GameDefinition.scalar(2, lo, hi, ("firm1", "firm2"))

    def demand(self, firm: int, p1, p2, xi):
        t = self.theta(firm)
        return t[0] + t[1] * p1 + t[2] * p2 + t[3] * xi

    def revenue(self, firm: int, p1, p2, xi):
        return (p1 if firm == 0 else p2) * self.demand(firm, p1, p2, xi)


def bertrand_nash(duopoly: BertrandDuopoly, xi: float) -> tuple:
    """Equilibrium prices from the two first-order conditions."""
    a, b = duopoly.theta1, duopoly.theta2
    if a[1] >= 0 or b[2] >= 0:
        raise DataError("revenues must be strictly concave in own price for an interior maximizer")
    J = np.array([[2 * a[1], a[2]], [b[1], 2 * b[2]]])
    if abs(np.linalg.det(J)) <= 1e-14 * max(1.0, np.abs(J).max() ** 2):
        raise DataError("first-order-condition system is singular")
    rhs = -np.array([a[0] + a[3] * xi, b[0] + b[3] * xi])
    p = np.linalg.solve(J, rhs)
    lo, hi = duopoly.price_bounds
    if np.any(p < lo) or np.any(p > hi):
        err = BoundsError(f"equilibrium prices {tuple(p)} at xi={xi} fall outside [{lo}, {hi}]")
        err.unclamped = (float(p[0]), float(p[1]))
        raise err
    return float(p[0]), float(p[1])


def marginal_revenue_theta(theta, firm: int, p1, p2, xi):
    """d/dp_i of p_i * D_i for arbitrary demand parameters (vectorized)."""
    t = np.asarray(theta, dtype=float)
    own, other = (p1, p2) if firm == 0 else (p2, p1)
    own_coef, cross_coef = (t[1], t[2]) if firm == 0 else (t[2], t[1])
    return t[0] + 2 * own_coef * own + cross_coef * other + t[3] * xi


def marginal_revenue(duopoly: BertrandDuopoly, firm: int, p1, p2, xi):
    return marginal_revenue_theta(duopoly.theta(firm), firm, p1, p2, xi)


# ---------------------------------------------------------------------------
# grid responses and dynamics

def _grid_utilities(model: LinearUtilityModel, theta, profile: ActionProfile, xi: Context,
                    values: np.ndarray) -> np.ndarray:
    n = len(values)
    acts = [np.repeat(a[None, :], n, axis=0) for a in profile.actions]
    acts[model.player] = values.reshape(n, 1)
    ctx = np.repeat(xi.values[None, :], n, axis=0)
    return model.feature_batch(acts, ctx) @ np.asarray(theta, dtype=float)


def best_response_grid(model: LinearUtilityModel, theta, profile: ActionProfile,
                       xi: Context = EMPTY_CONTEXT, grid: Optional[GridSpec] = None) -> tuple:
    """Grid maximizer of the player's utility with opponents from ``profile``;
    ties go to the lowest action."""
    if grid is None:
        raise DataError("a grid is required")
    values = regular_grid(grid)
    u = _grid_utilities(model, theta, profile, xi, values)
    k = int(np.argmax(u))
    return float(values[k]), float(u[k])


def grid_nash(models: Sequence[LinearUtilityModel], thetas: Sequence, game: GameDefinition,
              xi: Context, grid: GridSpec, start=None, max_rounds: int = 10_000) -> ActionProfile:
    """Fixed point of round-robin grid best responses (pure NE on the grid)."""
    values = regular_grid(grid)
    prof = game.profile(start if start is not None else [values[0]] * game.num_players)
    for _ in range(max_rounds):
        changed = False
        for m, th in zip(models, thetas):
            a, _ = best_response_grid(m, th, prof, xi, grid)
            if a != prof.own(m.player)[0]:
                prof = prof.with_action(m.player, a)
                changed = True
        if not changed:
            return prof
    raise RuntimeError("grid best responses did not settle")


def better_response_dynamics(models: Sequence[LinearUtilityModel], thetas: Sequence,
                             initial: ActionProfile, steps: int, xi: Context = EMPTY_CONTEXT,
                             grid: Optional[GridSpec] = None, rule: str = "first") -> list:
    """Round-robin better-response trajectory of length ``steps + 1``.

    At step ``j`` player ``models[j % len(models)]`` moves; with rule
    ``first`` it takes the lowest grid action that strictly improves its
    utility, with ``best`` the grid best response when that improves.
    Everybody else repeats their action.
    """
    if steps < 1:
        raise DataError("steps must be >= 1")
    if grid is None:
        raise DataError("a grid is required")
    values = regular_grid(grid)
    traj = [initial]
    prof = initial
    for j in range(steps):
        m = models[j % len(models)]
        th = np.asarray(thetas[j % len(models)], dtype=float)
        cur = float(th @ m.features_at(prof, xi))
        u = _grid_utilities(m, th, prof, xi, values)
        better = np.flatnonzero(u > cur + 1e-12 * (1.0 + abs(cur)))
        if better.size:
            k = int(better[0]) if rule == "first" else int(np.argmax(u))
            prof = prof.with_action(m.player, values[k])
        traj.append(prof)
    return traj


# ---------------------------------------------------------------------------
# market-share dynamics

class ShareModelKind(str, enum.Enum):
    LANCHESTER = "lanchester"
    SORGER = "sorger"


@dataclass(frozen=True)
class MarketShareModel:
    kind: ShareModelKind
    k1: float
    k2: float

    def __post_init__(self):
        object.__setattr__(self, "kind", ShareModelKind(self.kind))
        if not (self.k1 >= 0 and self.k2 >= 0):
            raise DataError("advertising effectiveness must be nonnegative")


def _gain_loss(kind: ShareModelKind, M: float) -> tuple:
    if kind is ShareModelKind.LANCHESTER:
        return 1.0 - M, M
    return math.sqrt(1.0 - M), math.sqrt(M)


def market_share_step(model: MarketShareModel, M: float, a1: float, a2: float) -> tuple:
    """Next share of firm 1 as ``(share, clamped)``."""
    if not 0.0 <= M <= 1.0:
        raise DataError(f"market share {M} outside [0, 1]")
    if a1 < 0 or a2 < 0:
        raise DataError("advertising expenditures must be nonnegative")
    g, l = _gain_loss(model.kind, M)
    nxt = M + model.k1 * math.sqrt(a1) * g - model.k2 * math.sqrt(a2) * l
    if nxt < 0.0 or nxt > 1.0:
        return min(1.0, max(0.0, nxt)), True
    return nxt, False


@dataclass(frozen=True, eq=False)
class ShareSimulation:
    shares: np.ndarray
    clamp_steps: tuple


def simulate_market_share(model: MarketShareModel, M0: float, advertising) -> ShareSimulation:
    """Iterate the share map over ``advertising`` (rows ``(a1, a2)`` applied
    at t+1); returns ``len(advertising) + 1`` shares."""
    if not 0.0 <= M0 <= 1.0:
        raise DataError(f"initial share {M0} outside [0, 1]")
    shares = [float(M0)]
    clamps = []
    for t, (a1, a2) in enumerate(np.asarray(advertising, dtype=float).reshape(-1, 2)):
        nxt, clamped = market_share_step(model, shares[-1], a1, a2)
        if clamped:
            clamps.append(t)
        shares.append(nxt)
    return ShareSimulation(np.array(shares), tuple(clamps))


def market_share_features(kind, firm: int) -> tuple:
    """Feature map of a firm's believed share gain; the context holds the
    current share M and the parameters are ``(k_1, k_2)`` beliefs.

    Firm 0 maximizes the next share of firm 1, firm 1 maximizes its
    complement; the action-independent current share drops out of every
    utility difference and is omitted.
    """
    kind = ShareModelKind(kind)
    a1, a2, M = action(0), action(1), context(0)
    if kind is ShareModelKind.LANCHESTER:
        gain, loss = sqrt(a1) * one_minus(M), sqrt(a2) * M
    else:
        gain, loss = sqrt(a1) * sqrt(one_minus(M)), sqrt(a2) * sqrt(M)
    if firm == 0:
        return (gain, negate(loss))
    return (negate(gain), loss)


def market_share_model(kind, firm: int) -> LinearUtilityModel:
    return LinearUtilityModel(firm, market_share_features(kind, firm))


def share_better_response_trajectory(beliefs: Sequence, kinds: Sequence, truth: MarketShareModel,
                                     M0: float, a0: Sequence, steps: int, grid: GridSpec,
                                     rule: str = "first") -> tuple:
    """Round-robin better responses with the share evolving under ``truth``.

    Each mover compares actions under its own belief model with the current
    observed share as context. Returns ``(trajectory, shares)`` of equal
    length ``steps + 1``.
    """
    lo, hi = grid.lower, grid.upper
    game = GameDefinition.scalar(2, lo, hi, ("firm1", "firm2"))
    models = [market_share_model(kinds[0], 0), market_share_model(kinds[1], 1)]
    values = regular_grid(grid)
    prof = game.profile(list(a0))
    traj, shares = [prof], [float(M0)]
    for j in range(steps):
        i = j % 2
        xi = Context([shares[-1]])
        th = np.asarray(beliefs[i], dtype=float)
        cur = float(th @ models[i].features_at(prof, xi))
        u = _grid_utilities(models[i], th, prof, xi, values)
        better = np.flatnonzero(u > cur + 1e-12 * (1.0 + abs(cur)))
        if better.size:
            k = int(better[0]) if rule == "first" else int(np.argmax(u))
            prof = prof.with_action(i, values[k])
        traj.append(prof)
        nxt, _ = market_share_step(truth, shares[-1], prof.own(0)[0], prof.own(1)[0])
        shares.append(nxt)
    return traj, np.array(shares)
