"""Games with utilities that are linear in their parameters.

A player's utility is ``U_i(a; theta, xi) = theta @ phi_i(a, xi)`` where the
feature map ``phi_i`` is built from a small set of serializable expression
primitives (action and context lookups, constants, square roots, affine
maps, products and interval indicators). Players are indexed from 0.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import BoundsError, DataError, DimensionError
from .lp import check_feasible

BOUND_TOL = 1e-12


# ---------------------------------------------------------------------------
# feature expressions

class Expr:
    """Base class for feature expressions.

    ``evaluate`` takes per-player action arrays of shape ``(n, d_i)`` and a
    context array of shape ``(n, c)`` and returns an array of shape ``(n,)``.
    """

    def evaluate(self, actions: Sequence[np.ndarray], contexts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    def __mul__(self, other: "Expr") -> "Product":
        left = self.args if isinstance(self, Product) else (self,)
        right = other.args if isinstance(other, Product) else (other,)
        return Product(left + right)


@dataclass(frozen=True)
class Action(Expr):
    player: int
    dim: int = 0

    def evaluate(self, actions, contexts):
        return actions[self.player][:, self.dim]

    def to_dict(self):
        return {"op": "action", "player": self.player, "dim": self.dim}


@dataclass(frozen=True)
class ContextValue(Expr):
    index: int = 0

    def evaluate(self, actions, contexts):
        if contexts.shape[1] <= self.index:
            raise DimensionError(f"feature reads context[{self.index}] but context has dimension {contexts.shape[1]}")
        return contexts[:, self.index]

    def to_dict(self):
        return {"op": "context", "index": self.index}


@dataclass(frozen=True)
class Const(Expr):
    value: float

    def evaluate(self, actions, contexts):
        return np.full(contexts.shape[0], float(self.value))

    def to_dict(self):
        return {"op": "const", "value": self.value}


@dataclass(frozen=True)
class Sqrt(Expr):
    arg: Expr

    def evaluate(self, actions, contexts):
        v = self.arg.evaluate(actions, contexts)
        if np.any(v < -1e-12):
            raise DataError("square-root feature evaluated at a negative value")
        return np.sqrt(np.maximum(v, 0.0))

    def to_dict(self):
        return {"op": "sqrt", "arg": self.arg.to_dict()}


@dataclass(frozen=True)
class Affine(Expr):
    arg: Expr
    scale: float = 1.0
    shift: float = 0.0

    def evaluate(self, actions, contexts):
        return self.scale * self.arg.evaluate(actions, contexts) + self.shift

    def to_dict(self):
        return {"op": "affine", "arg": self.arg.to_dict(), "scale": self.scale, "shift": self.shift}


@dataclass(frozen=True)
class Product(Expr):
    args: tuple

    def evaluate(self, actions, contexts):
        out = np.ones(contexts.shape[0])
        for a in self.args:
            out = out * a.evaluate(actions, contexts)
        return out

    def to_dict(self):
        return {"op": "product", "args": [a.to_dict() for a in self.args]}


@dataclass(frozen=True)
class Indicator(Expr):
    arg: Expr
    lower: float = -math.inf
    upper: float = math.inf

    def evaluate(self, actions, contexts):
        v = self.arg.evaluate(actions, contexts)
        return ((v >= self.lower) & (v <= self.upper)).astype(float)

    def to_dict(self):
        return {"op": "indicator", "arg": self.arg.to_dict(),
                "lower": _num_out(self.lower), "upper": _num_out(self.upper)}


def action(player: int, dim: int = 0) -> Action:
    return Action(player, dim)


def context(index: int = 0) -> ContextValue:
    return ContextValue(index)


def const(value: float) -> Const:
    return Const(float(value))


def sqrt(arg: Expr) -> Sqrt:
    return Sqrt(arg)


def one_minus(arg: Expr) -> Affine:
    return Affine(arg, -1.0, 1.0)


def negate(arg: Expr) -> Affine:
    return Affine(arg, -1.0, 0.0)


def _num_out(v: float):
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def _num_in(v) -> float:
    return float(v)  # float() accepts "inf"/"-inf"


def expr_from_dict(d: dict) -> Expr:
    try:
        op = d["op"]
        if op == "action":
            return Action(int(d["player"]), int(d.get("dim", 0)))
        if op == "context":
            return ContextValue(int(d.get("index", 0)))
        if op == "const":
            return Const(float(d["value"]))
        if op == "sqrt":
            return Sqrt(expr_from_dict(d["arg"]))
        if op == "affine":
            return Affine(expr_from_dict(d["arg"]), float(d.get("scale", 1.0)), float(d.get("shift", 0.0)))
        if op == "product":
            return Product(tuple(expr_from_dict(a) for a in d["args"]))
        if op == "indicator":
            return Indicator(expr_from_dict(d["arg"]), _num_in(d.get("lower", "-inf")),
                             _num_in(d.get("upper", "inf")))
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed feature expression {d!r}: {exc}") from exc
    raise DataError(f"unknown feature op {d.get('op')!r}")


# ---------------------------------------------------------------------------
# games, profiles, contexts

@dataclass(frozen=True)
class GameDefinition:
    num_players: int
    action_bounds: tuple  # per player: tuple of (lo, hi) per action dimension
    player_labels: Optional[tuple] = None

    def __post_init__(self):
        if self.num_players < 1:
            raise DataError("a game needs at least one player")
        bounds = tuple(tuple((float(lo), float(hi)) for lo, hi in per) for per in self.action_bounds)
        if len(bounds) != self.num_players:
            raise DimensionError(f"expected action bounds for {self.num_players} players, got {len(bounds)}")
        for i, per in enumerate(bounds):
            if not per:
                raise DimensionError(f"player {i} has no action dimensions")
            for lo, hi in per:
                if math.isnan(lo) or math.isnan(hi) or lo > hi:
                    raise DataError(f"player {i} has invalid action interval [{lo}, {hi}]")
        object.__setattr__(self, "action_bounds", bounds)
        if self.player_labels is not None:
            labels = tuple(str(s) for s in self.player_labels)
            if len(labels) != self.num_players:
                raise DimensionError("player_labels length must equal num_players")
            object.__setattr__(self, "player_labels", labels)

    @classmethod
    def scalar(cls, num_players: int, lower: float, upper: float, labels=None) -> "GameDefinition":
        """Every player chooses one real in ``[lower, upper]``."""
        return cls(num_players, tuple(((lower, upper),) for _ in range(num_players)), labels)

    def action_dim(self, player: int) -> int:
        return len(self.action_bounds[player])

    def check_action(self, player: int, a) -> np.ndarray:
        vec = np.atleast_1d(np.asarray(a, dtype=float)).reshape(-1)
        if vec.shape[0] != self.action_dim(player):
            raise DimensionError(f"player {player} action must have dimension {self.action_dim(player)}")
        if not np.all(np.isfinite(vec)):
            raise DataError(f"player {player} action has non-finite entries")
        for k, (lo, hi) in enumerate(self.action_bounds[player]):
            if vec[k] < lo - BOUND_TOL or vec[k] > hi + BOUND_TOL:
                raise BoundsError(f"player {player} action component {k} = {vec[k]} outside [{lo}, {hi}]")
        vec.setflags(write=False)
        return vec

    def profile(self, actions) -> "ActionProfile":
        return ActionProfile(self, tuple(actions))

    def to_dict(self) -> dict:
        out = {"num_players": self.num_players,
               "action_bounds": [[list(b) for b in per] for per in self.action_bounds]}
        if self.player_labels is not None:
            out["player_labels"] = list(self.player_labels)
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "GameDefinition":
        try:
            return cls(int(d["num_players"]), d["action_bounds"], d.get("player_labels"))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, DataError):
                raise
            raise DataError(f"malformed game definition: {exc}") from exc


@dataclass(frozen=True)
class ActionProfile:
    game: GameDefinition
    actions: tuple

    def __post_init__(self):
        if len(self.actions) != self.game.num_players:
            raise DimensionError(f"profile needs {self.game.num_players} actions, got {len(self.actions)}")
        checked = tuple(self.game.check_action(i, a) for i, a in enumerate(self.actions))
        object.__setattr__(self, "actions", checked)

    def own(self, player: int) -> np.ndarray:
        return self.actions[player]

    def with_action(self, player: int, a) -> "ActionProfile":
        acts = list(self.actions)
        acts[player] = a
        return ActionProfile(self.game, tuple(acts))

    def as_lists(self) -> list:
        return [[float(v) for v in a] for a in self.actions]

    def __eq__(self, other):
        if not isinstance(other, ActionProfile):
            return NotImplemented
        return self.game == other.game and all(
            np.array_equal(a, b) for a, b in zip(self.actions, other.actions))

    def __hash__(self):
        return hash(tuple(tuple(a) for a in self.actions))


@dataclass(frozen=True)
class Context:
    values: np.ndarray

    def __post_init__(self):
        v = np.atleast_1d(np.asarray(self.values, dtype=float)).reshape(-1).copy()
        if not np.all(np.isfinite(v)):
            raise DataError("context has non-finite entries")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    def __eq__(self, other):
        return isinstance(other, Context) and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash(tuple(self.values))


EMPTY_CONTEXT = Context(np.zeros(0))


# ---------------------------------------------------------------------------
# utility models and parameter spaces

@dataclass(frozen=True)
class LinearUtilityModel:
    player: int
    features: tuple

    def __post_init__(self):
        object.__setattr__(self, "features", tuple(self.features))
        if not self.features:
            raise DimensionError("a utility model needs at least one feature")

    @property
    def param_dim(self) -> int:
        return len(self.features)

    def feature_batch(self, actions: Sequence[np.ndarray], contexts: np.ndarray) -> np.ndarray:
        """Features for ``n`` profiles at once; returns shape ``(n, param_dim)``."""
        cols = [np.broadcast_to(f.evaluate(actions, contexts), (contexts.shape[0],)) for f in self.features]
        return np.column_stack(cols)

    def features_at(self, a: ActionProfile, xi: Context = EMPTY_CONTEXT) -> np.ndarray:
        acts = [v[None, :] for v in a.actions]
        return self.feature_batch(acts, xi.values[None, :])[0]

    def to_dict(self) -> dict:
        return {"player": self.player, "features": [f.to_dict() for f in self.features]}

    @classmethod
    def from_dict(cls, d: dict) -> "LinearUtilityModel":
        try:
            return cls(int(d["player"]), tuple(expr_from_dict(f) for f in d["features"]))
        except (KeyError, TypeError) as exc:
            raise DataError(f"malformed utility model: {exc}") from exc


def _theta(model: LinearUtilityModel, theta) -> np.ndarray:
    th = np.asarray(theta, dtype=float).reshape(-1)
    if th.shape[0] != model.param_dim:
        raise DimensionError(f"theta has length {th.shape[0]}, model expects {model.param_dim}")
    return th


def evaluate_utility(model: LinearUtilityModel, theta, a: ActionProfile,
                     xi: Context = EMPTY_CONTEXT) -> float:
    return float(_theta(model, theta) @ model.features_at(a, xi))


def error_row(model: LinearUtilityModel, candidate_ai, baseline: ActionProfile,
              xi: Context = EMPTY_CONTEXT) -> np.ndarray:
    """Feature difference ``phi(baseline) - phi(candidate_ai, baseline_-i)``.

    For every theta, ``theta @ error_row(...)`` is the utility shortfall of the
    candidate action against the baseline's own action.
    """
    cand = baseline.with_action(model.player, candidate_ai)
    return model.features_at(baseline, xi) - model.features_at(cand, xi)


def utility_difference(model: LinearUtilityModel, theta, candidate_ai, baseline: ActionProfile,
                       xi: Context = EMPTY_CONTEXT) -> float:
    th = _theta(model, theta)
    return float(th @ error_row(model, candidate_ai, baseline, xi))


@dataclass(frozen=True)
class ParameterSpace:
    """Polyhedral parameter set ``{theta : G theta <= h, E theta = f}``."""

    dim: int
    inequality_rows: tuple = ()
    equality_rows: tuple = ()

    def __post_init__(self):
        if self.dim < 1:
            raise DataError("parameter dimension must be positive")
        ineq = tuple((tuple(float(v) for v in g), float(h)) for g, h in self.inequality_rows)
        eq = tuple((tuple(float(v) for v in g), float(h)) for g, h in self.equality_rows)
        for g, h in ineq + eq:
            if len(g) != self.dim:
                raise DimensionError(f"parameter-space row has length {len(g)}, expected {self.dim}")
            if not (all(math.isfinite(v) for v in g) and math.isfinite(h)):
                raise DataError("parameter-space rows must be finite")
        object.__setattr__(self, "inequality_rows", ineq)
        object.__setattr__(self, "equality_rows", eq)
        if not check_feasible(list(ineq), None, list(eq), dim=self.dim):
            raise DataError("parameter space is empty")

    @classmethod
    def unconstrained(cls, dim: int) -> "ParameterSpace":
        return cls(dim)

    @classmethod
    def box(cls, lower: Sequence, upper: Sequence) -> "ParameterSpace":
        """Coordinate box; ``None`` or infinite entries leave that side open."""
        if len(lower) != len(upper):
            raise DimensionError("box bounds must have equal length")
        dim = len(lower)
        rows = []
        for j, lo in enumerate(lower):
            if lo is not None and math.isfinite(lo):
                g = [0.0] * dim
                g[j] = -1.0
                rows.append((g, -lo))
        for j, hi in enumerate(upper):
            if hi is not None and math.isfinite(hi):
                g = [0.0] * dim
                g[j] = 1.0
                rows.append((g, hi))
        return cls(dim, tuple(rows))

    @classmethod
    def nonnegative(cls, dim: int) -> "ParameterSpace":
        return cls.box([0.0] * dim, [None] * dim)

    def with_rows(self, inequalities=(), equalities=()) -> "ParameterSpace":
        return ParameterSpace(self.dim, self.inequality_rows + tuple(inequalities),
                              self.equality_rows + tuple(equalities))

    def fix(self, index: int, value: float) -> "ParameterSpace":
        g = [0.0] * self.dim
        g[index] = 1.0
        return self.with_rows(equalities=[(g, value)])

    @property
    def G(self) -> np.ndarray:
        return np.array([g for g, _ in self.inequality_rows], dtype=float).reshape(-1, self.dim)

    @property
    def h(self) -> np.ndarray:
        return np.array([h for _, h in self.inequality_rows], dtype=float)

    @property
    def E(self) -> np.ndarray:
        return np.array([g for g, _ in self.equality_rows], dtype=float).reshape(-1, self.dim)

    @property
    def f(self) -> np.ndarray:
        return np.array([h for _, h in self.equality_rows], dtype=float)

    def contains(self, theta, tol: float = 1e-9) -> bool:
        th = np.asarray(theta, dtype=float)
        ok_ineq = np.all(self.G @ th <= self.h + tol) if self.inequality_rows else True
        ok_eq = np.all(np.abs(self.E @ th - self.f) <= tol) if self.equality_rows else True
        return bool(ok_ineq and ok_eq)

    def coordinate_bounds(self) -> Optional[tuple]:
        """(lower, upper) arrays when every row touches a single
        coordinate, else ``None``. Used for exact projection."""
        lo = np.full(self.dim, -np.inf)
        hi = np.full(self.dim, np.inf)
        for g, h in self.inequality_rows:
            nz = [j for j, v in enumerate(g) if v != 0.0]
            if len(nz) != 1:
                return None
            j = nz[0]
            if g[j] > 0:
                hi[j] = min(hi[j], h / g[j])
            else:
                lo[j] = max(lo[j], h / g[j])
        for g, h in self.equality_rows:
            nz = [j for j, v in enumerate(g) if v != 0.0]
            if len(nz) != 1:
                return None
            j = nz[0]
            lo[j] = max(lo[j], h / g[j])
            hi[j] = min(hi[j], h / g[j])
        return lo, hi

    def to_dict(self) -> dict:
        return {"dim": self.dim,
                "inequalities": [{"row": list(g), "bound": h} for g, h in self.inequality_rows],
                "equalities": [{"row": list(g), "value": h} for g, h in self.equality_rows]}

    @classmethod
    def from_dict(cls, d: dict) -> "ParameterSpace":
        try:
            return cls(int(d["dim"]),
                       tuple((r["row"], r["bound"]) for r in d.get("inequalities", [])),
                       tuple((r["row"], r["value"]) for r in d.get("equalities", [])))
        except (KeyError, TypeError) as exc:
            raise DataError(f"malformed parameter space: {exc}") from exc


# ---------------------------------------------------------------------------
# scenario files

@dataclass(frozen=True)
class Scenario:
    """Contents of a scenario JSON file: a game, one model and parameter
    space per estimated player, and free-form extra sections."""

    game: GameDefinition
    models: tuple
    spaces: tuple
    context_dim: int = 0
    extra: dict = field(default_factory=dict, compare=False)

    def model_for(self, player: int) -> LinearUtilityModel:
        for m in self.models:
            if m.player == player:
                return m
        raise DataError(f"scenario has no utility model for player {player}")

    def space_for(self, player: int) -> ParameterSpace:
        for m, s in zip(self.models, self.spaces):
            if m.player == player:
                return s
        raise DataError(f"scenario has no parameter space for player {player}")

    def to_dict(self) -> dict:
        out = {"game": self.game.to_dict(), "context_dim": self.context_dim,
               "models": [dict(m.to_dict(), parameter_space=s.to_dict())
                          for m, s in zip(self.models, self.spaces)]}
        out.update(self.extra)
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        if not isinstance(d, dict) or "game" not in d or "models" not in d:
            raise DataError("scenario JSON needs 'game' and 'models' sections")
        game = GameDefinition.from_dict(d["game"])
        models, spaces = [], []
        for md in d["models"]:
            m = LinearUtilityModel.from_dict(md)
            if not 0 <= m.player < game.num_players:
                raise DataError(f"model player index {m.player} out of range")
            models.append(m)
            sd = md.get("parameter_space")
            spaces.append(ParameterSpace.from_dict(sd) if sd else ParameterSpace.unconstrained(m.param_dim))
            if spaces[-1].dim != m.param_dim:
                raise DimensionError(f"parameter space for player {m.player} has wrong dimension")
        extra = {k: v for k, v in d.items() if k not in ("game", "models", "context_dim")}
        return cls(game, tuple(models), tuple(spaces), int(d.get("context_dim", 0)), extra)


def load_scenario(path) -> Scenario:
    with open(path) as fh:
        return Scenario.from_dict(json.load(fh))


def save_scenario(scenario: Scenario, path) -> None:
    with open(path, "w") as fh:
        json.dump(scenario.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
