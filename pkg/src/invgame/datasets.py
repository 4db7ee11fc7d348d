"""Observation data-sets.

A data point pairs a player's chosen action with a baseline profile; its
error under theta is the utility of the baseline's own action minus the
utility of the chosen action (opponents taken from the baseline). Dynamic
observations pair each profile with the next step's action; static
observations pair an equilibrium action with fictitious alternatives.
"""

from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import BoundsError, DataError, DimensionError, EmptyDataError
from .game import ActionProfile, Context, GameDefinition

DEFAULT_GRID_POINTS = 2 ** 7 + 1


class Provenance(str, enum.Enum):
    DYNAMIC = "dynamic"
    STATIC = "static"


@dataclass(frozen=True, eq=False)
class DataPoint:
    chosen_action: np.ndarray
    baseline_profile: ActionProfile
    # for dynamic data: the full profile a(j+1), used by the joint-profile comparison
    next_profile: Optional[ActionProfile] = None


@dataclass(frozen=True)
class ObservationSet:
    player: int
    points: tuple
    provenance: Provenance

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        if not self.points:
            raise EmptyDataError(f"observation set for player {self.player} is empty")
        game = self.points[0].baseline_profile.game
        for p in self.points:
            game.check_action(self.player, p.chosen_action)
            if p.baseline_profile.game != game:
                raise DimensionError("data points in one set must share a game")

    @property
    def game(self) -> GameDefinition:
        return self.points[0].baseline_profile.game

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class ContextualDataset:
    batches: tuple  # of (Context, {player: ObservationSet})

    def __post_init__(self):
        batches = tuple((ctx if isinstance(ctx, Context) else Context(ctx), dict(obs))
                        for ctx, obs in self.batches)
        if not batches:
            raise EmptyDataError("dataset has no batches")
        players = set(batches[0][1])
        dim = batches[0][0].dim
        for k, (ctx, obs) in enumerate(batches):
            if set(obs) != players:
                raise DataError(f"batch {k} covers players {sorted(obs)}, expected {sorted(players)}")
            if ctx.dim != dim:
                raise DimensionError(f"batch {k} context has dimension {ctx.dim}, expected {dim}")
            for i, s in obs.items():
                if s.player != i:
                    raise DataError(f"batch {k}: observation set keyed {i} belongs to player {s.player}")
        object.__setattr__(self, "batches", batches)

    @property
    def players(self) -> list:
        return sorted(self.batches[0][1])

    @property
    def contexts(self) -> list:
        return [ctx for ctx, _ in self.batches]

    @property
    def game(self) -> GameDefinition:
        return next(iter(self.batches[0][1].values())).game

    def for_player(self, player: int) -> list:
        """``[(context, ObservationSet)]`` for one player."""
        if player not in self.batches[0][1]:
            raise DataError(f"dataset does not cover player {player}")
        return [(ctx, obs[player]) for ctx, obs in self.batches]

    def num_points(self, player: int) -> int:
        return sum(len(s) for _, s in self.for_player(player))


@dataclass(frozen=True)
class GridSpec:
    lower: float
    upper: float
    num_points: int = DEFAULT_GRID_POINTS

    def __post_init__(self):
        if not (math.isfinite(self.lower) and math.isfinite(self.upper)) or not self.lower < self.upper:
            raise DataError(f"grid needs finite lower < upper, got [{self.lower}, {self.upper}]")
        if self.num_points < 2:
            raise DataError("grid needs at least 2 points")

    @property
    def step(self) -> float:
        return (self.upper - self.lower) / (self.num_points - 1)


def regular_grid(spec: GridSpec) -> np.ndarray:
    return np.linspace(spec.lower, spec.upper, spec.num_points)


# ---------------------------------------------------------------------------
# constructors

def from_trajectory(player: int, trajectory: Sequence[ActionProfile]) -> ObservationSet:
    if len(trajectory) < 2:
        raise EmptyDataError("a trajectory needs at least 2 profiles")
    points = [DataPoint(trajectory[j + 1].own(player), trajectory[j], trajectory[j + 1])
              for j in range(len(trajectory) - 1)]
    return ObservationSet(player, points, Provenance.DYNAMIC)


def from_equilibrium(player: int, equilibrium: ActionProfile,
                     alternatives: Optional[Sequence] = None,
                     grid: Optional[GridSpec] = None) -> ObservationSet:
    """Static data points: the equilibrium action against each alternative.

    Without explicit alternatives, a regular grid over the player's action
    interval is used (scalar actions only).
    """
    if alternatives is None:
        game = equilibrium.game
        if game.action_dim(player) != 1:
            raise DataError("default alternatives need a scalar action space")
        if grid is None:
            lo, hi = game.action_bounds[player][0]
            grid = GridSpec(lo, hi, DEFAULT_GRID_POINTS)
        alternatives = regular_grid(grid)
    if len(alternatives) == 0:
        raise EmptyDataError("no alternative actions supplied")
    chosen = equilibrium.own(player)
    points = []
    for alt in alternatives:
        try:
            points.append(DataPoint(chosen, equilibrium.with_action(player, alt)))
        except BoundsError as exc:
            raise BoundsError(f"alternative {alt!r} is outside player {player}'s action set: {exc}") from exc
    return ObservationSet(player, points, Provenance.STATIC)


def dynamic_dataset(trajectory: Sequence[ActionProfile], players: Optional[Sequence[int]] = None,
                    contexts: Optional[Sequence] = None) -> ContextualDataset:
    """Dataset from one trajectory.

    With ``contexts=None`` the whole trajectory is one batch (empty context).
    Otherwise ``contexts[j]`` is the context in force at step ``j`` and each
    consecutive pair ``(j, j+1)`` becomes its own batch, which is how an
    observed state such as a market share enters the utilities.
    """
    if len(trajectory) < 2:
        raise EmptyDataError("a trajectory needs at least 2 profiles")
    game = trajectory[0].game
    players = list(range(game.num_players)) if players is None else list(players)
    if contexts is None:
        return ContextualDataset(((Context(np.zeros(0)), {i: from_trajectory(i, trajectory) for i in players}),))
    if len(contexts) < len(trajectory) - 1:
        raise DimensionError("need a context for every step but the last")
    batches = []
    for j in range(len(trajectory) - 1):
        pair = trajectory[j:j + 2]
        batches.append((Context(contexts[j]), {i: from_trajectory(i, pair) for i in players}))
    return ContextualDataset(tuple(batches))


def static_dataset(equilibria: Sequence, players: Optional[Sequence[int]] = None,
                   alternatives: Optional[dict] = None,
                   grids: Optional[dict] = None) -> ContextualDataset:
    """Dataset from ``[(context, equilibrium_profile), ...]``.

    ``alternatives`` / ``grids`` map player index to explicit alternatives or
    a ``GridSpec``; missing players fall back to the default grid.
    """
    batches = []
    for ctx, eq in equilibria:
        ps = list(range(eq.game.num_players)) if players is None else list(players)
        obs = {i: from_equilibrium(i, eq, (alternatives or {}).get(i), (grids or {}).get(i)) for i in ps}
        batches.append((ctx if isinstance(ctx, Context) else Context(ctx), obs))
    return ContextualDataset(tuple(batches))


# ---------------------------------------------------------------------------
# files

def _unbounded_game(num_players: int) -> GameDefinition:
    return GameDefinition.scalar(num_players, -math.inf, math.inf)


def load_trajectory_csv(path, game: Optional[GameDefinition] = None, with_times: bool = False):
    """Read a ``t,a1,a2[,state]`` file.

    ``t`` must be consecutive integers; returns ``(trajectory, states)`` where
    ``states`` is ``None`` when the column is absent (plus the time index
    when ``with_times`` is set).
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise EmptyDataError(f"{path}: empty file") from None
        rows = list(reader)
    if not header or header[0] != "t":
        raise DataError(f"{path}: first column must be 't', header is {header}")
    action_cols = [h for h in header[1:] if h != "state"]
    expected = [f"a{i + 1}" for i in range(len(action_cols))]
    if not action_cols or action_cols != expected or header[1:1 + len(expected)] != expected:
        raise DataError(f"{path}: expected columns t,{','.join(expected or ['a1', 'a2'])}[,state], got {header}")
    has_state = "state" in header
    if has_state and header[-1] != "state":
        raise DataError(f"{path}: 'state' must be the last column")
    nplayers = len(action_cols)
    if game is None:
        game = _unbounded_game(nplayers)
    elif game.num_players != nplayers:
        raise DimensionError(f"{path}: file has {nplayers} action columns, game has {game.num_players} players")

    times, profiles, states = [], [], []
    for r, row in enumerate(rows, start=2):  # row numbers as shown in an editor
        if not row or all(not c.strip() for c in row):
            raise DataError(f"{path}: row {r} is empty")
        if len(row) != len(header):
            raise DataError(f"{path}: row {r} has {len(row)} cells, expected {len(header)}")
        try:
            vals = [float(c) for c in row]
        except ValueError:
            raise DataError(f"{path}: row {r} has a non-numeric cell: {row}") from None
        if not all(math.isfinite(v) for v in vals):
            raise DataError(f"{path}: row {r} has NaN or infinite values")
        t = vals[0]
        if t != int(t):
            raise DataError(f"{path}: row {r} has non-integer time {row[0]}")
        t = int(t)
        if times and t <= times[-1]:
            raise DataError(f"{path}: row {r} is out of order (t={t} after t={times[-1]})")
        if times and t != times[-1] + 1:
            raise DataError(f"{path}: row {r} leaves a gap in the time index (t={t} after t={times[-1]})")
        try:
            profiles.append(game.profile(vals[1:1 + nplayers]))
        except DataError as exc:
            raise type(exc)(f"{path}: row {r}: {exc}") from exc
        if has_state:
            s = vals[-1]
            if not 0.0 <= s <= 1.0:
                raise DataError(f"{path}: row {r} has state {s} outside [0, 1]")
            states.append(s)
        times.append(t)
    if not profiles:
        raise EmptyDataError(f"{path}: no data rows")
    out_states = np.array(states) if has_state else None
    if with_times:
        return profiles, out_states, times
    return profiles, out_states


def write_trajectory_csv(path, trajectory: Sequence[ActionProfile], states=None,
                         times: Optional[Sequence[int]] = None, start: int = 0) -> None:
    n = trajectory[0].game.num_players
    if any(trajectory[0].game.action_dim(i) != 1 for i in range(n)):
        raise DataError("trajectory CSV needs scalar actions")
    if times is None:
        times = range(start, start + len(trajectory))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + [f"a{i + 1}" for i in range(n)] + (["state"] if states is not None else []))
        for j, (t, prof) in enumerate(zip(times, trajectory)):
            row = [str(int(t))] + [repr(float(a[0])) for a in prof.actions]
            if states is not None:
                row.append(repr(float(states[j])))
            w.writerow(row)


def load_contexts_json(path) -> list:
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, list):
        raise DataError(f"{path}: contexts must be a JSON array")
    if not data:
        raise EmptyDataError(f"{path}: no contexts")
    out = []
    for k, entry in enumerate(data):
        vals = entry if isinstance(entry, list) else [entry]
        if not vals or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in vals):
            raise DataError(f"{path}: context {k} is not an array of numbers")
        out.append(Context(vals))
    dims = {c.dim for c in out}
    if len(dims) != 1:
        raise DimensionError(f"{path}: contexts have differing dimensions {sorted(dims)}")
    return out


def write_contexts_json(path, contexts: Sequence[Context]) -> None:
    with open(path, "w") as fh:
        json.dump([[float(v) for v in c.values] for c in contexts], fh)
        fh.write("\n")


# ---------------------------------------------------------------------------
# dataset bundles

def dataset_to_dict(data: ContextualDataset) -> dict:
    batches = []
    for ctx, obs in data.batches:
        sets = []
        for i in sorted(obs):
            s = obs[i]
            pts = []
            for p in s.points:
                d = {"chosen": [float(v) for v in p.chosen_action], "baseline": p.baseline_profile.as_lists()}
                if p.next_profile is not None:
                    d["next"] = p.next_profile.as_lists()
                pts.append(d)
            sets.append({"player": i, "provenance": s.provenance.value, "points": pts})
        batches.append({"context": [float(v) for v in ctx.values], "observations": sets})
    return {"kind": "contextual_dataset", "game": data.game.to_dict(), "batches": batches}


def dataset_from_dict(d: dict, game: Optional[GameDefinition] = None) -> ContextualDataset:
    try:
        if d.get("kind") != "contextual_dataset":
            raise DataError("bundle 'kind' must be 'contextual_dataset'")
        game = game or GameDefinition.from_dict(d["game"])
        batches = []
        for b in d["batches"]:
            obs = {}
            for s in b["observations"]:
                pts = [DataPoint(game.check_action(int(s["player"]), p["chosen"]),
                                 game.profile(p["baseline"]),
                                 game.profile(p["next"]) if "next" in p else None)
                       for p in s["points"]]
                obs[int(s["player"])] = ObservationSet(int(s["player"]), pts, Provenance(s["provenance"]))
            batches.append((Context(b["context"]), obs))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, DataError):
            raise
        raise DataError(f"malformed dataset bundle: {exc}") from exc
    return ContextualDataset(tuple(batches))


def save_dataset(data: ContextualDataset, path) -> None:
    with open(path, "w") as fh:
        json.dump(dataset_to_dict(data), fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_dataset(path, game: Optional[GameDefinition] = None) -> ContextualDataset:
    with open(path) as fh:
        return dataset_from_dict(json.load(fh), game)
