"""Command-line front end.

    invgame [--tol T] [--seed S] [--out-dir DIR] estimate DATA --game GAME [--loss linf|l2] [--mode M]
    invgame ... simulate --game GAME [--dynamics better-response|market-share] --steps N
    invgame ... certify DATA --theta THETA [--game GAME] [--player I]
    invgame ... experiment --scenario bertrand|advertising [--config CONFIG]

Exit codes: 0 success, 2 data or configuration error, 3 internal LP failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from .datasets import (GridSpec, dataset_from_dict, dynamic_dataset, load_contexts_json, load_trajectory_csv,
                       write_trajectory_csv)
from .errors import ConvergenceError, DataError, LPFailure
from .estimation import (ComparisonMode, build_constraints, certify, constraint_system_from_rows,
                         estimate_l2, estimate_linf, infer_mode, irrationality_loss)
from .forward import MarketShareModel, better_response_dynamics, share_better_response_trajectory
from .game import Context, Scenario
from .scenarios import AdvertisingConfig, BertrandConfig, run_advertising, run_bertrand

EXIT_OK, EXIT_DATA, EXIT_LP = 0, 2, 3
SCENARIOS = ("advertising", "bertrand")


class UsageError(DataError):
    pass


def _read_json(path) -> object:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"{path}: no such file")
    text = p.read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def _require(path) -> Path:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"{path}: no such file")
    return p


def _write_json(obj, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _load_data(path, scenario: Optional[Scenario], contexts_path=None):
    """Dataset from a bundle JSON or a ``t,a1..aN[,state]`` trajectory CSV.

    For a CSV, per-step contexts come from ``contexts_path`` if given, else
    from the state column if present."""
    p = _require(path)
    if p.suffix.lower() == ".csv":
        game = scenario.game if scenario is not None else None
        traj, states = load_trajectory_csv(p, game)
        ctx = None
        if contexts_path is not None:
            ctx = [c.values for c in load_contexts_json(_require(contexts_path))]
        elif states is not None:
            ctx = [[s] for s in states[:-1]]
        return dynamic_dataset(traj, contexts=ctx)
    d = _read_json(p)
    if not isinstance(d, dict):
        raise UsageError(f"{path}: top level must be an object")
    return dataset_from_dict(d, scenario.game if scenario is not None else None)


def _mode(args, data) -> ComparisonMode:
    return infer_mode(data) if args.mode == "auto" else ComparisonMode(args.mode)


def _players(args, scenario: Scenario) -> list:
    if args.player is not None:
        return [args.player]
    return [m.player for m in scenario.models]


def cmd_estimate(args) -> dict:
    scenario = Scenario.from_dict(_read_json(args.game))
    data = _load_data(args.data, scenario, args.contexts)
    mode = _mode(args, data)
    out = {"loss": args.loss, "mode": mode.value, "players": []}
    for i in _players(args, scenario):
        system = build_constraints(scenario.model_for(i), data, mode)
        space = scenario.space_for(i)
        if args.loss == "linf":
            res = estimate_linf(system, space, tol=args.tol)
            entry = res.to_dict()
            entry["theta"] = entry["theta_hat"]
        else:
            try:
                th, l2 = estimate_l2(system, space, tol=args.tol)
            except ConvergenceError as exc:
                raise LPFailure(str(exc)) from exc
            entry = {"player": i, "estimator": "l2", "theta": th.tolist(), "l2_loss": l2,
                     "linf_loss": irrationality_loss(system, th), "meta": {"rows": len(system)}}
        out["players"].append(entry)
    _write_json(out, Path(args.out_dir) / "estimate.json")
    for e in out["players"]:
        loss = e["epsilon_hat"] if args.loss == "linf" else e["l2_loss"]
        print(f"player {e['player']}: {args.loss} loss {loss:.6g}, theta {e['theta']}")
    return out


def cmd_simulate(args) -> dict:
    if args.steps < 1:
        raise UsageError("--steps must be >= 1")
    raw = _read_json(args.game)
    scenario = Scenario.from_dict(raw)
    sim = raw.get("simulation")
    if not isinstance(sim, dict):
        raise UsageError(f"{args.game}: needs a 'simulation' section")
    try:
        g = sim["grid"]
        grid = GridSpec(float(g["lower"]), float(g["upper"]), int(g.get("num_points", 129)))
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"{args.game}: bad simulation grid: {exc}") from None
    rng = np.random.default_rng(args.seed)
    values = np.linspace(grid.lower, grid.upper, grid.num_points)
    n = scenario.game.num_players
    initial = sim.get("initial")
    if initial is None:
        initial = [float(v) for v in rng.choice(values, size=n)]
    rule = sim.get("rule", "first")
    path = Path(args.out_dir) / "trajectory.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    if args.dynamics == "better-response":
        thetas = sim.get("thetas")
        if thetas is None or len(thetas) != len(scenario.models):
            raise UsageError(f"{args.game}: simulation.thetas needs one vector per model")
        ctx = Context(sim.get("context", [0.0] * scenario.context_dim))
        traj = better_response_dynamics(list(scenario.models), thetas, scenario.game.profile(initial),
                                        args.steps, ctx, grid, rule)
        write_trajectory_csv(path, traj)
    else:
        try:
            t = sim["truth"]
            truth = MarketShareModel(t["kind"], float(t["k1"]), float(t["k2"]))
            beliefs, kinds, M0 = sim["beliefs"], sim["kinds"], float(sim["initial_share"])
        except (KeyError, TypeError, ValueError) as exc:
            raise UsageError(f"{args.game}: bad market-share simulation section: {exc}") from None
        traj, shares = share_better_response_trajectory(beliefs, kinds, truth, M0, initial,
                                                        args.steps, grid, rule)
        write_trajectory_csv(path, traj, shares)
    print(f"wrote {args.steps + 1} profiles to {path}")
    return {"path": str(path)}


def _theta_for(obj, player: int) -> np.ndarray:
    if isinstance(obj, list):
        return np.asarray(obj, dtype=float)
    if isinstance(obj, dict):
        if "theta" in obj:
            return np.asarray(obj["theta"], dtype=float)
        for e in obj.get("players", []):
            if e.get("player") == player:
                return np.asarray(e.get("theta", e.get("theta_hat")), dtype=float)
        raise UsageError(f"theta file has no entry for player {player}")
    raise UsageError("theta must be a list, {'theta': [...]}, or an estimate output")


def cmd_certify(args) -> dict:
    raw = _read_json(args.data) if Path(args.data).suffix.lower() != ".csv" else None
    theta_obj = _read_json(args.theta)
    if isinstance(raw, dict) and raw.get("kind") == "constraint_rows":
        player = int(raw.get("player", 0)) if args.player is None else args.player
        systems = [constraint_system_from_rows(raw.get("rows"), player, raw.get("row_meta"))]
        data = None
    else:
        if args.game is None:
            raise UsageError("certifying a dataset needs --game")
        scenario = Scenario.from_dict(_read_json(args.game))
        data = _load_data(args.data, scenario, args.contexts)
        mode = _mode(args, data)
        systems = [build_constraints(scenario.model_for(i), data, mode) for i in _players(args, scenario)]
    out = {"players": []}
    for s in systems:
        th = _theta_for(theta_obj, s.player)
        if th.shape != (s.param_dim,):
            raise UsageError(f"theta has {th.size} entries, player {s.player} needs {s.param_dim}")
        cert = certify(s, th, data)
        out["players"].append(dict(cert.to_dict(), player=s.player))
        print(f"player {s.player}: epsilon_bar {cert.epsilon_bar:.6g} at (context, point) "
              f"{cert.worst}; certifies {cert.interpretation}")
    _write_json(out, Path(args.out_dir) / "certificate.json")
    return out


def cmd_experiment(args) -> dict:
    if args.scenario not in SCENARIOS:
        raise UsageError(f"unknown scenario {args.scenario!r}; valid: {', '.join(SCENARIOS)}")
    cfg = _read_json(args.config) if args.config else {}
    if not isinstance(cfg, dict):
        raise UsageError(f"{args.config}: config must be an object")
    if args.scenario == "bertrand":
        if args.seed is not None:
            cfg.setdefault("rng_seed", args.seed)
        report = run_bertrand(BertrandConfig.from_dict(cfg))
        for f in report.to_dict()["firms"]:
            print(f"firm {f['firm']}: epsilon_hat {f['epsilon_hat']:.3g}, {len(f['vertices'])} vertices, "
                  f"truth inside: {f['true_in_polyhedron']}, MR band holds: {f['mr_band_contains_truth']}")
    else:
        if "data_path" in cfg and cfg["data_path"] is not None and args.config:
            cfg["data_path"] = str(_require(Path(args.config).parent / cfg["data_path"]))
        report = run_advertising(AdvertisingConfig.from_dict(cfg))
        print(report.side_by_side())
    paths = report.write(args.out_dir)
    return {"files": [str(p) for p in paths]}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="invgame", description="Estimate linear utilities from observed play.")
    ap.add_argument("--tol", type=float, default=1e-9, help="LP feasibility / L2 stationarity tolerance")
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--out-dir", default=".", help="directory for every output file")
    sub = ap.add_subparsers(dest="command", required=True)
    modes = ["auto"] + [m.value for m in ComparisonMode]

    p = sub.add_parser("estimate", help="estimate utility parameters")
    p.add_argument("data", help="dataset bundle JSON or trajectory CSV")
    p.add_argument("--game", required=True, help="scenario JSON with game, models and parameter spaces")
    p.add_argument("--contexts", help="per-step contexts JSON for a trajectory CSV")
    p.add_argument("--loss", choices=("linf", "l2"), default="linf")
    p.add_argument("--mode", choices=modes, default="auto",
                   help="auto: fixed-opponent for round-robin trajectories, else joint-profile")
    p.add_argument("--player", type=int)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("simulate", help="generate a trajectory")
    p.add_argument("--game", required=True)
    p.add_argument("--dynamics", choices=("better-response", "market-share"), default="better-response")
    p.add_argument("--steps", type=int, required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("certify", help="irrationality certificate of given parameters")
    p.add_argument("data", help="dataset bundle, constraint-rows JSON or trajectory CSV")
    p.add_argument("--theta", required=True)
    p.add_argument("--game")
    p.add_argument("--contexts")
    p.add_argument("--mode", choices=modes, default="auto",
                   help="auto: fixed-opponent for round-robin trajectories, else joint-profile")
    p.add_argument("--player", type=int)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("experiment", help="run a bundled experiment")
    p.add_argument("--scenario", required=True, help=f"one of: {', '.join(SCENARIOS)}")
    p.add_argument("--config")
    p.set_defaults(func=cmd_experiment)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        args.func(args)
    except LPFailure as exc:
        print(f"error: LP failure: {exc}", file=sys.stderr)
        return EXIT_LP
    except (DataError, OSError, csv.Error) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
