"""End-to-end experiments.

``run_bertrand`` estimates normalized demand parameters of a Bertrand
duopoly from equilibrium prices observed under random demand shifters and
emits the marginal-revenue band spanned by the solution polyhedron.
``run_advertising`` estimates each firm's beliefs about advertising
effectiveness from an expenditure trajectory with the L-infinity, L2 and
OLS estimators and compares their irrationality.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

from .datasets import GridSpec, dynamic_dataset, load_trajectory_csv, static_dataset
from .errors import ConfigError, DataError
from .estimation import (ComparisonMode, build_constraints, errors, estimate_l2,
                         estimate_linf, estimate_ols_market_share, irrationality_loss, project,
                         solution_polyhedron)
from .forward import (BertrandDuopoly, MarketShareModel, ShareModelKind, bertrand_models, bertrand_nash,
                      market_share_model, market_share_step, marginal_revenue_theta, simulate_market_share)
from .game import Context, GameDefinition, ParameterSpace

# Reference estimates for the proprietary 1968-1986 cola series (Coke is
# firm 1, Pepsi firm 2). Reported next to our numbers, never asserted.
COLA_REFERENCE = {
    "firm1": {"linf": {"epsilon": 0.018, "k1": 0.066, "k2": 0.057},
              "l2": {"epsilon": 0.021, "k1": 0.078, "k2": 0.052},
              "ols": {"epsilon": 0.059, "k1": 0.011, "k2": 0.007}},
    "firm2": {"linf": {"epsilon": 0.011, "k1": 0.036, "k2": 0.022},
              "l2": {"epsilon": 0.013, "k1": 0.021, "k2": 0.016},
              "ols": {"epsilon": 0.015, "k1": 0.012, "k2": 0.011}},
}

NORMALIZATIONS = {"cross-price": (2, 1), "intercept": (0, 0), "context": (3, 3)}


def _from_dict(cls, d: Optional[dict]):
    d = dict(d or {})
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(d) - names)
    if unknown:
        raise ConfigError(f"unknown {cls.__name__} keys: {unknown}")
    for k, v in d.items():
        if isinstance(v, list):
            d[k] = _tuplify(v)
    try:
        return cls(**d)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid {cls.__name__}: {exc}") from exc


def _tuplify(v):
    return tuple(_tuplify(x) for x in v) if isinstance(v, list) else v


def _dump(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, header: list, columns: list) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in zip(*columns):
            w.writerow([repr(float(v)) if not isinstance(v, (int, np.integer)) else str(int(v)) for v in row])


# ---------------------------------------------------------------------------
# Bertrand demand estimation

@dataclass(frozen=True)
class BertrandConfig:
    theta1_true: tuple = (1.0, -1.2, 0.5, 1.0)
    theta2_true: tuple = (1.0, 0.3, -1.0, 1.0)
    num_contexts: int = 50
    context_mean: float = 5.0
    context_std: float = 1.5
    grid_points: int = 2 ** 7 + 1
    p_max: Optional[float] = None  # default: ceil(2 * largest equilibrium price)
    rng_seed: int = 0
    normalization: str = "cross-price"
    param_bound: float = 10.0  # |theta_j| <= param_bound for the free coefficients
    sweep_points: int = 200
    sweep_context: Optional[float] = None  # default: context_mean

    def __post_init__(self):
        if self.num_contexts < 1:
            raise ConfigError("num_contexts must be >= 1")
        if not self.context_std > 0:
            raise ConfigError("context_std must be positive")
        if self.normalization not in NORMALIZATIONS:
            raise ConfigError(f"normalization must be one of {sorted(NORMALIZATIONS)}")
        if self.grid_points < 2 or self.sweep_points < 2:
            raise ConfigError("grid_points and sweep_points must be >= 2")
        if not self.param_bound > 0:
            raise ConfigError("param_bound must be positive")

    @classmethod
    def from_dict(cls, d: Optional[dict]) -> "BertrandConfig":
        return _from_dict(cls, d)


@dataclass(frozen=True, eq=False)
class BertrandReport:
    config: BertrandConfig
    contexts: np.ndarray
    equilibria: np.ndarray  # (n, 2)
    p_max: float
    results: tuple  # EstimationResult per firm
    normalized_true: tuple  # per firm
    true_violation: tuple  # largest polyhedron row violation of the normalized truth, per firm
    sweep: dict  # firm -> dict of arrays

    def to_dict(self) -> dict:
        firms = []
        for i, r in enumerate(self.results):
            firms.append({
                "firm": i + 1,
                "epsilon_hat": r.epsilon_hat,
                "theta_hat": r.theta_hat.tolist(),
                "normalized_true": list(self.normalized_true[i]),
                "true_in_polyhedron": bool(self.true_violation[i] <= 1e-6),
                "true_max_violation": self.true_violation[i],
                "num_rows": int(r.meta["rows"]),
                "bounded": r.polyhedron.bounded,
                "vertices": [v.tolist() for v in r.polyhedron.vertices],
                "mr_band_contains_truth": bool(self.sweep[i]["contains_truth"]),
            })
        return {"scenario": "bertrand", "config": dataclasses.asdict(self.config),
                "contexts": self.contexts.tolist(), "equilibria": self.equilibria.tolist(),
                "p_max": self.p_max, "firms": firms}

    def write(self, out_dir) -> list:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = [out / "bertrand_report.json"]
        _dump(self.to_dict(), paths[0])
        for i in range(2):
            s = self.sweep[i]
            p = out / f"bertrand_mr_band_firm{i + 1}.csv"
            _write_csv(p, ["price", "true_mr", "lower", "upper"],
                       [s["price"], s["true_mr"], s["lower"], s["upper"]])
            paths.append(p)
        return paths


def bertrand_space(firm: int, normalization: str, bound: float) -> ParameterSpace:
    fixed = NORMALIZATIONS[normalization][firm]
    own = 1 if firm == 0 else 2
    lo, hi = [-bound] * 4, [bound] * 4
    hi[own] = 0.0
    lo[fixed], hi[fixed] = None, None
    return ParameterSpace.box(lo, hi).fix(fixed, 1.0)


def sample_contexts(config: BertrandConfig) -> np.ndarray:
    rng = np.random.default_rng(config.rng_seed)
    return rng.normal(config.context_mean, config.context_std, config.num_contexts)


def run_bertrand(config: BertrandConfig = BertrandConfig()) -> BertrandReport:
    duo = BertrandDuopoly(config.theta1_true, config.theta2_true)
    xis = sample_contexts(config)
    eq = []
    for k, xi in enumerate(xis):
        try:
            eq.append(bertrand_nash(duo, float(xi)))
        except DataError as exc:
            raise ConfigError(f"context {k} (xi={xi}): {exc}") from exc
    eq = np.array(eq)
    p_max = config.p_max if config.p_max is not None else float(math.ceil(2.0 * eq.max()))
    for k, (xi, p) in enumerate(zip(xis, eq)):
        if np.any(p > p_max):
            raise ConfigError(f"context {k} (xi={xi}): equilibrium {tuple(p)} above p_max={p_max}")
    game = GameDefinition.scalar(2, 0.0, p_max, ("firm1", "firm2"))
    grid = GridSpec(0.0, p_max, config.grid_points)
    data = static_dataset([(Context([x]), game.profile(list(p))) for x, p in zip(xis, eq)],
                          grids={0: grid, 1: grid})

    xi_ref = config.sweep_context if config.sweep_context is not None else config.context_mean
    p_ref = bertrand_nash(duo, xi_ref)
    prices = np.linspace(0.0, p_max, config.sweep_points)
    results, truths, viol, sweep = [], [], [], {}
    for firm, model in enumerate(bertrand_models()):
        space = bertrand_space(firm, config.normalization, config.param_bound)
        system = build_constraints(model, data)
        res = estimate_linf(system, space)
        fixed = NORMALIZATIONS[config.normalization][firm]
        truth = duo.theta(firm) / duo.theta(firm)[fixed]
        results.append(res)
        truths.append(tuple(float(v) for v in truth))
        viol.append(res.polyhedron.violation(truth))
        other = p_ref[1 - firm]
        p1, p2 = (prices, other) if firm == 0 else (other, prices)
        true_mr = marginal_revenue_theta(truth, firm, p1, p2, xi_ref)
        verts = np.array(res.polyhedron.vertices)
        mr = np.array([marginal_revenue_theta(v, firm, p1, p2, xi_ref) for v in verts])
        lower, upper = mr.min(axis=0), mr.max(axis=0)
        contains = bool(np.all(true_mr >= lower - 1e-6) and np.all(true_mr <= upper + 1e-6))
        sweep[firm] = {"price": prices, "true_mr": true_mr, "lower": lower, "upper": upper,
                       "context": xi_ref, "opponent_price": other, "contains_truth": contains}
    return BertrandReport(config, xis, eq, p_max, tuple(results), tuple(truths), tuple(viol), sweep)


# ---------------------------------------------------------------------------
# advertising competition

DEFAULT_K_BOUNDS = ((0.01, 1.0), (0.01, 1.0))


@dataclass(frozen=True)
class AdvertisingConfig:
    data_path: Optional[str] = None  # default: bundled synthetic series
    model_firm1: str = "lanchester"
    model_firm2: str = "sorger"
    comparison_mode: str = "joint-profile"
    # per firm: ((lo, hi) for k_1 belief, (lo, hi) for k_2 belief)
    parameter_bounds: tuple = (DEFAULT_K_BOUNDS, DEFAULT_K_BOUNDS)
    initial_share: Optional[float] = None  # needed only without a state column
    share_model: Optional[tuple] = None  # (kind, k1, k2) used to simulate missing shares
    envelope_slack: float = 0.05
    compare_reference: bool = False
    l2_tol: float = 1e-8

    def __post_init__(self):
        for kind in (self.model_firm1, self.model_firm2):
            ShareModelKind(kind)
        ComparisonMode(self.comparison_mode)
        if len(self.parameter_bounds) != 2:
            raise ConfigError("parameter_bounds needs one box per firm")
        for box in self.parameter_bounds:
            for lo, hi in box:
                if lo is not None and lo < 0:
                    raise ConfigError("effectiveness beliefs must be nonnegative")
                if lo is not None and hi is not None and lo > hi:
                    raise ConfigError("empty parameter box")
        if self.envelope_slack < 0:
            raise ConfigError("envelope_slack must be nonnegative")

    @classmethod
    def from_dict(cls, d: Optional[dict]) -> "AdvertisingConfig":
        return _from_dict(cls, d)


@dataclass(frozen=True, eq=False)
class ComparisonReport:
    times: list
    observed_shares: np.ndarray
    firms: tuple  # per firm dict, see run_advertising
    config: AdvertisingConfig
    reference: dict = field(default_factory=lambda: COLA_REFERENCE)

    def dominance(self) -> list:
        return [f["dominance"] for f in self.firms]

    def to_dict(self) -> dict:
        firms = []
        for f in self.firms:
            firms.append({k: v for k, v in f.items() if k not in ("series", "shares", "result")})
        return {"scenario": "advertising", "config": dataclasses.asdict(self.config),
                "times": list(self.times), "observed_shares": self.observed_shares.tolist(),
                "firms": firms, "reference": self.reference,
                "reference_note": "estimates for the proprietary 1968-1986 cola series; shown for comparison only"}

    def side_by_side(self) -> str:
        lines = [f"{'firm':<6}{'estimator':<10}{'eps':>9}{'k1':>9}{'k2':>9}   |{'ref eps':>9}{'ref k1':>9}{'ref k2':>9}"]
        for i, f in enumerate(self.firms):
            ref = self.reference[f"firm{i + 1}"]
            for est in ("linf", "l2", "ols"):
                e = f[est]
                r = ref[est]
                lines.append(f"{i + 1:<6}{est:<10}{e['linf_loss']:>9.4f}{e['theta'][0]:>9.4f}{e['theta'][1]:>9.4f}"
                             f"   |{r['epsilon']:>9.3f}{r['k1']:>9.3f}{r['k2']:>9.3f}")
        return "\n".join(lines)

    def write(self, out_dir) -> list:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = [out / "advertising_report.json"]
        _dump(self.to_dict(), paths[0])
        for i, f in enumerate(self.firms):
            s = f["series"]
            p = out / f"advertising_irrationality_firm{i + 1}.csv"
            _write_csv(p, ["t", "linf", "l2", "ols"], [s["t"], s["linf"], s["l2"], s["ols"]])
            paths.append(p)
            sh = f["shares"]
            p = out / f"advertising_shares_firm{i + 1}.csv"
            _write_csv(p, ["t", "observed", "linf", "l2", "ols", "envelope_lower", "envelope_upper"],
                       [self.times, self.observed_shares, sh["linf"], sh["l2"], sh["ols"],
                        sh["envelope_lower"], sh["envelope_upper"]])
            paths.append(p)
        return paths


def bundled_advertising_csv() -> Path:
    return Path(str(resources.files("invgame") / "data" / "advertising_synthetic.csv"))


def synthetic_advertising_series(seed: int = 1968, start: int = 1968, end: int = 1986,
                                 truth: MarketShareModel = MarketShareModel("lanchester", 0.06, 0.05),
                                 M0: float = 0.55, noise: float = 0.004) -> tuple:
    """Noisy expenditure and share series with the schema of the 1968-1986
    data: multiplicative random-walk expenditures in [0.01, 1] and shares
    following ``truth`` plus Gaussian noise. Returns ``(times, a, shares)``."""
    rng = np.random.default_rng(seed)
    T = end - start + 1
    a = np.empty((T, 2))
    a[0] = (0.30, 0.25)
    for t in range(1, T):
        a[t] = np.clip(a[t - 1] * np.exp(rng.normal(0.04, 0.15, 2)), 0.01, 1.0)
    M = [M0]
    for t in range(1, T):
        nxt, _ = market_share_step(truth, M[-1], float(a[t, 0]), float(a[t, 1]))
        M.append(float(np.clip(nxt + rng.normal(0.0, noise), 0.0, 1.0)))
    return list(range(start, end + 1)), np.round(a, 6), np.round(np.array(M), 6)


def advertising_space(bounds) -> ParameterSpace:
    (lo1, hi1), (lo2, hi2) = bounds
    return ParameterSpace.box([0.0 if lo1 is None else lo1, 0.0 if lo2 is None else lo2], [hi1, hi2])


def run_advertising(config: AdvertisingConfig = AdvertisingConfig()) -> ComparisonReport:
    path = config.data_path or bundled_advertising_csv()
    traj, states, times = load_trajectory_csv(path, with_times=True)
    if len(traj) < 3:
        raise DataError(f"{path}: need at least 3 time steps")
    if traj[0].game.num_players != 2:
        raise DataError(f"{path}: advertising data needs exactly two firms")
    adv = np.array([[p.own(0)[0], p.own(1)[0]] for p in traj])
    if np.any(adv < 0):
        raise DataError(f"{path}: advertising expenditures must be nonnegative")
    if states is None:
        if config.initial_share is None or config.share_model is None:
            raise ConfigError("data has no state column: set initial_share and share_model")
        kind, k1, k2 = config.share_model
        states = simulate_market_share(MarketShareModel(kind, k1, k2), config.initial_share, adv[1:]).shares
    game = GameDefinition.scalar(2, 0.0, math.inf, ("firm1", "firm2"))
    traj = [game.profile(list(a)) for a in adv]
    data = dynamic_dataset(traj, contexts=[[m] for m in states[:-1]])
    mode = ComparisonMode(config.comparison_mode)

    firms = []
    for i, kind in enumerate((config.model_firm1, config.model_firm2)):
        model = market_share_model(kind, i)
        space = advertising_space(config.parameter_bounds[i])
        system = build_constraints(model, data, mode)
        linf = estimate_linf(system, space)
        th_l2, l2_value = estimate_l2(system, space, tol=config.l2_tol, start=linf.theta_hat)
        ols = estimate_ols_market_share(states, adv, kind)
        th_ols = project(space, ols.theta)
        ests = {"linf": linf.theta_hat, "l2": th_l2, "ols": th_ols}
        step_t = [times[k + 1] for k, _ in system.row_meta]
        series = {"t": step_t}
        shares = {}
        for name, th in ests.items():
            series[name] = np.maximum(errors(system, th), 0.0)
            shares[name] = simulate_market_share(MarketShareModel(kind, *th), states[0], adv[1:]).shares
        relaxed = solution_polyhedron(system, space, linf.epsilon_hat * (1.0 + config.envelope_slack))
        env = [simulate_market_share(MarketShareModel(kind, *np.maximum(v, 0.0)), states[0], adv[1:]).shares
               for v in relaxed.vertices] or [shares["linf"]]
        shares["envelope_lower"] = np.min(env, axis=0)
        shares["envelope_upper"] = np.max(env, axis=0)
        loss = {name: irrationality_loss(system, th) for name, th in ests.items()}
        firms.append({
            "firm": i + 1,
            "model": kind,
            "linf": {"theta": linf.theta_hat.tolist(), "linf_loss": linf.epsilon_hat,
                     "vertices": [v.tolist() for v in linf.polyhedron.vertices],
                     "bounded": linf.polyhedron.bounded},
            "l2": {"theta": th_l2.tolist(), "linf_loss": loss["l2"], "l2_loss": l2_value},
            "ols": {"theta": th_ols.tolist(), "linf_loss": loss["ols"], "raw": list(ols.raw),
                    "clipped": ols.clipped or not np.allclose(th_ols, ols.theta),
                    "residual_rms": ols.residual},
            "dominance": {"linf_le_l2": bool(linf.epsilon_hat <= loss["l2"] + 1e-9),
                          "linf_le_ols": bool(linf.epsilon_hat <= loss["ols"] + 1e-9)},
            "series": series,
            "shares": shares,
            "result": linf,
        })
    return ComparisonReport(list(times), np.asarray(states, dtype=float), tuple(firms), config)
