import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from invgame.datasets import GridSpec, dynamic_dataset
from invgame.errors import BoundsError, DataError
from invgame.estimation import ComparisonMode, build_constraints, certify
from invgame.forward import (BertrandDuopoly, MarketShareModel, bertrand_models, bertrand_nash,
                             best_response_grid, better_response_dynamics, grid_nash, marginal_revenue,
                             market_share_step, simulate_market_share)
from invgame.game import Context, GameDefinition, LinearUtilityModel, action

T1, T2 = (1.0, -1.2, 0.5, 1.0), (1.0, 0.3, -1.0, 1.0)
DUO = BertrandDuopoly(T1, T2)
MODELS = bertrand_models()


def test_nash_values():
    # Cramer's rule on the first-order conditions, written out by hand
    a11, a12, b1 = 2 * T1[1], T1[2], -(T1[0] + 5 * T1[3])
    a21, a22, b2 = T2[1], 2 * T2[2], -(T2[0] + 5 * T2[3])
    det = a11 * a22 - a12 * a21
    p1, p2 = bertrand_nash(DUO, 5.0)
    assert p1 == pytest.approx((b1 * a22 - a12 * b2) / det, abs=1e-12)
    assert p2 == pytest.approx((a11 * b2 - a21 * b1) / det, abs=1e-12)
    assert (p1, p2) == pytest.approx((3.22581, 3.48387), abs=1e-5)


def test_symmetric_zero():
    d = BertrandDuopoly((0, -1, 0.5, 1), (0, 0.5, -1, 1))
    assert bertrand_nash(d, 0.0) == (0.0, 0.0)


@given(st.floats(0, 12))
def test_nash_zeroes_marginal_revenue(xi):
    p1, p2 = bertrand_nash(DUO, xi)
    assert abs(marginal_revenue(DUO, 0, p1, p2, xi)) <= 1e-10
    assert abs(marginal_revenue(DUO, 1, p1, p2, xi)) <= 1e-10


def test_nash_vs_dense_grid_best_response():
    p1, p2 = bertrand_nash(DUO, 5.0)
    game = GameDefinition.scalar(2, 0.0, 10.0)
    grid = GridSpec(0.0, 10.0, 10_000)
    prof = game.profile([p1, p2])
    for firm, p in enumerate((p1, p2)):
        br, _ = best_response_grid(MODELS[firm], DUO.theta(firm), prof, Context([5.0]), grid)
        assert abs(br - p) <= grid.step


def test_nash_outside_bounds():
    d = BertrandDuopoly(T1, T2, price_bounds=(0.0, 1.0))
    with pytest.raises(BoundsError):
        bertrand_nash(d, 5.0)


def test_sign_assumptions():
    with pytest.raises(DataError):
        BertrandDuopoly((1, 1.2, 0.5, 1), T2)


def test_marginal_revenue_example():
    mr = marginal_revenue(DUO, 0, 0.0, 3.48387, 5.0)
    assert mr == pytest.approx(1 + 0.5 * 3.48387 + 5, abs=1e-12)
    assert mr == pytest.approx(7.74194, abs=1e-5)
    # linear in own price with slope 2 * own coefficient
    d = marginal_revenue(DUO, 1, 2.0, 4.0, 5.0) - marginal_revenue(DUO, 1, 2.0, 3.0, 5.0)
    assert d == pytest.approx(2 * T2[2])


def test_best_response_examples():
    game = GameDefinition.scalar(1, 0.0, 4.0)
    m = LinearUtilityModel(0, (action(0), action(0) * action(0)))
    grid = GridSpec(0.0, 4.0, 401)
    br, _ = best_response_grid(m, [3.0, -1.0], game.profile([0.0]), grid=grid)  # vertex at 1.5
    assert abs(br - 1.5) <= grid.step
    assert best_response_grid(m, [0.0, 0.0], game.profile([2.0]), grid=grid)[0] == 0.0
    two = GridSpec(0.0, 4.0, 2)
    assert best_response_grid(m, [3.0, -1.0], game.profile([0.0]), grid=two)[0] == 0.0  # U(0)=0 > U(4)=-4


def test_dynamics_constant_at_grid_ne():
    game = GameDefinition.scalar(2, 0.0, 8.0)
    grid = GridSpec(0.0, 8.0, 65)
    ne = grid_nash(MODELS, [T1, T2], game, Context([5.0]), grid)
    traj = better_response_dynamics(MODELS, [T1, T2], ne, 10, Context([5.0]), grid)
    assert all(p == ne for p in traj)


def test_dynamics_converge_to_analytic_ne():
    game = GameDefinition.scalar(2, 0.0, 8.0)
    grid = GridSpec(0.0, 8.0, 129)
    traj = better_response_dynamics(MODELS, [T1, T2], game.profile([0.1, 0.1]), 400, Context([5.0]), grid)
    p = np.array([traj[-1].own(0)[0], traj[-1].own(1)[0]])
    assert np.all(np.abs(p - bertrand_nash(DUO, 5.0)) <= 2 * grid.step)


@pytest.mark.parametrize("rule", ["first", "best"])
def test_dynamics_certify_zero(rule):
    game = GameDefinition.scalar(2, 0.0, 8.0)
    grid = GridSpec(0.0, 8.0, 33)
    traj = better_response_dynamics(MODELS, [T1, T2], game.profile([7.0, 0.5]), 30, Context([5.0]), grid, rule)
    data = dynamic_dataset(traj, contexts=[[5.0]] * 30)
    for firm, th in enumerate((T1, T2)):
        s = build_constraints(MODELS[firm], data, ComparisonMode.FIXED_OPPONENT)
        assert certify(s, th).epsilon_bar == 0.0


def test_share_step_example():
    m = MarketShareModel("lanchester", 0.1, 0.1)
    assert market_share_step(m, 0.5, 4.0, 1.0) == (pytest.approx(0.55, abs=1e-15), False)


@pytest.mark.parametrize("kind", ["lanchester", "sorger"])
def test_share_zero_advertising(kind):
    m = MarketShareModel(kind, 0.3, 0.2)
    assert market_share_step(m, 0.37, 0.0, 0.0) == (0.37, False)
    sim = simulate_market_share(m, 0.42, np.zeros((10, 2)))
    assert np.all(sim.shares == 0.42)


def test_sorger_absorbs_at_zero():
    m = MarketShareModel("sorger", 0.1, 0.3)
    assert market_share_step(m, 0.0, 0.0, 9.0)[0] == 0.0


def test_lanchester_monotone_without_decay(rng):
    sim = simulate_market_share(MarketShareModel("lanchester", 0.2, 0.0), 0.1, rng.uniform(0, 1, size=(30, 2)))
    assert np.all(np.diff(sim.shares) >= 0)


@given(st.sampled_from(["lanchester", "sorger"]), st.floats(0.01, 0.99), st.floats(0.01, 1), st.floats(0.01, 1),
       st.floats(0, 4), st.floats(0, 4), st.floats(0.01, 1))
def test_share_monotonicity(kind, M, k1, k2, a1, a2, bump):
    m = MarketShareModel(kind, k1 * 0.1, k2 * 0.1)
    base = m.k1 * math.sqrt(a1) - m.k2 * math.sqrt(a2)  # keep inside the simplex
    if abs(base) > 0.5:
        return
    s0, _ = market_share_step(m, M, a1, a2)
    s1, c1 = market_share_step(m, M, a1 + bump, a2)
    s2, c2 = market_share_step(m, M, a1, a2 + bump)
    if not c1:
        assert s1 > s0
    if not c2:
        assert s2 < s0


@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 4), st.floats(0, 4))
def test_models_coincide_at_boundaries(k1, k2, a1, a2):
    lan, sor = MarketShareModel("lanchester", k1, k2), MarketShareModel("sorger", k1, k2)
    for M in (0.0, 1.0):
        assert market_share_step(lan, M, a1, a2) == market_share_step(sor, M, a1, a2)


def test_clamping_flagged():
    sim = simulate_market_share(MarketShareModel("lanchester", 0.9, 0.0), 0.9, [[4.0, 0.0]])
    assert sim.shares[-1] == 1.0 and sim.clamp_steps == (0,)


def test_share_input_errors():
    m = MarketShareModel("lanchester", 0.1, 0.1)
    with pytest.raises(DataError):
        market_share_step(m, 1.5, 1, 1)
    with pytest.raises(DataError):
        market_share_step(m, 0.5, -1, 1)
    with pytest.raises(DataError):
        MarketShareModel("lanchester", -0.1, 0.1)
