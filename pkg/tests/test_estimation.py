import numpy as np
import pytest
from hypothesis import given, strategies as st

from invgame.datasets import dynamic_dataset, static_dataset
from invgame.errors import DimensionError, EmptyDataError, RankDeficientError
from invgame.estimation import (build_constraints, certify, constraint_system_from_rows, errors, estimate_l2,
                                estimate_linf, estimate_ols_market_share, irrationality_loss, l2_loss,
                                project, solution_polyhedron)
from invgame.forward import bertrand_models, market_share_model
from invgame.game import Context, GameDefinition, ParameterSpace

UNIT = ParameterSpace.box([0.0], [1.0])
# first coordinate bounded away from 0 so that theta = 0 is not a trivial minimizer
SQUARE = ParameterSpace.box([0.5, -1.0], [1.5, 1.0])


def rows_system(rows):
    return constraint_system_from_rows(rows)


def grid_min(R, n=801):
    gx, gy = np.linspace(0.5, 1.5, n), np.linspace(-1.0, 1.0, n)
    X, Y = np.meshgrid(gx, gy)
    P = np.stack([X.ravel(), Y.ravel()], axis=1)
    return np.min(np.maximum((P @ R.T).max(axis=1), 0.0)), gy[1] - gy[0]


def test_loss_examples():
    s = rows_system([[1.0], [-2.0]])
    assert irrationality_loss(s, [1.0]) == 1.0
    assert irrationality_loss(rows_system(np.zeros((4, 3))), [5, -1, 2]) == 0.0
    assert irrationality_loss(rows_system(np.random.default_rng(0).normal(size=(9, 3))), np.zeros(3)) == 0.0


def test_single_row_unit_interval():
    s = rows_system([[1.0]])
    res = estimate_linf(s, UNIT)
    assert res.epsilon_hat == 0.0 and res.theta_hat[0] == 0.0
    assert [list(v) for v in res.polyhedron.vertices] == [[0.0]]
    th, loss = estimate_l2(s, UNIT)
    assert th[0] == 0.0 and loss == 0.0


def test_inactive_rows_give_whole_space():
    s = rows_system([[-1.0, -1.0], [-0.5, -2.0]])
    box = ParameterSpace.box([0, 0], [1, 1])
    res = estimate_linf(s, box)
    assert res.epsilon_hat == 0.0
    vs = sorted(tuple(np.round(v, 12)) for v in res.polyhedron.vertices)
    assert vs == [(0, 0), (0, 1), (1, 0), (1, 1)]


def test_no_data_rows_square_vertices():
    # a row of zeros constrains nothing; the polyhedron is the square itself
    res = estimate_linf(rows_system([[0.0, 0.0]]), ParameterSpace.box([0, 0], [1, 1]))
    assert len(res.polyhedron.vertices) == 4


def test_triangle_polyhedron_unconstrained_space():
    # at epsilon = 1: -x <= 1, -y <= 1, x + y <= 1 cut a triangle in R^2
    s = rows_system([[-1.0, 0.0], [0.0, -1.0], [1.0, 1.0]])
    P = solution_polyhedron(s, ParameterSpace.unconstrained(2), 1.0)
    vs = sorted(tuple(np.round(v, 12)) for v in P.vertices)
    assert vs == [(-1, -1), (-1, 2), (2, -1)]


def test_duplicates_kept_and_single_context():
    game = GameDefinition.scalar(2, 0.0, 5.0)
    traj = [game.profile(p) for p in ([1, 1], [2, 1], [2, 1])]
    traj = traj + [traj[1], traj[2]]
    assert len(dynamic_dataset(traj).batches) == 1
    s = build_constraints(market_share_model("lanchester", 0), dynamic_dataset(traj, contexts=[[0.3]] * 4))
    assert len(s) == 4
    assert np.array_equal(s.rows[1], s.rows[3])


@given(st.integers(0, 100_000), st.integers(1, 50))
def test_minimax_matches_grid(seed, m):
    rng = np.random.default_rng(seed)
    R = rng.normal(size=(m, 2))
    res = estimate_linf(rows_system(R), SQUARE)
    g, step = grid_min(R)
    tol = step * np.linalg.norm(R, axis=1).max()
    assert res.epsilon_hat <= g + 1e-9
    assert g - res.epsilon_hat <= tol


@given(st.integers(0, 100_000), st.integers(2, 40))
def test_polyhedron_soundness(seed, m):
    rng = np.random.default_rng(seed)
    R = rng.normal(size=(m, 2)) + np.array([0.3, -0.2])
    s = rows_system(R)
    res = estimate_linf(s, SQUARE)
    for v in res.polyhedron.vertices:
        assert irrationality_loss(s, v) <= res.epsilon_hat + 1e-8
    samples = np.column_stack([rng.uniform(0.5, 1.5, 500), rng.uniform(-1, 1, 500)])
    for th in samples:
        viol = np.max(R @ th - res.epsilon_hat)
        if viol > 1e-6:
            assert irrationality_loss(s, th) > res.epsilon_hat
        elif viol <= 0:
            assert res.polyhedron.contains(th)


@given(st.integers(0, 100_000), st.integers(1, 40))
def test_certify_consistency(seed, m):
    rng = np.random.default_rng(seed)
    R = rng.normal(size=(m, 2))
    s = rows_system(R)
    res = estimate_linf(s, SQUARE)
    cert = certify(s, res.theta_hat)
    assert abs(cert.epsilon_bar - res.epsilon_hat) <= 1e-9
    for v in res.polyhedron.vertices:
        assert certify(s, v).epsilon_bar <= res.epsilon_hat + 1e-9


def test_certify_perturbation_increases():
    R = np.array([[1.0, 0.0], [-1.0, 0.5], [0.2, -1.0]])
    s = rows_system(R)
    res = estimate_linf(s, SQUARE)
    k = int(np.argmax(R @ res.theta_hat))
    n = R[k] / np.linalg.norm(R[k])
    for delta in (1e-3, 1e-2, 0.1):
        assert certify(s, res.theta_hat + delta * n).epsilon_bar > res.epsilon_hat


def test_certify_worst_and_text():
    s = rows_system([[0.3], [0.1]])
    c = certify(s, [1.0])
    assert c.epsilon_bar == 0.3 and c.worst == (0, 0)
    assert "better-response" in c.interpretation


@given(st.integers(0, 100_000), st.integers(2, 40), st.floats(0.1, 10))
def test_scaling(seed, m, alpha):
    rng = np.random.default_rng(seed)
    R = rng.normal(size=(m, 3))
    s = rows_system(R)
    th = rng.normal(size=3)
    assert irrationality_loss(s, alpha * th) == pytest.approx(alpha * irrationality_loss(s, th), rel=1e-12)


def test_zero_loss_set_is_a_cone():
    # rationalizable rows over a cone: theta in the solution set implies alpha * theta is too
    R = np.array([[-1.0, 0.2], [-0.5, -0.1], [-2.0, 0.3]])
    s = rows_system(R)
    cone = ParameterSpace.box([0, 0], [None, None])
    box = ParameterSpace.box([0, 0], [1, 1])
    res = estimate_linf(s, box)
    assert res.epsilon_hat == 0.0
    for v in res.polyhedron.vertices:
        for alpha in (0.5, 3.0, 100.0):
            assert irrationality_loss(s, alpha * v) == 0.0
            assert cone.contains(alpha * v)


@given(st.integers(0, 100_000), st.integers(2, 40))
def test_dominance_over_l2(seed, m):
    rng = np.random.default_rng(seed)
    R = rng.normal(size=(m, 2))
    s = rows_system(R)
    res = estimate_linf(s, SQUARE)
    th2, l2 = estimate_l2(s, SQUARE)
    assert SQUARE.contains(th2)
    assert res.epsilon_hat <= irrationality_loss(s, th2) + 1e-9
    assert l2 == pytest.approx(l2_loss(s, th2))


def test_l2_matches_highres_grid(rng):
    R = rng.normal(size=(20, 2))
    s = rows_system(R)
    th, l2 = estimate_l2(s, SQUARE)
    X, Y = np.meshgrid(np.linspace(0.5, 1.5, 401), np.linspace(-1, 1, 401))
    P = np.stack([X.ravel(), Y.ravel()], axis=1)
    grid = np.sqrt(np.mean(np.maximum(P @ R.T, 0) ** 2, axis=1)).min()
    assert l2 <= grid + 1e-9


def test_l2_zero_on_rationalizable():
    R = np.array([[-1.0, 0.0], [-1.0, 0.5]])
    s = rows_system(R)
    th, l2 = estimate_l2(s, ParameterSpace.box([0, 0], [1, 1]), start=[0.5, 0.5])
    assert l2 == 0.0
    res = estimate_linf(s, ParameterSpace.box([0, 0], [1, 1]))
    assert res.polyhedron.contains(th)


def test_project_general_space():
    sp = ParameterSpace(2, (([1.0, 1.0], 1.0), ([-1.0, 0.0], 0.0), ([0.0, -1.0], 0.0)))
    p = project(sp, [2.0, 2.0])
    assert p == pytest.approx([0.5, 0.5], abs=1e-9)
    assert project(SQUARE, [3.0, -0.5]).tolist() == [1.5, -0.5]


def test_dimension_errors():
    with pytest.raises(DimensionError):
        errors(rows_system([[1.0, 2.0]]), [1.0])
    with pytest.raises(EmptyDataError):
        rows_system(np.zeros((0, 2)))


def test_bertrand_static_rows_count():
    game = GameDefinition.scalar(2, 0.0, 10.0)
    eqs = [(Context([x]), game.profile([3.0, 3.0])) for x in np.linspace(4, 6, 50)]
    s = build_constraints(bertrand_models()[0], static_dataset(eqs))
    assert len(s) == 50 * 129


def test_static_single_alternative_gives_whole_space():
    # the only alternative is the equilibrium price itself: one inactive row
    game = GameDefinition.scalar(2, 0.0, 10.0)
    eq = game.profile([3.0, 3.5])
    data = static_dataset([(Context([5.0]), eq)], alternatives={0: [3.0], 1: [3.5]})
    space = ParameterSpace.box([-2] * 4, [2] * 4)
    res = estimate_linf(build_constraints(bertrand_models()[0], data), space)
    assert res.epsilon_hat == 0.0
    assert len(res.polyhedron.vertices) == 16


# OLS on share increments

def _lanchester_path(k1, k2, a, M0=0.4):
    M = [M0]
    for t in range(1, len(a)):
        M.append(M[-1] + k1 * np.sqrt(a[t, 0]) * (1 - M[-1]) - k2 * np.sqrt(a[t, 1]) * M[-1])
    return np.array(M)


def test_ols_exact_recovery(rng):
    a = rng.uniform(0.1, 1.0, size=(19, 2))
    M = _lanchester_path(0.1, 0.2, a)
    ols = estimate_ols_market_share(M, a, "lanchester")
    assert ols.k1 == pytest.approx(0.1, abs=1e-9) and ols.k2 == pytest.approx(0.2, abs=1e-9)
    assert ols.residual <= 1e-12 and not ols.clipped


def test_ols_rank_deficient():
    a = np.zeros((10, 2))
    with pytest.raises(RankDeficientError):
        estimate_ols_market_share(np.full(10, 0.5), a)


def test_ols_clips_negative(rng):
    a = rng.uniform(0.1, 1.0, size=(19, 2))
    M = _lanchester_path(0.05, 0.0, a)
    M = M - 0.002 * np.arange(19)  # drift that needs a negative gain coefficient
    ols = estimate_ols_market_share(np.clip(M, 0, 1), a, "lanchester")
    assert ols.k1 >= 0 and ols.k2 >= 0
    assert ols.clipped == any(v < 0 for v in ols.raw)
