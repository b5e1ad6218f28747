import math

import numpy as np
import pytest
from scipy import optimize

from smoo.core import GeneratorError, OracleError
from smoo.oracle import (GaussianClass, kkt_quadratic, load_labeled_data,
                         make_known_optimum_quadratic, make_np_classification,
                         make_np_from_data, make_portfolio, make_stochastic_lp,
                         min_norm_in_hull, quadratic_problem)
from smoo.validation import (check_convexity, check_gradients, check_lipschitz,
                             check_unbiased, validate_oracle)


def refine_grid_min(f, feasible, center, half_width, levels=40, n=21, shrink=0.6):
    """Multi-level grid search of a convex function over a convex set.

    ``f`` and ``feasible`` act on ``(N, d)`` arrays of points.
    """
    d = center.size
    best = center
    width = half_width
    for _ in range(levels):
        axes = [np.linspace(c - width, c + width, n) for c in best]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, d)
        pts = pts[feasible(pts)]
        best = pts[np.argmin(f(pts))]
        width *= shrink
    return best


# ---------------------------------------------------------------------------
# quadratic fixture


def test_quadratic_inactive_constraints():
    c = np.array([0.2, -0.1, 0.3])
    prob = quadratic_problem(c, [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], [0.5, 0.5])
    np.testing.assert_array_equal(prob.known_optimum.w, c)
    np.testing.assert_array_equal(prob.known_optimum.multipliers, [0.0, 0.0])
    assert prob.known_optimum.value == 0.0


def test_quadratic_single_active_constraint():
    c = np.array([0.5, 0.2])
    a = np.array([1.0, 1.0])
    prob = quadratic_problem(c, [a], [0.3])
    expected = c - (a @ c - 0.3) / (a @ a) * a
    np.testing.assert_allclose(prob.known_optimum.w, expected, atol=1e-12)


def test_quadratic_kkt_against_grid():
    rng = np.random.default_rng(3)
    c = np.array([0.4, 0.3, -0.2])
    A = rng.standard_normal((2, 3))
    gamma = A @ c - np.array([0.2, 0.15])
    w, lam = kkt_quadratic(c, A, gamma)
    g = refine_grid_min(lambda Z: np.sum((Z - c) ** 2, axis=1),
                        lambda Z: np.all(Z @ A.T <= gamma, axis=1), np.zeros(3), 1.0)
    f = lambda z: float(np.sum((z - c) ** 2))  # noqa: E731
    # grid search stalls along the active edge, so it serves as a value oracle
    assert f(w) <= f(g) + 1e-12
    assert f(w) == pytest.approx(f(g), abs=1e-4)
    ref = optimize.minimize(f, np.zeros(3), method="SLSQP",
                            constraints=[{"type": "ineq", "fun": lambda z: gamma - A @ z}],
                            options={"ftol": 1e-14}).x
    np.testing.assert_allclose(w, ref, atol=1e-4)
    # stationarity and complementary slackness
    np.testing.assert_allclose(2 * (w - c) + lam @ A, 0, atol=1e-10)
    np.testing.assert_allclose(lam * (A @ w - gamma), 0, atol=1e-10)


def test_known_optimum_fixture_invariants():
    for seed in range(5):
        prob = make_known_optimum_quadratic(5, 2, seed)
        w = prob.known_optimum.w
        assert np.all(prob.expected(w)[1:] <= prob.gamma + 1e-9)
        assert np.linalg.norm(w) <= prob.R
        assert prob.tau > 1e-6
        assert prob.max_violation(prob.feasible_point) < 0
        assert np.any(prob.known_optimum.multipliers > 0)


def test_known_optimum_fixture_rejects_small_sizes():
    with pytest.raises(GeneratorError):
        make_known_optimum_quadratic(1, 1, 0)
    with pytest.raises(GeneratorError):
        make_known_optimum_quadratic(3, 0, 0)


def test_min_norm_in_hull():
    assert min_norm_in_hull([[1.0, 0.0], [0.0, 1.0]]) == pytest.approx(math.sqrt(0.5))
    assert min_norm_in_hull([[2.0, 0.0], [3.0, 1.0]]) == pytest.approx(2.0)
    assert min_norm_in_hull([[1.0, 0.0], [-1.0, 0.0]]) == pytest.approx(0.0, abs=1e-12)


def test_same_seed_same_draws(quad):
    a, b = quad.oracle([4, 0]), quad.oracle([4, 0])
    w = np.full(5, 0.1)
    for _ in range(600):
        sa, sb = a.draw(), b.draw()
        np.testing.assert_array_equal(sa.values(w), sb.values(w))
        np.testing.assert_array_equal(sa.grads(w), sb.grads(w))
    c = quad.oracle([4, 1])
    assert not np.array_equal(quad.oracle([4, 0]).draw().values(w), c.draw().values(w))


def test_zero_noise_draw_equals_expectation():
    prob = make_known_optimum_quadratic(3, 2, 0, objective_noise=0.0, constraint_noise=0.0)
    oracle = prob.oracle(0)
    rng = np.random.default_rng(0)
    for w in prob.sample_domain(rng, 5):
        s = oracle.draw()
        np.testing.assert_allclose(s.values(w), prob.expected(w), atol=1e-14)
        np.testing.assert_allclose(s.grads(w), prob.expected_grad(w), atol=1e-14)


def test_linear_constraints_of_draw(quad):
    s = quad.oracle(0).draw()
    A, b = s.linear_constraints()
    w = np.array([0.1, -0.2, 0.3, 0.0, 0.05])
    np.testing.assert_allclose(A @ w - b, s.values(w)[1:], atol=1e-14)


# ---------------------------------------------------------------------------
# portfolio


def test_portfolio_symmetric_means():
    prob = make_portfolio([0.1, 0.1], np.diag([0.04, 0.09]), 0.1)
    rng = np.random.default_rng(0)
    for w in prob.sample_domain(rng, 20):
        assert prob.expected(w)[1] == pytest.approx(0.0, abs=1e-15)


def test_portfolio_infeasible():
    with pytest.raises(GeneratorError):
        make_portfolio([0.2, 0.0], np.eye(2), 0.3)


def test_portfolio_rejects_bad_covariance():
    with pytest.raises(GeneratorError):
        make_portfolio([0.1, 0.2], [[1.0, 2.0], [2.0, 1.0]], 0.1)


def test_portfolio_optimum_against_simplex_grid():
    rng = np.random.default_rng(11)
    mu = rng.uniform(0.05, 0.2, 3)
    B = rng.standard_normal((3, 3)) * 0.2
    Sigma = B @ B.T + 0.01 * np.eye(3)
    gamma = float(np.mean(mu) + 0.3 * (mu.max() - np.mean(mu)))
    prob = make_portfolio(mu, Sigma, gamma)
    Q = Sigma + np.outer(mu, mu)
    h = 1e-3
    i, j = np.meshgrid(np.arange(1001), np.arange(1001), indexing="ij")
    keep = i + j <= 1000
    W = np.stack([i[keep] * h, j[keep] * h, 1.0 - (i[keep] + j[keep]) * h], -1)
    W = W[W @ mu >= gamma]
    vals = np.einsum("ni,ij,nj->n", W, Q, W)
    k = np.argmin(vals)
    ko = prob.known_optimum
    assert ko.value <= vals[k] + 1e-12
    assert ko.value == pytest.approx(vals[k], abs=1e-3 * np.abs(Q).max() * 4)
    np.testing.assert_allclose(ko.w, W[k], atol=1e-2)
    assert ko.w @ mu >= gamma - 1e-10 and abs(ko.w.sum() - 1) < 1e-12


def test_portfolio_return_mean_monte_carlo():
    prob = make_portfolio([0.1, 0.2, 0.15], np.diag([0.04, 0.09, 0.02]), 0.15)
    w = np.array([0.2, 0.5, 0.3])
    vals = prob.oracle(5).sample_values(w, 100_000)
    r = 0.15 - vals[:, 1]
    assert abs(r.mean() - w @ prob.params["mu"]) <= 4 * r.std(ddof=1) / math.sqrt(len(r))


# ---------------------------------------------------------------------------
# Neyman-Pearson


def np_problem(gap=1.0, cov=0.5, gamma=0.3, R=2.0):
    pos = GaussianClass([gap, gap], cov)
    neg = GaussianClass([-gap, -gap], cov)
    return make_np_classification(pos, neg, gamma, R=R)


def test_np_hinge_at_origin():
    prob = np_problem()
    np.testing.assert_array_equal(prob.oracle(0).sample_values(np.zeros(2), 1000), 1.0)
    np.testing.assert_allclose(prob.expected(np.zeros(2)), [1.0, 1.0])


def test_np_separated_classes_zero_loss():
    prob = np_problem(gap=4.0, cov=0.01, gamma=0.2, R=1.0)
    w = np.array([1.0, 1.0]) / math.sqrt(2)
    vals = prob.expected(w)
    assert vals[0] == pytest.approx(0.0, abs=1e-12)
    assert vals[1] < prob.gamma[0]


def test_np_closed_form_against_monte_carlo():
    pos = GaussianClass([0.5, 0.2], [[1.0, 0.3], [0.3, 0.5]])
    neg = GaussianClass([-0.3, 0.1], [[0.6, -0.1], [-0.1, 0.8]])
    prob = make_np_classification(pos, neg, 0.5, R=2.0)
    oracle = prob.oracle(9)
    for w in ([0.4, -0.7], [1.2, 0.3]):
        vals = oracle.sample_values(np.array(w), 1_000_000)
        se = vals.std(axis=0, ddof=1) / 1000.0
        assert np.all(np.abs(vals.mean(axis=0) - prob.expected(w)) <= 3 * se)


def test_np_data_file(tmp_path):
    path = tmp_path / "data.csv"
    path.write_text("# label,x1,x2\n1,0.5,1.0\n1,1.5,0.0\n-1,-1.0,-0.5\n-1,0.0,-2.0\n")
    labels, X = load_labeled_data(path)
    np.testing.assert_array_equal(labels, [1, 1, -1, -1])
    prob = make_np_from_data(path, 0.4, R=1.0)
    w = np.array([0.3, 0.2])
    ref0 = np.mean(np.maximum(0, 1 - X[:2] @ w))
    ref1 = np.mean(np.maximum(0, 1 + X[2:] @ w))
    np.testing.assert_allclose(prob.expected(w), [ref0, ref1])
    vals = prob.oracle(0).sample_values(w, 50_000)
    assert np.allclose(vals.mean(axis=0), [ref0, ref1], atol=0.02)


def test_np_data_bad_labels(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("2 0.1\n1 0.2\n")
    with pytest.raises(GeneratorError):
        load_labeled_data(path)


def test_np_constraints_not_linear():
    s = np_problem().oracle(0).draw()
    with pytest.raises(OracleError):
        s.linear_constraints()


# ---------------------------------------------------------------------------
# stochastic LP


def test_lp_hand_solve():
    prob = make_stochastic_lp([-1.0, -1.0], [[1.0, 1.0]], [1.0], 0.0, R=1.0)
    assert prob.known_optimum.value == pytest.approx(-1.0, abs=1e-12)
    w = prob.known_optimum.w
    assert w.sum() == pytest.approx(1.0) and np.linalg.norm(w) <= 1.0


def test_lp_ball_active_optimum(lp):
    # the objective pulls along the free axis, so the optimum sits on the sphere
    prob = make_stochastic_lp([-1.0, 0.0], [[0.0, 1.0]], [0.5], 0.0, R=1.0)
    np.testing.assert_allclose(prob.known_optimum.w, [1.0, 0.0], atol=1e-12)
    assert lp.known_optimum.value == pytest.approx(-1.5)
    np.testing.assert_allclose(lp.known_optimum.w, [0.5, 0.5, 0.5], atol=1e-12)


def test_lp_zero_noise_is_deterministic():
    prob = make_stochastic_lp([1.0, 2.0], [[1.0, 0.0]], [0.5], 0.0, R=1.0)
    s = prob.oracle(1).draw()
    w = np.array([0.2, -0.4])
    np.testing.assert_allclose(s.values(w), prob.expected(w), atol=1e-15)


def test_lp_infeasible():
    with pytest.raises(GeneratorError):
        make_stochastic_lp([1.0, 0.0], [[1.0, 0.0]], [-2.0], 0.1, R=1.0)


def test_lp_unbiased_constraint_values(lp):
    res = check_unbiased(lp)
    assert res.passed, res.detail


# ---------------------------------------------------------------------------
# validation suite on every generator


@pytest.mark.parametrize("make", [
    lambda: make_known_optimum_quadratic(5, 2, 0),
    lambda: make_stochastic_lp([-1, -1, -1], np.eye(3) * 0.5 + 0.5, [1, 1, 1], 0.5, R=2.0),
    lambda: make_portfolio([0.1, 0.2, 0.15], np.diag([0.04, 0.09, 0.02]), 0.15),
    lambda: np_problem(),
], ids=["quadratic", "lp", "portfolio", "np"])
def test_generator_passes_validation(make):
    for res in validate_oracle(make()):
        assert res.passed, res.line()


def test_validation_detects_biased_oracle(quad):
    from dataclasses import replace
    biased = replace(quad, expected=lambda w: quad.expected(w) + 0.05)
    assert not check_unbiased(biased).passed


def test_validation_detects_wrong_lipschitz(quad):
    from dataclasses import replace
    assert not check_lipschitz(replace(quad, lipschitz=0.1)).passed
    assert check_convexity(quad).passed
    assert check_gradients(quad).passed
