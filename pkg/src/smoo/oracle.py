"""Stochastic first-order oracles and synthetic problem generators.

A :class:`ProblemSpec` describes ``m + 1`` expected losses ``fbar_0..fbar_m``
(objective first), the thresholds ``gamma`` and the constants the solvers
need (ball radius, Lipschitz bound, gradient lower bound ``tau``). Its
:meth:`ProblemSpec.oracle` method returns a seeded :class:`StochasticOracle`
whose :meth:`~StochasticOracle.draw` yields i.i.d. sampled functions.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import stats

from .core import GeneratorError, OracleError
from .projection import deepest_point, project_ball, project_simplex

# number of Gaussian standard deviations above sqrt(d) used for norm bounds
_NORM_SIGMAS = 6.0


def _gauss_norm_bound(d: int, sigma: float) -> float:
    """High-probability bound on ``||sigma * N(0, I_d)||`` (fails w.p. < 1e-7)."""
    return sigma * (math.sqrt(d) + _NORM_SIGMAS)


@dataclass(frozen=True)
class KnownOptimum:
    w: np.ndarray
    value: float
    multipliers: Optional[np.ndarray] = None


class SampledFunctions:
    """One i.i.d. draw ``f_t^0..f_t^m`` of the loss functions."""

    __slots__ = ("_oracle", "_params", "draw_id")

    def __init__(self, oracle, params, draw_id):
        self._oracle = oracle
        self._params = params
        self.draw_id = draw_id

    def values(self, w) -> np.ndarray:
        return self._oracle._values(self._params, w)

    def grads(self, w) -> np.ndarray:
        return self._oracle._grads(self._params, w)

    def value_at(self, w, i: int) -> float:
        return float(self.values(w)[i])

    def grad_at(self, w, i: int) -> np.ndarray:
        return self.grads(w)[i]

    def kink_distance(self, w) -> float:
        """Distance from ``w`` to the nearest non-differentiable point (inf if smooth)."""
        return self._oracle._kink_distance(self._params, w)

    def linear_constraints(self):
        """``(A, b)`` with ``f_t^i(w) = A[i-1] @ w - b[i-1]`` for linear constraints."""
        return self._oracle._linear(self._params)


class StochasticOracle:
    """Seeded source of i.i.d. sampled functions.

    Subclasses implement ``_draw_block(n)`` (tuple of arrays with leading
    axis ``n``), ``_values``, ``_grads`` and ``_values_batch``. Draws are
    generated in fixed-size blocks so sequences depend only on the seed.
    """

    block_size = 512
    linear_constraints = False

    def __init__(self, problem: "ProblemSpec", seed):
        self.problem = problem
        self.seed = seed
        self.rng = np.random.default_rng(seed)
        self._block = None
        self._pos = 0
        self._n = 0
        self.draws = 0

    def draw(self) -> SampledFunctions:
        if self._pos >= self._n:
            self._block = self._draw_block(self.block_size)
            self._n = self.block_size
            self._pos = 0
        params = [a[self._pos] for a in self._block]
        self._pos += 1
        self.draws += 1
        return SampledFunctions(self, params, self.draws)

    def sample_values(self, w, n: int) -> np.ndarray:
        """``(n, m+1)`` array of sampled values at a fixed ``w`` (fresh draws)."""
        w = np.asarray(w, dtype=float)
        out = []
        left = int(n)
        while left > 0:
            k = min(left, 100_000)
            out.append(self._values_batch(self._draw_block(k), w))
            left -= k
        return np.concatenate(out, axis=0)

    def _kink_distance(self, params, w):
        return math.inf

    def _linear(self, params):
        raise OracleError(f"{type(self).__name__} constraints are not linear in w")

    def _draw_block(self, n):
        raise NotImplementedError

    def _values(self, params, w):
        raise NotImplementedError

    def _grads(self, params, w):
        raise NotImplementedError

    def _values_batch(self, params, w):
        raise NotImplementedError


@dataclass(frozen=True)
class ProblemSpec:
    """A stochastic constrained problem ``min fbar_0 s.t. fbar_i <= gamma_i``."""

    name: str
    d: int
    m: int
    R: float
    gamma: np.ndarray
    lipschitz: float
    oracle_factory: Callable
    tau: Optional[float] = None
    expected: Optional[Callable] = None
    expected_grad: Optional[Callable] = None
    known_optimum: Optional[KnownOptimum] = None
    domain: str = "ball"
    linear_expected: Optional[tuple] = None
    feasible_point: Optional[np.ndarray] = None
    params: dict = field(default_factory=dict)

    def oracle(self, seed) -> StochasticOracle:
        return self.oracle_factory(self, seed)

    @property
    def has_expectations(self) -> bool:
        return self.expected is not None

    def project(self, w) -> np.ndarray:
        if self.domain == "simplex":
            return project_simplex(w)
        return project_ball(w, self.R)

    @property
    def projector(self):
        return self.project

    def sample_domain(self, rng, n: int) -> np.ndarray:
        """``n`` random points of the primal domain."""
        if self.domain == "simplex":
            return rng.dirichlet(np.ones(self.d), size=n)
        return random_ball_points(rng, n, self.d, self.R)

    def max_violation(self, w, gamma=None) -> float:
        gamma = self.gamma if gamma is None else np.asarray(gamma, dtype=float)
        if self.m == 0:
            return -math.inf
        return float(np.max(self.expected(w)[1:] - gamma))

    def feasibility_probe(self, gamma=None, n_start: int = 8, iters: int = 3000,
                          seed: int = 0):
        """Approximately minimise ``max_i (fbar_i(w) - gamma_i)`` over the domain.

        Returns ``(w, value)``; ``value < 0`` certifies strict feasibility.
        """
        if self.expected is None or self.expected_grad is None:
            raise GeneratorError("feasibility probe needs analytic expectations")
        gamma = self.gamma if gamma is None else np.asarray(gamma, dtype=float)
        if self.m == 0:
            return np.zeros(self.d), -math.inf
        rng = np.random.default_rng(seed)
        starts = list(self.sample_domain(rng, n_start))
        if self.feasible_point is not None:
            starts.insert(0, np.asarray(self.feasible_point, dtype=float))
        best_w, best = None, math.inf
        scale = 2.0 * self.R / max(self.lipschitz, 1e-12)
        for w in starts:
            w = self.project(w)
            for k in range(1, iters + 1):
                g = self.expected(w)[1:] - gamma
                j = int(np.argmax(g))
                if g[j] < best:
                    best, best_w = float(g[j]), w
                w = self.project(w - scale / math.sqrt(k) * self.expected_grad(w)[1 + j])
        return best_w, best


def random_ball_points(rng, n: int, d: int, R: float) -> np.ndarray:
    """Uniform samples from the ball of radius ``R``."""
    z = rng.standard_normal((n, d))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    r = R * rng.random(n) ** (1.0 / d)
    return z * r[:, None]


def min_norm_in_hull(V) -> float:
    """Exact ``min_{alpha in simplex} ||sum_i alpha_i V[i]||`` by support enumeration."""
    V = np.atleast_2d(np.asarray(V, dtype=float))
    m = V.shape[0]
    if m > 14:
        raise GeneratorError("exact hull enumeration limited to m <= 14")
    best = math.inf
    for k in range(1, m + 1):
        for S in itertools.combinations(range(m), k):
            VS = V[list(S)]
            K = np.zeros((k + 1, k + 1))
            K[:k, :k] = 2.0 * VS @ VS.T
            K[:k, k] = 1.0
            K[k, :k] = 1.0
            rhs = np.zeros(k + 1)
            rhs[k] = 1.0
            sol = np.linalg.lstsq(K, rhs, rcond=None)[0]
            alpha = sol[:k]
            if np.any(alpha < -1e-12) or abs(alpha.sum() - 1) > 1e-9:
                continue
            best = min(best, float(np.linalg.norm(alpha @ VS)))
    return best


# ---------------------------------------------------------------------------
# known-optimum quadratic fixture


def kkt_quadratic(center, A, gamma):
    """Minimise ``||w - center||^2`` subject to ``A w <= gamma`` by active-set enumeration.

    Returns ``(w, multipliers)`` for the objective ``||w - c||^2``.
    """
    c = np.asarray(center, dtype=float)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    gamma = np.asarray(gamma, dtype=float)
    m = A.shape[0]
    if m == 0 or np.all(A @ c <= gamma):
        return c.copy(), np.zeros(m)
    best = None
    for k in range(1, m + 1):
        for S in itertools.combinations(range(m), k):
            S = list(S)
            AS = A[S]
            M = AS @ AS.T
            if np.linalg.matrix_rank(M) < k:
                continue
            lamS = 2.0 * np.linalg.solve(M, AS @ c - gamma[S])
            if np.any(lamS < -1e-12):
                continue
            w = c - 0.5 * AS.T @ lamS
            if np.any(A @ w - gamma > 1e-10):
                continue
            lam = np.zeros(m)
            lam[S] = np.maximum(lamS, 0.0)
            val = float(np.sum((w - c) ** 2))
            if best is None or val < best[0] - 1e-14:
                best = (val, w, lam)
    if best is None:
        raise GeneratorError("no KKT point found: constraints infeasible or degenerate")
    return best[1], best[2]


class QuadraticOracle(StochasticOracle):
    """``f^0 = ||w - c||^2 + <xi, w>``, ``f^i = <a_i + zeta_i, w>``."""

    linear_constraints = True

    def __init__(self, problem, seed):
        super().__init__(problem, seed)
        p = problem.params
        self.c = np.asarray(p["center"], dtype=float)
        self.A = np.asarray(p["A"], dtype=float).reshape(problem.m, problem.d)
        self.s0 = float(p["objective_noise"])
        self.s1 = float(p["constraint_noise"])

    def _draw_block(self, n):
        d, m = self.problem.d, self.problem.m
        xi = self.s0 * self.rng.standard_normal((n, d))
        zeta = self.s1 * self.rng.standard_normal((n, m, d))
        return xi, zeta

    def _values(self, params, w):
        xi, zeta = params
        diff = w - self.c
        out = np.empty(self.problem.m + 1)
        out[0] = diff @ diff + xi @ w
        out[1:] = (self.A + zeta) @ w
        return out

    def _grads(self, params, w):
        xi, zeta = params
        out = np.empty((self.problem.m + 1, self.problem.d))
        out[0] = 2.0 * (w - self.c) + xi
        out[1:] = self.A + zeta
        return out

    def _values_batch(self, params, w):
        xi, zeta = params
        diff = w - self.c
        obj = diff @ diff + xi @ w
        cons = (self.A @ w)[None, :] + zeta @ w
        return np.column_stack([obj, cons])

    def _linear(self, params):
        _, zeta = params
        return self.A + zeta, np.zeros(self.problem.m)


def quadratic_problem(center, A, gamma, R: float = 1.0, objective_noise: float = 0.1,
                      constraint_noise: float = 0.1, name: str = "quadratic") -> ProblemSpec:
    """Quadratic objective ``||w - center||^2`` with linear expected constraints.

    The constrained optimum and its multipliers are computed by KKT
    enumeration; ``tau`` is the exact minimum norm of the convex hull of the
    constraint normals.
    """
    c = np.asarray(center, dtype=float)
    d = c.size
    A = np.asarray(A, dtype=float).reshape(-1, d)
    m = A.shape[0]
    gamma = np.asarray(gamma, dtype=float).reshape(m)
    w_star, lam_star = kkt_quadratic(c, A, gamma)
    if np.linalg.norm(w_star) > R:
        raise GeneratorError("constrained optimum lies outside the ball")
    lip_obj = 2.0 * (R + np.linalg.norm(c)) + _gauss_norm_bound(d, objective_noise)
    lip_con = (float(np.max(np.linalg.norm(A, axis=1))) + _gauss_norm_bound(d, constraint_noise)
               if m else 0.0)
    tau = min_norm_in_hull(A) if m else None

    def expected(w):
        w = np.asarray(w, dtype=float)
        diff = w - c
        return np.concatenate([[diff @ diff], A @ w])

    def expected_grad(w):
        w = np.asarray(w, dtype=float)
        return np.vstack([2.0 * (w - c), A])

    feasible = None
    if m:
        feasible, margin = deepest_point(A, gamma, R)
        if margin >= 0:
            raise GeneratorError("constraints are not strictly feasible inside the ball")
    return ProblemSpec(
        name=name, d=d, m=m, R=float(R), gamma=gamma, lipschitz=float(max(lip_obj, lip_con)),
        oracle_factory=QuadraticOracle, tau=tau, expected=expected, expected_grad=expected_grad,
        known_optimum=KnownOptimum(w_star, float(np.sum((w_star - c) ** 2)), lam_star),
        linear_expected=(A.copy(), np.zeros(m)), feasible_point=feasible,
        params={"center": c, "A": A, "objective_noise": objective_noise,
                "constraint_noise": constraint_noise})


def make_known_optimum_quadratic(d: int, m: int, seed: int, R: float = 1.0,
                                 constraint_scale: float = 3.0, spread: float = 0.6,
                                 objective_noise: float = 0.1, constraint_noise: float = 0.1,
                                 margins=(0.8, 1.6), max_attempts: int = 100) -> ProblemSpec:
    """Random quadratic instance whose unconstrained minimiser is infeasible.

    Constraint normals share a common direction (so ``tau`` stays large) and
    the unconstrained minimiser violates every constraint by a random
    margin. Degenerate draws are regenerated with the next seed.
    """
    if d < 2 or m < 1:
        raise GeneratorError("need d >= 2 and m >= 1")
    for attempt in range(max_attempts):
        rng = np.random.default_rng([seed, attempt])
        e = rng.standard_normal(d)
        e /= np.linalg.norm(e)
        Z = rng.standard_normal((m, d)) / math.sqrt(d)
        A = e[None, :] + spread * Z
        A = constraint_scale * A / np.linalg.norm(A, axis=1, keepdims=True)
        zc = e + 0.5 * rng.standard_normal(d) / math.sqrt(d)
        c = 0.5 * R * zc / np.linalg.norm(zc)
        margins = rng.uniform(margins[0], margins[1], size=m)
        gamma = A @ c - margins
        try:
            prob = quadratic_problem(c, A, gamma, R=R, objective_noise=objective_noise,
                                     constraint_noise=constraint_noise,
                                     name="quadratic")
        except GeneratorError:
            continue
        if prob.tau is None or prob.tau < 1e-6:
            continue
        return prob
    raise GeneratorError(f"could not build a non-degenerate instance in {max_attempts} attempts")


# ---------------------------------------------------------------------------
# portfolio selection


class PortfolioOracle(StochasticOracle):
    """``f^0 = <r, w>^2`` and ``f^1 = gamma_return - <r, w>`` with ``r ~ N(mu, Sigma)``."""

    linear_constraints = True

    def __init__(self, problem, seed):
        super().__init__(problem, seed)
        p = problem.params
        self.mu = np.asarray(p["mu"], dtype=float)
        self.chol = np.asarray(p["chol"], dtype=float)
        self.target = float(p["gamma_return"])

    def _draw_block(self, n):
        z = self.rng.standard_normal((n, self.mu.size))
        return (self.mu + z @ self.chol.T,)

    def _values(self, params, w):
        (r,) = params
        rw = r @ w
        return np.array([rw * rw, self.target - rw])

    def _grads(self, params, w):
        (r,) = params
        return np.vstack([2.0 * (r @ w) * r, -r])

    def _values_batch(self, params, w):
        (r,) = params
        rw = r @ w
        return np.column_stack([rw * rw, self.target - rw])

    def _linear(self, params):
        (r,) = params
        return -r[None, :], np.array([-self.target])


def _simplex_qp(Q, mu, target):
    """Exact ``min w'Qw`` over the simplex with ``mu.w >= target`` (KKT enumeration, small d)."""
    d = mu.size
    best = None
    for k in range(1, d + 1):
        for S in itertools.combinations(range(d), k):
            S = list(S)
            QS, muS = Q[np.ix_(S, S)], mu[S]
            for active in (False, True):
                # unknowns: w_S, nu (sum), [kappa (return)]
                n = k + 1 + int(active)
                K = np.zeros((n, n))
                rhs = np.zeros(n)
                K[:k, :k] = 2.0 * QS
                K[:k, k] = 1.0
                K[k, :k] = 1.0
                rhs[k] = 1.0
                if active:
                    K[:k, k + 1] = -muS
                    K[k + 1, :k] = muS
                    rhs[k + 1] = target
                sol = np.linalg.lstsq(K, rhs, rcond=None)[0]
                if np.linalg.norm(K @ sol - rhs) > 1e-9:
                    continue
                w = np.zeros(d)
                w[S] = sol[:k]
                if np.any(w < -1e-12) or mu @ w < target - 1e-10:
                    continue
                if active and sol[k + 1] < -1e-10:
                    continue
                w = np.maximum(w, 0.0)
                w /= w.sum()
                val = float(w @ Q @ w)
                if best is None or val < best[0]:
                    best = (val, w)
    return best


def make_portfolio(mu, Sigma, gamma_return: float, R: float = 1.0) -> ProblemSpec:
    """Mean-second-moment portfolio selection on the simplex.

    The return requirement ``E<r, w> >= gamma_return`` is encoded as the
    constraint ``fbar_1(w) = gamma_return - <mu, w> <= 0``.
    """
    mu = np.asarray(mu, dtype=float)
    Sigma = np.asarray(Sigma, dtype=float)
    d = mu.size
    if Sigma.shape != (d, d) or not np.allclose(Sigma, Sigma.T):
        raise GeneratorError("Sigma must be a symmetric d x d matrix")
    evals, evecs = np.linalg.eigh(Sigma)
    if evals.min() < -1e-10:
        raise GeneratorError("Sigma is not positive semidefinite")
    if R < 1.0:
        raise GeneratorError("the simplex needs R >= 1")
    if mu.max() < gamma_return:
        raise GeneratorError(
            f"return target {gamma_return} exceeds the best achievable mean {mu.max()}")
    chol = evecs * np.sqrt(np.clip(evals, 0.0, None))
    Q = Sigma + np.outer(mu, mu)
    rmax = np.linalg.norm(mu) + _gauss_norm_bound(d, math.sqrt(max(evals.max(), 0.0)))
    lip = max(2.0 * R * rmax ** 2, rmax)

    def expected(w):
        w = np.asarray(w, dtype=float)
        return np.array([w @ Q @ w, gamma_return - mu @ w])

    def expected_grad(w):
        w = np.asarray(w, dtype=float)
        return np.vstack([2.0 * Q @ w, -mu])

    known = None
    if d <= 10:
        sol = _simplex_qp(Q, mu, gamma_return)
        if sol is not None:
            known = KnownOptimum(sol[1], sol[0])
    feasible = np.zeros(d)
    feasible[int(np.argmax(mu))] = 1.0
    tau = float(np.linalg.norm(mu)) or None
    return ProblemSpec(
        name="portfolio", d=d, m=1, R=float(R), gamma=np.zeros(1), lipschitz=float(lip),
        oracle_factory=PortfolioOracle, tau=tau, expected=expected, expected_grad=expected_grad,
        known_optimum=known, domain="simplex",
        linear_expected=(-mu[None, :], np.array([-gamma_return])), feasible_point=feasible,
        params={"mu": mu, "Sigma": Sigma, "chol": chol, "gamma_return": float(gamma_return)})


# ---------------------------------------------------------------------------
# Neyman-Pearson classification


@dataclass(frozen=True)
class GaussianClass:
    """Class-conditional feature distribution ``N(mean, cov)``."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.asarray(self.cov, dtype=float)
        if cov.ndim == 0:
            cov = float(cov) * np.eye(mean.size)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def d(self):
        return self.mean.size

    def sampler(self):
        evals, evecs = np.linalg.eigh(self.cov)
        L = evecs * np.sqrt(np.clip(evals, 0.0, None))
        return lambda rng, n: self.mean + rng.standard_normal((n, self.d)) @ L.T

    def norm_bound(self):
        sig = math.sqrt(max(np.linalg.eigvalsh(self.cov).max(), 0.0))
        return float(np.linalg.norm(self.mean) + _gauss_norm_bound(self.d, sig))

    def hinge_risk(self, w, sign):
        """``E max(0, 1 + sign * <w, x>)`` and its gradient, in closed form."""
        mz = 1.0 + sign * (w @ self.mean)
        Sw = self.cov @ w
        sz = math.sqrt(max(w @ Sw, 0.0))
        if sz < 1e-300:
            return max(mz, 0.0), (sign * self.mean if mz > 0 else np.zeros_like(w))
        u = mz / sz
        val = mz * stats.norm.cdf(u) + sz * stats.norm.pdf(u)
        grad = sign * self.mean * stats.norm.cdf(u) + stats.norm.pdf(u) * Sw / sz
        return float(val), grad


@dataclass(frozen=True)
class EmpiricalClass:
    """Uniform resampling from a fixed set of feature rows."""

    X: np.ndarray

    @property
    def d(self):
        return self.X.shape[1]

    def sampler(self):
        return lambda rng, n: self.X[rng.integers(0, self.X.shape[0], size=n)]

    def norm_bound(self):
        return float(np.max(np.linalg.norm(self.X, axis=1)))

    def hinge_risk(self, w, sign):
        z = 1.0 + sign * (self.X @ w)
        on = z > 0
        return float(np.mean(np.where(on, z, 0.0))), sign * (on @ self.X) / self.X.shape[0]


class NPOracle(StochasticOracle):
    """One positive and one negative draw per call; hinge losses on each."""

    def __init__(self, problem, seed):
        super().__init__(problem, seed)
        self._pos_sampler = problem.params["pos"].sampler()
        self._neg_sampler = problem.params["neg"].sampler()

    def _draw_block(self, n):
        return self._pos_sampler(self.rng, n), self._neg_sampler(self.rng, n)

    def _values(self, params, w):
        xp, xn = params
        return np.array([max(0.0, 1.0 - xp @ w), max(0.0, 1.0 + xn @ w)])

    def _grads(self, params, w):
        xp, xn = params
        g0 = -xp if 1.0 - xp @ w > 0 else np.zeros_like(xp)
        g1 = xn if 1.0 + xn @ w > 0 else np.zeros_like(xn)
        return np.vstack([g0, g1])

    def _values_batch(self, params, w):
        xp, xn = params
        return np.column_stack([np.maximum(0.0, 1.0 - xp @ w), np.maximum(0.0, 1.0 + xn @ w)])

    def _kink_distance(self, params, w):
        xp, xn = params
        dp = abs(1.0 - xp @ w) / max(np.linalg.norm(xp), 1e-300)
        dn = abs(1.0 + xn @ w) / max(np.linalg.norm(xn), 1e-300)
        return float(min(dp, dn))


def make_np_classification(pos_source, neg_source, gamma: float, R: float = 1.0,
                           tau: Optional[float] = None, name: str = "np") -> ProblemSpec:
    """Neyman-Pearson classification with hinge surrogates.

    ``fbar_0`` is the positive-class hinge risk (missed detections) and
    ``fbar_1`` the negative-class hinge risk, constrained below ``gamma``.
    Expectations are exact: closed-form Gaussian integrals or empirical means.
    """
    if pos_source.d != neg_source.d:
        raise GeneratorError("class sources disagree on dimension")
    d = pos_source.d
    lip = max(pos_source.norm_bound(), neg_source.norm_bound())

    def expected(w):
        w = np.asarray(w, dtype=float)
        return np.array([pos_source.hinge_risk(w, -1.0)[0], neg_source.hinge_risk(w, +1.0)[0]])

    def expected_grad(w):
        w = np.asarray(w, dtype=float)
        return np.vstack([pos_source.hinge_risk(w, -1.0)[1], neg_source.hinge_risk(w, +1.0)[1]])

    return ProblemSpec(
        name=name, d=d, m=1, R=float(R), gamma=np.array([float(gamma)]), lipschitz=float(lip),
        oracle_factory=NPOracle, tau=tau, expected=expected, expected_grad=expected_grad,
        params={"pos": pos_source, "neg": neg_source})


def load_labeled_data(path, delimiter=None):
    """Read ``label, x_1..x_d`` rows (label in {-1, +1}) from a delimited text file."""
    with open(path) as fh:
        lines = [ln for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise GeneratorError(f"{path}: no data rows")
    if delimiter is None:
        delimiter = "," if "," in lines[0] else None
    data = np.loadtxt(lines, delimiter=delimiter, ndmin=2)
    labels, X = data[:, 0], data[:, 1:]
    if not np.all(np.isin(labels, (-1.0, 1.0))):
        raise GeneratorError(f"{path}: labels must be -1 or +1")
    if X.shape[1] < 1:
        raise GeneratorError(f"{path}: no feature columns")
    return labels, X


def make_np_from_data(path, gamma: float, R: float = 1.0, tau: Optional[float] = None):
    labels, X = load_labeled_data(path)
    pos, neg = X[labels > 0], X[labels < 0]
    if len(pos) == 0 or len(neg) == 0:
        raise GeneratorError(f"{path}: need samples of both classes")
    return make_np_classification(EmpiricalClass(pos), EmpiricalClass(neg), gamma, R=R,
                                  tau=tau, name="np_data")


# ---------------------------------------------------------------------------
# stochastic linear program


class LPOracle(StochasticOracle):
    """``f^0 = <c, w>``, ``f^i = <a_i, w> - b_i`` with Gaussian coefficients."""

    linear_constraints = True

    def __init__(self, problem, seed):
        super().__init__(problem, seed)
        p = problem.params
        self.c = np.asarray(p["c_mean"], dtype=float)
        self.A = np.asarray(p["A_mean"], dtype=float).reshape(problem.m, problem.d)
        self.b = np.asarray(p["b_mean"], dtype=float).reshape(problem.m)
        self.s = float(p["noise_scale"])

    def _draw_block(self, n):
        d, m, s = self.problem.d, self.problem.m, self.s
        c = self.c + s * self.rng.standard_normal((n, d))
        A = self.A + s * self.rng.standard_normal((n, m, d))
        b = self.b + s * self.rng.standard_normal((n, m))
        return c, A, b

    def _values(self, params, w):
        c, A, b = params
        out = np.empty(self.problem.m + 1)
        out[0] = c @ w
        out[1:] = A @ w - b
        return out

    def _grads(self, params, w):
        c, A, _ = params
        out = np.empty((self.problem.m + 1, self.problem.d))
        out[0] = c
        out[1:] = A
        return out

    def _values_batch(self, params, w):
        c, A, b = params
        return np.column_stack([c @ w, A @ w - b])

    def _linear(self, params):
        _, A, b = params
        return A, b


def lp_ball_optimum(c, A, b, R):
    """Exact ``min <c, w>`` s.t. ``A w <= b``, ``||w|| <= R`` by face enumeration.

    Every extreme point of the feasible set is either a vertex of the
    polyhedron or the minimiser of ``<c, w>`` over a sphere slice
    ``{A_S w = b_S, ||w|| = R}``; both kinds are enumerated.
    """
    c = np.asarray(c, dtype=float)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float)
    d = c.size
    m = A.shape[0]
    cands = []
    for k in range(0, min(m, d) + 1):
        for S in itertools.combinations(range(m), k):
            S = list(S)
            if k:
                AS = A[S]
                if np.linalg.matrix_rank(AS) < k:
                    continue
                p = np.linalg.lstsq(AS, b[S], rcond=None)[0]
                _, sv, Vt = np.linalg.svd(AS)
                N = Vt[k:].T
            else:
                p = np.zeros(d)
                N = np.eye(d)
            if k == d:
                cands.append(p)
                continue
            r2 = R * R - p @ p
            if r2 < 0:
                continue
            proj = N.T @ c
            nrm = np.linalg.norm(proj)
            z = -math.sqrt(r2) * proj / nrm if nrm > 1e-14 else math.sqrt(r2) * np.eye(N.shape[1])[0]
            cands.append(p + N @ z)
    best = None
    for w in cands:
        if (m and np.any(A @ w - b > 1e-9)) or w @ w > R * R * (1 + 1e-12):
            continue
        v = float(c @ w)
        if best is None or v < best[0] - 1e-12:
            best = (v, w)
    if best is None:
        raise GeneratorError("mean LP is infeasible within the ball")
    return best[1], best[0]


def make_stochastic_lp(c_mean, A_mean, b_mean, noise_scale: float, R: float = 1.0,
                       name: str = "lp") -> ProblemSpec:
    """Stochastic LP with Gaussian noise on every coefficient; thresholds are zero."""
    c = np.asarray(c_mean, dtype=float)
    d = c.size
    A = np.asarray(A_mean, dtype=float).reshape(-1, d)
    m = A.shape[0]
    b = np.asarray(b_mean, dtype=float).reshape(m)
    if m:
        feasible, margin = deepest_point(A, b, R)
        if margin >= 0:
            raise GeneratorError("mean constraints are not strictly feasible inside the ball")
    else:
        feasible = np.zeros(d)
    sig_bound = _gauss_norm_bound(d, noise_scale)
    lip = max([np.linalg.norm(c)] + [np.linalg.norm(a) for a in A]) + sig_bound
    tau = min_norm_in_hull(A) if m else None
    known = None
    if d <= 6 and m <= 8:
        w_star, v_star = lp_ball_optimum(c, A, b, R)
        known = KnownOptimum(w_star, v_star)

    def expected(w):
        w = np.asarray(w, dtype=float)
        return np.concatenate([[c @ w], A @ w - b])

    def expected_grad(w):
        return np.vstack([c, A])

    return ProblemSpec(
        name=name, d=d, m=m, R=float(R), gamma=np.zeros(m), lipschitz=float(lip),
        oracle_factory=LPOracle, tau=tau if tau and tau > 1e-12 else None,
        expected=expected, expected_grad=expected_grad, known_optimum=known,
        linear_expected=(A.copy(), b.copy()), feasible_point=feasible,
        params={"c_mean": c, "A_mean": A, "b_mean": b, "noise_scale": float(noise_scale)})
