"""Statistical and differential checks of oracles against their expectations."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .oracle import ProblemSpec, random_ball_points


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail}"


def check_unbiased(problem: ProblemSpec, n_points: int = 5, n_draws: int = 100_000,
                   seed: int = 0, k_sigma: float = 4.0) -> CheckResult:
    """Monte Carlo mean of every ``f_t^i(w)`` within ``k_sigma`` standard errors of ``fbar_i(w)``."""
    rng = np.random.default_rng([seed, 7])
    oracle = problem.oracle([seed, 8])
    worst = 0.0
    for w in problem.sample_domain(rng, n_points):
        vals = oracle.sample_values(w, n_draws)
        mean = vals.mean(axis=0)
        se = vals.std(axis=0, ddof=1) / math.sqrt(n_draws)
        gap = np.abs(mean - problem.expected(w))
        ratio = np.where(se > 0, gap / np.maximum(se, 1e-300), np.where(gap <= 1e-12, 0.0, np.inf))
        worst = max(worst, float(ratio.max()))
    return CheckResult("unbiasedness", worst <= k_sigma,
                       f"worst |mean - fbar| = {worst:.2f} standard errors (limit {k_sigma})")


def check_gradients(problem: ProblemSpec, n_points: int = 10, seed: int = 0,
                    rtol: float = 1e-5, h: float = 1e-6) -> CheckResult:
    """Sampled gradients versus central finite differences of sampled values."""
    rng = np.random.default_rng([seed, 9])
    oracle = problem.oracle([seed, 10])
    worst = 0.0
    checked = 0
    tries = 0
    while checked < n_points and tries < 100 * n_points:
        tries += 1
        w = problem.sample_domain(rng, 1)[0]
        sample = oracle.draw()
        if sample.kink_distance(w) < 1e-3:
            continue
        G = sample.grads(w)
        for i in range(problem.m + 1):
            fd = np.array([(sample.value_at(w + h * e, i) - sample.value_at(w - h * e, i)) / (2 * h)
                           for e in np.eye(problem.d)])
            err = np.linalg.norm(fd - G[i]) / max(np.linalg.norm(G[i]), 1.0)
            worst = max(worst, float(err))
        checked += 1
    ok = checked == n_points and worst <= rtol
    return CheckResult("gradient consistency", ok,
                       f"{checked} points, worst relative error {worst:.2e} (limit {rtol:g})")


def check_convexity(problem: ProblemSpec, n_trials: int = 200, seed: int = 0) -> CheckResult:
    """Chord inequality for sampled functions at random pairs."""
    rng = np.random.default_rng([seed, 11])
    oracle = problem.oracle([seed, 12])
    worst = -math.inf
    for _ in range(n_trials):
        w1, w2 = problem.sample_domain(rng, 2)
        t = rng.uniform(0.0, 1.0)
        s = oracle.draw()
        gap = s.values(t * w1 + (1 - t) * w2) - (t * s.values(w1) + (1 - t) * s.values(w2))
        worst = max(worst, float(gap.max()))
    return CheckResult("convexity", worst <= 1e-9, f"largest chord excess {worst:.2e}")


def check_lipschitz(problem: ProblemSpec, n_points: int = 1000, seed: int = 0) -> CheckResult:
    """Largest sampled gradient norm over random ball points against the declared ``L``."""
    rng = np.random.default_rng([seed, 13])
    oracle = problem.oracle([seed, 14])
    biggest = 0.0
    for w in random_ball_points(rng, n_points, problem.d, problem.R):
        biggest = max(biggest, float(np.linalg.norm(oracle.draw().grads(w), axis=1).max()))
    return CheckResult("lipschitz certificate", biggest <= problem.lipschitz,
                       f"max gradient norm {biggest:.4g} vs declared L = {problem.lipschitz:.4g}")


def validate_oracle(problem: ProblemSpec, seed: int = 0) -> list:
    return [check_unbiased(problem, seed=seed), check_gradients(problem, seed=seed),
            check_convexity(problem, seed=seed), check_lipschitz(problem, seed=seed)]
