"""Primal-dual stochastic gradient method for constrained stochastic problems.

Both variants run simultaneous projected gradient descent on ``w`` and
projected gradient ascent on the multipliers ``lam`` of the sampled
Lagrangian ``f_t^0(w) + sum_i lam_i (f_t^i(w) - gamma_i)``, and return the
average of the primal iterates. :func:`solve_exact` tightens the thresholds
so that the average satisfies the original constraints with high probability.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .core import (ConfigurationError, InfeasibleError, LogEntry, OracleError, RunTrace,
                   SmooError, SolverConfig, derive_step_size, mu_bound, thin_interval)
from .oracle import ProblemSpec, random_ball_points
from .projection import deepest_point

#: Number of probe points used to bound ``max_w sum_i (fbar_i(w) - gamma_i)^2``.
N_PROBES = 10_000
#: Inflation applied to probed (not analytic) bounds.
PROBE_INFLATION = 1.1


@dataclass(frozen=True)
class DualCapEstimate:
    lambda_a_bound: float
    per_constraint_caps: np.ndarray
    theta: float
    G: float
    G_prime: Optional[float] = None
    gamma_hat: Optional[np.ndarray] = None

    @property
    def D2(self) -> float:
        return float(np.sum(self.per_constraint_caps ** 2))


def constraint_deviation_bound(problem: ProblemSpec, gamma=None, n_probes: int = N_PROBES,
                               seed: int = 0) -> float:
    """Upper bound on ``max_{||w||<=R} sum_i (fbar_i(w) - gamma_i)^2``.

    Exact for linear expected constraints; otherwise the maximum over
    ``n_probes`` interior and boundary points, inflated by 10%.
    """
    gamma = problem.gamma if gamma is None else np.asarray(gamma, dtype=float)
    if problem.m == 0:
        return 0.0
    if problem.linear_expected is not None:
        A, b = problem.linear_expected
        dev = problem.R * np.linalg.norm(A, axis=1) + np.abs(b + gamma)
        return float(np.sum(dev ** 2))
    if problem.expected is None:
        raise ConfigurationError(
            "cannot bound the constraint deviation without analytic expectations; "
            "supply G directly")
    rng = np.random.default_rng(seed)
    half = n_probes // 2
    inner = random_ball_points(rng, n_probes - half, problem.d, problem.R)
    shell = rng.standard_normal((half, problem.d))
    shell *= problem.R / np.linalg.norm(shell, axis=1, keepdims=True)
    best = 0.0
    for w in np.vstack([inner, shell]):
        best = max(best, float(np.sum((problem.expected(w)[1:] - gamma) ** 2)))
    return PROBE_INFLATION * best


def gradient_bound(problem: ProblemSpec, caps, gamma=None) -> float:
    """``G = sqrt(max(L^2 (1 + sum caps)^2, max_w sum_i (fbar_i(w) - gamma_i)^2))``."""
    caps = np.asarray(caps, dtype=float)
    primal = problem.lipschitz * (1.0 + float(np.sum(caps)))
    dual = math.sqrt(constraint_deviation_bound(problem, gamma))
    return max(primal, dual)


def estimate_dual_caps(problem: ProblemSpec, theta: float, T: Optional[int] = None,
                       delta: Optional[float] = None) -> DualCapEstimate:
    """Uniform multiplier caps ``L / tau + theta`` and the matching gradient bound.

    The sum of the optimal multipliers is at most ``L / tau``, so each cap
    exceeds its optimal multiplier by at least ``theta``. When ``T`` and
    ``delta`` are given, the tightened thresholds and ``G_prime`` are also
    computed.
    """
    if not theta > 0:
        raise ConfigurationError("theta must be positive")
    m = problem.m
    if m == 0:
        caps = np.zeros(0)
        bound = 0.0
    else:
        if problem.tau is None or not problem.tau > 0:
            raise ConfigurationError(
                "the problem has no positive gradient lower bound tau; "
                "supply the dual caps directly (solver.dual_caps)")
        bound = problem.lipschitz / problem.tau
        caps = np.full(m, bound + theta)
    G = gradient_bound(problem, caps)
    G_prime = gamma_hat = None
    if T is not None and delta is not None:
        mu = mu_bound(delta, G, problem.R, float(np.linalg.norm(caps)))
        gamma_hat = problem.gamma - mu / (theta * math.sqrt(T))
        G_prime = gradient_bound(problem, caps, gamma_hat)
    return DualCapEstimate(bound, caps, float(theta), G, G_prime, gamma_hat)


def configure(problem: ProblemSpec, T: int, theta: float, delta: float, seed: int = 0,
              dual_caps=None, G: Optional[float] = None) -> SolverConfig:
    """Build a :class:`SolverConfig`, deriving caps and ``G`` when not supplied."""
    if dual_caps is None:
        est = estimate_dual_caps(problem, theta, T, delta)
        caps, G_est, G_prime = est.per_constraint_caps, est.G, est.G_prime
    else:
        caps = np.broadcast_to(np.asarray(dual_caps, dtype=float), (problem.m,)).copy()
        G_est = gradient_bound(problem, caps)
        G_prime = None
    return SolverConfig(d=problem.d, m=problem.m, R=problem.R, T=int(T), theta=theta,
                        delta=delta, dual_caps=tuple(caps), G=G if G is not None else G_est,
                        lipschitz=problem.lipschitz, tau=problem.tau, seed=seed,
                        G_prime=G_prime if G is None else None)


def primal_dual_step(w, lam, sample, eta: float, gamma, caps, project):
    """One simultaneous primal descent / dual ascent step on the sampled Lagrangian.

    Both updates use the pre-update pair ``(w, lam)``.
    """
    vals = sample.values(w)
    grads = sample.grads(w)
    return _step(w, lam, vals, grads, eta, gamma, caps, project)


def _step(w, lam, vals, grads, eta, gamma, caps, project):
    g = grads[0] + lam @ grads[1:]
    # a single non-finite entry poisons either sum
    if not math.isfinite(g.sum() + grads.sum() + vals.sum()):
        raise OracleError("oracle returned non-finite values or gradients")
    w_new = project(w - eta * g)
    lam_new = np.minimum(np.maximum(lam + eta * (vals[1:] - gamma), 0.0), caps)
    return w_new, lam_new


def _fast_ball(R):
    R2 = R * R

    def project(w):
        n2 = w @ w
        return w if n2 <= R2 else w * (R / math.sqrt(n2))
    return project


def _run(oracle, T, eta, gamma, caps, project, name, log_every=None, debug=False, R=None):
    problem = oracle.problem
    d, m = problem.d, problem.m
    gamma = np.asarray(gamma, dtype=float)
    caps = np.asarray(caps, dtype=float)
    # w_1 = 0 on the ball; other domains start from the projection of 0
    w = project(np.zeros(d))
    lam = np.zeros(m)
    wsum = np.zeros(d)
    every = thin_interval(T) if log_every is None else int(log_every)
    log = []
    error = None
    t = 0
    start = time.perf_counter()
    try:
        for t in range(1, T + 1):
            wsum += w
            sample = oracle.draw()
            vals = sample.values(w)
            grads = sample.grads(w)
            if t % every == 0 or t == 1:
                log.append(LogEntry(t, w.copy(), lam.copy(), vals.copy()))
            w, lam = _step(w, lam, vals, grads, eta, gamma, caps, project)
            if debug:
                if R is not None and w @ w > R * R + 1e-9:
                    raise AssertionError(f"iterate left the ball at t={t}")
                if np.any(lam < 0) or np.any(lam > caps):
                    raise AssertionError(f"multiplier left its box at t={t}")
    except SmooError as exc:
        error = f"t={t}: {exc}"
    wall = time.perf_counter() - start
    done = t
    avg = wsum / done if done > 0 else w
    trace = RunTrace(solver=name, averaged=avg, T=T, iterations=done, log=log,
                     log_every=every, final_w=w, final_lam=lam, wall_time=wall, error=error)
    if problem.expected is not None:
        trace.eval = np.asarray(problem.expected(avg), dtype=float)
    return trace


def solve(oracle, cfg: SolverConfig, log_every: Optional[int] = None, debug: bool = False,
          project=None) -> RunTrace:
    """Run the primal-dual method for ``cfg.T`` iterations from ``w = 0, lam = 0``.

    On a non-ball domain the start is the projection of the origin.
    """
    problem = oracle.problem
    _check_dims(problem, cfg)
    project = _default_projector(problem) if project is None else project
    trace = _run(oracle, cfg.T, cfg.eta, problem.gamma, cfg.caps, project, "pd",
                 log_every, debug, cfg.R)
    trace.config = _echo(cfg)
    trace.extra.update(eta=cfg.eta, mu=cfg.mu, gamma=problem.gamma.copy())
    return trace


def tightened_thresholds(cfg: SolverConfig, gamma) -> np.ndarray:
    """``gamma_i - mu(delta) / (theta sqrt(T))`` with ``mu`` computed from ``G``."""
    return np.asarray(gamma, dtype=float) - cfg.mu / (cfg.theta * math.sqrt(cfg.T))


def check_strictly_feasible(problem: ProblemSpec, gamma) -> float:
    """Raise :class:`InfeasibleError` unless some domain point has ``fbar_i < gamma_i``."""
    gamma = np.asarray(gamma, dtype=float)
    if problem.m == 0:
        return -math.inf
    if problem.linear_expected is not None and problem.domain == "ball":
        A, b = problem.linear_expected
        z, _ = deepest_point(A, b + gamma, problem.R)
        value = float(np.max(A @ z - b - gamma))
    elif problem.expected is not None:
        _, value = problem.feasibility_probe(gamma)
    else:
        raise ConfigurationError("strict feasibility needs analytic expectations")
    if not value < 0:
        raise InfeasibleError(
            f"tightened thresholds leave no strictly feasible point (best max slack {value:.3g}); "
            "increase T or theta")
    return value


def solve_exact(oracle, cfg: SolverConfig, log_every: Optional[int] = None,
                debug: bool = False, project=None) -> RunTrace:
    """Primal-dual method against tightened thresholds.

    The step size uses ``G_prime`` (the gradient bound for the tightened
    thresholds), while the tightening itself uses ``mu`` computed from ``G``.
    """
    problem = oracle.problem
    _check_dims(problem, cfg)
    gamma_hat = tightened_thresholds(cfg, problem.gamma)
    check_strictly_feasible(problem, gamma_hat)
    G_prime = cfg.G_prime if cfg.G_prime is not None else gradient_bound(
        problem, cfg.caps, gamma_hat)
    eta = derive_step_size(cfg.R, cfg.D, cfg.T, G_prime)
    project = _default_projector(problem) if project is None else project
    trace = _run(oracle, cfg.T, eta, gamma_hat, cfg.caps, project, "pd_exact",
                 log_every, debug, cfg.R)
    trace.config = _echo(cfg)
    trace.extra.update(eta=eta, mu=cfg.mu, G_prime=G_prime,
                       mu_prime=mu_bound(cfg.delta, G_prime, cfg.R, cfg.D),
                       gamma=problem.gamma.copy(), gamma_hat=gamma_hat)
    return trace


def _default_projector(problem):
    return _fast_ball(problem.R) if problem.domain == "ball" else problem.project


def _check_dims(problem, cfg):
    if problem.d != cfg.d or problem.m != cfg.m:
        raise ConfigurationError(
            f"config is for d={cfg.d}, m={cfg.m} but the problem has d={problem.d}, m={problem.m}")


def _echo(cfg: SolverConfig) -> dict:
    out = asdict(cfg)
    out["dual_caps"] = list(cfg.dual_caps)
    out.update(D2=cfg.D2, eta=cfg.eta)
    return out
