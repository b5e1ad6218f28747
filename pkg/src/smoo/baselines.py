"""Reduction baselines: fixed-weight scalarization and burn-in projected SGD."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import ConfigurationError, OracleError, RunTrace, SmooError, thin_interval, LogEntry
from .projection import HalfspaceBallProjector


def scalarize(oracle, weights, T: int, eta_schedule: Optional[Callable[[int], float]] = None,
              log_every: Optional[int] = None) -> RunTrace:
    """Projected SGD on the fixed combination ``sum_i weights[i] * f_t^i``.

    ``weights[0]`` multiplies the objective. The default step is
    ``(R / L) / sqrt(t)``. Nothing enforces the constraints.
    """
    problem = oracle.problem
    alpha = np.asarray(weights, dtype=float)
    if alpha.shape != (problem.m + 1,):
        raise ConfigurationError(f"expected {problem.m + 1} weights, got {alpha.shape}")
    if np.any(alpha < 0) or not np.any(alpha > 0):
        raise ConfigurationError("weights must be non-negative and not all zero")
    if not alpha[0] > 0:
        raise ConfigurationError("the objective weight must be positive")
    if eta_schedule is None:
        c = problem.R / problem.lipschitz
        eta_schedule = lambda t: c / math.sqrt(t)  # noqa: E731
    every = thin_interval(T) if log_every is None else int(log_every)
    w = problem.project(np.zeros(problem.d))
    wsum = np.zeros(problem.d)
    log, error, t = [], None, 0
    start = time.perf_counter()
    try:
        for t in range(1, T + 1):
            wsum += w
            sample = oracle.draw()
            grads = sample.grads(w)
            g = alpha @ grads
            if not np.all(np.isfinite(g)):
                raise OracleError("oracle returned non-finite gradients")
            if t % every == 0 or t == 1:
                log.append(LogEntry(t, w.copy(), np.zeros(0), sample.values(w)))
            w = problem.project(w - eta_schedule(t) * g)
    except SmooError as exc:
        error = f"t={t}: {exc}"
    avg = wsum / t if t else np.zeros(problem.d)
    trace = RunTrace(solver="scalarize", averaged=avg, T=T, iterations=t, log=log,
                     log_every=every, final_w=w, wall_time=time.perf_counter() - start,
                     error=error, config={"weights": alpha.tolist(), "T": T})
    _attach_eval(trace, problem)
    return trace


@dataclass
class ConstraintEstimate:
    """Running mean and spread of sampled linear constraint coefficients."""

    A: np.ndarray
    b: np.ndarray
    A_var: np.ndarray
    b_var: np.ndarray
    n: int


def estimate_linear_constraints(oracle, n: int) -> ConstraintEstimate:
    """Average ``n`` sampled constraint coefficient sets (Welford, O(md) memory)."""
    problem = oracle.problem
    if n < 1:
        raise ConfigurationError("need at least one burn-in sample")
    meanA = np.zeros((problem.m, problem.d))
    meanb = np.zeros(problem.m)
    m2A = np.zeros_like(meanA)
    m2b = np.zeros_like(meanb)
    for k in range(1, n + 1):
        A, b = oracle.draw().linear_constraints()
        dA = A - meanA
        meanA += dA / k
        m2A += dA * (A - meanA)
        db = b - meanb
        meanb += db / k
        m2b += db * (b - meanb)
    denom = max(n - 1, 1)
    return ConstraintEstimate(meanA, meanb, m2A / denom, m2b / denom, n)


def default_relaxation(est: ConstraintEstimate, R: float) -> np.ndarray:
    """``2 * s_i / sqrt(n)`` with ``s_i^2 = R^2 sum_j Var(a_ij) + Var(b_i)``."""
    s = np.sqrt(R * R * est.A_var.sum(axis=1) + est.b_var)
    return 2.0 * s / math.sqrt(est.n)


def burn_in_pgd(oracle, b: float, T: int, relax=None, eta: Optional[float] = None,
                log_every: Optional[int] = None, debug: bool = False) -> RunTrace:
    """Estimate linear constraints from the first ``ceil(b T)`` draws, then run
    projected SGD on the objective over the relaxed estimated domain.

    Only linear constraint samples are supported. Returns the average of the
    post-burn-in iterates; ``trace.extra`` reports the coefficient estimation
    error and the cumulative true violation of the iterates.
    """
    problem = oracle.problem
    if not 0.0 < b < 1.0:
        raise ConfigurationError("burn fraction must lie in (0, 1)")
    n_burn = math.ceil(b * T)
    if n_burn >= T:
        raise ConfigurationError(f"burn-in of {n_burn} draws leaves no optimisation steps")
    if not getattr(oracle, "linear_constraints", False):
        raise ConfigurationError("burn-in baseline requires linear constraint samples")
    if problem.domain != "ball":
        raise ConfigurationError("burn-in baseline supports the ball domain only")
    start = time.perf_counter()
    est = estimate_linear_constraints(oracle, n_burn)
    relax = default_relaxation(est, problem.R) if relax is None else (
        np.broadcast_to(np.asarray(relax, dtype=float), (problem.m,)).copy())
    # raises InfeasibleError when the relaxed estimate misses the ball
    proj = HalfspaceBallProjector(est.A, est.b + problem.gamma + relax, problem.R)
    n_opt = T - n_burn
    if eta is None:
        eta = problem.R / (problem.lipschitz * math.sqrt(n_opt))
    every = thin_interval(n_opt) if log_every is None else int(log_every)
    has_exp = problem.expected is not None
    cum_viol = np.zeros(problem.m)
    w = proj(np.zeros(problem.d))
    wsum = np.zeros(problem.d)
    log, error, k = [], None, 0
    try:
        for k in range(1, n_opt + 1):
            wsum += w
            if has_exp:
                cum_viol += np.maximum(problem.expected(w)[1:] - problem.gamma, 0.0)
            sample = oracle.draw()
            g = sample.grad_at(w, 0)
            if not np.all(np.isfinite(g)):
                raise OracleError("oracle returned non-finite gradients")
            if k % every == 0 or k == 1:
                log.append(LogEntry(n_burn + k, w.copy(), np.zeros(0), sample.values(w)))
            w = proj(w - eta * g)
            if debug and np.any(est.A @ w - est.b - problem.gamma - relax > 1e-8):
                raise AssertionError(f"iterate violates the estimated domain at t={n_burn + k}")
    except SmooError as exc:
        error = f"t={n_burn + k}: {exc}"
    avg = wsum / k if k else w
    trace = RunTrace(solver="burn_in", averaged=avg, T=T, iterations=k, log=log,
                     log_every=every, final_w=w, wall_time=time.perf_counter() - start,
                     error=error, config={"b": b, "T": T, "eta": eta})
    trace.extra.update(n_burn=n_burn, relax=relax, A_hat=est.A, b_hat=est.b,
                       cumulative_violation=cum_viol if has_exp else None)
    if problem.linear_expected is not None:
        A_true, b_true = problem.linear_expected
        trace.extra["coef_error"] = float(max(np.max(np.abs(est.A - A_true)),
                                              np.max(np.abs(est.b - b_true))))
    _attach_eval(trace, problem)
    return trace


def _attach_eval(trace, problem):
    if problem.expected is not None:
        trace.eval = np.asarray(problem.expected(trace.averaged), dtype=float)
