"""Euclidean projection operators."""

from __future__ import annotations

import itertools

import numpy as np
from scipy import optimize

from .core import ConfigurationError, ConvergenceError, InfeasibleError

DYKSTRA_TOL = 1e-10
DYKSTRA_MAX_ITER = 10_000


def project_ball(w, R: float) -> np.ndarray:
    """Project ``w`` onto the centred ball of radius ``R``."""
    w = np.asarray(w, dtype=float)
    if not R > 0:
        raise ConfigurationError("radius must be positive")
    nrm = np.sqrt(w @ w)
    if nrm <= R:
        return w.copy()
    return w * (R / nrm)


def project_box(x, lo, hi) -> np.ndarray:
    """Coordinatewise clamp of ``x`` to ``[lo, hi]``."""
    x = np.asarray(x, dtype=float)
    lo = np.broadcast_to(np.asarray(lo, dtype=float), x.shape)
    hi = np.broadcast_to(np.asarray(hi, dtype=float), x.shape)
    if np.any(lo > hi):
        raise ConfigurationError("box lower bound exceeds upper bound")
    return np.minimum(np.maximum(x, lo), hi)


def project_simplex(w) -> np.ndarray:
    """Project onto the probability simplex by sorting and thresholding."""
    w = np.asarray(w, dtype=float)
    if w.ndim != 1 or w.size < 1:
        raise ConfigurationError("simplex projection needs a non-empty vector")
    u = np.sort(w)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.arange(1, w.size + 1)
    rho = np.nonzero(u - css / k > 0)[0][-1]
    shift = css[rho] / (rho + 1.0)
    out = np.maximum(w - shift, 0.0)
    # renormalise the support to kill round-off in the sum
    s = out.sum()
    if s > 0:
        out /= s
    return out


class HalfspaceBallProjector:
    """Projection onto ``{z : A z <= b, ||z|| <= R}``.

    Feasibility of the intersection is probed once at construction.
    Projection uses fast exact paths (already feasible; a single violated
    set whose projection is feasible) and falls back to Dykstra's algorithm.
    """

    def __init__(self, A, b, R: float, tol: float = DYKSTRA_TOL,
                 max_iter: int = DYKSTRA_MAX_ITER, feas_tol: float = 1e-8):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = np.atleast_1d(np.asarray(b, dtype=float))
        if A.shape[0] != b.shape[0]:
            raise ConfigurationError("A and b disagree on the number of halfspaces")
        if not R > 0:
            raise ConfigurationError("radius must be positive")
        norms = np.linalg.norm(A, axis=1)
        if np.any(norms == 0):
            raise ConfigurationError("halfspace normal vectors must be non-zero")
        self.A, self.b, self.R = A, b, float(R)
        self.norms2 = norms ** 2
        self.tol, self.max_iter, self.feas_tol = tol, max_iter, feas_tol
        self.margin = self.feasibility_margin()
        if self.margin > feas_tol:
            raise InfeasibleError(
                f"halfspaces do not intersect the ball of radius {R} "
                f"(smallest achievable normalised violation {self.margin:.3g})")

    def feasibility_margin(self) -> float:
        """``min_{||z||<=R} max_j (a_j.z - b_j)/||a_j||``; feasible iff <= 0."""
        return deepest_point(self.A, self.b, self.R)[1]

    def _feasible(self, z, tol) -> bool:
        return bool(np.all(self.A @ z - self.b <= tol) and z @ z <= self.R ** 2 * (1 + 1e-15) + tol)

    def _halfspace(self, z, j):
        viol = self.A[j] @ z - self.b[j]
        if viol <= 0:
            return z
        return z - (viol / self.norms2[j]) * self.A[j]

    def __call__(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        if self._feasible(w, 0.0):
            return w.copy()
        # single-set shortcuts are exact whenever their result is feasible
        z = project_ball(w, self.R)
        if self._feasible(z, 1e-12):
            return z
        viol = self.A @ w - self.b
        for j in np.nonzero(viol > 0)[0]:
            z = self._halfspace(w, j)
            if self._feasible(z, 1e-12):
                return z
        if self.A.shape[0] <= self.max_active_set:
            z = self._active_set(w)
            if z is not None:
                return z
        return self._dykstra(w)

    max_active_set = 6

    def _active_set(self, w):
        """Polyhedron-only KKT point, if it exists and lies in the ball.

        A KKT point of the polyhedral projection that also satisfies the ball
        constraint is the projection onto the intersection.
        """
        k = self.A.shape[0]
        for size in range(2, min(k, w.size) + 1):
            for S in itertools.combinations(range(k), size):
                AS = self.A[list(S)]
                M = AS @ AS.T
                try:
                    lam = np.linalg.solve(M, AS @ w - self.b[list(S)])
                except np.linalg.LinAlgError:
                    continue
                if np.any(lam < 0):
                    continue
                z = w - AS.T @ lam
                if self._feasible(z, 1e-12):
                    return z
        return None

    def _dykstra(self, w) -> np.ndarray:
        k = self.A.shape[0] + 1
        x = w.copy()
        incr = np.zeros((k, w.size))
        for _ in range(self.max_iter):
            x_prev = x
            change = 0.0
            for j in range(k):
                y = x + incr[j]
                p = project_ball(y, self.R) if j == k - 1 else self._halfspace(y, j)
                new_incr = y - p
                change += float(np.sum((new_incr - incr[j]) ** 2))
                incr[j] = new_incr
                x = p
            if np.sqrt(np.sum((x - x_prev) ** 2)) < self.tol and change < self.tol ** 2:
                if not self._feasible(x, self.feas_tol):
                    break
                return x
        raise ConvergenceError(
            f"Dykstra projection did not reach tolerance {self.tol} in {self.max_iter} cycles")


def deepest_point(A, b, R: float):
    """Point of the ball minimising the largest normalised violation ``(a_j.z - b_j)/||a_j||``.

    Returns ``(z, margin)``; the halfspaces meet the ball iff ``margin <= 0``.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    norms = np.linalg.norm(A, axis=1)
    An = A / norms[:, None]
    bn = np.asarray(b, dtype=float) / norms
    d = A.shape[1]
    x0 = np.zeros(d + 1)
    x0[-1] = float(np.max(-bn))
    e_t = np.eye(d + 1)[-1]
    cons = [
        {"type": "ineq", "fun": lambda x: x[-1] - (An @ x[:-1] - bn),
         "jac": lambda x: np.hstack([-An, np.ones((An.shape[0], 1))])},
        {"type": "ineq", "fun": lambda x: R ** 2 - x[:-1] @ x[:-1],
         "jac": lambda x: np.append(-2 * x[:-1], 0.0)},
    ]
    res = optimize.minimize(lambda x: x[-1], x0, jac=lambda x: e_t, constraints=cons,
                            method="SLSQP", options={"ftol": 1e-14, "maxiter": 500})
    z = project_ball(res.x[:-1], R)
    return z, float(np.max(An @ z - bn))


def project_halfspaces(w, constraints, R: float) -> np.ndarray:
    """Project onto ``{z : <a_j, z> <= b_j for all j} ∩ ball(R)``.

    ``constraints`` is a sequence of ``(a, b)`` pairs. Raises
    :class:`InfeasibleError` when the intersection is empty and
    :class:`ConvergenceError` when Dykstra's iteration cap is hit.
    """
    constraints = list(constraints)
    if not constraints:
        return project_ball(w, R)
    A = np.array([np.asarray(a, dtype=float) for a, _ in constraints])
    b = np.array([float(bj) for _, bj in constraints])
    return HalfspaceBallProjector(A, b, R)(w)


def ball_projector(R: float):
    return lambda w: project_ball(w, R)


def simplex_projector(R: float = 1.0):
    return lambda w: project_simplex(w)
