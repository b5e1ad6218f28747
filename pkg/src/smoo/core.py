"""Shared types, errors and derived constants.

Primal iterates and dual multipliers are plain float64 ``ndarray`` objects;
their invariants (ball / box membership) are maintained by the projection
operators in :mod:`smoo.projection`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

#: Absolute tolerance for invariant checks.
TOL = 1e-9


class SmooError(Exception):
    """Base class for all library errors."""


class ConfigurationError(SmooError, ValueError):
    """Invalid or inconsistent solver / experiment configuration."""


class VacuousGuaranteeError(ConfigurationError):
    """The failure probability ``(2m+1)*delta`` reaches 1, so no guarantee remains."""


class DomainError(SmooError, ValueError):
    """Argument outside the mathematical domain of a function."""


class InfeasibleError(SmooError):
    """A feasible set is empty (or not strictly feasible when that is required)."""


class ConvergenceError(SmooError):
    """An iterative routine hit its iteration cap before reaching tolerance."""


class OracleError(SmooError):
    """An oracle returned unusable values (non-finite, wrong shape, ...)."""


class GeneratorError(SmooError):
    """A problem generator could not build a valid instance."""


def derive_step_size(R: float, D: float, T: int, G: float) -> float:
    """Constant step ``sqrt((R^2 + D^2) / (2T)) / G``."""
    if not G > 0:
        raise ConfigurationError(f"gradient bound G must be positive, got {G}")
    if not T >= 1:
        raise ConfigurationError(f"horizon T must be >= 1, got {T}")
    if R < 0 or D < 0:
        raise ConfigurationError("R and D must be non-negative")
    eta = math.sqrt((R * R + D * D) / (2.0 * T)) / G
    if not eta > 0:
        raise ConfigurationError("derived step size is not positive (R = D = 0?)")
    return eta


def mu_bound(delta: float, G: float, R: float, D: float) -> float:
    """High-probability constant of the primal-dual rate.

    ``sqrt(2) G sqrt(R^2 + D^2) + 2 G (R + D) sqrt(2 ln(1/delta))``.
    ``delta = 1`` is accepted as the limit where the log term vanishes.
    """
    if not 0.0 < delta <= 1.0:
        raise DomainError(f"delta must lie in (0, 1], got {delta}")
    return (math.sqrt(2.0) * G * math.sqrt(R * R + D * D)
            + 2.0 * G * (R + D) * math.sqrt(2.0 * math.log(1.0 / delta)))


def union_confidence(m: int, delta: float) -> float:
    """Probability ``1 - (2m+1) delta`` with which both guarantees hold jointly."""
    return 1.0 - (2 * m + 1) * delta


@dataclass(frozen=True)
class Thresholds:
    """Constraint levels ``gamma`` and optionally their tightened version."""

    gamma: np.ndarray
    tightened: Optional[np.ndarray] = None

    @classmethod
    def tighten(cls, gamma, mu: float, theta: float, T: int) -> "Thresholds":
        gamma = np.asarray(gamma, dtype=float)
        shift = mu / (theta * math.sqrt(T))
        return cls(gamma=gamma, tightened=gamma - shift)

    @property
    def active(self) -> np.ndarray:
        """Levels the solver should enforce."""
        return self.gamma if self.tightened is None else self.tightened


@dataclass(frozen=True)
class SolverConfig:
    """Parameters of one primal-dual run.

    ``dual_caps`` and ``G`` normally come from
    :func:`smoo.pd_solver.estimate_dual_caps`; ``D2`` and ``eta`` are derived.
    ``G_prime`` is only used by the exact-feasibility variant.
    """

    d: int
    m: int
    R: float
    T: int
    theta: float
    delta: float
    dual_caps: tuple
    G: float
    lipschitz: float = float("nan")
    tau: Optional[float] = None
    seed: int = 0
    G_prime: Optional[float] = None

    def __post_init__(self):
        caps = tuple(float(c) for c in np.atleast_1d(np.asarray(self.dual_caps, dtype=float)))
        if self.m == 0:
            caps = ()
        object.__setattr__(self, "dual_caps", caps)
        if self.d < 1:
            raise ConfigurationError("dimension d must be >= 1")
        if self.m < 0 or len(caps) != self.m:
            raise ConfigurationError(f"expected {self.m} dual caps, got {len(caps)}")
        if any(not c > 0 for c in caps):
            raise ConfigurationError("dual caps must be positive")
        if not self.R > 0:
            raise ConfigurationError("ball radius R must be positive")
        if not self.theta > 0:
            raise ConfigurationError("theta must be positive")
        if int(self.T) != self.T or self.T < 1:
            raise ConfigurationError("horizon T must be an integer >= 1")
        if not 0.0 < self.delta < 1.0:
            raise ConfigurationError("delta must lie in (0, 1)")
        if self.delta >= 1.0 / (2 * self.m + 1):
            raise VacuousGuaranteeError(
                f"delta={self.delta} >= 1/(2m+1)={1.0 / (2 * self.m + 1):.4g}: "
                "the guarantee 1-(2m+1)*delta would be vacuous")
        if not self.G > 0:
            raise ConfigurationError("gradient bound G must be positive")
        if self.G_prime is not None and not self.G_prime > 0:
            raise ConfigurationError("G_prime must be positive")

    @property
    def caps(self) -> np.ndarray:
        return np.asarray(self.dual_caps, dtype=float)

    @property
    def D2(self) -> float:
        return float(sum(c * c for c in self.dual_caps))

    @property
    def D(self) -> float:
        return math.sqrt(self.D2)

    @property
    def eta(self) -> float:
        return derive_step_size(self.R, self.D, self.T, self.G)

    @property
    def mu(self) -> float:
        return mu_bound(self.delta, self.G, self.R, self.D)

    @property
    def confidence(self) -> float:
        return union_confidence(self.m, self.delta)


@dataclass
class LogEntry:
    t: int
    w: np.ndarray
    lam: np.ndarray
    losses: np.ndarray


@dataclass
class RunTrace:
    """Result of a solver run.

    ``averaged`` is the mean of *all* primal iterates ``w_1..w_T``; the
    ``log`` only keeps every ``log_every``-th iterate.
    """

    solver: str
    averaged: np.ndarray
    T: int
    iterations: int
    log: list = field(default_factory=list)
    log_every: int = 1
    final_w: Optional[np.ndarray] = None
    final_lam: Optional[np.ndarray] = None
    eval: Optional[np.ndarray] = None
    config: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)
    wall_time: float = 0.0
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None


def thin_interval(T: int, max_entries: int = 1000) -> int:
    """Logging stride ``ceil(T / max_entries)``."""
    return max(1, -(-int(T) // max_entries))
