"""Counterparty credit inputs.

Builds flat-hazard default marginals from a CDS spread (credit
triangle), attaches a business-day granularity schedule to each
stopping interval, and parametrizes the conditional default
probability as a two-level (binomial) distribution whose standard
deviation is a chosen fraction of the maximum attainable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "CreditSpec",
    "DefaultMarginals",
    "DPVolParam",
    "hazard_from_cds",
    "marginals",
    "two_point_dp",
    "DAYS_PER_QUARTER",
]

# Business days per quarter (252 per year) used for the daily
# granularity schedule on a quarterly stopping grid.
DAYS_PER_QUARTER = 63


@dataclass(frozen=True)
class CreditSpec:
    """Flat CDS spread (decimal per year) and recovery rate."""

    cds_spread: float
    recovery: float = 0.4

    def __post_init__(self):
        if self.cds_spread < 0.0:
            raise ValueError(f"CDS spread must be non-negative, got {self.cds_spread}")
        if not 0.0 <= self.recovery < 1.0:
            raise ValueError(f"recovery must lie in [0, 1), got {self.recovery}")


def hazard_from_cds(spec: CreditSpec) -> float:
    """Flat hazard rate via the credit triangle: lambda = spread / (1 - R)."""
    return spec.cds_spread / (1.0 - spec.recovery)


@dataclass(eq=False)
class DefaultMarginals:
    """Per-interval marginal default probabilities on a stopping grid.

    Interval ``s`` is ``(starts[s], ends[s]]`` with marginal
    ``q[s] = P[tau in (starts[s], ends[s]]]`` and ``days[s]`` default
    opportunities (the granularity divisor for the daily adjustment).
    """

    starts: np.ndarray
    ends: np.ndarray
    q: np.ndarray
    days: np.ndarray

    def __post_init__(self):
        self.starts = np.asarray(self.starts, dtype=float)
        self.ends = np.asarray(self.ends, dtype=float)
        self.q = np.asarray(self.q, dtype=float)
        self.days = np.asarray(self.days, dtype=int)
        n = self.q.shape[0]
        if not (self.starts.shape[0] == self.ends.shape[0] == self.days.shape[0] == n):
            raise ValueError("marginal arrays must have equal length")
        if np.any(self.q < 0.0) or np.any(self.q > 1.0):
            raise ValueError("marginal default probabilities must lie in [0, 1]")
        if self.q.sum() > 1.0 + 1e-12:
            raise ValueError("marginal default probabilities must sum to at most 1")
        if np.any(self.days < 1):
            raise ValueError("granularity divisors must be at least 1")

    @property
    def n_intervals(self) -> int:
        return self.q.shape[0]


def marginals(hazard: float, grid, days_per_quarter: int = DAYS_PER_QUARTER) -> DefaultMarginals:
    """Survival-difference marginals q_s = exp(-h*t_{s-1}) - exp(-h*t_s).

    ``grid`` holds the stopping dates t_1 < ... < t_m (strictly
    increasing, all positive); t_0 = 0 is implied. Each interval gets
    ``round(days_per_quarter * dt / 0.25)`` default opportunities,
    floored at one.
    """
    if hazard < 0.0:
        raise ValueError(f"hazard rate must be non-negative, got {hazard}")
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.shape[0] == 0:
        raise ValueError("stopping grid must be a non-empty 1-d array")
    if grid[0] <= 0.0 or np.any(np.diff(grid) <= 0.0):
        raise ValueError("stopping grid must be strictly increasing from 0")
    starts = np.concatenate(([0.0], grid[:-1]))
    ends = grid
    q = np.exp(-hazard * starts) - np.exp(-hazard * ends)
    days = np.maximum(1, np.rint(days_per_quarter * (ends - starts) / 0.25).astype(int))
    return DefaultMarginals(starts=starts, ends=ends, q=q, days=days)


@dataclass(frozen=True)
class DPVolParam:
    """Two-level conditional default probability with mean ``q``.

    A fraction ``hi_mass`` of the scenario measure carries the high
    level ``p_hi`` and the rest the low level ``p_lo``. The split is
    chosen so the mean stays exactly ``q`` while the standard deviation
    equals ``nu`` times the maximum attainable ``sqrt(q*(1-q))``.
    """

    q: float
    nu: float
    p_hi: float
    p_lo: float
    hi_mass: float

    @property
    def mean(self) -> float:
        return self.hi_mass * self.p_hi + (1.0 - self.hi_mass) * self.p_lo

    @property
    def stdev(self) -> float:
        var = (
            self.hi_mass * (self.p_hi - self.mean) ** 2
            + (1.0 - self.hi_mass) * (self.p_lo - self.mean) ** 2
        )
        return math.sqrt(max(var, 0.0))


def two_point_dp(q: float, nu: float) -> DPVolParam:
    """Two-level default-probability parametrization at volatility fraction ``nu``.

    The high level rides on scenario mass exactly ``q`` -- the same tail
    mass as the degenerate all-or-nothing split -- which makes

    * ``p_hi = q + (1 - q) * nu`` and ``p_lo = q * (1 - nu)``,
    * mean preserved at ``q`` identically,
    * standard deviation ``nu * sqrt(q * (1 - q))``,
    * ``nu = 1`` the all-or-nothing worst case (p_hi=1, p_lo=0) and
      ``nu = 0`` the flat, dependence-free probability.
    """
    if not 0.0 < q < 1.0:
        raise ValueError(f"marginal probability must lie in (0, 1), got {q}")
    if not 0.0 <= nu <= 1.0:
        raise ValueError(f"volatility fraction must lie in [0, 1], got {nu}")
    p_hi = q + (1.0 - q) * nu
    p_lo = q * (1.0 - nu)
    return DPVolParam(q=q, nu=nu, p_hi=p_hi, p_lo=p_lo, hi_mass=q)
