"""Discrete positive-exposure distributions from swaption call spreads.

For each stopping date the swap-rate density is extracted with
butterflies (second differences) of co-terminal European payer prices
over equally spaced strikes, and exposure of the remaining receive-float
swap is evaluated bucket by bucket, optionally capped at a hedge strike.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .market import SwapMarket, SwapSpec, DiscountCurve, annuity

__all__ = [
    "ExposureDistribution",
    "swap_rate_density",
    "density_from_prices",
    "exposure_from_rate",
    "build_exposure",
    "build_exposure_set",
]


def density_from_prices(prices: np.ndarray, annuity_value: float, dk: float) -> np.ndarray:
    """Bucket probabilities from payer prices on an equally spaced strike grid.

    ``prices`` are quoted at the n+2 strikes ``c_0 - dk, c_0, ..., c_{n-1},
    c_{n-1} + dk`` where the c_j are the bucket centers. The butterfly

        [P(c_j - dk) - 2 P(c_j) + P(c_j + dk)] / (A * dk)

    is the (tent-smoothed) probability of the width-``dk`` bucket around
    ``c_j``; the result is renormalized over the truncated range.
    """
    prices = np.asarray(prices, dtype=float)
    if prices.ndim != 1 or prices.shape[0] < 3:
        raise ValueError("need prices at no fewer than three strikes")
    if annuity_value <= 0.0 or dk <= 0.0:
        raise ValueError("annuity and strike spacing must be positive")
    raw = (prices[:-2] - 2.0 * prices[1:-1] + prices[2:]) / (annuity_value * dk)
    if raw.min() < -1e-10:
        raise ValueError(
            f"option prices are not convex in strike (butterfly {raw.min():.3e} < 0)"
        )
    weights = np.clip(raw, 0.0, None)
    total = weights.sum()
    if total <= 0.0:
        raise ValueError("extracted density carries no probability mass")
    return weights / total


def swap_rate_density(
    market: SwapMarket,
    expiry: float,
    buckets: int = 400,
    range_sd: float = 6.0,
    strike_range: tuple[float, float] | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Swap-rate bucket midpoints and probabilities at one stopping date.

    The strike range defaults to the forward plus/minus ``range_sd``
    standard deviations of the rate at ``expiry``; ``strike_range``
    overrides it with explicit bounds.

    Returns
    -------
    (rates, weights)
        Bucket midpoints S_j and probabilities w_j summing to one.
    """
    if buckets < 10:
        raise ValueError(f"need at least 10 buckets, got {buckets}")
    if range_sd <= 0.0:
        raise ValueError(f"range width must be positive, got {range_sd}")
    stdev = market.normal_vol * math.sqrt(expiry)
    if stdev <= 0.0:
        raise ValueError("swap-rate distribution is degenerate: vol * sqrt(expiry) = 0")
    forward = market.coterminal_forward(expiry)
    if strike_range is None:
        lo, hi = forward - range_sd * stdev, forward + range_sd * stdev
    else:
        lo, hi = strike_range
        if hi <= lo:
            raise ValueError(f"empty strike range ({lo}, {hi})")
    dk = (hi - lo) / buckets
    centers = lo + (np.arange(buckets) + 0.5) * dk
    extended = lo + (np.arange(buckets + 2) - 0.5) * dk
    prices = market.payer_price(extended, expiry)
    weights = density_from_prices(prices, market.coterminal_annuity(expiry), dk)
    return centers, weights


def exposure_from_rate(swap: SwapSpec, curve: DiscountCurve, t: float, rate, cap: float | None = None):
    """Time-0-discounted positive exposure of the remaining swap at rate ``rate``.

    ``annuity(t, T) * max(min(rate, cap) - fixed_rate, 0)`` per unit
    notional; the annuity is built from time-0 discount factors, which
    discounts the t-value exposure back to today. ``cap=None`` leaves
    the exposure uncapped; at or past maturity the remaining swap is
    empty and the exposure is zero.
    """
    rate = np.asarray(rate, dtype=float)
    if t >= swap.maturity - 1e-12:
        return np.zeros_like(rate) if rate.ndim else 0.0
    scale = swap.notional * annuity(curve, t, swap.maturity, swap.freq)
    effective = np.minimum(rate, cap) if cap is not None else rate
    values = scale * np.maximum(effective - swap.fixed_rate, 0.0)
    return values if rate.ndim else float(values)


@dataclass(eq=False)
class ExposureDistribution:
    """Discrete positive-exposure distribution at one stopping date.

    ``values`` are the uncapped exposures (currency, discounted to 0)
    at the bucket rates; ``scale`` is notional times the discounted
    annuity of the remaining swap, so capped exposures can be
    re-evaluated for any hedge strike.
    """

    expiry: float
    rates: np.ndarray
    weights: np.ndarray
    values: np.ndarray
    scale: float
    fixed_rate: float

    def __post_init__(self):
        self.rates = np.asarray(self.rates, dtype=float)
        self.weights = np.asarray(self.weights, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if not (self.rates.shape == self.weights.shape == self.values.shape):
            raise ValueError("rates, weights and values must have equal shape")
        if np.any(self.weights < -1e-12):
            raise ValueError("bucket probabilities must be non-negative")
        self.weights = np.clip(self.weights, 0.0, None)
        if abs(self.weights.sum() - 1.0) > 1e-6:
            raise ValueError("bucket probabilities must sum to one")
        if np.any(self.values < 0.0):
            raise ValueError("exposures must be non-negative")

    @property
    def n(self) -> int:
        return self.rates.shape[0]

    def capped_values(self, cap: float | None) -> np.ndarray:
        """Exposures with the rate payoff capped at strike ``cap``."""
        if cap is None:
            return self.values
        return self.scale * np.maximum(np.minimum(self.rates, cap) - self.fixed_rate, 0.0)

    def mean(self, cap: float | None = None) -> float:
        return float(self.weights @ self.capped_values(cap))

    @classmethod
    def point(cls, expiry: float, value: float = 0.0) -> "ExposureDistribution":
        """Degenerate single-point distribution (used past the last payment)."""
        return cls(
            expiry=expiry,
            rates=np.array([0.0]),
            weights=np.array([1.0]),
            values=np.array([value]),
            scale=0.0,
            fixed_rate=0.0,
        )


def build_exposure(
    market: SwapMarket, expiry: float, buckets: int = 400, range_sd: float = 6.0
) -> ExposureDistribution:
    """Exposure distribution of the remaining swap at one stopping date."""
    rates, weights = swap_rate_density(market, expiry, buckets, range_sd)
    swap = market.swap
    values = exposure_from_rate(swap, market.curve, expiry, rates)
    scale = swap.notional * annuity(market.curve, expiry, swap.maturity, swap.freq)
    return ExposureDistribution(
        expiry=expiry,
        rates=rates,
        weights=weights,
        values=values,
        scale=scale,
        fixed_rate=swap.fixed_rate,
    )


def build_exposure_set(
    market: SwapMarket, buckets: int = 400, range_sd: float = 6.0
) -> list[ExposureDistribution]:
    """Exposure distributions on the full stopping grid.

    At the final stopping date the remaining swap is empty, so the last
    entry is the zero point-distribution.
    """
    maturity = market.swap.maturity
    out = []
    for t in market.stopping_dates():
        if t < maturity - 1e-12:
            out.append(build_exposure(market, float(t), buckets, range_sd))
        else:
            out.append(ExposureDistribution.point(float(t)))
    return out
