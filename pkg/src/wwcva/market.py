"""Flat-curve interest-rate market with normal-model swaption pricing.

Conventions used throughout the package:

* times are ACT/365-fixed year fractions, handled as plain floats,
* discounting is continuous: ``df(t) = exp(-flat_rate * t)``,
* a leg paying ``freq`` times per year between ``start`` and ``end``
  has payment dates ``start + 1/freq, ..., end``,
* European swaptions are priced under the Bachelier (normal) model, so
  negative rates are representable and the swap rate at each expiry has
  a closed-form normal density to cross-check implied densities against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

__all__ = [
    "DiscountCurve",
    "SwapSpec",
    "SwaptionQuote",
    "SwapMarket",
    "payment_times",
    "annuity",
    "forward_swap_rate",
    "bachelier_payer",
    "bachelier_receiver",
]

_SQRT_2PI = math.sqrt(2.0 * math.pi)


def _norm_pdf(x):
    return np.exp(-0.5 * np.square(x)) / _SQRT_2PI


@dataclass(frozen=True)
class DiscountCurve:
    """Flat continuously-compounded curve: ``df(t) = exp(-flat_rate * t)``."""

    flat_rate: float

    def df(self, t):
        """Discount factor to time ``t`` (scalar or array)."""
        return np.exp(-self.flat_rate * np.asarray(t, dtype=float))


@dataclass(frozen=True)
class SwapSpec:
    """Receive-float / pay-fixed interest-rate swap.

    The holder pays ``fixed_rate`` and receives float on the same
    quarterly grid, so positive exposure grows with the prevailing
    swap rate.
    """

    fixed_rate: float
    maturity: float
    freq: int = 4
    notional: float = 1.0

    def __post_init__(self):
        if self.maturity <= 0.0:
            raise ValueError(f"maturity must be positive, got {self.maturity}")
        if self.freq <= 0:
            raise ValueError(f"payment frequency must be positive, got {self.freq}")
        n = self.maturity * self.freq
        if abs(n - round(n)) > 1e-9:
            raise ValueError(
                f"payment frequency {self.freq} does not divide maturity {self.maturity}"
            )
        if self.fixed_rate < 0.0:
            raise ValueError(f"fixed rate must be non-negative, got {self.fixed_rate}")
        if self.notional <= 0.0:
            raise ValueError(f"notional must be positive, got {self.notional}")

    @property
    def n_payments(self) -> int:
        return int(round(self.maturity * self.freq))


def payment_times(start: float, end: float, freq: int) -> np.ndarray:
    """Payment dates ``start + 1/freq, ..., end`` of a leg over (start, end]."""
    if freq <= 0:
        raise ValueError(f"payment frequency must be positive, got {freq}")
    if start < 0.0 or end <= start:
        raise ValueError(f"need 0 <= start < end, got start={start}, end={end}")
    n = (end - start) * freq
    if abs(n - round(n)) > 1e-9:
        raise ValueError(
            f"payment frequency {freq} does not divide the interval ({start}, {end}]"
        )
    n = int(round(n))
    return start + np.arange(1, n + 1) / freq


def annuity(curve: DiscountCurve, start: float, end: float, freq: int) -> float:
    """Time-0 value of a unit fixed-rate stream paid over (start, end].

    Returns ``sum_j df(t_j) / freq`` over the payment dates; since the
    discount factors run from time 0, this already embeds the discounting
    of a forward-starting annuity back to today.
    """
    times = payment_times(start, end, freq)
    return float(np.sum(curve.df(times))) / freq


def forward_swap_rate(curve: DiscountCurve, start: float, end: float, freq: int) -> float:
    """Par rate of the forward swap over (start, end]: (df(start)-df(end))/annuity."""
    a = annuity(curve, start, end, freq)
    return float((curve.df(start) - curve.df(end)) / a)


def bachelier_payer(forward, strike, vol: float, expiry: float, annuity_value):
    """Payer swaption price under the normal model.

    Parameters
    ----------
    forward : float
        Forward swap rate F.
    strike : float or ndarray
        Strike K, in rate units.
    vol : float
        Normal volatility, rate units per sqrt(year).
    expiry : float
        Option expiry in years.
    annuity_value : float
        Annuity of the underlying swap (the pricing numeraire scale).

    Returns
    -------
    float or ndarray
        ``A * [(F-K) * Phi(d) + vol*sqrt(t) * phi(d)]`` with
        ``d = (F-K) / (vol*sqrt(t))``; the intrinsic ``A*max(F-K, 0)``
        when ``vol*sqrt(t)`` is zero.
    """
    if vol < 0.0:
        raise ValueError(f"normal volatility must be non-negative, got {vol}")
    if expiry < 0.0:
        raise ValueError(f"expiry must be non-negative, got {expiry}")
    stdev = vol * math.sqrt(expiry)
    moneyness = forward - np.asarray(strike, dtype=float)
    if stdev < 1e-16:
        return annuity_value * np.maximum(moneyness, 0.0)
    d = moneyness / stdev
    return annuity_value * (moneyness * ndtr(d) + stdev * _norm_pdf(d))


def bachelier_receiver(forward, strike, vol: float, expiry: float, annuity_value):
    """Receiver swaption price under the normal model (put on the swap rate)."""
    if vol < 0.0:
        raise ValueError(f"normal volatility must be non-negative, got {vol}")
    if expiry < 0.0:
        raise ValueError(f"expiry must be non-negative, got {expiry}")
    stdev = vol * math.sqrt(expiry)
    moneyness = np.asarray(strike, dtype=float) - forward
    if stdev < 1e-16:
        return annuity_value * np.maximum(moneyness, 0.0)
    d = moneyness / stdev
    return annuity_value * (moneyness * ndtr(d) + stdev * _norm_pdf(d))


@dataclass(frozen=True)
class SwaptionQuote:
    """One European swaption quote, co-terminal with the reference swap."""

    expiry: float
    strike: float
    tenor: float
    normal_vol: float
    price: float

    def __post_init__(self):
        if self.price < -1e-12:
            raise ValueError(f"swaption price must be non-negative, got {self.price}")


@dataclass(frozen=True)
class SwapMarket:
    """Market snapshot: discount curve, reference swap, flat normal vol.

    All swaption quotes are co-terminal with the reference swap: the
    option at expiry ``t`` delivers into the remaining swap over
    ``(t, maturity]``.
    """

    curve: DiscountCurve
    swap: SwapSpec
    normal_vol: float

    def __post_init__(self):
        if self.normal_vol < 0.0:
            raise ValueError(f"normal volatility must be non-negative, got {self.normal_vol}")

    @classmethod
    def build(
        cls,
        flat_rate: float,
        normal_vol: float,
        maturity: float = 10.0,
        freq: int = 4,
        notional: float = 1.0,
        fixed_rate: float | None = None,
    ) -> "SwapMarket":
        """Assemble a market; ``fixed_rate=None`` means struck at par (ATM)."""
        curve = DiscountCurve(flat_rate)
        if fixed_rate is None:
            fixed_rate = forward_swap_rate(curve, 0.0, maturity, freq)
        swap = SwapSpec(fixed_rate=fixed_rate, maturity=maturity, freq=freq, notional=notional)
        return cls(curve=curve, swap=swap, normal_vol=normal_vol)

    def stopping_dates(self) -> np.ndarray:
        """Quarterly stopping grid 1/freq, 2/freq, ..., maturity."""
        return np.arange(1, self.swap.n_payments + 1) / self.swap.freq

    def coterminal_annuity(self, expiry: float) -> float:
        """Currency annuity (notional included) of the remaining swap at ``expiry``."""
        return self.swap.notional * annuity(
            self.curve, expiry, self.swap.maturity, self.swap.freq
        )

    def coterminal_forward(self, expiry: float) -> float:
        return forward_swap_rate(self.curve, expiry, self.swap.maturity, self.swap.freq)

    def payer_price(self, strike, expiry: float):
        """Price of the co-terminal European payer swaption (currency)."""
        return bachelier_payer(
            self.coterminal_forward(expiry),
            strike,
            self.normal_vol,
            expiry,
            self.coterminal_annuity(expiry),
        )

    def quote(self, expiry: float, strike: float) -> SwaptionQuote:
        return SwaptionQuote(
            expiry=expiry,
            strike=strike,
            tenor=self.swap.maturity - expiry,
            normal_vol=self.normal_vol,
            price=float(self.payer_price(strike, expiry)),
        )

    def atm_rate(self) -> float:
        """Par rate of the full reference swap as of time 0."""
        return forward_swap_rate(self.curve, 0.0, self.swap.maturity, self.swap.freq)
