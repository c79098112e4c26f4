"""Static hedge pricing: Bermudan payer swaptions on a Gaussian lattice.

The hedge B(K) is a Bermudan payer swaption struck at K, exercisable on
every stopping date into the remaining swap. It is priced with a
one-factor mean-reverting Gaussian short-rate model whose
piecewise-constant volatility is bootstrapped expiry by expiry so that
each co-terminal European payer at strike K reprices its market
(Bachelier) value -- i.e. the model is recalibrated per strike.

European swaptions under the model have a closed form (options on the
coupon bond, decomposed into zero-bond puts), which the bootstrap root-
finds against. The Bermudan itself is valued by backward induction on a
recombining trinomial lattice drift-fitted to the discount curve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.optimize import brentq
from scipy.special import ndtr

from .market import SwapMarket, annuity, payment_times

__all__ = [
    "CalibrationError",
    "HedgeSpec",
    "LatticeModel",
    "calibrate",
    "price_bermudan",
    "price_europeans",
    "hw_european_payer",
    "make_bermudan_pricer",
]


class CalibrationError(RuntimeError):
    """Volatility bootstrap could not match a calibration instrument."""


@dataclass(frozen=True)
class HedgeSpec:
    """Bermudan payer hedge: strike and exercise dates into the remaining swap."""

    strike: float
    exercise_times: tuple[float, ...]

    def __post_init__(self):
        if self.strike < 0.0:
            raise ValueError(f"hedge strike must be non-negative, got {self.strike}")
        if len(self.exercise_times) == 0:
            raise ValueError("hedge needs at least one exercise date")
        times = np.asarray(self.exercise_times, dtype=float)
        if np.any(times <= 0.0) or np.any(np.diff(times) <= 0.0):
            raise ValueError("exercise dates must be strictly increasing and positive")


# ---------------------------------------------------------------------------
# Closed-form European payer under the Gaussian model
# ---------------------------------------------------------------------------


def _slab_update(w1: float, w2: float, sigma: float, dt: float, a: float) -> tuple[float, float]:
    """Advance the vol integrals W1(t)=int sig^2 e^{-a(t-u)}du and
    W2(t)=int sig^2 e^{-2a(t-u)}du over a slab of constant sigma."""
    e1 = math.exp(-a * dt)
    e2 = e1 * e1
    w1 = w1 * e1 + sigma * sigma * (1.0 - e1) / a
    w2 = w2 * e2 + sigma * sigma * (1.0 - e2) / (2.0 * a)
    return w1, w2


def _analytic_payer(
    market: SwapMarket, a: float, expiry: float, w1: float, w2: float, strike: float
) -> float:
    """European payer swaption value given the vol integrals at ``expiry``.

    The payer is a put struck at par on the coupon bond paying K/freq
    plus principal; with bond prices exponential-affine in the Gaussian
    factor, the exercise region is a half-line in the factor, so the put
    splits into zero-bond puts at the critical factor level.
    """
    curve, swap = market.curve, market.swap
    pays = payment_times(expiry, swap.maturity, swap.freq)
    b = (1.0 - np.exp(-a * (pays - expiry))) / a
    df_pay = curve.df(pays)
    df_exp = float(curve.df(expiry))
    # log P(expiry, T | x=0); the quadratic term collects the accumulated variance
    log_base = np.log(df_pay / df_exp) - b * ((w1 - w2) / a + 0.5 * b * w2)
    coupons = np.full(pays.shape[0], strike / swap.freq)
    coupons[-1] += 1.0

    stdev = math.sqrt(max(w2, 0.0))
    if stdev < 1e-14:
        # deterministic limit: forward intrinsic
        value = max(1.0 - float(coupons @ np.exp(log_base)), 0.0) * df_exp
        return swap.notional * value

    # critical factor level where the coupon bond trades at par; the bond
    # is convex and strictly decreasing in x, so Newton converges globally
    x_star = 0.0
    for _ in range(100):
        disc_bonds = coupons * np.exp(log_base - b * x_star)
        g = float(disc_bonds.sum()) - 1.0
        gprime = -float((disc_bonds * b).sum())
        step = g / gprime
        x_star -= step
        if abs(step) <= 1e-14 * (1.0 + abs(x_star)):
            break
    else:
        raise RuntimeError("coupon-bond par level did not converge")

    bond_strikes = np.exp(log_base - b * x_star)
    sp = b * stdev
    h = np.log(df_pay / (df_exp * bond_strikes)) / sp + 0.5 * sp
    zbp = bond_strikes * df_exp * ndtr(-h + sp) - df_pay * ndtr(-h)
    return swap.notional * float(coupons @ zbp)


# ---------------------------------------------------------------------------
# Lattice
# ---------------------------------------------------------------------------


class _Step:
    __slots__ = ("idx", "pu", "pm", "pd", "left", "right")

    def __init__(self, idx, pu, pm, pd, left, right):
        self.idx = idx
        self.pu = pu
        self.pm = pm
        self.pd = pd
        self.left = left    # exp(-(x_i/2 + alpha_i) * dt), per source node
        self.right = right  # exp(-x_{i+1} * dt / 2), per destination node


class _Lattice:
    """Recombining trinomial grid for a driftless mean-reverting Gaussian factor.

    Slice ``i`` holds nodes ``x = j * dx[i]`` for ``j in [-top[i], top[i]]``.
    Each slice's spacing tracks the conditional step variance
    (``dx = sqrt(3 * var)``) and the next slice is sized to cover every
    conditional mean, so branch probabilities stay inside (0, 1) with no
    boundary truncation even under piecewise-constant volatility.

    Each step discounts at the trapezoidal average of the source and
    destination short rate (halving the step bias of endpoint
    discounting), and a per-step drift shift fitted by forward induction
    makes the lattice reprice the discount curve exactly at every slice.
    """

    def __init__(self, curve, a: float, dt: float, step_vols: np.ndarray):
        vols = np.asarray(step_vols, dtype=float)
        n = vols.shape[0]
        vmax = float(vols.max())
        if vmax <= 0.0:
            raise ValueError("lattice requires at least one positive step volatility")
        # Near-zero slabs would shrink the grid spacing and blow up the node
        # count without moving prices; floor them at 2% of the largest vol.
        vols = np.maximum(vols, 0.02 * vmax)
        decay = math.exp(-a * dt)
        step_var = vols**2 * (1.0 - math.exp(-2.0 * a * dt)) / (2.0 * a)

        self.dt = dt
        self.n_steps = n
        self.steps: list[_Step] = []
        self.tops = np.zeros(n + 1, dtype=int)
        self.dxs = np.zeros(n + 1)
        self.bond_errors = np.zeros(n + 1)

        dx_prev = 0.0
        top_prev = 0
        q = np.array([1.0])
        half_prev = np.array([1.0])  # exp(-x * dt / 2) on the current slice
        for i in range(n):
            var = float(step_var[i])
            dx = math.sqrt(3.0 * var)
            reach = top_prev * dx_prev * decay
            top = int(math.ceil(reach / dx - 1e-12)) + 1
            x = np.arange(-top_prev, top_prev + 1) * dx_prev
            mean = x * decay
            k = np.rint(mean / dx).astype(np.intp)
            eta = mean - k * dx
            ratio = (var + eta * eta) / (dx * dx)
            shift = eta / dx
            pu = 0.5 * (ratio + shift)
            pd = 0.5 * (ratio - shift)
            pm = 1.0 - pu - pd
            idx = k + top

            x_next = np.arange(-top, top + 1) * dx
            half_next = np.exp(-x_next * (0.5 * dt))
            branch_half = pd * half_next[idx - 1] + pm * half_next[idx] + pu * half_next[idx + 1]

            # drift fit: the slice shift makes the state prices reimburse
            # the curve's discount factor exactly at the next slice date
            p0_next = float(curve.df((i + 1) * dt))
            alpha = (math.log(float(q @ (half_prev * branch_half))) - math.log(p0_next)) / dt
            left = half_prev * math.exp(-alpha * dt)

            w = q * left
            width = 2 * top + 1
            q = half_next * (
                np.bincount(idx - 1, weights=w * pd, minlength=width)
                + np.bincount(idx, weights=w * pm, minlength=width)
                + np.bincount(idx + 1, weights=w * pu, minlength=width)
            )
            self.bond_errors[i + 1] = abs(float(q.sum()) - p0_next) / p0_next
            self.steps.append(_Step(idx, pu, pm, pd, left, half_next))
            self.tops[i + 1] = top
            self.dxs[i + 1] = dx
            dx_prev, top_prev, half_prev = dx, top, half_next

    def rollback(self, vals: np.ndarray, i: int) -> np.ndarray:
        """Discounted expectation of slice i+1 row-values back to slice i."""
        s = self.steps[i]
        scaled = vals * s.right
        out = s.pd * scaled[..., s.idx - 1] + s.pm * scaled[..., s.idx] + s.pu * scaled[..., s.idx + 1]
        out *= s.left
        return out


def _smoothed_positive_part(gain: np.ndarray, dx: float) -> np.ndarray:
    """Kink-corrected positive part of a node profile.

    ``gain`` holds exercise-minus-continuation values at the slice nodes.
    Lattice node masses are midpoint samples of the state-price density,
    so summing a raw kinked payoff against them aliases at O(dx^2). In
    the cell containing the kink the payoff is replaced by the cell
    average of its linearization minus the Bernoulli quadrature term
    ``slope * dx / 24``, which cancels the aliasing through O(dx^2) and
    matters most at short expiries where few steps resolve the
    distribution.
    """
    n = gain.shape[0]
    if n < 2:
        return np.maximum(gain, 0.0)
    slope = np.empty_like(gain)
    slope[1:-1] = (gain[2:] - gain[:-2]) / (2.0 * dx)
    slope[0] = (gain[1] - gain[0]) / dx
    slope[-1] = (gain[-1] - gain[-2]) / dx
    half = 0.5 * dx
    out = np.maximum(gain, 0.0)
    mid = np.abs(gain) < np.abs(slope) * half  # kink crosses inside the cell
    if np.any(mid):
        s = np.abs(slope[mid])
        out[mid] = (gain[mid] + s * half) ** 2 / (4.0 * s * half) - s * half / 12.0
    return out


@dataclass(eq=False)
class LatticeModel:
    """Calibrated one-factor Gaussian short-rate model for hedge pricing.

    ``sigmas[k]`` is the short-rate volatility on the slab
    ``(expiries[k-1], expiries[k]]`` (and past the last expiry); the
    lattice uses ``steps_per_quarter`` steps per payment period with
    constant mean reversion.
    """

    market: SwapMarket
    mean_reversion: float
    steps_per_quarter: int
    expiries: np.ndarray
    sigmas: np.ndarray

    def __post_init__(self):
        self.expiries = np.asarray(self.expiries, dtype=float)
        self.sigmas = np.asarray(self.sigmas, dtype=float)
        if self.expiries.shape != self.sigmas.shape:
            raise ValueError("expiries and sigmas must align")
        if self.mean_reversion <= 0.0:
            raise ValueError("mean reversion must be positive")
        if self.steps_per_quarter < 1:
            raise ValueError("need at least one lattice step per period")

    @property
    def dt(self) -> float:
        return (1.0 / self.market.swap.freq) / self.steps_per_quarter

    @property
    def n_steps(self) -> int:
        return self.market.swap.n_payments * self.steps_per_quarter

    @property
    def deterministic(self) -> bool:
        return bool(np.all(self.sigmas <= 1e-12))

    def step_vols(self) -> np.ndarray:
        """Per-step volatility, constant on each calibration slab."""
        mids = (np.arange(self.n_steps) + 0.5) * self.dt
        slab = np.searchsorted(self.expiries, mids)
        slab = np.minimum(slab, self.expiries.shape[0] - 1)
        return self.sigmas[slab]

    @cached_property
    def lattice(self) -> _Lattice:
        if self.deterministic:
            raise ValueError("deterministic model has no lattice")
        return _Lattice(self.market.curve, self.mean_reversion, self.dt, self.step_vols())

    def bond_reprice_errors(self) -> np.ndarray:
        """Relative discount-bond repricing error at every slice date."""
        return self.lattice.bond_errors

    def vol_integrals_at(self, expiry: float) -> tuple[float, float]:
        """Accumulated W1, W2 vol integrals at one calibration expiry."""
        a = self.mean_reversion
        w1 = w2 = 0.0
        prev = 0.0
        for t, s in zip(self.expiries, self.sigmas):
            if t > expiry + 1e-12:
                break
            w1, w2 = _slab_update(w1, w2, float(s), float(t - prev), a)
            prev = float(t)
        if abs(prev - expiry) > 1e-9:
            raise ValueError(f"{expiry} is not a calibration expiry of this model")
        return w1, w2


def hw_european_payer(model: LatticeModel, strike: float, expiry: float) -> float:
    """Closed-form model value of the co-terminal European payer at ``expiry``."""
    w1, w2 = model.vol_integrals_at(expiry)
    return _analytic_payer(model.market, model.mean_reversion, expiry, w1, w2, strike)


def calibrate(
    market: SwapMarket,
    strike: float,
    exercise_times,
    mean_reversion: float = 0.03,
    steps_per_quarter: int = 13,
    market_prices=None,
) -> LatticeModel:
    """Bootstrap the piecewise short-rate vol to the strike-K Europeans.

    Expiry by expiry, a one-dimensional root-find picks the slab vol so
    the model's co-terminal European payer at ``strike`` matches its
    market (Bachelier) price. ``market_prices`` overrides the Bachelier
    targets, aligned with the exercise dates.

    Raises
    ------
    CalibrationError
        If a target is unreachable: below the zero-vol floor left by
        earlier slabs, or above the bracket ceiling.
    """
    if mean_reversion <= 0.0:
        raise ValueError("mean reversion must be positive")
    expiries = np.asarray(sorted(float(t) for t in exercise_times))
    if expiries.shape[0] == 0:
        raise ValueError("need at least one exercise date to calibrate")
    maturity = market.swap.maturity
    if expiries[0] <= 0.0 or expiries[-1] >= maturity - 1e-12:
        raise ValueError("calibration expiries must lie strictly inside (0, maturity)")
    if market_prices is None:
        targets = [float(market.payer_price(strike, t)) for t in expiries]
    else:
        targets = [float(p) for p in market_prices]
        if len(targets) != expiries.shape[0]:
            raise ValueError("market price overrides must align with the exercise dates")

    a = mean_reversion
    sigmas = np.zeros(expiries.shape[0])
    w1 = w2 = 0.0
    prev = 0.0
    guess = 0.01
    for k, (t, target) in enumerate(zip(expiries, targets)):
        dt = float(t - prev)

        def model_price(sigma: float) -> float:
            w1_k, w2_k = _slab_update(w1, w2, sigma, dt, a)
            return _analytic_payer(market, a, float(t), w1_k, w2_k, strike)

        floor = model_price(0.0)
        tol = max(1e-3 * target, 1e-13 * market.swap.notional)
        if floor > target + tol:
            raise CalibrationError(
                f"European at expiry {t:g} is unreachable: zero-vol floor "
                f"{floor:.6e} exceeds the market price {target:.6e}"
            )
        if floor >= target - tol and target <= floor + tol:
            sigma = 0.0
        else:
            # slab vols barely move between expiries; bracket around the
            # previous solution first and widen only if needed
            lo, hi = 0.0, guess
            while model_price(hi) < target and hi < 4.0:
                lo, hi = hi, hi * 2.0
            if model_price(hi) < target:
                raise CalibrationError(
                    f"vol bracket exhausted at expiry {t:g}: "
                    f"cannot reach the market price {target:.6e}"
                )
            sigma = brentq(
                lambda s: model_price(s) - target, lo, hi, xtol=1e-11, rtol=4e-15
            )
            guess = max(2.0 * sigma, 1e-4)
        sigmas[k] = sigma
        w1, w2 = _slab_update(w1, w2, float(sigma), dt, a)
        prev = float(t)

    return LatticeModel(
        market=market,
        mean_reversion=mean_reversion,
        steps_per_quarter=steps_per_quarter,
        expiries=expiries,
        sigmas=sigmas,
    )


def _slice_index(model: LatticeModel, t: float) -> int:
    idx = int(round(t / model.dt))
    if abs(idx * model.dt - t) > 1e-9 * max(1.0, model.market.swap.maturity):
        raise ValueError(f"date {t} does not lie on the lattice grid")
    return idx


def _deterministic_value(market: SwapMarket, strike: float, exercise_times) -> float:
    """Zero-vol limit: the best deterministic exercise of the payer."""
    curve, swap = market.curve, market.swap
    best = 0.0
    for t in exercise_times:
        a0 = annuity(curve, float(t), swap.maturity, swap.freq)
        value = (float(curve.df(t)) - float(curve.df(swap.maturity))) - strike * a0
        best = max(best, value)
    return swap.notional * best


def _rollback_swap_rows(model: LatticeModel, strike: float, exercise_slices: set[int]):
    """Backward induction carrying (option, unit annuity, terminal bond) rows.

    The annuity and terminal-bond rows value the remaining swap at any
    node via ``(1 - bond) - K * annuity``, which keeps exercise values
    consistent with the lattice's own discounting.
    """
    lat = model.lattice
    swap = model.market.swap
    spq = model.steps_per_quarter
    n = lat.n_steps
    pay_slices = {j * spq for j in range(1, swap.n_payments + 1)}
    coupon = 1.0 / swap.freq

    vals = np.zeros((3, 2 * lat.tops[n] + 1))
    vals[2] = 1.0  # bond principal at maturity
    for i in range(n - 1, -1, -1):
        if (i + 1) in pay_slices:
            vals[1] += coupon
        vals = lat.rollback(vals, i)
        if i in exercise_slices:
            exercise = (1.0 - vals[2]) - strike * vals[1]
            vals[0] += _smoothed_positive_part(exercise - vals[0], float(lat.dxs[i]))
    return vals


def price_bermudan(model: LatticeModel, hedge: HedgeSpec) -> float:
    """Time-0 value of the Bermudan payer hedge on the calibrated lattice."""
    market = model.market
    if model.deterministic:
        return _deterministic_value(market, hedge.strike, hedge.exercise_times)
    exercise_slices = {_slice_index(model, t) for t in hedge.exercise_times}
    if any(i <= 0 or i > model.n_steps for i in exercise_slices):
        raise ValueError("exercise dates must lie in (0, maturity]")
    vals = _rollback_swap_rows(model, hedge.strike, exercise_slices)
    return market.swap.notional * float(vals[0, 0])


def price_europeans(model: LatticeModel, strike: float, expiries) -> np.ndarray:
    """Lattice values of the co-terminal European payers, one per expiry.

    All options are valued in a single backward pass; option row r is
    set to its exercise value at its own expiry slice and only
    discounted before that.
    """
    market = model.market
    expiries = [float(t) for t in expiries]
    if model.deterministic:
        return np.array(
            [_deterministic_value(market, strike, [t]) for t in expiries]
        )
    lat = model.lattice
    swap = market.swap
    spq = model.steps_per_quarter
    n = lat.n_steps
    pay_slices = {j * spq for j in range(1, swap.n_payments + 1)}
    slice_of = {_slice_index(model, t): r for r, t in enumerate(expiries)}
    coupon = 1.0 / swap.freq
    m = len(expiries)

    vals = np.zeros((m + 2, 2 * lat.tops[n] + 1))
    vals[m + 1] = 1.0  # bond row; row m is the unit annuity
    for i in range(n - 1, -1, -1):
        if (i + 1) in pay_slices:
            vals[m] += coupon
        vals = lat.rollback(vals, i)
        if i in slice_of:
            r = slice_of[i]
            exercise = (1.0 - vals[m + 1]) - strike * vals[m]
            vals[r] = _smoothed_positive_part(exercise, float(lat.dxs[i]))
    return swap.notional * vals[:m, 0]


def make_bermudan_pricer(
    market: SwapMarket,
    exercise_times,
    mean_reversion: float = 0.03,
    steps_per_quarter: int = 13,
    cache: dict | None = None,
):
    """Memoized K -> B(K) pricer; every strike gets its own calibration."""
    exercise_times = tuple(float(t) for t in exercise_times)
    store = cache if cache is not None else {}

    def price(strike: float) -> float:
        key = round(float(strike), 12)
        if key not in store:
            model = calibrate(
                market, key, exercise_times, mean_reversion, steps_per_quarter
            )
            store[key] = price_bermudan(model, HedgeSpec(key, exercise_times))
        return store[key]

    return price
