import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wwcva.credit import CreditSpec, hazard_from_cds, marginals
from wwcva.engine import (
    candidate_strikes,
    cva_total,
    expected_shortfall,
    fv_interval,
    golden_minimize,
    implied_assignment,
    optimize_strike,
    savings,
    wc_interval,
    _refine_bracket,
)
from wwcva.exposure import build_exposure_set
from wwcva.market import SwapMarket
from wwcva.oracle import lp_max


THIRDS = np.array([1 / 3, 1 / 3, 1 / 3])


class TestExpectedShortfall:
    def test_top_scenario_fills_tail(self):
        assert expected_shortfall([10, 5, 1], THIRDS, 1 / 3) == pytest.approx(10.0, abs=1e-12)

    def test_full_distribution_mean(self):
        assert expected_shortfall([10, 5, 1], THIRDS, 1.0) == pytest.approx(16 / 3, abs=1e-12)

    def test_fractional_boundary_split(self):
        got = expected_shortfall([10, 5, 1], THIRDS, 0.5)
        assert got == pytest.approx((10 / 3 + 5 / 6) / 0.5, abs=1e-12)
        assert got == pytest.approx(25 / 3, abs=1e-12)

    def test_order_independent(self):
        a = expected_shortfall([1, 10, 5], THIRDS, 0.4)
        b = expected_shortfall([10, 5, 1], THIRDS, 0.4)
        assert a == pytest.approx(b, abs=1e-14)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            expected_shortfall([1.0], [1.0], 0.0)
        with pytest.raises(ValueError):
            expected_shortfall([1.0], [1.0], -0.5)
        with pytest.raises(ValueError):
            expected_shortfall([1.0, 2.0], [0.5, -0.5], 0.5)

    def test_beyond_total_mass_clamps_to_mean(self):
        got = expected_shortfall([10, 5, 1], THIRDS, 1.5)
        assert got == pytest.approx(16 / 3, abs=1e-12)

    @given(
        n=st.integers(2, 8),
        seed=st.integers(0, 5_000),
        q=st.floats(0.01, 1.0),
    )
    @settings(max_examples=100, deadline=None)
    def test_equals_lp_optimum(self, n, seed, q):
        rng = np.random.default_rng(seed)
        values = rng.lognormal(0.0, 1.0, n)
        weights = rng.dirichlet(np.ones(n))
        obj, _ = lp_max(values, weights, q)
        assert q * expected_shortfall(values, weights, q) == pytest.approx(obj, abs=1e-12)


class TestImpliedAssignment:
    def test_marginal_and_bounds(self):
        rng = np.random.default_rng(0)
        values = rng.lognormal(0.0, 1.0, 50)
        weights = rng.dirichlet(np.ones(50))
        assignment = implied_assignment(values, weights, 0.07)
        assignment.check(tol=1e-12)
        es = expected_shortfall(values, weights, 0.07)
        assert assignment.objective(values) == pytest.approx(0.07 * es, abs=1e-12)

    def test_check_catches_violations(self):
        assignment = implied_assignment([3.0, 2.0, 1.0], THIRDS, 0.5)
        assignment.probs[1] += 1e-6  # boundary scenario: stays under its weight cap
        with pytest.raises(ValueError, match="marginal"):
            assignment.check(tol=1e-12)
        clipped = implied_assignment([3.0, 2.0, 1.0], THIRDS, 0.5)
        clipped.probs[0] += 1e-6  # fully-filled scenario: breaches the weight cap
        with pytest.raises(ValueError, match="exceed"):
            clipped.check(tol=1e-12)


class TestWcInterval:
    def test_single_day_reduces_to_plain_shortfall(self):
        values, weights = [10.0, 5.0], [0.5, 0.5]
        got = wc_interval(values, weights, 0.6, days=1)
        assert got == pytest.approx(0.6 * expected_shortfall(values, weights, 0.6), abs=1e-14)
        assert got == pytest.approx(5.5, abs=1e-12)

    def test_finer_granularity_increases_value(self):
        values, weights = [10.0, 5.0], [0.5, 0.5]
        assert wc_interval(values, weights, 0.6, days=2) == pytest.approx(6.0, abs=1e-12)

    def test_degenerate_point_is_granularity_free(self):
        for days in (1, 5, 63):
            got = wc_interval([7.0], [1.0], 0.3, days=days)
            assert got == pytest.approx(0.3 * 7.0, abs=1e-14)

    def test_zero_marginal(self):
        assert wc_interval([1.0, 2.0], [0.5, 0.5], 0.0, days=63) == 0.0

    def test_days_validated(self):
        with pytest.raises(ValueError):
            wc_interval([1.0], [1.0], 0.5, days=0)


class TestFvInterval:
    def test_max_volatility_equals_worst_case(self):
        rng = np.random.default_rng(5)
        values = rng.lognormal(0.0, 1.0, 30)
        weights = rng.dirichlet(np.ones(30))
        for days in (1, 63):
            fv = fv_interval(values, weights, 0.02, 1.0, days=days)
            wc = wc_interval(values, weights, 0.02, days=days)
            assert fv == pytest.approx(wc, abs=1e-12)

    def test_zero_volatility_is_flat(self):
        values, weights = np.array([10.0, 5.0]), np.array([0.5, 0.5])
        fv = fv_interval(values, weights, 0.2, 0.0, days=4)
        assert fv == pytest.approx(0.2 * 7.5, abs=1e-14)

    def test_half_volatility_example(self):
        got = fv_interval([10.0, 5.0], [0.5, 0.5], 0.2, 0.5, days=1)
        assert got == pytest.approx(1.75, abs=1e-12)
        flat = fv_interval([10.0, 5.0], [0.5, 0.5], 0.2, 0.0, days=1)
        hi = fv_interval([10.0, 5.0], [0.5, 0.5], 0.2, 1.0, days=1)
        assert flat < got < hi

    def test_matches_two_level_lp_oracle(self):
        # brute force: the tail integral the high level rides on is itself
        # the bounded-variable LP optimum at the daily quantile
        rng = np.random.default_rng(9)
        values = rng.lognormal(0.0, 1.0, 6)
        weights = rng.dirichlet(np.ones(6))
        q_s, nu, days = 0.1, 0.7, 2
        q_d = q_s / days
        tail, _ = lp_max(values, weights, q_d)
        mean = float(values @ weights)
        p_hi = q_d + (1 - q_d) * nu
        p_lo = q_d * (1 - nu)
        expected = days * (p_hi * tail + p_lo * (mean - tail))
        got = fv_interval(values, weights, q_s, nu, days=days)
        assert got == pytest.approx(expected, abs=1e-12)

    def test_monotone_in_nu(self):
        rng = np.random.default_rng(13)
        values = rng.lognormal(0.0, 1.0, 25)
        weights = rng.dirichlet(np.ones(25))
        vals = [fv_interval(values, weights, 0.05, nu, days=21) for nu in np.linspace(0, 1, 11)]
        assert all(b >= a - 1e-14 for a, b in zip(vals, vals[1:]))


class TestCvaTotal:
    def test_no_default_risk(self, market10, exposures10):
        margs = marginals(0.0, market10.stopping_dates())
        assert cva_total(exposures10, margs, 1.0, 0.4) == 0.0

    def test_full_recovery(self, market10, exposures10):
        margs = marginals(0.05, market10.stopping_dates())
        assert cva_total(exposures10, margs, 1.0, 1.0) == 0.0

    def test_single_point_collapse(self):
        from wwcva.credit import DefaultMarginals
        from wwcva.exposure import ExposureDistribution

        dist = ExposureDistribution.point(0.25, 0.0)
        dist.values = np.array([4.0])
        margs = DefaultMarginals(
            starts=np.array([0.0]), ends=np.array([0.25]),
            q=np.array([0.02]), days=np.array([1]),
        )
        got = cva_total([dist], margs, 1.0, 0.4)
        assert got == pytest.approx(0.6 * 0.02 * 4.0, abs=1e-14)

    def test_nu_limits(self, market10, exposures10):
        margs = marginals(hazard_from_cds(CreditSpec(0.01)), market10.stopping_dates())
        hi = cva_total(exposures10, margs, 1.0, 0.4)
        naive = 0.6 * sum(
            wc_interval(d.values, d.weights, float(q), int(n))
            for d, q, n in zip(exposures10, margs.q, margs.days)
        )
        assert hi == pytest.approx(naive, abs=1e-10)
        flat = cva_total(exposures10, margs, 0.0, 0.4)
        no_wwr = 0.6 * sum(float(q) * d.mean() for d, q in zip(exposures10, margs.q))
        assert flat == pytest.approx(no_wwr, abs=1e-10)

    def test_monotone_in_nu_spread_and_cap(self, market10, exposures10):
        grid = market10.stopping_dates()
        atm = market10.atm_rate()
        base = marginals(hazard_from_cds(CreditSpec(0.02)), grid)

        by_nu = [cva_total(exposures10, base, nu, 0.4) for nu in (0.0, 0.25, 0.5, 0.75, 1.0)]
        assert all(b >= a - 1e-14 for a, b in zip(by_nu, by_nu[1:]))

        by_spread = [
            cva_total(exposures10, marginals(hazard_from_cds(CreditSpec(s)), grid), 0.7, 0.4)
            for s in (0.0, 0.005, 0.01, 0.02, 0.05, 0.10)
        ]
        assert all(b >= a - 1e-14 for a, b in zip(by_spread, by_spread[1:]))

        by_cap = [
            cva_total(exposures10, base, 1.0, 0.4, cap=atm + d)
            for d in (0.005, 0.01, 0.02, 0.05, 0.10)
        ]
        assert all(b >= a - 1e-14 for a, b in zip(by_cap, by_cap[1:]))
        # a cap beyond the density range reproduces the unhedged value
        assert by_cap[-1] <= cva_total(exposures10, base, 1.0, 0.4) + 1e-14

    def test_grid_mismatch_rejected(self, market10, exposures10):
        margs = marginals(0.02, market10.stopping_dates()[:-1])
        with pytest.raises(ValueError, match="grid"):
            cva_total(exposures10, margs, 1.0, 0.4)


class TestStrikeSearch:
    def test_refine_bracket(self):
        strikes = np.array([1.0, 2.0, 3.0])
        assert _refine_bracket(strikes, np.array([5.0, 3.0, 4.0])) == (1.0, 3.0)
        assert _refine_bracket(strikes, np.array([1.0, 3.0, 4.0])) == (1.0, 2.0)
        assert _refine_bracket(strikes, np.array([5.0, 3.0, 2.0])) == (2.0, 3.0)

    def test_golden_minimize(self):
        x, fx = golden_minimize(lambda x: (x - 0.3) ** 2, 0.0, 1.0, tol=1e-4)
        assert abs(x - 0.3) < 1e-3
        assert fx < 1e-6

    def test_candidate_strikes_span(self, market10):
        ks = candidate_strikes(market10, 25, 6.0)
        assert ks[0] == pytest.approx(market10.swap.fixed_rate)
        assert ks[-1] == pytest.approx(
            market10.atm_rate() + 6.0 * market10.normal_vol * math.sqrt(10.0)
        )
        assert np.any(np.isclose(ks, market10.atm_rate(), atol=1e-12))


class TestOptimizeStrike:
    def test_zero_spread_prefers_cheapest_option(self, market10, exposures10):
        calls = []

        def fake_bermudan(k):
            calls.append(k)
            return 0.2 - k  # strictly decreasing in strike

        report = optimize_strike(
            market10, CreditSpec(0.0), 1.0,
            exposures=exposures10, bermudan_price_fn=fake_bermudan,
        )
        hi = candidate_strikes(market10, 25, 6.0)[-1]
        assert report.optimal_strike == pytest.approx(hi, abs=2e-3)
        assert report.unhedged == 0.0
        assert report.optimal_total == 0.0  # no CVA: not hedging costs nothing
        assert not report.hedged
        assert not report.savings_defined and report.savings == 0.0

    def test_free_options_cap_everything(self, market10, exposures10):
        report = optimize_strike(
            market10, CreditSpec(0.01), 1.0,
            exposures=exposures10, bermudan_price_fn=lambda k: 0.0,
        )
        lo = market10.swap.fixed_rate
        assert report.optimal_strike == pytest.approx(lo, abs=1e-12)
        assert report.optimal_total == pytest.approx(0.0, abs=1e-12)
        assert report.savings == pytest.approx(1.0, abs=1e-9)

    def test_report_invariants(self, market10, exposures10):
        report = optimize_strike(
            market10, CreditSpec(0.02), 0.8,
            exposures=exposures10, bermudan_price_fn=lambda k: 0.002,
        )
        assert report.optimal_total <= report.unhedged + 1e-15
        assert 0.0 <= report.savings <= 1.0
        assert report.no_wwr <= report.unhedged + 1e-15
        assert np.all(np.diff(report.strikes) > 0)
        assert report.total == pytest.approx(report.capped + report.bermudan)
        idx = int(np.argmin(report.total))
        assert report.optimal_strike == pytest.approx(float(report.strikes[idx]))
        assert savings(report) == pytest.approx(report.savings, abs=1e-15)

    def test_uncapped_sentinel_never_beaten(self, market10, exposures10):
        # expensive fake options: hedging never pays, sentinel wins
        report = optimize_strike(
            market10, CreditSpec(0.01), 1.0,
            exposures=exposures10, bermudan_price_fn=lambda k: 1.0,
        )
        assert not report.hedged
        assert report.optimal_total == pytest.approx(report.unhedged, abs=1e-15)
        assert report.savings == 0.0

    def test_all_zero_exposure_returns_zero_report(self, market10):
        # fixed rate far above the density range: the swap is never in the money
        market = SwapMarket.build(0.02, 0.007, maturity=10.0, fixed_rate=0.30)
        exposures = build_exposure_set(market, buckets=60)
        report = optimize_strike(
            market, CreditSpec(0.01), 1.0,
            exposures=exposures, bermudan_price_fn=lambda k: 0.0,
        )
        assert report.unhedged == 0.0
        assert report.optimal_total == 0.0
        assert math.isnan(report.optimal_strike)
        assert report.strikes.size == 0
