import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wwcva.engine import expected_shortfall
from wwcva.oracle import (
    SmallInstance,
    best_permutation,
    lp_max,
    random_instances,
)


class TestLpMax:
    def test_greedy_fill_example(self):
        obj, p = lp_max([10.0, 5.0, 1.0], [1 / 3, 1 / 3, 1 / 3], 1 / 3)
        assert obj == pytest.approx(10 / 3, abs=1e-12)
        assert p[0] == pytest.approx(1 / 3, abs=1e-15)
        assert p[1] == p[2] == 0.0

    def test_full_mass_gives_mean(self):
        obj, _ = lp_max([10.0, 5.0, 1.0], [1 / 3, 1 / 3, 1 / 3], 1.0)
        assert obj == pytest.approx(16 / 3, abs=1e-12)

    def test_fractional_boundary(self):
        obj, p = lp_max([10.0, 5.0, 1.0], [1 / 3, 1 / 3, 1 / 3], 0.5)
        assert obj == pytest.approx(10 / 3 + (0.5 - 1 / 3) * 5.0, abs=1e-12)
        assert p[1] == pytest.approx(0.5 - 1 / 3, abs=1e-14)

    def test_infeasible(self):
        with pytest.raises(ValueError, match="infeasible"):
            lp_max([1.0, 2.0], [0.3, 0.3], 0.9)

    def test_matches_expected_shortfall_identity(self):
        for inst in random_instances(seed=7, count=50, max_n=8):
            values = np.array(inst.values)
            weights = np.array(inst.weights)
            obj, _ = lp_max(values, weights, inst.q)
            es = inst.q * expected_shortfall(values, weights, inst.q)
            assert obj == pytest.approx(es, abs=1e-12)

    @given(
        n=st.integers(2, 8),
        seed=st.integers(0, 10_000),
        q=st.floats(0.02, 1.0),
    )
    @settings(max_examples=100, deadline=None)
    def test_simplex_greedy_agreement_property(self, n, seed, q):
        rng = np.random.default_rng(seed)
        values = rng.lognormal(0.0, 1.0, n)
        weights = rng.dirichlet(np.ones(n))
        obj, p = lp_max(values, weights, q)  # raises if the two routes disagree
        assert np.all(p >= -1e-15)
        assert np.all(p <= weights + 1e-12)
        assert p.sum() == pytest.approx(q, abs=1e-12)


class TestBestPermutation:
    def test_sorted_example(self):
        obj, perm = best_permutation([10.0, 5.0, 1.0], [0.6, 0.1, 0.1], [1 / 3] * 3)
        assert obj == pytest.approx(2.2, abs=1e-12)
        assert perm[0] == 0  # biggest dp level onto the biggest exposure

    def test_all_equal_levels_tie(self):
        obj, _ = best_permutation([10.0, 5.0, 1.0], [0.2, 0.2, 0.2], [1 / 3] * 3)
        assert obj == pytest.approx(0.2 * 16 / 3, abs=1e-12)

    def test_two_scenarios(self):
        obj, _ = best_permutation([2.0, 1.0], [0.9, 0.1], [0.5, 0.5])
        assert obj == pytest.approx(0.95, abs=1e-12)
        crossed = 0.5 * (0.1 * 2.0 + 0.9 * 1.0)
        assert crossed == pytest.approx(0.55, abs=1e-15)
        assert obj > crossed

    def test_size_limit(self):
        with pytest.raises(ValueError):
            best_permutation(list(range(8)), [0.1] * 8, [0.125] * 8)

    def test_sorted_optimal_on_random_instances(self):
        for inst in random_instances(seed=11, count=50, max_n=7, with_dp=True):
            # best_permutation raises internally if sorting is ever beaten
            obj, perm = best_permutation(inst.values, inst.dp_levels, inst.weights)
            assert len(perm) == len(inst.values)


class TestSmallInstance:
    def test_validation(self):
        with pytest.raises(ValueError):
            SmallInstance(values=(1.0,) * 9, weights=(1 / 9,) * 9, q=0.5)
        with pytest.raises(ValueError):
            SmallInstance(values=(1.0, 2.0), weights=(0.5,), q=0.5)
        with pytest.raises(ValueError):
            SmallInstance(values=(1.0, 2.0), weights=(0.5, 0.5), q=0.0)

    def test_digest_deterministic(self):
        a = random_instances(seed=3, count=5, max_n=6)
        b = random_instances(seed=3, count=5, max_n=6)
        assert [i.digest() for i in a] == [i.digest() for i in b]
        c = random_instances(seed=4, count=5, max_n=6)
        assert [i.digest() for i in a] != [i.digest() for i in c]
