"""Count-Min superset sketch and the dyadic search variant."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sketchrec.countmin import CmConstants, CountMinG3, DyadicG3
from sketchrec.streams import exact_heavy_hitters, gen_zipf, materialize


class TestSizing:
    def test_reference_dimensions_frozen(self):
        sk = CountMinG3(n=1 << 16, eps=0.05, delta=1e-3)
        assert sk.rows == 60
        assert sk.buckets == 400
        assert sk.independence == 600
        assert sk.list_size == 620

    def test_vanishing_failure_budget_adds_no_rows(self):
        # delta -> 1 kills the additive eps*log2(1/delta) term entirely
        near_one = CountMinG3(n=1 << 16, eps=0.05, delta=1.0 - 1e-14)
        assert near_one.rows == 59

    def test_uniform_budget_matches_binomial(self):
        sk = CountMinG3(n=64, eps=0.25, delta=0.5, uniform=True)
        assert sk.delta is None
        expect = math.log2(math.comb(64, 4))
        assert sk.log2_inv_delta == pytest.approx(expect)

    def test_promise_reduces_rows(self):
        full = CountMinG3(n=1 << 16, eps=0.05, delta=1e-3)
        prom = CountMinG3(n=1 << 16, eps=0.05, delta=1e-3, promise_m=64)
        assert prom.rows < full.rows
        assert prom.buckets == full.buckets

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            CountMinG3(n=64, eps=0.75, delta=0.1)
        with pytest.raises(ValueError):
            CountMinG3(n=64, eps=0.0, delta=0.1)
        with pytest.raises(ValueError):
            CountMinG3(n=3, eps=0.25, delta=0.1)
        with pytest.raises(ValueError):
            CountMinG3(n=64, eps=0.25, delta=0.0)
        with pytest.raises(ValueError):
            CountMinG3(n=64, eps=0.25, delta=0.1, k=0)

    def test_constants_override(self):
        fat = CmConstants(bucket_factor=40.0)
        sk = CountMinG3(n=256, eps=0.25, delta=0.1, constants=fat)
        assert sk.buckets == math.ceil(40.0 / 0.25)


class TestEstimates:
    def _sketch(self, seed=0):
        return CountMinG3(n=256, eps=0.25, delta=0.1, seed=seed)

    def test_overestimation_on_strict_streams(self):
        rng = np.random.default_rng(42)
        for _ in range(20):
            stream = gen_zipf(256, 1.2, 400, "strict", rng)
            sk = self._sketch(seed=rng)
            x = sk.absorb_stream(stream)
            est = sk.estimates_for(np.arange(256))
            assert np.all(est >= x - 1e-9)

    def test_estimates_for_matches_point_estimate(self):
        rng = np.random.default_rng(7)
        sk = self._sketch(seed=3)
        sk.absorb_vector(rng.integers(0, 5, size=256).astype(float))
        idx = np.arange(256, dtype=np.int64)
        est = sk.estimates_for(idx)
        for i in [0, 17, 100, 255]:
            assert est[i] == sk.point_estimate(i)

    def test_absorb_vector_equals_updates(self):
        rng = np.random.default_rng(11)
        x = np.zeros(256)
        x[rng.choice(256, size=40, replace=False)] = rng.normal(size=40)
        a = self._sketch(seed=5)
        b = self._sketch(seed=5)
        a.absorb_vector(x)
        for i in np.flatnonzero(x):
            b.update(int(i), float(x[i]))
        np.testing.assert_allclose(a.counters, b.counters, atol=1e-9)

    def test_query_ties_break_to_lowest_index(self):
        sk = self._sketch()
        # empty sketch: every estimate is zero, stable sort keeps index order
        out = sk.query()
        assert out.size == sk.list_size
        np.testing.assert_array_equal(out, np.arange(sk.list_size))

    def test_query_promise_subsets(self):
        rng = np.random.default_rng(13)
        sk = self._sketch(seed=9)
        sk.absorb_vector(rng.integers(0, 4, size=256).astype(float))
        cand = np.array([3, 50, 200], dtype=np.int64)
        out = sk.query_promise(cand)
        assert set(out.tolist()) == set(cand.tolist())
        assert sk.query_promise(np.empty(0, dtype=np.int64)).size == 0

    def test_survivors_match_full_scan(self):
        rng = np.random.default_rng(17)
        sk = self._sketch(seed=21)
        x = materialize(gen_zipf(256, 1.1, 600, "strict", rng))
        sk.absorb_vector(x)
        est = sk.estimates_for(np.arange(256))
        for thresh in [0.5, np.median(est), float(est.max())]:
            surv, smin = sk.survivors_above(thresh)
            expect = np.flatnonzero(est >= thresh)
            np.testing.assert_array_equal(np.sort(surv), expect)
            order = np.argsort(surv)
            np.testing.assert_allclose(smin[order], est[expect])

    def test_contains_in_top_agrees_with_query(self):
        rng = np.random.default_rng(23)
        hits = 0
        for _ in range(10):
            stream = gen_zipf(256, 1.3, 800, "strict", rng)
            sk = self._sketch(seed=rng)
            x = sk.absorb_stream(stream)
            thresh = 0.25 * np.abs(x).sum()
            heavy = exact_heavy_hitters(x, 0.25, p=1)
            listed = set(sk.query().tolist())
            want = all(int(i) in listed for i in heavy)
            assert sk.contains_in_top(heavy, thresh) == want
            hits += want
        assert hits == 10

    def test_contains_in_top_empty_targets(self):
        sk = self._sketch()
        assert sk.contains_in_top(np.empty(0, dtype=np.int64), 1.0)

    @given(
        values=st.lists(st.integers(min_value=0, max_value=9), min_size=32, max_size=32),
        seed=st.integers(min_value=0, max_value=2**16),
    )
    @settings(max_examples=25, deadline=None)
    def test_overestimation_property(self, values, seed):
        x = np.array(values, dtype=float)
        sk = CountMinG3(n=32, eps=0.5, delta=0.1, seed=seed)
        sk.absorb_vector(x)
        est = sk.estimates_for(np.arange(32))
        assert np.all(est >= x - 1e-9)


class TestDyadic:
    def test_structure_frozen(self):
        dy = DyadicG3(n=1 << 16, eps=0.05, delta=1e-2)
        assert dy.depth == 16
        assert dy.width == 620
        assert dy.first_level == 10
        assert sorted(dy.sketches) == list(range(10, 17))
        assert dy.level_delta == pytest.approx(
            1e-2 / (4.0 * math.log2(0.05 * (1 << 16)))
        )

    def test_rejects_non_power_of_two(self):
        with pytest.raises(ValueError):
            DyadicG3(n=100, eps=0.1, delta=0.1)

    def test_level_vector_sums_blocks(self):
        rng = np.random.default_rng(29)
        dy = DyadicG3(n=256, eps=0.25, delta=0.1)
        x = rng.normal(size=256)
        for level in [2, 5, 8]:
            y = dy.level_vector(x, level)
            block = 256 >> level
            expect = np.array([x[j * block : (j + 1) * block].sum() for j in range(1 << level)])
            np.testing.assert_allclose(y, expect)

    def test_update_equals_absorb_vector(self):
        rng = np.random.default_rng(31)
        x = np.zeros(256)
        x[rng.choice(256, size=30, replace=False)] = rng.integers(1, 6, size=30)
        a = DyadicG3(n=256, eps=0.25, delta=0.1, seed=4)
        b = DyadicG3(n=256, eps=0.25, delta=0.1, seed=4)
        a.absorb_vector(x)
        for i in np.flatnonzero(x):
            b.update(int(i), float(x[i]))
        for level in a.sketches:
            np.testing.assert_allclose(
                a.sketches[level].counters, b.sketches[level].counters, atol=1e-9
            )

    def test_update_bounds_checked(self):
        dy = DyadicG3(n=256, eps=0.25, delta=0.1)
        with pytest.raises(IndexError):
            dy.update(256, 1.0)
        with pytest.raises(IndexError):
            dy.update(-1, 1.0)

    def test_query_contains_heavy_hitters(self):
        rng = np.random.default_rng(37)
        for _ in range(10):
            stream = gen_zipf(1024, 1.4, 1500, "strict", rng)
            dy = DyadicG3(n=1024, eps=0.1, delta=0.05, seed=rng)
            x = dy.absorb_stream(stream)
            heavy = exact_heavy_hitters(x, 0.1, p=1)
            out = set(dy.query().tolist())
            assert all(int(i) in out for i in heavy)
            assert len(out) <= dy.width
