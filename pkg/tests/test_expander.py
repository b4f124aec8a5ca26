"""Polynomial-powering expanders and the deterministic heavy-hitter sketch."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sketchrec.expander import (
    DetHHSketch,
    GUVParams,
    find_irreducible,
    guv_neighbor,
    left_poly,
    neighbor_table,
    poly_add,
    poly_eval,
    poly_is_irreducible,
    poly_mod,
    poly_mul,
    poly_pow_mod,
    right_index,
    suggest_params,
    verify_expansion,
)
from sketchrec.streams import exact_heavy_hitters

_coeff = st.lists(st.integers(min_value=0, max_value=6), min_size=0, max_size=5)


def _naive_mul(u, v, q):
    out = [0] * (len(u) + len(v) or 1)
    for i, a in enumerate(u):
        for j, b in enumerate(v):
            out[i + j] = (out[i + j] + a * b) % q
    while out and out[-1] == 0:
        out.pop()
    return tuple(out)


class TestPolyOps:
    def test_add_examples(self):
        assert poly_add((1, 2), (3, 4), 7) == (4, 6)
        assert poly_add((1, 6), (0, 1), 7) == (1,)
        assert poly_add((), (), 7) == ()

    def test_mul_example(self):
        # (x + 1)(x + 2) = x^2 + 3x + 2 over F_7
        assert poly_mul((1, 1), (2, 1), 7) == (2, 3, 1)
        assert poly_mul((), (1, 1), 7) == ()

    def test_eval_horner(self):
        # 3 + 2y + y^2 at y = 4 over F_7: 3 + 8 + 16 = 27 = 6
        assert poly_eval((3, 2, 1), 4, 7) == 6
        assert poly_eval((), 4, 7) == 0

    def test_mod_reduces_degree(self):
        m = (1, 0, 1)  # x^2 + 1 over F_7
        r = poly_mod((0, 0, 0, 0, 1), m, 7)  # x^4 = (x^2)^2 = 1 mod m
        assert r == (1,)

    def test_mod_zero_modulus(self):
        with pytest.raises(ZeroDivisionError):
            poly_mod((1, 1), (), 7)

    def test_pow_matches_repeated_mul(self):
        m = (1, 1, 1)
        f = (2, 3)
        acc = (1,)
        for e in range(6):
            assert poly_pow_mod(f, e, m, 7) == poly_mod(acc, m, 7)
            acc = poly_mul(acc, f, 7)

    @given(u=_coeff, v=_coeff)
    @settings(max_examples=60, deadline=None)
    def test_mul_matches_naive(self, u, v):
        assert poly_mul(tuple(u), tuple(v), 7) == _naive_mul(u, v, 7)

    @given(u=_coeff, m=st.lists(st.integers(min_value=0, max_value=6), min_size=2, max_size=4))
    @settings(max_examples=60, deadline=None)
    def test_mod_is_a_remainder(self, u, m):
        m = tuple(m)
        stripped = m
        while stripped and stripped[-1] == 0:
            stripped = stripped[:-1]
        if not stripped:
            return
        r = poly_mod(tuple(u), m, 7)
        assert len(r) < len(stripped) or len(stripped) == 1
        # u - r must be a multiple of m: reducing it leaves nothing
        neg_r = tuple((-c) % 7 for c in r)
        assert poly_mod(poly_add(tuple(u), neg_r, 7), m, 7) == ()

    def test_irreducibility_known_cases(self):
        assert poly_is_irreducible((1, 1, 1), 2)  # x^2 + x + 1
        assert not poly_is_irreducible((1, 0, 1), 2)  # (x + 1)^2
        assert poly_is_irreducible((1, 0, 1), 3)
        assert poly_is_irreducible((5, 1), 7)
        assert not poly_is_irreducible((3,), 7)
        with pytest.raises(ValueError):
            poly_is_irreducible((1,) * 8, 2)

    def test_find_irreducible(self):
        for q, a in [(2, 2), (5, 3), (13, 2)]:
            e = find_irreducible(q, a, seed=3)
            assert len(e) == a + 1 and e[-1] == 1
            assert poly_is_irreducible(e, q)
        with pytest.raises(ValueError):
            find_irreducible(10, 2)


class TestGraph:
    def _params(self):
        return GUVParams(q=7, a=2, c=3, h=2)

    def test_params_validation(self):
        with pytest.raises(ValueError):
            GUVParams(q=9, a=2, c=3, h=2)
        with pytest.raises(ValueError):
            GUVParams(q=7, a=0, c=3, h=2)
        with pytest.raises(ValueError):
            GUVParams(q=7, a=2, c=3, h=1)
        with pytest.raises(ValueError):
            GUVParams(q=7, a=2, c=3, h=2, modulus=(1, 0, 2))
        with pytest.raises(ValueError):
            GUVParams(q=2, a=2, c=3, h=2, modulus=(1, 0, 1))

    def test_params_sizes(self):
        p = self._params()
        assert p.num_left == 49
        assert p.num_right == 7**4
        assert p.degree == 7

    def test_left_poly_base_q(self):
        p = GUVParams(q=5, a=2, c=1, h=2)
        assert left_poly(p, 7) == (2, 1)
        assert left_poly(p, 0) == ()
        with pytest.raises(IndexError):
            left_poly(p, 25)

    def test_neighbor_structure(self):
        p = self._params()
        v = guv_neighbor(p, 10, 3)
        assert len(v) == p.c + 1
        assert v[0] == 3
        assert v == guv_neighbor(p, left_poly(p, 10), 3)
        # the all-ones constant polynomial fixes every power
        assert guv_neighbor(p, (1,), 4) == (4, 1, 1, 1)
        with pytest.raises(ValueError):
            guv_neighbor(p, 10, 7)

    def test_neighbor_table_consistency(self):
        p = self._params()
        table = neighbor_table(p, 20)
        for fi in [0, 3, 11, 19]:
            for y in range(p.q):
                assert table[fi, y] == right_index(p, guv_neighbor(p, fi, y))
        # distinct evaluation points never collide (first coordinate is y)
        assert all(len(set(row)) == p.q for row in table.tolist())

    def test_verify_expansion_passes_good_graph(self):
        # constant polynomials: distinct vertices never share a neighbor
        p = GUVParams(q=5, a=1, c=3, h=2)
        ok, witness = verify_expansion(p, 2, 2 * 5.0)
        assert ok and witness is None

    def test_verify_expansion_finds_witness(self):
        p = GUVParams(q=5, a=1, c=3, h=2)
        ok, witness = verify_expansion(p, 2, 6.0, neighbor_fn=lambda fi: [0, 1, 2])
        assert not ok
        assert witness == [0, 1]

    def test_verify_expansion_guard(self):
        p = GUVParams(q=5, a=1, c=3, h=2)
        with pytest.raises(ValueError):
            verify_expansion(p, 3, 1.0, n_left=10**4, neighbor_fn=lambda fi: [0])

    def test_suggest_params_covers_domain(self):
        p = suggest_params(n=160, set_size=8, zeta=0.32)
        assert p.num_left >= 160
        assert p.num_right <= 10**7
        assert 2.0 / (1.0 - 0.32) < p.c
        forced = suggest_params(n=160, set_size=8, zeta=0.32, a=3)
        assert forced.a == 3


class TestDetHH:
    def _sketch(self, eps=0.25):
        return DetHHSketch(GUVParams(q=7, a=2, c=3, h=2), n=25, eps=eps, zeta=0.25)

    def test_constructor_validation(self):
        p = GUVParams(q=7, a=2, c=3, h=2)
        with pytest.raises(ValueError):
            DetHHSketch(GUVParams(q=7, a=2, c=2, h=2), n=25, eps=0.25, zeta=0.25)
        with pytest.raises(ValueError):
            DetHHSketch(p, n=50, eps=0.25)
        with pytest.raises(ValueError):
            DetHHSketch(p, n=25, eps=0.0)
        with pytest.raises(ValueError):
            DetHHSketch(GUVParams(q=101, a=1, c=3, h=2), n=100, eps=0.25)

    def test_list_and_target_sizes(self):
        sk = self._sketch(eps=0.25)
        assert sk.list_size == 16
        assert sk.target_set_size == 12

    def test_overestimation_on_nonnegative(self):
        rng = np.random.default_rng(42)
        sk = self._sketch()
        x = rng.integers(0, 5, size=25).astype(float)
        sk.absorb_vector(x)
        assert np.all(sk.estimates() >= x - 1e-9)
        assert sk.point_estimate(7) == sk.estimates()[7]

    def test_update_equals_absorb(self):
        a = self._sketch()
        b = self._sketch()
        x = np.zeros(25)
        x[[2, 9, 20]] = [1.5, -0.5, 3.0]
        a.absorb_vector(x)
        for i in np.flatnonzero(x):
            b.update(int(i), float(x[i]))
        np.testing.assert_allclose(a.counters, b.counters, atol=1e-12)

    def test_query_contains_l1_heavy_hitters(self):
        sk = self._sketch(eps=0.25)
        x = np.ones(25)
        x[3] = 40.0
        x[17] = 30.0
        sk.absorb_vector(x)
        heavy = exact_heavy_hitters(x, 0.25, p=1)
        assert set(heavy.tolist()) == {3, 17}
        out = set(sk.query().tolist())
        assert all(int(i) in out for i in heavy)
