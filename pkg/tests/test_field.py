import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sketchrec.field import (
    MERSENNE31,
    MERSENNE61,
    PolyHash,
    PrimeField,
    SignHash,
    _mulmod_m61,
    eval_blocks,
    make_hash,
    make_sign_hash,
    multipoint_eval,
)


class TestPrimeField:
    def test_rejects_composite_modulus(self):
        for bad in (0, 1, 4, 91, 2**61 - 2):
            with pytest.raises(ValueError):
                PrimeField(bad)

    def test_accepts_known_primes(self):
        for p in (2, 3, 101, MERSENNE31, MERSENNE61):
            assert PrimeField(p).p == p

    @given(st.integers(0, MERSENNE61 - 1), st.integers(0, MERSENNE61 - 1))
    @settings(max_examples=50, deadline=None)
    def test_arithmetic_matches_python_ints(self, a, b):
        f = PrimeField()
        p = MERSENNE61
        assert f.add(a, b) == (a + b) % p
        assert f.sub(a, b) == (a - b) % p
        assert f.mul(a, b) == (a * b) % p

    def test_inverse(self):
        f = PrimeField(101)
        for a in range(1, 101):
            assert f.mul(a, f.inv(a)) == 1
        with pytest.raises(ZeroDivisionError):
            f.inv(0)

    def test_poly_eval_horner(self):
        f = PrimeField(101)
        # 3 + 2x + 5x^2 at x=7: 3 + 14 + 245 = 262 = 60 mod 101
        assert f.poly_eval([3, 2, 5], 7) == 60


class TestMulmodM61:
    @given(st.integers(0, MERSENNE61 - 1), st.integers(0, MERSENNE61 - 1))
    @settings(max_examples=200, deadline=None)
    def test_matches_int_oracle(self, a, b):
        got = _mulmod_m61(np.array([a], dtype=np.uint64), np.array([b], dtype=np.uint64))
        assert int(got[0]) == (a * b) % MERSENNE61

    def test_bulk_random(self):
        rng = np.random.default_rng(42)
        a = rng.integers(0, MERSENNE61, size=2000, dtype=np.uint64)
        b = rng.integers(0, MERSENNE61, size=2000, dtype=np.uint64)
        got = _mulmod_m61(a, b)
        want = [(int(x) * int(y)) % MERSENNE61 for x, y in zip(a, b)]
        assert got.tolist() == want


class TestPolyHash:
    def test_eval_block_matches_scalar_m61(self):
        rng = np.random.default_rng(42)
        h = make_hash(5, 10_000, 997, rng)
        idx = rng.integers(0, 10_000, size=500)
        block = h.eval_block(idx)
        scalar = [h.eval(int(i)) for i in idx]
        assert block.tolist() == scalar

    def test_eval_block_matches_scalar_small_prime(self):
        rng = np.random.default_rng(42)
        h = make_hash(4, 5000, 64, rng, field=PrimeField(MERSENNE31))
        idx = rng.integers(0, 5000, size=500)
        assert h.eval_block(idx).tolist() == [h.eval(int(i)) for i in idx]

    def test_domain_bounds_enforced(self):
        h = make_hash(2, 100, 10, 0)
        with pytest.raises(IndexError):
            h.eval(100)
        with pytest.raises(IndexError):
            h.eval_block(np.array([5, 100]))

    def test_same_seed_same_hash(self):
        h1 = make_hash(3, 1000, 50, 7)
        h2 = make_hash(3, 1000, 50, 7)
        assert h1.coeffs == h2.coeffs
        assert make_hash(3, 1000, 50, 8).coeffs != h1.coeffs

    def test_coefficients_recoverable_from_t_points(self):
        # degree-(t-1) polynomial is determined by t evaluations:
        # solving the Vandermonde system must return the coefficients,
        # which is the algebraic core of t-wise independence
        p = 101
        f = PrimeField(p)
        rng = np.random.default_rng(42)
        for _ in range(20):
            t = int(rng.integers(2, 6))
            coeffs = [int(c) for c in rng.integers(0, p, size=t)]
            xs = rng.choice(p, size=t, replace=False)
            ys = [f.poly_eval(coeffs, int(x)) for x in xs]
            mat = [[pow(int(x), j, p) for j in range(t)] for x in xs]
            rec = _solve_mod(mat, ys, p)
            assert rec == coeffs

    def test_pairwise_collision_rate(self):
        rng = np.random.default_rng(42)
        bins = 128
        coll = 0
        trials = 400
        for _ in range(trials):
            h = make_hash(2, 1 << 20, bins, rng)
            a, b = h.eval(12345), h.eval(67890)
            coll += a == b
        # E[collisions] ~ trials/bins = 3.125, loose 6-sigma style cap
        assert coll <= 16

    def test_multipoint_eval(self):
        h = make_hash(3, 300, 17, 5)
        assert multipoint_eval(h, 20, 60).tolist() == [h.eval(i) for i in range(20, 60)]
        with pytest.raises(IndexError):
            multipoint_eval(h, 0, 301)

    @given(st.integers(1, 2**61 - 2))
    @settings(max_examples=30, deadline=None)
    def test_constant_hash_is_constant(self, c):
        h = PolyHash(PrimeField(), [c], 100, 7)
        vals = h.eval_block(np.arange(100))
        assert np.all(vals == c % 7)


class TestEvalBlocks:
    def test_stacked_matches_per_hash(self):
        rng = np.random.default_rng(42)
        hashes = [make_hash(40, 10_000, 613, rng) for _ in range(9)]
        idx = rng.integers(0, 10_000, size=700)
        got = eval_blocks(hashes, idx)
        assert got.shape == (9, 700)
        for r, h in enumerate(hashes):
            assert got[r].tolist() == h.eval_block(idx).tolist()

    @given(st.integers(1, 6), st.integers(1, 8), st.integers(0, 2**32))
    @settings(max_examples=40, deadline=None)
    def test_stacked_matches_per_hash_small(self, t, rows, seed):
        rng = np.random.default_rng(seed)
        hashes = [make_hash(t, 257, 31, rng) for _ in range(rows)]
        idx = rng.integers(0, 257, size=60)
        got = eval_blocks(hashes, idx)
        assert all(got[r].tolist() == h.eval_block(idx).tolist() for r, h in enumerate(hashes))

    def test_mixed_degrees_fall_back(self):
        rng = np.random.default_rng(7)
        hashes = [make_hash(t, 500, 19, rng) for t in (2, 5)]
        idx = np.arange(500)
        got = eval_blocks(hashes, idx)
        assert all(got[r].tolist() == h.eval_block(idx).tolist() for r, h in enumerate(hashes))

    def test_empty_index_and_domain_check(self):
        hashes = [make_hash(3, 100, 11, s) for s in (0, 1)]
        assert eval_blocks(hashes, np.empty(0, dtype=np.int64)).shape == (2, 0)
        with pytest.raises(IndexError):
            eval_blocks(hashes, np.array([100]))
        with pytest.raises(ValueError):
            eval_blocks([], np.array([1]))


class TestSignHash:
    def test_values_in_pm_one(self):
        s = make_sign_hash(2, 1000, 42)
        vals = s.eval_block(np.arange(1000))
        assert set(vals.tolist()) <= {-1, 1}
        assert [s.eval(i) for i in range(50)] == vals[:50].tolist()

    def test_roughly_balanced(self):
        s = make_sign_hash(2, 10_000, 42)
        mean = s.eval_block(np.arange(10_000)).mean()
        assert abs(mean) < 0.1

    def test_requires_range_two(self):
        with pytest.raises(ValueError):
            SignHash(make_hash(2, 100, 3, 0))


def _solve_mod(mat, vec, p):
    """Gaussian elimination mod p; mat square, invertible."""
    t = len(vec)
    aug = [[v % p for v in row] + [y % p] for row, y in zip(mat, vec)]
    for col in range(t):
        piv = next(r for r in range(col, t) if aug[r][col] % p)
        aug[col], aug[piv] = aug[piv], aug[col]
        inv = pow(aug[col][col], p - 2, p)
        aug[col] = [v * inv % p for v in aug[col]]
        for r in range(t):
            if r != col and aug[r][col]:
                fac = aug[r][col]
                aug[r] = [(v - fac * w) % p for v, w in zip(aug[r], aug[col])]
    return [aug[r][t] for r in range(t)]
