"""Prime fields and polynomial hash families.

A t-wise independent hash [n] -> [B] is a uniformly random polynomial of
degree t-1 over F_p evaluated at the input and reduced mod B.  Any t
evaluations are jointly uniform over F_p^t, so the mod-B reduction is
within bias t*B/p of t-wise uniform.  The default modulus is the
Mersenne prime 2^61 - 1, which keeps that bias far below every
tolerance used downstream; a 2^31 - 1 fast path exists for hot loops.
"""

from __future__ import annotations

import math

import numpy as np

MERSENNE61 = (1 << 61) - 1
MERSENNE31 = (1 << 31) - 1

_M61 = np.uint64(MERSENNE61)
_U3 = np.uint64(3)
_U29 = np.uint64(29)
_U32 = np.uint64(32)
_U61 = np.uint64(61)
_MASK32 = np.uint64((1 << 32) - 1)
_MASK29 = np.uint64((1 << 29) - 1)

_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def _is_prime(m: int) -> bool:
    if m < 2:
        return False
    for p in _MR_BASES:
        if m % p == 0:
            return m == p
    d = m - 1
    s = 0
    while d % 2 == 0:
        d //= 2
        s += 1
    # deterministic Miller-Rabin for m < 3.3e24 with these bases
    for a in _MR_BASES:
        x = pow(a, d, m)
        if x in (1, m - 1):
            continue
        for _ in range(s - 1):
            x = x * x % m
            if x == m - 1:
                break
        else:
            return False
    return True


class PrimeField:
    """Arithmetic mod a prime p, exact on Python ints."""

    __slots__ = ("p",)

    def __init__(self, p: int = MERSENNE61):
        if p < 2 or not _is_prime(p):
            raise ValueError(f"modulus {p} is not prime")
        self.p = p

    def __repr__(self):
        return f"PrimeField(p={self.p})"

    def __eq__(self, other):
        return isinstance(other, PrimeField) and other.p == self.p

    def add(self, a: int, b: int) -> int:
        return (a + b) % self.p

    def sub(self, a: int, b: int) -> int:
        return (a - b) % self.p

    def mul(self, a: int, b: int) -> int:
        return (a * b) % self.p

    def pow(self, a: int, e: int) -> int:
        return pow(a, e, self.p)

    def inv(self, a: int) -> int:
        if a % self.p == 0:
            raise ZeroDivisionError("no inverse of 0")
        return pow(a, self.p - 2, self.p)

    def poly_eval(self, coeffs, x: int) -> int:
        """Horner evaluation of sum_j coeffs[j] * x^j mod p."""
        acc = 0
        x = int(x) % self.p
        for c in reversed(coeffs):
            acc = (acc * x + int(c)) % self.p
        return acc


def _mulmod_m61(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Vectorized a*b mod 2^61-1 on uint64 inputs < 2^61."""
    a0 = a & _MASK32
    a1 = a >> _U32
    b0 = b & _MASK32
    b1 = b >> _U32
    # a*b = a1*b1*2^64 + (a1*b0 + a0*b1)*2^32 + a0*b0, and 2^64 = 8 mod p
    t = (a1 * b1) << _U3
    cross = a1 * b0 + a0 * b1
    t = t + (cross >> _U29) + ((cross & _MASK29) << _U32)
    lo = a0 * b0
    t = t + (lo >> _U61) + (lo & _M61)
    t = (t >> _U61) + (t & _M61)
    t = (t >> _U61) + (t & _M61)
    return np.where(t >= _M61, t - _M61, t)


def _eval_block_m61(coeffs, xs: np.ndarray) -> np.ndarray:
    acc = np.zeros(xs.shape, dtype=np.uint64)
    x = xs.astype(np.uint64)
    for c in reversed(coeffs):
        acc = _mulmod_m61(acc, x) + np.uint64(int(c))
        acc = (acc >> _U61) + (acc & _M61)
        acc = np.where(acc >= _M61, acc - _M61, acc)
    return acc


def _eval_block_small(coeffs, xs: np.ndarray, p: int) -> np.ndarray:
    # products stay below 2^62 for p < 2^31, exact in int64
    acc = np.zeros(xs.shape, dtype=np.int64)
    x = xs.astype(np.int64) % p
    for c in reversed(coeffs):
        acc = (acc * x + int(c)) % p
    return acc


# Limb width for exact float64 matmuls in the Paterson-Stockmeyer kernel:
# 21-bit limbs give partial products < 2^42, and dot products of length
# <= 256 stay < 2^50, inside float64's 2^53 exact-integer range.
_PS_MAX_L = 256
_LIMB = 21
_LIMB_COUNT = 3
_PS_ELEMS = 1 << 21


def _limb_split(v: np.ndarray) -> list[np.ndarray]:
    # v uint64 < 2^61 -> three float64 planes of 21-bit limbs
    return [
        ((v >> np.uint64(_LIMB * a)) & np.uint64((1 << _LIMB) - 1)).astype(np.float64)
        for a in range(_LIMB_COUNT)
    ]


def _canon_m61(v: np.ndarray) -> np.ndarray:
    v = (v >> _U61) + (v & _M61)
    v = (v >> _U61) + (v & _M61)
    return np.where(v >= _M61, v - _M61, v)


def _ps_chunk_m61(coeff_limbs, rows: int, q_blocks: int, block_len: int, x: np.ndarray) -> np.ndarray:
    # evaluate all row polynomials at the points x via block powering:
    # G[r,q] = sum_s coeffs[r, q*L+s] * x^s, then Horner over y = x^L
    m = x.size
    powers = np.empty((block_len, m), dtype=np.uint64)
    powers[0] = 1
    for s in range(1, block_len):
        powers[s] = _mulmod_m61(powers[s - 1], x)
    pow_limbs = _limb_split(powers)
    weighted = [None] * (2 * _LIMB_COUNT - 1)
    for a in range(_LIMB_COUNT):
        for b in range(_LIMB_COUNT):
            prod = coeff_limbs[a] @ pow_limbs[b]
            s = a + b
            weighted[s] = prod if weighted[s] is None else weighted[s] + prod
    inner = np.zeros((rows * q_blocks, m), dtype=np.uint64)
    for s, acc_f in enumerate(weighted):
        if acc_f is None:
            continue
        scale = np.uint64((1 << (_LIMB * s)) % MERSENNE61)
        inner += _mulmod_m61(acc_f.astype(np.uint64), scale)
    inner = _canon_m61(inner).reshape(rows, q_blocks, m)
    acc = inner[:, q_blocks - 1, :]
    if q_blocks > 1:
        y = _mulmod_m61(powers[block_len - 1], x)[None, :]
        for q in range(q_blocks - 2, -1, -1):
            acc = _canon_m61(_mulmod_m61(acc, y) + inner[:, q, :])
    return acc


def _eval_blocks_m61(coeff_mat: np.ndarray, xs: np.ndarray) -> np.ndarray:
    """Evaluate many degree-matched polynomials at once, mod 2^61-1.

    coeff_mat is (rows, t) uint64, xs is (m,); returns (rows, m), equal
    entry for entry to per-polynomial Horner.  High degrees go through
    Paterson-Stockmeyer so the bulk of the work lands in exact float64
    matrix products instead of t sequential modular multiplies.
    """
    rows, t = coeff_mat.shape
    x = xs.astype(np.uint64)
    if t <= 32 and rows == 1:
        return _eval_block_m61(coeff_mat[0], x)[None, :]
    # balance the L sequential power steps on (m,) against the t/L outer
    # Horner steps on (rows, m): the optimum sits near sqrt(t * rows)
    target = math.sqrt(max(1.0, float(t * rows)))
    block_len = 32
    while block_len < _PS_MAX_L and block_len * 1.5 < target and block_len < t:
        block_len *= 2
    q_blocks = -(-t // block_len)
    padded = np.zeros((rows, q_blocks * block_len), dtype=np.uint64)
    padded[:, :t] = coeff_mat
    coeff_limbs = _limb_split(padded.reshape(rows * q_blocks, block_len))
    out = np.empty((rows, x.size), dtype=np.uint64)
    step = max(1, _PS_ELEMS // max(1, rows * q_blocks))
    for lo in range(0, x.size, step):
        hi = min(lo + step, x.size)
        out[:, lo:hi] = _ps_chunk_m61(coeff_limbs, rows, q_blocks, block_len, x[lo:hi])
    return out


class PolyHash:
    """Degree-(t-1) polynomial hash [n] -> [range_size] over a prime field."""

    __slots__ = ("field", "coeffs", "n", "range_size")

    def __init__(self, field: PrimeField, coeffs, n: int, range_size: int):
        if len(coeffs) < 1:
            raise ValueError("need at least one coefficient")
        if range_size < 1:
            raise ValueError("range size must be positive")
        if not 1 <= n <= field.p:
            raise ValueError(f"domain size {n} must be in [1, p={field.p}]")
        self.field = field
        self.coeffs = tuple(int(c) % field.p for c in coeffs)
        self.n = int(n)
        self.range_size = int(range_size)

    @property
    def independence(self) -> int:
        return len(self.coeffs)

    def eval(self, i: int) -> int:
        if not 0 <= i < self.n:
            raise IndexError(f"index {i} outside domain [0, {self.n})")
        return self.field.poly_eval(self.coeffs, i) % self.range_size

    def eval_block(self, idx: np.ndarray) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.int64)
        if idx.size == 0:
            return np.empty(0, dtype=np.int64)
        if idx.min() < 0 or idx.max() >= self.n:
            raise IndexError("index outside domain")
        p = self.field.p
        if p == MERSENNE61:
            if len(self.coeffs) > 32 and idx.size >= 64:
                coeff_mat = np.array([self.coeffs], dtype=np.uint64)
                vals = _eval_blocks_m61(coeff_mat, idx)[0].astype(np.int64)
            else:
                vals = _eval_block_m61(self.coeffs, idx).astype(np.int64)
        elif p < (1 << 31):
            vals = _eval_block_small(self.coeffs, idx, p)
        else:
            vals = np.array(
                [self.field.poly_eval(self.coeffs, int(i)) for i in idx], dtype=np.int64
            )
        return vals % self.range_size


def eval_blocks(hashes, idx: np.ndarray) -> np.ndarray:
    """Evaluate several hashes on one index block; returns (len(hashes), len(idx)).

    Row r equals hashes[r].eval_block(idx) exactly.  The stacked kernel
    applies when every hash shares the Mersenne-61 field, the same
    degree, domain, and range; anything else falls back to the per-hash
    path.
    """
    hashes = list(hashes)
    if not hashes:
        raise ValueError("need at least one hash")
    idx = np.asarray(idx, dtype=np.int64)
    if idx.size == 0:
        return np.empty((len(hashes), 0), dtype=np.int64)
    h0 = hashes[0]
    uniform = all(
        h.field.p == MERSENNE61
        and h.independence == h0.independence
        and h.n == h0.n
        and h.range_size == h0.range_size
        for h in hashes
    )
    if not uniform:
        return np.stack([h.eval_block(idx) for h in hashes])
    if idx.min() < 0 or idx.max() >= h0.n:
        raise IndexError("index outside domain")
    coeff_mat = np.array([h.coeffs for h in hashes], dtype=np.uint64)
    vals = _eval_blocks_m61(coeff_mat, idx).astype(np.int64)
    return vals % h0.range_size


def make_hash(t: int, n: int, range_size: int, seed, field: PrimeField | None = None) -> PolyHash:
    """Draw a t-wise independent hash [n] -> [range_size].

    seed may be an int or an existing numpy Generator (consumed).
    """
    if t < 1:
        raise ValueError("independence t must be >= 1")
    field = field if field is not None else PrimeField()
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if field.p <= (1 << 64) - 1:
        coeffs = rng.integers(0, field.p, size=t, dtype=np.uint64)
        coeffs = [int(c) for c in coeffs]
    else:
        coeffs = [int.from_bytes(rng.bytes(16), "little") % field.p for _ in range(t)]
    return PolyHash(field, coeffs, n, range_size)


def multipoint_eval(h: PolyHash, start: int, stop: int) -> np.ndarray:
    """Evaluate h on the contiguous index range [start, stop)."""
    if not 0 <= start <= stop <= h.n:
        raise IndexError(f"range [{start}, {stop}) outside domain [0, {h.n}]")
    return h.eval_block(np.arange(start, stop, dtype=np.int64))


class SignHash:
    """t-wise independent sign hash [n] -> {-1, +1}."""

    __slots__ = ("hash",)

    def __init__(self, h: PolyHash):
        if h.range_size != 2:
            raise ValueError("sign hash wraps a range-2 polynomial hash")
        self.hash = h

    @property
    def n(self) -> int:
        return self.hash.n

    def eval(self, i: int) -> int:
        return 2 * self.hash.eval(i) - 1

    def eval_block(self, idx: np.ndarray) -> np.ndarray:
        return 2 * self.hash.eval_block(idx) - 1


def make_sign_hash(t: int, n: int, seed, field: PrimeField | None = None) -> SignHash:
    return SignHash(make_hash(t, n, 2, seed, field))
