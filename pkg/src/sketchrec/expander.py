"""Unbalanced bipartite expanders from polynomial powering, and the
deterministic heavy-hitter sketch built on them.

Left vertices are polynomials f of degree < a over F_q; the neighbor of
f at evaluation point y is the right vertex (y, f_0(y), ..., f_{c-1}(y))
with f_i = f^(h^i) mod E for a fixed irreducible E of degree a.  Desk
scale means everything is small enough to verify expansion by exhaustive
enumeration, which is the certificate the deterministic sketch relies on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from itertools import combinations, product

import numpy as np

from .field import _is_prime

_ENUM_GUARD = 10**7


def _trim(c: tuple) -> tuple:
    i = len(c)
    while i > 0 and c[i - 1] == 0:
        i -= 1
    return c[:i]


def poly_add(u, v, q):
    m = max(len(u), len(v))
    return _trim(
        tuple(
            ((u[i] if i < len(u) else 0) + (v[i] if i < len(v) else 0)) % q
            for i in range(m)
        )
    )


def poly_mul(u, v, q):
    if not u or not v:
        return ()
    out = [0] * (len(u) + len(v) - 1)
    for i, a in enumerate(u):
        if a == 0:
            continue
        for j, b in enumerate(v):
            out[i + j] = (out[i + j] + a * b) % q
    return _trim(tuple(out))


def poly_mod(u, m, q):
    """Remainder of u by m (m need not be monic; q prime)."""
    u = list(_trim(tuple(c % q for c in u)))
    m = _trim(tuple(c % q for c in m))
    if not m:
        raise ZeroDivisionError("polynomial modulus is zero")
    dm = len(m) - 1
    inv_lead = pow(m[-1], q - 2, q)
    while len(u) - 1 >= dm and u:
        shift = len(u) - 1 - dm
        factor = u[-1] * inv_lead % q
        for i, c in enumerate(m):
            u[shift + i] = (u[shift + i] - factor * c) % q
        while u and u[-1] == 0:
            u.pop()
    return tuple(u)


def poly_pow_mod(f, e: int, m, q):
    result = (1,)
    base = poly_mod(f, m, q)
    while e > 0:
        if e & 1:
            result = poly_mod(poly_mul(result, base, q), m, q)
        base = poly_mod(poly_mul(base, base, q), m, q)
        e >>= 1
    return result


def poly_eval(f, y: int, q: int) -> int:
    acc = 0
    for c in reversed(f):
        acc = (acc * y + c) % q
    return acc


def _monic_polys(q: int, deg: int):
    for lower in product(range(q), repeat=deg):
        yield tuple(lower) + (1,)


def poly_is_irreducible(e, q: int) -> bool:
    """Exhaustive factor search, sound for degree <= 6."""
    e = _trim(tuple(c % q for c in e))
    deg = len(e) - 1
    if deg < 1:
        return False
    if deg == 1:
        return True
    if deg > 6:
        raise ValueError("irreducibility check supports degree <= 6 only")
    for d in range(1, deg // 2 + 1):
        for cand in _monic_polys(q, d):
            if not poly_mod(e, cand, q):
                return False
    return True


def find_irreducible(q: int, a: int, seed=0):
    """A monic irreducible of degree a over F_q."""
    if not _is_prime(q):
        raise ValueError(f"{q} is not prime")
    if a == 1:
        return (0, 1)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    while True:
        c = tuple(int(v) for v in rng.integers(0, q, size=a)) + (1,)
        if poly_is_irreducible(c, q):
            return c


@dataclass(frozen=True)
class GUVParams:
    """Expander parameters: left = polys of degree < a over F_q, D = q."""

    q: int
    a: int
    c: int
    h: int
    modulus: tuple = dc_field(default=None)

    def __post_init__(self):
        if not _is_prime(self.q):
            raise ValueError(f"field size {self.q} must be prime")
        if self.a < 1 or self.c < 1 or self.h < 2:
            raise ValueError("need a >= 1, c >= 1, h >= 2")
        mod = self.modulus
        if mod is None:
            mod = find_irreducible(self.q, self.a, seed=0)
            object.__setattr__(self, "modulus", mod)
        mod = _trim(tuple(v % self.q for v in mod))
        if len(mod) - 1 != self.a or mod[-1] != 1:
            raise ValueError("modulus must be monic of degree a")
        if not poly_is_irreducible(mod, self.q):
            raise ValueError("modulus is reducible")
        object.__setattr__(self, "modulus", mod)

    @property
    def num_left(self) -> int:
        return self.q**self.a

    @property
    def num_right(self) -> int:
        return self.q ** (self.c + 1)

    @property
    def degree(self) -> int:
        return self.q


def left_poly(params: GUVParams, f_index: int):
    """Decode a left-vertex index into polynomial coefficients (base q)."""
    if not 0 <= f_index < params.num_left:
        raise IndexError("left index out of range")
    coeffs = []
    v = f_index
    for _ in range(params.a):
        coeffs.append(v % params.q)
        v //= params.q
    return _trim(tuple(coeffs))


def guv_neighbor(params: GUVParams, f, y: int) -> tuple:
    """Neighbor of polynomial f at evaluation point y: (y, f_0(y), ..., f_{c-1}(y))."""
    if isinstance(f, int):
        f = left_poly(params, f)
    f = _trim(tuple(v % params.q for v in f))
    if len(f) > params.a:
        raise ValueError(f"degree must be below a={params.a}")
    if not 0 <= y < params.q:
        raise ValueError("evaluation point outside field")
    out = [y]
    g = poly_mod(f, params.modulus, params.q)
    for _ in range(params.c):
        out.append(poly_eval(g, y, params.q))
        g = poly_pow_mod(g, params.h, params.modulus, params.q)
    return tuple(out)


def right_index(params: GUVParams, vertex: tuple) -> int:
    v = 0
    for coord in vertex:
        v = v * params.q + coord
    return v


def neighbor_table(params: GUVParams, n_left: int) -> np.ndarray:
    """(n_left, q) right-vertex indices for the first n_left polynomials."""
    if n_left > params.num_left:
        raise ValueError("not enough left vertices")
    table = np.empty((n_left, params.q), dtype=np.int64)
    for fi in range(n_left):
        f = left_poly(params, fi)
        powers = [poly_mod(f, params.modulus, params.q)]
        for _ in range(params.c - 1):
            powers.append(poly_pow_mod(powers[-1], params.h, params.modulus, params.q))
        for y in range(params.q):
            v = y
            for g in powers:
                v = v * params.q + poly_eval(g, y, params.q)
            table[fi, y] = v
    return table


def verify_expansion(
    params: GUVParams,
    set_size: int,
    required: float,
    n_left: int | None = None,
    neighbor_fn=None,
):
    """Exhaustively check |Gamma(S)| >= required over all |S| = set_size.

    Returns (True, None) or (False, witness_set).  Refuses enumerations
    beyond 10^7 sets.  neighbor_fn(left_index) -> iterable of right ids
    may replace the real graph (test hook).
    """
    n_left = params.num_left if n_left is None else int(n_left)
    total = math.comb(n_left, set_size)
    if total > _ENUM_GUARD:
        raise ValueError(f"enumeration of {total} sets exceeds the 1e7 guard")
    if neighbor_fn is None:
        table = neighbor_table(params, n_left)
        masks = []
        for row in table:
            m = 0
            for v in row:
                m |= 1 << int(v)
            masks.append(m)
    else:
        masks = []
        for fi in range(n_left):
            m = 0
            for v in neighbor_fn(fi):
                m |= 1 << int(v)
            masks.append(m)
    for combo in combinations(range(n_left), set_size):
        m = 0
        for v in combo:
            m |= masks[v]
        if m.bit_count() < required:
            return False, list(combo)
    return True, None


class DetHHSketch:
    """Deterministic l1 heavy-hitter sketch from a verified expander.

    Counters live on the right vertex set; the estimate of i is the
    minimum counter over its q neighbors, and the query returns the
    ceil((c+1)/eps) largest estimates (everything, when that reaches n).
    Requires 2/(1-zeta) < c for the containment argument to close.
    """

    def __init__(self, params: GUVParams, n: int, eps: float, zeta: float = 0.25):
        if not 0 < eps <= 1:
            raise ValueError("eps must be in (0, 1]")
        if not 0 < zeta < 1:
            raise ValueError("zeta must be in (0, 1)")
        if 2.0 / (1.0 - zeta) >= params.c:
            raise ValueError("need 2/(1-zeta) < c")
        if n > params.num_left:
            raise ValueError("domain exceeds left vertex set")
        if params.num_right > _ENUM_GUARD:
            raise ValueError("right vertex set exceeds the 1e7 counter guard")
        self.params = params
        self.n = int(n)
        self.eps = float(eps)
        self.zeta = float(zeta)
        self.list_size = math.ceil((params.c + 1) / eps)
        self.table = neighbor_table(params, self.n)
        self.counters = np.zeros(params.num_right)

    @property
    def target_set_size(self) -> int:
        return math.ceil(self.params.c / self.eps)

    def update(self, i: int, delta: float) -> None:
        self.counters[self.table[i]] += delta

    def absorb_vector(self, x: np.ndarray) -> None:
        x = np.asarray(x, dtype=float)
        if len(x) != self.n:
            raise ValueError("vector length mismatch")
        supp = np.flatnonzero(x)
        if supp.size == 0:
            return
        flat = self.table[supp].ravel()
        rep = np.repeat(x[supp], self.params.q)
        self.counters += np.bincount(flat, weights=rep, minlength=self.counters.size)

    def point_estimate(self, i: int) -> float:
        return float(self.counters[self.table[i]].min())

    def estimates(self) -> np.ndarray:
        return self.counters[self.table].min(axis=1)

    def query(self) -> np.ndarray:
        est = self.estimates()
        m = min(self.n, self.list_size)
        order = np.argsort(-est, kind="stable")[:m]
        return order.astype(np.int64)


def suggest_params(n: int, set_size: int, zeta: float, a: int | None = None) -> GUVParams:
    """Smallest prime q meeting the powering bound with slack zeta.

    The powering construction is an (h^c, q - a*h*c)-expander; choosing
    q >= a*h*c/zeta makes the loss fraction at most zeta.
    """
    c = math.floor(2.0 / (1.0 - zeta)) + 1
    h = max(2, math.ceil(set_size ** (1.0 / c)))

    def _pick(deg: int) -> GUVParams:
        q = max(3, math.ceil(deg * h * c / zeta))
        while not (_is_prime(q) and q**deg >= n):
            q += 1
        return GUVParams(q=q, a=deg, c=c, h=h, modulus=find_irreducible(q, deg))

    if a is not None:
        return _pick(a)
    # the counter table holds q^(c+1) cells, so minimize over the degree
    best = None
    for deg in range(1, max(2, math.ceil(math.log2(max(n, 2))) + 1)):
        cand = _pick(deg)
        if best is None or cand.num_right < best.num_right:
            best = cand
        elif cand.num_right > 4 * best.num_right:
            break
    return best
