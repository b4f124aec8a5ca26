"""Signed-bucket sketches for l2 estimation and heavy-hitter listing.

Three structures share the signed-sum mechanic: a count-sketch sized for
the per-coordinate estimation guarantee over a bounded candidate set, a
Gaussian-coefficient variant whose median |bucket| estimates magnitudes
for l2 heavy-hitter listing, and a partition sketch that scores classes
of a coordinate partition instead of single coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .field import PrimeField, make_hash, make_sign_hash

_CHUNK = 1 << 14


@dataclass(frozen=True)
class CsConstants:
    rep_factor: float = 8.0
    bucket_factor: float = 16.0
    cand_factor: float = 2.0
    miss_fraction: float = 0.5


def _lower_median(vals: np.ndarray) -> np.ndarray:
    """Deterministic lower median along axis 0."""
    r = vals.shape[0]
    return np.sort(vals, axis=0)[(r - 1) // 2]


class CountSketchEst:
    """Count-sketch sized so estimates over a candidate set T are sharp.

    B = ceil(bucket_factor*(cand_factor+1)*k/eps) buckets and
    R = ceil(rep_factor*(log2(1/eps) + (1/k)*log2(1/delta))) repetitions;
    the per-coordinate estimate is the lower median of the signed bucket
    values.  At most miss_fraction*k of any admissible T may exceed the
    squared error budget (eps/16k)*||x_{-k}||_2^2, with probability
    >= 1 - delta.
    """

    def __init__(
        self,
        n: int,
        k: int,
        eps: float,
        delta: float,
        constants: CsConstants | None = None,
        seed=0,
        field: PrimeField | None = None,
        rep_override: int | None = None,
        max_candidates: int | None = None,
    ):
        if not 0 < eps <= 1:
            raise ValueError("eps must be in (0, 1]")
        if not 0 < delta < 1:
            raise ValueError("delta must be in (0, 1)")
        if k < 1:
            raise ValueError("k must be >= 1")
        c = constants or CsConstants()
        self.n = int(n)
        self.k = int(k)
        self.eps = float(eps)
        self.delta = float(delta)
        self.constants = c
        self.buckets = math.ceil(c.bucket_factor * (c.cand_factor + 1) * k / eps)
        if rep_override is not None:
            self.rows = max(1, int(rep_override))
        else:
            self.rows = max(
                1,
                math.ceil(
                    c.rep_factor * (math.log2(1 / eps) + math.log2(1 / delta) / k)
                ),
            )
        self.max_candidates = (
            int(max_candidates)
            if max_candidates is not None
            else math.ceil(c.cand_factor * k / eps)
        )
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        self.bucket_hashes = [
            make_hash(2, self.n, self.buckets, rng, field) for _ in range(self.rows)
        ]
        self.sign_hashes = [make_sign_hash(2, self.n, rng, field) for _ in range(self.rows)]
        self.counters = np.zeros((self.rows, self.buckets))

    def update(self, i: int, delta: float) -> None:
        for r in range(self.rows):
            self.counters[r, self.bucket_hashes[r].eval(i)] += self.sign_hashes[r].eval(i) * delta

    def absorb_vector(self, x: np.ndarray) -> None:
        x = np.asarray(x, dtype=float)
        if len(x) != self.n:
            raise ValueError("vector length mismatch")
        supp = np.flatnonzero(x)
        if supp.size == 0:
            return
        vals = x[supp]
        for r in range(self.rows):
            cols = self.bucket_hashes[r].eval_block(supp)
            signs = self.sign_hashes[r].eval_block(supp)
            self.counters[r] += np.bincount(cols, weights=signs * vals, minlength=self.buckets)

    def absorb_sparse(self, idx: np.ndarray, vals: np.ndarray) -> None:
        idx = np.asarray(idx, dtype=np.int64)
        vals = np.asarray(vals, dtype=float)
        if idx.size == 0:
            return
        for r in range(self.rows):
            cols = self.bucket_hashes[r].eval_block(idx)
            signs = self.sign_hashes[r].eval_block(idx)
            self.counters[r] += np.bincount(cols, weights=signs * vals, minlength=self.buckets)

    def estimate(self, candidates: np.ndarray) -> np.ndarray:
        """Lower-median signed estimates for each candidate coordinate."""
        cand = np.asarray(candidates, dtype=np.int64)
        if cand.size > self.max_candidates:
            raise ValueError(
                f"candidate set of size {cand.size} exceeds cap {self.max_candidates}"
            )
        return self._estimate_unchecked(cand)

    def _estimate_unchecked(self, cand: np.ndarray) -> np.ndarray:
        out = np.empty(cand.shape)
        for lo in range(0, cand.size, _CHUNK):
            sl = cand[lo : lo + _CHUNK]
            vals = np.empty((self.rows, sl.size))
            for r in range(self.rows):
                cols = self.bucket_hashes[r].eval_block(sl)
                vals[r] = self.counters[r, cols] * self.sign_hashes[r].eval_block(sl)
            out[lo : lo + sl.size] = _lower_median(vals)
        return out


class GaussianMedianSketch:
    """Gaussian-coefficient bucket sketch for l2 heavy-hitter listing.

    d = ceil(depth_factor*log2(eps*n)) rows of B = ceil(bucket_factor/eps)
    buckets; row r mixes x with i.i.d. N(0,1) coefficients drawn lazily
    from a counter-based generator keyed by (seed, r), so no n*d
    coefficient table is ever stored.  The magnitude estimate of i is the
    lower median over rows of |bucket value|.
    """

    def __init__(
        self,
        n: int,
        eps: float,
        seed: int = 0,
        depth_factor: float = 8.0,
        bucket_factor: float = 16.0,
        list_size: int | None = None,
        field: PrimeField | None = None,
    ):
        if not 0 < eps <= 0.5:
            raise ValueError("eps must be in (0, 1/2]")
        if n < 2 / eps:
            raise ValueError("domain too small: need n >= 2/eps")
        self.n = int(n)
        self.eps = float(eps)
        self.rows = max(1, math.ceil(depth_factor * math.log2(eps * n)))
        self.buckets = math.ceil(bucket_factor / eps)
        self.list_size = min(self.n, list_size if list_size is not None else math.ceil(3.0 / eps))
        self._key = int(seed) & ((1 << 63) - 1)
        rng = np.random.default_rng(np.random.PCG64(self._key ^ 0x9E3779B97F4A7C15))
        self.bucket_hashes = [
            make_hash(2, self.n, self.buckets, rng, field) for _ in range(self.rows)
        ]
        self.counters = np.zeros((self.rows, self.buckets))

    def gauss_row(self, r: int) -> np.ndarray:
        """The row-r coefficient vector; pure function of (seed, r)."""
        gen = np.random.Generator(np.random.Philox(key=np.array([self._key, r], dtype=np.uint64)))
        return gen.standard_normal(self.n)

    def absorb_vector(self, x: np.ndarray) -> None:
        x = np.asarray(x, dtype=float)
        if len(x) != self.n:
            raise ValueError("vector length mismatch")
        idx = np.arange(self.n, dtype=np.int64)
        for r in range(self.rows):
            weights = self.gauss_row(r) * x
            cols = self.bucket_hashes[r].eval_block(idx)
            self.counters[r] += np.bincount(cols, weights=weights, minlength=self.buckets)

    def magnitude_estimates(self) -> np.ndarray:
        idx = np.arange(self.n, dtype=np.int64)
        vals = np.empty((self.rows, self.n))
        for r in range(self.rows):
            cols = self.bucket_hashes[r].eval_block(idx)
            vals[r] = np.abs(self.counters[r, cols])
        return _lower_median(vals)

    def query(self) -> np.ndarray:
        """Indices of the list_size largest magnitude estimates."""
        est = self.magnitude_estimates()
        order = np.argsort(-est, kind="stable")[: self.list_size]
        return order.astype(np.int64)


class PartitionSketch:
    """Score classes of a partition of [n] by approximate l2 mass.

    The partition is an integer label array (class_map[i] in [0, U));
    classes are hashed into ceil(bucket_factor*k) buckets over
    ceil(log2 U) repetitions with per-coordinate signs, and a class
    estimate is the lower median of |bucket| across repetitions.
    """

    def __init__(
        self,
        class_map: np.ndarray,
        num_classes: int,
        k: int,
        seed=0,
        bucket_factor: float = 8.0,
        top_factor: float = 4.0,
        field: PrimeField | None = None,
    ):
        cm = np.asarray(class_map, dtype=np.int64)
        if cm.ndim != 1 or cm.size == 0:
            raise ValueError("class map must be a nonempty 1-d integer array")
        if num_classes < 1:
            raise ValueError("need at least one class")
        if cm.min() < 0 or cm.max() >= num_classes:
            raise ValueError("class labels must lie in [0, num_classes)")
        if k < 1:
            raise ValueError("k must be >= 1")
        self.n = cm.size
        self.class_map = cm
        self.num_classes = int(num_classes)
        self.k = int(k)
        self.rows = max(1, math.ceil(math.log2(max(2, num_classes))))
        self.buckets = math.ceil(bucket_factor * k)
        self.top_count = min(self.num_classes, math.ceil(top_factor * k))
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        self.class_hashes = [
            make_hash(2, self.num_classes, self.buckets, rng, field) for _ in range(self.rows)
        ]
        self.sign_hashes = [make_sign_hash(2, self.n, rng, field) for _ in range(self.rows)]
        self.counters = np.zeros((self.rows, self.buckets))

    def coordinate_buckets(self, r: int) -> np.ndarray:
        """Bucket of each coordinate in repetition r (via its class)."""
        class_cols = self.class_hashes[r].eval_block(
            np.arange(self.num_classes, dtype=np.int64)
        )
        return class_cols[self.class_map]

    def absorb_vector(self, x: np.ndarray) -> None:
        x = np.asarray(x, dtype=float)
        if len(x) != self.n:
            raise ValueError("vector length mismatch")
        idx = np.arange(self.n, dtype=np.int64)
        for r in range(self.rows):
            signs = self.sign_hashes[r].eval_block(idx)
            self.counters[r] += np.bincount(
                self.coordinate_buckets(r), weights=signs * x, minlength=self.buckets
            )

    def load_counters(self, counters: np.ndarray) -> None:
        """Install externally measured bucket values (adaptive front-end)."""
        counters = np.asarray(counters, dtype=float)
        if counters.shape != self.counters.shape:
            raise ValueError("counter shape mismatch")
        self.counters = counters.copy()

    def class_estimates(self) -> np.ndarray:
        cls = np.arange(self.num_classes, dtype=np.int64)
        vals = np.empty((self.rows, self.num_classes))
        for r in range(self.rows):
            cols = self.class_hashes[r].eval_block(cls)
            vals[r] = np.abs(self.counters[r, cols])
        return _lower_median(vals)

    def heavy_classes(self) -> np.ndarray:
        """The top_count class labels by estimated mass."""
        est = self.class_estimates()
        order = np.argsort(-est, kind="stable")[: self.top_count]
        return order.astype(np.int64)
