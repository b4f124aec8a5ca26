"""Adaptive sparse recovery through a round-disciplined measurement oracle.

The oracle releases measurement results only at round boundaries, so a
query can never depend on a result from its own round; adaptivity
happens strictly across rounds.  On top of it:

  precondition       cut the universe down to one hash class of size
                     about n/log n that still holds the dominant
                     coordinate, via coded sign measurements
  shrink             one two-measurement step that narrows a candidate
                     set around the dominant coordinate
  one_sparse_recover precondition + geometric shrink cascade
                     (B_0 = 2, B_{i+1} = B_i^{3/2})
  adaptive_k_recover three-phase scheme: hash the live universe into
                     buckets, run the one-sparse routine per bucket in
                     lockstep, observe winners, remove them, repeat
                     with phase-dependent (k_r, eps_r, R_r)
  low_sparsity_recover
                     class-hash partition sketch to find heavy classes,
                     one-sparse per class, one observation round

A shrink step whose window captures nothing keeps its previous
candidate set; the final multi-survivor sets are resolved by observing
the survivors directly and keeping the largest magnitude.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .countsketch import PartitionSketch


class RoundViolation(RuntimeError):
    """A measurement result was read before its round boundary."""


class MeasurementOracle:
    """Adaptive access to a hidden signal with enforced round boundaries.

    Queries issued with request/request_batch/observe are evaluated and
    released together at end_round(); reading a ticket before its round
    closes raises RoundViolation and is counted.
    """

    def __init__(self, x: np.ndarray):
        self._x = np.asarray(x, dtype=float)
        self.n = len(self._x)
        self.rows_used = 0
        self.rounds_used = 0
        self.violations = 0
        self._next_ticket = 0
        self._pending: list[tuple[int, np.ndarray, np.ndarray, np.ndarray | None, int]] = []
        self._released: dict[int, np.ndarray | float] = {}

    def _check_idx(self, idx: np.ndarray) -> None:
        if idx.size and (idx.min() < 0 or idx.max() >= self.n):
            raise IndexError("coordinate out of range")

    def request(self, idx, weights) -> int:
        """One linear functional sum_i w_i x_i; result is a scalar."""
        idx = np.asarray(idx, dtype=np.int64)
        w = np.asarray(weights, dtype=float)
        if idx.shape != w.shape:
            raise ValueError("index/weight shape mismatch")
        self._check_idx(idx)
        ticket = self._next_ticket
        self._next_ticket += 1
        self._pending.append((ticket, idx.copy(), w.copy(), None, -1))
        self.rows_used += 1
        return ticket

    def request_batch(self, row_ids, idx, weights, num_rows: int) -> int:
        """num_rows functionals at once; result is an array of num_rows.

        Only rows that touch at least one coordinate count as used rows.
        """
        rid = np.asarray(row_ids, dtype=np.int64)
        idx = np.asarray(idx, dtype=np.int64)
        w = np.asarray(weights, dtype=float)
        if not (rid.shape == idx.shape == w.shape):
            raise ValueError("row/index/weight shape mismatch")
        self._check_idx(idx)
        if rid.size and (rid.min() < 0 or rid.max() >= num_rows):
            raise ValueError("row id out of range")
        ticket = self._next_ticket
        self._next_ticket += 1
        self._pending.append((ticket, idx.copy(), w.copy(), rid.copy(), int(num_rows)))
        self.rows_used += int(np.unique(rid).size)
        return ticket

    def observe(self, coords) -> int:
        """Direct reads of individual coordinates (one row each)."""
        coords = np.asarray(coords, dtype=np.int64)
        return self.request_batch(
            np.arange(coords.size), coords, np.ones(coords.size), coords.size
        )

    def result(self, ticket: int):
        if ticket in self._released:
            return self._released[ticket]
        self.violations += 1
        raise RoundViolation(f"ticket {ticket} is not released yet")

    def end_round(self) -> dict:
        """Evaluate and release every pending query; returns {ticket: value}."""
        if not self._pending:
            return {}
        fresh = {}
        for ticket, idx, w, rid, num_rows in self._pending:
            contrib = w * self._x[idx]
            if rid is None:
                fresh[ticket] = float(contrib.sum())
            else:
                fresh[ticket] = np.bincount(rid, weights=contrib, minlength=num_rows)
        self._pending.clear()
        self._released.update(fresh)
        self.rounds_used += 1
        return fresh


class BinaryCode:
    """All-parities code on message_bits-bit messages.

    Codeword bit s of message u is the parity of u AND s, over every
    s in [0, 2^message_bits); distinct messages differ in exactly half
    the positions.  The measured minimum distance and the implied
    unique-decoding radius are recorded at construction; decoding is
    exhaustive nearest-codeword search.
    """

    def __init__(self, message_bits: int):
        if message_bits < 1:
            raise ValueError("message_bits must be >= 1")
        self.message_bits = int(message_bits)
        self.codeword_bits = 1 << self.message_bits
        overlap = np.arange(self.codeword_bits)[:, None] & np.arange(self.codeword_bits)[None, :]
        parity = np.zeros_like(overlap)
        for b in range(self.message_bits):
            parity ^= (overlap >> b) & 1
        self.table = parity.astype(np.uint8)
        dists = [
            int((self.table[u] != self.table[v]).sum())
            for u in range(self.codeword_bits)
            for v in range(u + 1, self.codeword_bits)
        ]
        self.distance = min(dists) if dists else self.codeword_bits
        self.radius = (self.distance - 1) // 2

    def encode(self, message: int) -> np.ndarray:
        return self.table[message].copy()

    def decode(self, bits: np.ndarray):
        bits = np.asarray(bits, dtype=np.uint8)
        if bits.shape != (self.codeword_bits,):
            raise ValueError("wrong received-word length")
        dists = (self.table != bits[None, :]).sum(axis=1)
        best = int(np.argmin(dists))
        return best, int(dists[best])


@dataclass(frozen=True)
class AdaptiveConstants:
    rep_c: int = 4
    bucket_c: int = 8
    gamma: float = 0.2
    promise_c: float = 10.0
    pairs: int = 15
    cleanup_cap: int = 32
    inner_cleanup_cap: int = 4
    class_power: int = 3
    guard_power: int = 4


@dataclass
class OneSparseState:
    candidates: np.ndarray
    b_value: float
    delta: float


def shrink_schedule(n: int) -> list[float]:
    """B_0 = 2, B_{i+1} = B_i^{3/2}, ending at the first value >= n."""
    sched = [2.0]
    while sched[-1] < n:
        sched.append(sched[-1] ** 1.5)
    return sched


def _as_rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def precondition(oracle: MeasurementOracle, n: int, seed=0, pairs: int = 15, members=None):
    """One round of coded sign measurements isolating one hash class.

    Returns the members of the decoded class after a random permutation:
    about a 1/log n fraction of the universe, containing the dominant
    coordinate with high probability under the one-sparse promise.
    """
    rng = _as_rng(seed)
    members = np.arange(n, dtype=np.int64) if members is None else np.asarray(members, np.int64)
    m = members.size
    if m <= 2:
        return members
    total_bits = max(1, math.ceil(math.log2(m)))
    mb = max(1, math.ceil(math.log2(max(2.0, math.log2(m)))))
    mb = min(mb, total_bits)
    code = BinaryCode(mb)
    num_classes = 1 << mb
    perm = rng.permutation(m)
    cls = (perm >> (total_bits - mb)).astype(np.int64)
    cls = np.minimum(cls, num_classes - 1)
    signs = rng.integers(0, 2, size=(pairs, m)).astype(float) * 2 - 1
    rid = (np.arange(pairs)[:, None] * num_classes + cls[None, :]).ravel()
    ticket = oracle.request_batch(
        rid, np.tile(members, pairs), signs.ravel(), pairs * num_classes
    )
    class_sums = oracle.end_round()[ticket].reshape(pairs, num_classes)
    # V_{b,1} per pair: class sums combined through the codeword bit mask
    v1 = class_sums @ code.table.astype(float)
    v0 = class_sums.sum(axis=1, keepdims=True) - v1
    received = ((np.abs(v1) > np.abs(v0)).sum(axis=0) > pairs / 2).astype(np.uint8)
    decoded, _ = code.decode(received)
    return members[cls == decoded]


def shrink(oracle: MeasurementOracle, members, b_value: float, delta: float = 0.1, seed=0):
    """One candidate-narrowing step from two sign measurements.

    y1 = sum sigma_i x_i and y2 = sum sigma_i u_i x_i over the candidate
    set, with fresh signs and fresh uniform u_i; keeps candidates whose
    u_i lies within circular distance 2/b_value^2 of y2/y1.  A zero y1
    is retried once with fresh randomness; None reports failure.  delta
    names the step's failure budget and is recorded only.
    """
    rng = _as_rng(seed)
    members = np.asarray(members, dtype=np.int64)
    if members.size == 0:
        return members
    for _attempt in range(2):
        sigma = rng.integers(0, 2, size=members.size).astype(float) * 2 - 1
        u = rng.random(members.size)
        t1 = oracle.request(members, sigma)
        t2 = oracle.request(members, sigma * u)
        res = oracle.end_round()
        y1, y2 = res[t1], res[t2]
        if y1 != 0.0:
            uhat = (y2 / y1) % 1.0
            d = np.abs(u - uhat)
            d = np.minimum(d, 1.0 - d)
            return members[d <= 2.0 / b_value**2]
    return None


def one_sparse_recover(
    oracle: MeasurementOracle,
    n: int,
    seed=0,
    use_preconditioner: bool = True,
    pairs: int = 15,
    cleanup_cap: int = 32,
    members=None,
):
    """Locate the dominant coordinate of a near-1-sparse signal.

    Returns (index, info) or (None, info) on failure.  info carries the
    round/row accounting, the survivor trail, and the observed value of
    the winner when a cleanup round ran.
    """
    rng = _as_rng(seed)
    members = np.arange(n, dtype=np.int64) if members is None else np.asarray(members, np.int64)
    universe = members.size
    rounds_before = oracle.rounds_used
    rows_before = oracle.rows_used
    if use_preconditioner and universe >= 256:
        cand = precondition(oracle, n, rng, pairs, members)
    else:
        cand = members
    delta = 1.0 / max(2.0, math.log2(max(universe, 4))) ** 2
    states = [OneSparseState(cand, 2.0, delta)]
    for b_value in shrink_schedule(universe)[1:]:
        if cand.size <= 1:
            break
        nxt = shrink(oracle, cand, b_value, delta, rng)
        if nxt is not None and nxt.size > 0:
            cand = nxt
        states.append(OneSparseState(cand, b_value, delta))
    winner = None
    value = None
    if cand.size == 1:
        winner = int(cand[0])
    elif 1 < cand.size <= cleanup_cap:
        ticket = oracle.observe(cand)
        vals = oracle.end_round()[ticket]
        pick = int(np.argmax(np.abs(vals)))
        winner = int(cand[pick])
        value = float(vals[pick])
    info = {
        "rounds": oracle.rounds_used - rounds_before,
        "rows": oracle.rows_used - rows_before,
        "survivors": int(cand.size),
        "states": states,
        "value": value,
    }
    return winner, info


def _batched_one_sparse(
    oracle: MeasurementOracle,
    elem_inst: np.ndarray,
    elem_idx: np.ndarray,
    num_inst: int,
    rng: np.random.Generator,
    cleanup_cap: int,
):
    """Shrink cascades over many candidate sets in lockstep.

    elem_inst/elem_idx list every (instance, coordinate) pair.  Each
    step issues two rows per live instance in a single round.  Ends
    with one observation round over all small survivor sets; each
    instance's winner is its largest observed magnitude.  Returns
    ({coordinate: exact value}, stats).
    """
    stats = {"rounds": 0, "rows": 0, "steps": 0}
    if elem_idx.size == 0:
        return {}, stats
    rows0, rounds0 = oracle.rows_used, oracle.rounds_used
    sizes = np.bincount(elem_inst, minlength=num_inst)
    max_size = int(sizes.max())
    for b_value in shrink_schedule(max(2, max_size))[1:]:
        if elem_idx.size == 0:
            break
        stats["steps"] += 1
        sigma = rng.integers(0, 2, size=elem_idx.size).astype(float) * 2 - 1
        u = rng.random(elem_idx.size)
        rid = np.concatenate([2 * elem_inst, 2 * elem_inst + 1])
        ticket = oracle.request_batch(
            rid,
            np.concatenate([elem_idx, elem_idx]),
            np.concatenate([sigma, sigma * u]),
            2 * num_inst,
        )
        res = oracle.end_round()[ticket]
        y1, y2 = res[0::2], res[1::2]
        with np.errstate(divide="ignore", invalid="ignore"):
            uhat = (y2 / y1) % 1.0
        d = np.abs(u - uhat[elem_inst])
        d = np.minimum(d, 1.0 - d)
        captured = d <= 2.0 / b_value**2
        cap_count = np.bincount(elem_inst[captured], minlength=num_inst)
        alive_count = np.bincount(elem_inst, minlength=num_inst)
        # a window that would empty its instance is a no-op for it
        stuck = (cap_count == 0) & (alive_count > 0)
        keep = captured | stuck[elem_inst]
        elem_inst = elem_inst[keep]
        elem_idx = elem_idx[keep]
    found: dict[int, float] = {}
    if elem_idx.size:
        final_count = np.bincount(elem_inst, minlength=num_inst)
        small = final_count[elem_inst] <= cleanup_cap
        cand_inst = elem_inst[small]
        cand_idx = elem_idx[small]
        if cand_idx.size:
            coords = np.unique(cand_idx)
            ticket = oracle.observe(coords)
            vals = oracle.end_round()[ticket]
            mags = np.abs(vals[np.searchsorted(coords, cand_idx)])
            order = np.lexsort((cand_idx, -mags))
            winner_pos = order[np.unique(cand_inst[order], return_index=True)[1]]
            for p in winner_pos:
                j = int(cand_idx[p])
                found[j] = float(vals[np.searchsorted(coords, j)])
    stats["rows"] = oracle.rows_used - rows0
    stats["rounds"] = oracle.rounds_used - rounds0
    return found, stats


def hash_and_recover(
    oracle: MeasurementOracle,
    universe: np.ndarray,
    k_r: int,
    eps_r: float,
    reps: int,
    rng: np.random.Generator,
    constants: AdaptiveConstants,
):
    """One round of Algorithm-style recovery on the live universe.

    Hashes the universe into ceil(bucket_c * k_r/eps_r) buckets, reps
    times independently, and runs the lockstep one-sparse cascade over
    every bucket.
    """
    buckets = max(1, math.ceil(constants.bucket_c * k_r / eps_r))
    m = universe.size
    if m == 0:
        return {}, {"rounds": 0, "rows": 0, "steps": 0, "buckets": buckets}
    inst = np.empty(reps * m, dtype=np.int64)
    for j in range(reps):
        inst[j * m : (j + 1) * m] = j * buckets + rng.integers(0, buckets, size=m)
    idx = np.tile(universe, reps)
    found, stats = _batched_one_sparse(
        oracle, inst, idx, reps * buckets, rng, constants.inner_cleanup_cap
    )
    stats["buckets"] = buckets
    return found, stats


def tetration(r: int, cap: float = 2.0**60) -> float:
    """2 ^^ r with 2 ^^ 0 = 1, saturating at cap."""
    v = 1.0
    for _ in range(r):
        # saturate before exponentiating: 2^v overflows long before cap
        if v >= math.log2(cap):
            return cap
        v = 2.0**v
    return v


def log_star(v: float) -> int:
    count = 0
    while v > 1.0:
        v = math.log2(v)
        count += 1
    return count


@dataclass
class AdaptiveResult:
    support: np.ndarray
    values: np.ndarray
    rows: int
    rounds: int
    table: list = dc_field(default_factory=list)

    def as_dense(self, n: int) -> np.ndarray:
        out = np.zeros(n)
        out[self.support] = self.values
        return out


def _finish(found: dict[int, float], oracle: MeasurementOracle, table) -> AdaptiveResult:
    support = np.array(sorted(found.keys()), dtype=np.int64)
    values = np.array([found[int(j)] for j in support])
    return AdaptiveResult(
        support=support,
        values=values,
        rows=oracle.rows_used,
        rounds=oracle.rounds_used,
        table=table,
    )


def adaptive_k_recover(
    oracle: MeasurementOracle,
    n: int,
    k: int,
    eps: float,
    seed=0,
    constants: AdaptiveConstants | None = None,
) -> AdaptiveResult:
    """Three-phase adaptive k-sparse recovery.

    Phase 1 halves the sparsity target each round with eps_r = eps*(3/4)^r
    and a constant repetition count; phase 2 divides it by tetration
    times log k with C log k repetitions; phase 3 walks k^{gamma_r} with
    gamma_r from 1-gamma down to gamma and C k^{1-gamma_r} repetitions.
    Found coordinates are observed exactly and leave the universe.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    c = constants or AdaptiveConstants()
    rng = _as_rng(seed)
    universe = np.arange(n, dtype=np.int64)
    found: dict[int, float] = {}
    table = []
    log2k = math.log2(k)

    def run_phase(phase: int, k_r: int, eps_r: float, reps: int, r: int):
        nonlocal universe
        fresh, stats = hash_and_recover(oracle, universe, k_r, eps_r, reps, rng, c)
        found.update(fresh)
        if fresh:
            universe = np.setdiff1d(universe, np.fromiter(fresh.keys(), dtype=np.int64))
        table.append(
            {
                "phase": phase,
                "r": r,
                "k_r": k_r,
                "eps_r": eps_r,
                "reps": reps,
                "buckets": stats["buckets"],
                "rows": stats["rows"],
                "rounds": stats["rounds"],
                "found": len(fresh),
                "universe": int(universe.size),
            }
        )

    for r in range(max(1, math.ceil(math.log2(max(1.0, log2k))))):
        run_phase(1, max(1, math.ceil(k / 2**r)), eps * 0.75**r, c.rep_c, r)
    for r in range(log_star(k**c.gamma) + 1):
        k_r = max(1, math.ceil(k / (tetration(r) * log2k)))
        run_phase(2, k_r, eps, max(1, math.ceil(c.rep_c * log2k)), r)
    big_t = math.ceil(1 / c.gamma) - 1
    for r in range(big_t + 1):
        gamma_r = (1 - c.gamma) - r * (1 - 2 * c.gamma) / big_t
        k_r = max(1, math.ceil(k**gamma_r))
        reps = max(1, math.ceil(c.rep_c * k ** (1 - gamma_r)))
        run_phase(3, k_r, eps, reps, r)
    return _finish(found, oracle, table)


def low_sparsity_recover(
    oracle: MeasurementOracle,
    n: int,
    k: int,
    eps: float,
    seed=0,
    constants: AdaptiveConstants | None = None,
) -> AdaptiveResult:
    """Adaptive recovery for k/eps at most log2(n)^4.

    Hashes coordinates into log2(n)^3 classes, finds heavy classes with
    a partition sketch measured through the oracle, runs the lockstep
    one-sparse cascade on each heavy class, and closes with one direct
    observation round.
    """
    c = constants or AdaptiveConstants()
    log2n = math.log2(max(n, 2))
    if k / eps > log2n**c.guard_power:
        raise ValueError("k/eps exceeds the low-sparsity guard")
    rng = _as_rng(seed)
    num_classes = max(2, math.ceil(log2n**c.class_power))
    class_map = rng.integers(0, num_classes, size=n)
    k_cls = max(1, math.ceil(k / eps))
    sketch = PartitionSketch(class_map, num_classes, k_cls, seed=rng)
    counters = np.empty((sketch.rows, sketch.buckets))
    rid_parts = []
    w_parts = []
    coords = np.arange(n, dtype=np.int64)
    for r in range(sketch.rows):
        cols = sketch.coordinate_buckets(r)
        rid_parts.append(r * sketch.buckets + cols)
        w_parts.append(sketch.sign_hashes[r].eval_block(coords).astype(float))
    ticket = oracle.request_batch(
        np.concatenate(rid_parts),
        np.tile(coords, sketch.rows),
        np.concatenate(w_parts),
        sketch.rows * sketch.buckets,
    )
    flat = oracle.end_round()[ticket]
    counters[:] = flat.reshape(sketch.rows, sketch.buckets)
    sketch.load_counters(counters)
    heavy = sketch.heavy_classes()
    table = [
        {
            "phase": "partition",
            "rows": oracle.rows_used,
            "rounds": oracle.rounds_used,
            "classes": int(heavy.size),
        }
    ]
    mask = np.isin(class_map, heavy)
    members = np.flatnonzero(mask)
    relabel = np.searchsorted(np.sort(heavy), class_map[members])
    order = np.argsort(relabel, kind="stable")
    found, stats = _batched_one_sparse(
        oracle,
        relabel[order],
        members[order].astype(np.int64),
        heavy.size,
        rng,
        c.inner_cleanup_cap,
    )
    table.append({"phase": "per-class", **stats})
    return _finish(found, oracle, table)
