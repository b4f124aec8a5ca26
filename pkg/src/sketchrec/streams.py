"""Turnstile stream model, ground-truth oracles, and input generators.

A stream is an ordered list of (coordinate, delta) updates to a hidden
vector x in R^n.  Strict mode requires every prefix to keep all
coordinates nonnegative; general mode allows arbitrary signs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class TurnstileStream:
    """Ordered (i, delta) updates over a domain of size n."""

    __slots__ = ("n", "mode", "indices", "deltas")

    def __init__(self, n: int, mode: str, updates=()):
        if mode not in ("strict", "general"):
            raise ValueError(f"mode must be 'strict' or 'general', got {mode!r}")
        if n < 1:
            raise ValueError("domain size must be positive")
        self.n = int(n)
        self.mode = mode
        ups = list(updates)
        self.indices = np.array([u[0] for u in ups], dtype=np.int64)
        self.deltas = np.array([u[1] for u in ups], dtype=np.float64)

    @classmethod
    def from_arrays(cls, n: int, mode: str, indices: np.ndarray, deltas: np.ndarray):
        s = cls(n, mode)
        s.indices = np.asarray(indices, dtype=np.int64).copy()
        s.deltas = np.asarray(deltas, dtype=np.float64).copy()
        if s.indices.shape != s.deltas.shape:
            raise ValueError("indices and deltas must have equal length")
        return s

    def __len__(self):
        return len(self.indices)

    def __iter__(self):
        for i, d in zip(self.indices, self.deltas):
            yield int(i), float(d)

    def __eq__(self, other):
        return (
            isinstance(other, TurnstileStream)
            and self.n == other.n
            and self.mode == other.mode
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.deltas, other.deltas)
        )


def materialize(stream: TurnstileStream) -> np.ndarray:
    """Fold a stream into its exact vector; validates strict prefixes.

    Raises ValueError naming the earliest offending update (1-based) if a
    strict-mode prefix drives any coordinate negative.
    """
    idx = stream.indices
    if idx.size and (idx.min() < 0 or idx.max() >= stream.n):
        raise IndexError("update coordinate outside domain")
    x = np.zeros(stream.n)
    np.add.at(x, idx, stream.deltas)
    if stream.mode == "strict" and idx.size:
        order = np.argsort(idx, kind="stable")
        si = idx[order]
        sd = stream.deltas[order]
        cs = np.cumsum(sd)
        new_group = np.r_[True, si[1:] != si[:-1]]
        gid = np.cumsum(new_group) - 1
        start = np.flatnonzero(new_group)
        base = cs[start] - sd[start]
        within = cs - base[gid]
        bad = within < 0
        if bad.any():
            pos = int(order[bad].min()) + 1
            raise ValueError(f"strict-mode violation at update position {pos}")
    return x


def exact_heavy_hitters(x: np.ndarray, eps: float, p: int = 1) -> np.ndarray:
    """Indices i with |x_i|^p >= eps * ||x||_p^p, ascending."""
    if p not in (1, 2):
        raise ValueError("p must be 1 or 2")
    if not 0 < eps <= 1:
        raise ValueError("eps must be in (0, 1]")
    x = np.asarray(x, dtype=float)
    mags = np.abs(x) ** p
    total = mags.sum()
    if total == 0:
        return np.empty(0, dtype=np.int64)
    return np.flatnonzero(mags >= eps * total).astype(np.int64)


def head_tail(x: np.ndarray, k: int):
    """Top-k head set (ties to the lowest index), tail vector, tail norms.

    Returns (head_indices ascending, tail, l1_tail, l2_tail).
    """
    x = np.asarray(x, dtype=float)
    if not 0 <= k <= len(x):
        raise ValueError("k must be in [0, n]")
    order = np.argsort(-np.abs(x), kind="stable")
    head = np.sort(order[:k]).astype(np.int64)
    tail = x.copy()
    tail[head] = 0.0
    return head, tail, float(np.abs(tail).sum()), float(np.sqrt((tail**2).sum()))


def head_eps(x: np.ndarray, k: int, eps: float) -> np.ndarray:
    """Indices with x_i^2 >= (eps/k) * ||x_{-k}||_2^2, exact zeros excluded."""
    if k < 1:
        raise ValueError("k must be >= 1")
    x = np.asarray(x, dtype=float)
    tail = head_tail(x, min(k, len(x)))[1]
    # sum of squares directly: sqrt-then-square would miss exact boundaries
    thresh = (eps / k) * float((tail * tail).sum())
    return np.flatnonzero((x * x >= thresh) & (x != 0)).astype(np.int64)


def gen_zipf(
    n: int,
    exponent: float,
    length: int,
    mode: str,
    seed,
    del_frac: float = 0.2,
) -> TurnstileStream:
    """Zipf-distributed updates over a randomly permuted rank assignment.

    Strict mode emits +1 inserts and, with probability del_frac per step,
    a -1 delete of a uniformly chosen still-live earlier insert, so every
    prefix is valid by construction.  General mode emits random signs.
    """
    if exponent <= 0:
        raise ValueError("exponent must be positive")
    if not 0 <= del_frac < 1:
        raise ValueError("del_frac must be in [0, 1)")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if length == 0:
        return TurnstileStream(n, mode)
    weights = 1.0 / np.arange(1, n + 1, dtype=float) ** exponent
    cdf = np.cumsum(weights)
    cdf /= cdf[-1]
    perm = rng.permutation(n)
    draws = perm[np.searchsorted(cdf, rng.random(length))]
    if mode == "general":
        signs = rng.integers(0, 2, size=length) * 2 - 1
        return TurnstileStream.from_arrays(n, mode, draws, signs.astype(float))
    del_flags = rng.random(length) < del_frac
    out_idx = []
    out_delta = []
    live = []
    for t in range(length):
        c = int(draws[t])
        out_idx.append(c)
        out_delta.append(1.0)
        live.append(c)
        if del_flags[t] and live:
            j = int(rng.integers(0, len(live)))
            victim = live[j]
            live[j] = live[-1]
            live.pop()
            out_idx.append(victim)
            out_delta.append(-1.0)
    return TurnstileStream.from_arrays(n, "strict", np.array(out_idx), np.array(out_delta))


@dataclass
class SpikedSignal:
    """Planted spike pattern plus white noise: x = y + z."""

    x: np.ndarray
    support: np.ndarray
    signs: np.ndarray
    noise: np.ndarray = field(repr=False, default=None)


def gen_spiked(n: int, k: int, eps: float, seed) -> SpikedSignal:
    """k uniform spikes of magnitude sqrt(eps/k) plus N(0, 1/n) noise."""
    if not 1 <= k <= n:
        raise ValueError("k must be in [1, n]")
    if not 0 < eps < 1:
        raise ValueError("eps must be in (0, 1)")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    support = np.sort(rng.choice(n, size=k, replace=False)).astype(np.int64)
    signs = (rng.integers(0, 2, size=k) * 2 - 1).astype(np.int64)
    z = rng.normal(0.0, 1.0 / np.sqrt(n), size=n)
    x = z.copy()
    x[support] += signs * np.sqrt(eps / k)
    return SpikedSignal(x=x, support=support, signs=signs, noise=z)


def save_stream(stream: TurnstileStream, path) -> None:
    """Write the exchange format: 'n=<int> mode=<mode>' then one 'i delta' per line."""
    with open(path, "w") as f:
        f.write(f"n={stream.n} mode={stream.mode}\n")
        for i, d in zip(stream.indices, stream.deltas):
            f.write(f"{int(i)} {repr(float(d))}\n")


def load_stream(path) -> TurnstileStream:
    with open(path) as f:
        header = f.readline().split()
        if len(header) != 2 or not header[0].startswith("n=") or not header[1].startswith("mode="):
            raise ValueError("malformed stream header")
        n = int(header[0][2:])
        mode = header[1][5:]
        idx = []
        deltas = []
        for lineno, line in enumerate(f, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"malformed update on line {lineno}")
            idx.append(int(parts[0]))
            deltas.append(float(parts[1]))
    return TurnstileStream.from_arrays(n, mode, np.array(idx, dtype=np.int64), np.array(deltas))
