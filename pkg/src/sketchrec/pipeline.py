"""Non-adaptive k-sparse recovery by composing weak stages.

Each level halves (quadratic schedule) or cubes away (fast schedule) the
number of still-missing heavy coordinates.  A level decodes against the
residual of everything recovered so far: recovered mass is subtracted
from the level's linear measurements right before its decode, which is
equivalent to having measured the residual directly.

Schedules:
  quadratic  ceil(log3 k)+1 levels, k_i = ceil(k/3^i); early levels use
             eps_i = eps/2^i and delta_i = exp(-k_i/8); once i exceeds
             3*log2(log2 k) the failure budget switches to the flat
             exp(-k/log2(k)^3) regime with eps_i = eps/log2(k).
  fast       geometric levels stop once k_i reaches ceil(sqrt(k)) or
             floor(log2 k) levels are spent; a quadratic tail at
             sparsity ceil(sqrt(k)) and accuracy eps/2^l finishes up.

For k < 3 both schedules collapse to a single weak level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .countsketch import CountSketchEst, CsConstants
from .weak import WeakConstants, WeakSystem


@dataclass(frozen=True)
class ScheduleConstants:
    shrink_base: int = 3
    eps_halving: float = 2.0
    tail_rate: float = 0.125
    boundary_factor: float = 3.0
    delta_cap: float = 0.5
    zeta: float = 1.0 / 3.0


@dataclass(frozen=True)
class LevelSpec:
    k: int
    zeta: float
    eps: float
    delta: float


def _clamp_delta(raw: float, cap: float) -> float:
    return float(min(cap, max(raw, 1e-15)))


def quadratic_schedule(k: int, eps: float, constants: ScheduleConstants | None = None):
    c = constants or ScheduleConstants()
    if k < 1:
        raise ValueError("k must be >= 1")
    if k < c.shrink_base:
        return [LevelSpec(k, c.zeta, eps, _clamp_delta(math.exp(-c.tail_rate * k), c.delta_cap))]
    levels = math.ceil(math.log(k) / math.log(c.shrink_base) - 1e-9) + 1
    log2k = math.log2(k)
    boundary = c.boundary_factor * math.log2(max(log2k, 2.0))
    late_delta = _clamp_delta(math.exp(-k / log2k**3), c.delta_cap)
    specs = []
    for i in range(levels):
        k_i = math.ceil(k / c.shrink_base**i)
        if i <= boundary:
            eps_i = eps / c.eps_halving**i
            delta_i = _clamp_delta(math.exp(-c.tail_rate * k_i), c.delta_cap)
        else:
            eps_i = eps / log2k
            delta_i = late_delta
        specs.append(LevelSpec(k_i, c.zeta, eps_i, delta_i))
    return specs


def fast_schedule(k: int, eps: float, constants: ScheduleConstants | None = None):
    c = constants or ScheduleConstants()
    if k < 1:
        raise ValueError("k must be >= 1")
    if k < c.shrink_base:
        return quadratic_schedule(k, eps, c)
    root = math.ceil(math.sqrt(k))
    cap = math.floor(math.log2(k))
    specs = []
    i = 0
    while i < cap and math.ceil(k / c.shrink_base**i) > root:
        k_i = math.ceil(k / c.shrink_base**i)
        specs.append(
            LevelSpec(
                k_i,
                c.zeta,
                eps / c.eps_halving**i,
                _clamp_delta(math.exp(-c.tail_rate * k_i), c.delta_cap),
            )
        )
        i += 1
    specs.extend(quadratic_schedule(root, eps / c.eps_halving**i, c))
    return specs


def build_schedule(k: int, eps: float, schedule: str = "quadratic", constants=None):
    if schedule == "quadratic":
        return quadratic_schedule(k, eps, constants)
    if schedule == "fast":
        return fast_schedule(k, eps, constants)
    raise ValueError(f"unknown schedule {schedule!r}")


@dataclass
class RecoveryResult:
    support: np.ndarray
    values: np.ndarray
    rows: int
    schedule: str
    diagnostics: list = dc_field(default_factory=list)

    def as_dense(self, n: int) -> np.ndarray:
        out = np.zeros(n)
        out[self.support] = self.values
        return out


class SparsePipeline:
    """Multi-level weak-system cascade for k-sparse recovery."""

    def __init__(
        self,
        n: int,
        k: int,
        eps: float,
        schedule: str = "quadratic",
        seed=0,
        constants: ScheduleConstants | None = None,
        weak_constants: WeakConstants | None = None,
        cs_constants: CsConstants | None = None,
    ):
        self.n = int(n)
        self.k = int(k)
        self.eps = float(eps)
        self.schedule = schedule
        self.specs = build_schedule(k, eps, schedule, constants)
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        self.level_seeds = [int(s) for s in rng.integers(0, 2**63, size=len(self.specs))]
        self.systems = [
            WeakSystem(
                n,
                spec.k,
                spec.zeta,
                spec.eps,
                spec.delta,
                lseed,
                weak_constants,
                cs_constants,
            )
            for spec, lseed in zip(self.specs, self.level_seeds)
        ]
        self._measured = False

    @property
    def rows(self) -> int:
        return sum(s.rows for s in self.systems)

    def measure(self, x: np.ndarray) -> None:
        x = np.asarray(x, dtype=float)
        if len(x) != self.n:
            raise ValueError("vector length mismatch")
        if self._measured:
            raise RuntimeError("pipeline already holds a measurement")
        for sys in self.systems:
            sys.measure(x)
        self._measured = True

    def recover(self) -> RecoveryResult:
        if not self._measured:
            raise RuntimeError("measure() must run before recover()")
        acc: dict[int, float] = {}
        diagnostics = []
        for spec, sys in zip(self.specs, self.systems):
            if acc:
                idx = np.fromiter(acc.keys(), dtype=np.int64)
                vals = np.fromiter(acc.values(), dtype=float)
                sys.absorb_sparse(idx, -vals)
            out = sys.decode()
            for j, v in zip(out.support, out.values):
                acc[int(j)] = acc.get(int(j), 0.0) + float(v)
            diagnostics.append(
                {
                    "k": spec.k,
                    "eps": spec.eps,
                    "delta": spec.delta,
                    "rows": sys.rows,
                    "candidates": int(out.candidates.size),
                    "recovered": int(out.support.size),
                }
            )
        support = np.array(sorted(acc.keys()), dtype=np.int64)
        values = np.array([acc[int(j)] for j in support])
        keep = values != 0
        return RecoveryResult(
            support=support[keep],
            values=values[keep],
            rows=self.rows,
            schedule=self.schedule,
            diagnostics=diagnostics,
        )


def sparse_recover(
    x: np.ndarray,
    k: int,
    eps: float,
    schedule: str = "quadratic",
    seed=0,
    constants: ScheduleConstants | None = None,
) -> RecoveryResult:
    """Measure x and recover a k-sparse approximation in one call."""
    pipe = SparsePipeline(len(x), k, eps, schedule, seed, constants)
    pipe.measure(x)
    return pipe.recover()


def spiked_recover(
    x: np.ndarray,
    k: int,
    eps: float,
    delta: float,
    seed=0,
    cs_constants: CsConstants | None = None,
) -> RecoveryResult:
    """Exact support recovery for spike-plus-noise signals.

    Assumes k spikes of magnitude sqrt(eps/k) buried in mean-zero noise
    of total energy about 1.  A single count-sketch with
    ceil(8*(log2(eps*n/k) + log2(1/delta)/k)) rows is estimated at every
    coordinate; spikes are read off through a magnitude window
    [(1-gamma), (1+gamma)]*sqrt(eps/k) with
    gamma = min(1/4, sqrt(1.1*(1 - k/n))/4), keeping the top k.
    """
    x = np.asarray(x, dtype=float)
    n = len(x)
    if not 0 < eps <= 1:
        raise ValueError("eps must be in (0, 1]")
    if not 1 <= k < n:
        raise ValueError("need 1 <= k < n")
    rows = max(
        1,
        math.ceil(8 * (math.log2(max(2.0, eps * n / k)) + math.log2(1 / delta) / k)),
    )
    sketch = CountSketchEst(
        n,
        k,
        eps,
        delta,
        cs_constants,
        seed,
        rep_override=rows,
        max_candidates=n,
    )
    sketch.absorb_vector(x)
    est = sketch.estimate(np.arange(n))
    spike = math.sqrt(eps / k)
    gamma = min(0.25, 0.25 * math.sqrt(1.1 * (1 - k / n)))
    lo, hi = (1 - gamma) * spike, (1 + gamma) * spike
    window = np.flatnonzero((np.abs(est) >= lo) & (np.abs(est) <= hi))
    order = window[np.argsort(-np.abs(est[window]), kind="stable")][:k]
    support = np.sort(order)
    return RecoveryResult(
        support=support.astype(np.int64),
        values=est[support],
        rows=rows,
        schedule="spiked",
        diagnostics=[{"gamma": gamma, "window_size": int(window.size), "rows": rows}],
    )
