"""Monte Carlo experiment harness.

Every experiment is an ExperimentConfig naming an algorithm id, a
parameter set, a trial count, and a base seed.  Trial t runs under an
independent generator seeded by a splitmix64 hash of (base, t), so any
single trial can be replayed in isolation and a rerun of the same config
reproduces the result table byte for byte.  Success is always judged
against exact quantities recomputed from the realized input vector,
never against the sketch's own estimates.

Aggregates carry a two-sided 95% Wilson interval for the success rate.
`wilson_upper` is the one-sided bound used to sanity-check the interval
against the rule of three on zero-failure runs.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .adaptive import MeasurementOracle, adaptive_k_recover, low_sparsity_recover, one_sparse_recover
from .countmin import CountMinG3, DyadicG3
from .countsketch import GaussianMedianSketch
from .expander import DetHHSketch, suggest_params
from .pipeline import SparsePipeline, spiked_recover
from .streams import exact_heavy_hitters, gen_spiked, gen_zipf, head_eps, head_tail, materialize

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(state: int) -> int:
    """One output of the splitmix64 mixer for the given state."""
    z = (state + _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def trial_seed(base: int, trial: int) -> int:
    """Seed for trial number `trial` under base seed `base`.

    Matches the output stream of a splitmix64 generator started at
    `base`, but computable in O(1) for any trial index.
    """
    return splitmix64((base + trial * _GOLDEN) & _MASK64)


def wilson_interval(successes: int, trials: int, z: float = 1.959963984540054):
    """Two-sided Wilson score interval for a binomial proportion."""
    if trials <= 0:
        return (0.0, 1.0)
    p = successes / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = (z / denom) * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials))
    return (max(0.0, center - half), min(1.0, center + half))


def wilson_upper(successes: int, trials: int, z: float = 1.6448536269514722) -> float:
    """One-sided 95% Wilson upper bound; ~= 3/N at zero successes."""
    return wilson_interval(successes, trials, z=z)[1]


@dataclass
class ExperimentConfig:
    """Complete description of one experiment run."""

    algorithm: str
    n: int = 4096
    k: int = 8
    eps: float = 0.1
    delta: float = 0.05
    trials: int = 50
    seed: int = 42
    dist: str = "planted"
    out: str | None = None
    params: dict = field(default_factory=dict)

    _INT_KEYS = ("n", "k", "trials", "seed")
    _FLOAT_KEYS = ("eps", "delta")
    _STR_KEYS = ("algorithm", "dist", "out")

    def to_kv_lines(self) -> list[str]:
        lines = [f"algorithm={self.algorithm}"]
        for key in ("n", "k", "eps", "delta", "trials", "seed", "dist"):
            lines.append(f"{key}={getattr(self, key)!r}".replace("'", ""))
        if self.out is not None:
            lines.append(f"out={self.out}")
        for key in sorted(self.params):
            lines.append(f"{key}={self.params[key]}")
        return lines

    @classmethod
    def from_kv_text(cls, text: str, base: "ExperimentConfig | None" = None) -> "ExperimentConfig":
        """Parse `key=value` lines; '#' starts a comment, blanks skipped."""
        cfg = replace(base, params=dict(base.params)) if base is not None else cls(algorithm="")
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"bad config line: {raw!r}")
            key, val = (s.strip() for s in line.split("=", 1))
            if key in cls._INT_KEYS:
                setattr(cfg, key, int(val))
            elif key in cls._FLOAT_KEYS:
                setattr(cfg, key, float(val))
            elif key in cls._STR_KEYS:
                setattr(cfg, key, val)
            else:
                cfg.params[key] = _coerce(val)
        return cfg


def _coerce(val: str):
    for kind in (int, float):
        try:
            return kind(val)
        except ValueError:
            continue
    return val


@dataclass
class TrialReport:
    trial: int
    seed: int
    success: bool
    err_sq: float
    threshold: float
    rows: int
    rounds: int
    wall_ms: float = 0.0


@dataclass
class AggregateReport:
    config: ExperimentConfig
    reports: list
    successes: int
    ok: bool

    @property
    def trials(self) -> int:
        return len(self.reports)

    @property
    def rate(self) -> float:
        return self.successes / self.trials if self.trials else float("nan")

    @property
    def ci(self):
        return wilson_interval(self.successes, self.trials)

    def summary_line(self) -> str:
        cfg = self.config
        lo, hi = self.ci
        if not self.trials:
            tail = "rate=n/a wilson95=[0.0000,1.0000] neutral"
        else:
            rows = np.array([r.rows for r in self.reports], dtype=float)
            rounds = max(r.rounds for r in self.reports)
            tail = (
                f"rate={self.rate:.4f} wilson95=[{lo:.4f},{hi:.4f}] "
                f"rows_mean={rows.mean():.1f} rounds_max={rounds} "
                + ("ok" if self.ok else "FAIL")
            )
        return (
            f"{cfg.algorithm} n={cfg.n} k={cfg.k} eps={cfg.eps} delta={cfg.delta} "
            f"trials={self.trials} successes={self.successes} " + tail
        )


# ---------------------------------------------------------------------------
# input generators


def _gen_planted(n: int, k: int, eps: float, rng) -> np.ndarray:
    """Unit-ish Gaussian tail plus k entries safely above the head cutoff."""
    x = rng.standard_normal(n) / math.sqrt(n)
    support = rng.choice(n, size=min(k, n), replace=False)
    mags = math.sqrt(eps / max(k, 1)) * rng.uniform(1.5, 4.0, size=support.size)
    x[support] += (rng.integers(0, 2, size=support.size) * 2 - 1) * mags
    return x


def _gen_adversarial(n: int, k: int, eps: float, rng) -> np.ndarray:
    """Nonnegative integer vector whose heavy items sit near the cutoff."""
    x = rng.integers(1, 4, size=n).astype(float)
    m = max(1, min(n, math.floor(1.0 / (2.0 * eps))))
    heads = rng.choice(n, size=m, replace=False)
    x[heads] += math.ceil(2.2 * eps * x.sum())
    return x


def make_vector(cfg: ExperimentConfig, rng) -> np.ndarray:
    if cfg.dist == "planted":
        return _gen_planted(cfg.n, cfg.k, cfg.eps, rng)
    if cfg.dist == "spiked":
        return gen_spiked(cfg.n, cfg.k, cfg.eps, rng).x
    if cfg.dist == "adversarial":
        return _gen_adversarial(cfg.n, cfg.k, cfg.eps, rng)
    if cfg.dist == "zipf":
        length = int(cfg.params.get("length", 5000))
        s = float(cfg.params.get("zipf_s", 1.1))
        return materialize(gen_zipf(cfg.n, s, length, "general", rng))
    raise ValueError(f"unknown dist {cfg.dist!r}")


def _zipf_stream(cfg: ExperimentConfig, rng, mode: str = "strict"):
    length = int(cfg.params.get("length", 5000))
    s = float(cfg.params.get("zipf_s", 1.1))
    return gen_zipf(cfg.n, s, length, mode, rng)


# ---------------------------------------------------------------------------
# per-algorithm trials; each returns (success, err_sq, threshold, rows, rounds)


def _trial_hh_cm(cfg: ExperimentConfig, rng, seed: int):
    sketch = CountMinG3(cfg.n, cfg.eps, cfg.delta, seed=rng)
    if cfg.dist == "zipf":
        x = sketch.absorb_stream(_zipf_stream(cfg, rng))
    else:
        x = np.abs(make_vector(cfg, rng))
        sketch.absorb_vector(x)
    threshold = cfg.eps * np.abs(x).sum()
    truth = exact_heavy_hitters(x, cfg.eps, p=1)
    ok = sketch.contains_in_top(truth, threshold) if truth.size else True
    return ok, 0.0, float(threshold), sketch.rows * sketch.buckets, 0


def _trial_hh_dyadic(cfg: ExperimentConfig, rng, seed: int):
    sketch = DyadicG3(cfg.n, cfg.eps, cfg.delta, seed=rng)
    if cfg.dist == "zipf":
        x = sketch.absorb_stream(_zipf_stream(cfg, rng))
    else:
        x = np.abs(make_vector(cfg, rng))
        sketch.absorb_vector(x)
    truth = exact_heavy_hitters(x, cfg.eps, p=1)
    found = sketch.query()
    ok = bool(np.isin(truth, found).all())
    rows = sum(sk.rows * sk.buckets for sk in sketch.sketches.values())
    return ok, 0.0, float(cfg.eps * np.abs(x).sum()), rows, 0


def _trial_hh_l2(cfg: ExperimentConfig, rng, seed: int):
    x = make_vector(cfg, rng)
    sketch = GaussianMedianSketch(cfg.n, cfg.eps, seed=seed)
    sketch.absorb_vector(x)
    truth = head_eps(x, math.ceil(1.0 / cfg.eps), 1.0)
    found = sketch.query()
    ok = bool(np.isin(truth, found).all())
    return ok, 0.0, 0.0, sketch.rows * sketch.buckets, 0


def _trial_hh_det(cfg: ExperimentConfig, rng, seed: int):
    set_size = int(cfg.params.get("set_size", 2 * math.ceil(1.0 / cfg.eps)))
    params = suggest_params(cfg.n, set_size, float(cfg.params.get("zeta", 0.25)))
    sketch = DetHHSketch(params, cfg.n, cfg.eps)
    x = np.abs(make_vector(cfg, rng))
    sketch.absorb_vector(x)
    truth = exact_heavy_hitters(x, cfg.eps, p=1)
    found = sketch.query()
    ok = bool(np.isin(truth, found).all())
    return ok, 0.0, float(cfg.eps * x.sum()), params.num_right, 0


def _trial_sr_pipeline(cfg: ExperimentConfig, rng, seed: int):
    x = make_vector(cfg, rng)
    schedule = str(cfg.params.get("schedule", "quadratic"))
    pipe = SparsePipeline(cfg.n, cfg.k, cfg.eps, schedule=schedule, seed=seed)
    pipe.measure(x)
    res = pipe.recover()
    err = float(np.sum((x - res.as_dense(cfg.n)) ** 2))
    tail = head_tail(x, cfg.k)[3]
    thr = (1.0 + cfg.eps) * tail * tail
    return err <= thr + 1e-12, err, thr, pipe.rows, 0


def _trial_sr_adaptive(cfg: ExperimentConfig, rng, seed: int):
    mode = str(cfg.params.get("mode", "full"))
    if mode == "one-sparse":
        return _trial_one_sparse(cfg, rng, seed)
    x = make_vector(cfg, rng)
    oracle = MeasurementOracle(x)
    if mode == "full":
        res = adaptive_k_recover(oracle, cfg.n, cfg.k, cfg.eps, seed=seed)
        err = float(np.sum((x - res.as_dense(cfg.n)) ** 2))
        tail = head_tail(x, cfg.k)[3]
        thr = (1.0 + cfg.eps) * tail * tail
        ok = err <= thr + 1e-12
    elif mode == "lowk":
        res = low_sparsity_recover(oracle, cfg.n, cfg.k, cfg.eps, seed=seed)
        err = float(np.sum((x - res.as_dense(cfg.n)) ** 2))
        truth = head_eps(x, cfg.k, cfg.eps)
        thr = float(truth.size)
        ok = bool(np.isin(truth, res.support).all())
    else:
        raise ValueError(f"unknown adaptive mode {mode!r}")
    ok = ok and oracle.violations == 0
    return ok, err, thr, oracle.rows_used, oracle.rounds_used


def _trial_one_sparse(cfg: ExperimentConfig, rng, seed: int):
    promise = float(cfg.params.get("promise", 10.0))
    target = int(rng.integers(0, cfg.n))
    noise = rng.standard_normal(cfg.n)
    noise[target] = 0.0
    norm = math.sqrt(np.sum(noise * noise))
    if norm > 0:
        # keep the off-spike mass at half the promised budget
        noise *= 1.0 / (2.0 * promise * norm)
    x = noise
    x[target] = 1.0
    oracle = MeasurementOracle(x)
    winner, info = one_sparse_recover(oracle, cfg.n, seed=seed)
    ok = winner == target and oracle.violations == 0
    return ok, 0.0, float(target), oracle.rows_used, oracle.rounds_used


def _trial_spiked(cfg: ExperimentConfig, rng, seed: int):
    sig = gen_spiked(cfg.n, cfg.k, cfg.eps, rng)
    res = spiked_recover(sig.x, cfg.k, cfg.eps, cfg.delta, seed=seed)
    ok = res.support.size == sig.support.size and bool(np.array_equal(np.sort(res.support), sig.support))
    err = float(np.sum((sig.x - res.as_dense(cfg.n)) ** 2))
    return ok, err, float(cfg.k), res.rows, 0


ALGORITHMS = {
    "hh-cm": _trial_hh_cm,
    "hh-dyadic": _trial_hh_dyadic,
    "hh-l2": _trial_hh_l2,
    "hh-det": _trial_hh_det,
    "sr-pipeline": _trial_sr_pipeline,
    "sr-adaptive": _trial_sr_adaptive,
    "spiked": _trial_spiked,
}


def run(config: ExperimentConfig) -> AggregateReport:
    """Run all trials of a config and optionally write the result tables."""
    if config.algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {config.algorithm!r}")
    trial_fn = ALGORITHMS[config.algorithm]
    reports = []
    for t in range(config.trials):
        seed = trial_seed(config.seed, t)
        rng = np.random.default_rng(seed)
        start = time.perf_counter()
        ok, err_sq, threshold, rows, rounds = trial_fn(config, rng, seed)
        wall = (time.perf_counter() - start) * 1e3
        reports.append(TrialReport(t, seed, bool(ok), err_sq, threshold, rows, rounds, wall))
    successes = sum(r.success for r in reports)
    target = config.params.get("target")
    if config.trials == 0 or target is None:
        ok = True
    else:
        ok = successes / config.trials >= float(target) - 1e-12
    agg = AggregateReport(config=config, reports=reports, successes=successes, ok=ok)
    if config.out is not None:
        write_report_files(config.out, agg)
    return agg


def write_report_files(out: str, agg: AggregateReport) -> None:
    """CSV plus a gnuplot-friendly .dat mirror with the same rows.

    Wall time is deliberately not written: the files must be identical
    across reruns of the same config.
    """
    header = ["# " + line for line in agg.config.to_kv_lines() if not line.startswith("out=")]
    columns = "trial,seed,success,err_sq,threshold,rows,rounds"
    rows = [
        f"{r.trial},{r.seed},{int(r.success)},{r.err_sq!r},{r.threshold!r},{r.rows},{r.rounds}"
        for r in agg.reports
    ]
    csv_path = Path(out).with_suffix(".csv")
    dat_path = Path(out).with_suffix(".dat")
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    csv_path.write_text("\n".join(header + [columns] + rows) + "\n")
    dat_rows = [line.replace(",", " ") for line in rows]
    dat_path.write_text("\n".join(header + ["# " + columns.replace(",", " ")] + dat_rows) + "\n")


# ---------------------------------------------------------------------------
# Gaussian distribution checks


def _std_normal_cdf(z: float) -> float:
    return 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))


def tv_shifted_gaussian(shift: float) -> float:
    """Total variation distance between N(0, I) and N(tau, I), |tau| = shift.

    Rotation reduces the pair to one dimension; the distance equals the
    mass a standard Gaussian puts within shift/2 of the origin.
    """
    return 2.0 * _std_normal_cdf(shift / 2.0) - 1.0


def _mc_tv(shift: float, samples: int, rng, bin_width: float = 0.04) -> float:
    lo, hi = -8.0, shift + 8.0
    edges = np.arange(lo, hi + bin_width, bin_width)
    a = rng.standard_normal(samples)
    b = rng.standard_normal(samples) + shift
    pa, _ = np.histogram(a, bins=edges)
    pb, _ = np.histogram(b, bins=edges)
    return 0.5 * np.abs(pa - pb).sum() / samples


def _event_frequency(rng, dim: int, samples: int, stat, lo: float, hi: float) -> float:
    hits = 0
    done = 0
    chunk = max(1, min(samples, 25_000))
    while done < samples:
        m = min(chunk, samples - done)
        vals = stat(rng.standard_normal((m, dim)))
        hits += int(np.count_nonzero((vals >= lo) & (vals <= hi)))
        done += m
    return hits / samples


def gaussian_fact_check(
    delta: float = 0.05,
    samples: int = 200_000,
    tv_samples: int = 2_000_000,
    tau_values=(0.0, 1.0, 2.0),
    seed: int = 0,
) -> dict:
    """Empirical checks of the Gaussian facts the analysis relies on.

    Returns {"tv": [...], "events": [...]} where each tv row compares
    the closed-form shifted-Gaussian total variation distance against a
    histogram estimate, and each event row reports the frequency of a
    norm-concentration event against its claimed probability bound.

    The l1 interval [n/8, 3n/4] is checked exactly as claimed even
    though the mean of the l1 norm of n standard Gaussians is
    sqrt(2/pi)*n ~ 0.798n, which lies above the interval, so that row
    fails for every n large enough for the concentration to kick in.
    A recentred diagnostic row shows the width itself is fine.
    """
    rng = np.random.default_rng(seed)
    bound = 1.0 - delta / 3.0
    tv_rows = []
    for tau in tau_values:
        analytic = tv_shifted_gaussian(float(tau))
        mc = _mc_tv(float(tau), tv_samples, rng)
        gap = abs(mc - analytic)
        tv_rows.append(
            {"tau": float(tau), "analytic": analytic, "mc": mc, "gap": gap, "ok": gap <= 0.01}
        )
    events = []
    n1 = math.ceil(32.0 * math.log(6.0 / delta))
    f1 = _event_frequency(rng, n1, samples, lambda g: np.abs(g).sum(axis=1), n1 / 8.0, 3.0 * n1 / 4.0)
    events.append(
        {
            "name": "l1-claimed",
            "n": n1,
            "lo": n1 / 8.0,
            "hi": 3.0 * n1 / 4.0,
            "bound": bound,
            "frequency": f1,
            "ok": f1 >= bound,
            "note": "interval excludes the true mean sqrt(2/pi)*n",
        }
    )
    mean1 = math.sqrt(2.0 / math.pi) * n1
    f1c = _event_frequency(
        rng, n1, samples, lambda g: np.abs(g).sum(axis=1), mean1 - n1 / 4.0, mean1 + n1 / 4.0
    )
    events.append(
        {
            "name": "l1-recentred",
            "n": n1,
            "lo": mean1 - n1 / 4.0,
            "hi": mean1 + n1 / 4.0,
            "bound": bound,
            "frequency": f1c,
            "ok": f1c >= bound,
            "note": "diagnostic: same width around the true mean",
        }
    )
    n2 = math.ceil(18.0 * math.log(6.0 / delta))
    f2 = _event_frequency(
        rng,
        n2,
        samples,
        lambda g: np.sqrt((g * g).sum(axis=1)),
        math.sqrt(n2) / 2.0,
        1.5 * math.sqrt(n2),
    )
    events.append(
        {
            "name": "l2-norm",
            "n": n2,
            "lo": math.sqrt(n2) / 2.0,
            "hi": 1.5 * math.sqrt(n2),
            "bound": bound,
            "frequency": f2,
            "ok": f2 >= bound,
            "note": "",
        }
    )
    cut = 4.0 * math.sqrt(math.log(1.0 / delta))
    f3 = _event_frequency(rng, 1, samples, lambda g: np.abs(g[:, 0]), 0.0, cut)
    events.append(
        {
            "name": "single-tail",
            "n": 1,
            "lo": 0.0,
            "hi": cut,
            "bound": bound,
            "frequency": f3,
            "ok": f3 >= bound,
            "note": "",
        }
    )
    return {"tv": tv_rows, "events": events}
