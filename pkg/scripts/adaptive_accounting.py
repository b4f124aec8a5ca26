"""Adaptive k-sparse recovery: per-phase measurement/round accounting.

Runs a handful of trials and prints the mean rows and rounds spent in
each phase, plus the end-to-end totals against the n-independent round
budget.

    python3 scripts/adaptive_accounting.py --n 16384 --k 64 --trials 5
"""

import argparse
import math
import sys
from collections import defaultdict
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

import numpy as np

from sketchrec.adaptive import MeasurementOracle, adaptive_k_recover
from sketchrec.harness import _gen_planted, trial_seed
from sketchrec.streams import head_tail


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=16384)
    ap.add_argument("--k", type=int, default=64)
    ap.add_argument("--eps", type=float, default=0.25)
    ap.add_argument("--trials", type=int, default=5)
    ap.add_argument("--seed", type=int, default=42)
    args = ap.parse_args()

    phase_rows = defaultdict(list)
    phase_rounds = defaultdict(list)
    totals, successes = [], 0
    for t in range(args.trials):
        seed = trial_seed(args.seed, t)
        rng = np.random.default_rng(seed)
        x = _gen_planted(args.n, args.k, args.eps, rng)
        oracle = MeasurementOracle(x)
        res = adaptive_k_recover(oracle, args.n, args.k, args.eps, seed=seed)
        err = float(np.sum((x - res.as_dense(args.n)) ** 2))
        tail = head_tail(x, args.k)[3]
        successes += err <= (1 + args.eps) * tail * tail + 1e-12
        for row in res.table:
            phase_rows[row["phase"]].append(row["rows"])
            phase_rounds[row["phase"]].append(row["rounds"])
        totals.append((oracle.rows_used, oracle.rounds_used, oracle.violations))

    print(f"n={args.n} k={args.k} eps={args.eps} trials={args.trials} successes={successes}")
    print(f"{'phase':<8}{'calls':>7}{'rows_mean':>12}{'rounds_mean':>13}")
    for phase in sorted(phase_rows):
        r = phase_rows[phase]
        d = phase_rounds[phase]
        print(f"{phase:<8}{len(r) // args.trials:>7}{np.mean(r):>12.1f}{np.mean(d):>13.2f}")
    rows, rounds, viol = (np.array(col) for col in zip(*totals))
    budget = math.log2(max(2.0, math.log2(args.n)))
    print(
        f"totals: rows_mean={rows.mean():.0f} rounds_max={rounds.max()} "
        f"violations={viol.sum()} loglog_n={budget:.2f} "
        f"c={rounds.max() / budget:.1f}"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
