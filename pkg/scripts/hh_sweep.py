"""Success-rate sweep of the heavy-hitter sketches over eps.

Writes one gnuplot block per algorithm: eps, trials, successes, rate,
wilson_lo, wilson_hi, rows_mean.  Usage:

    python3 scripts/hh_sweep.py --n 16384 --trials 50 --out hh_sweep.dat
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

import numpy as np

from sketchrec.harness import ExperimentConfig, run

ALGS = ["hh-cm", "hh-dyadic", "hh-l2"]
EPS_GRID = [0.2, 0.1, 0.05]


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=16384)
    ap.add_argument("--trials", type=int, default=50)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--delta", type=float, default=0.05)
    ap.add_argument("--out", type=str, default=None)
    args = ap.parse_args()

    blocks = []
    for alg in ALGS:
        dist = "zipf" if alg.startswith("hh-cm") or alg == "hh-dyadic" else "planted"
        lines = [f"# {alg}  n={args.n} delta={args.delta} dist={dist}"]
        lines.append("# eps trials successes rate wilson_lo wilson_hi rows_mean")
        for eps in EPS_GRID:
            cfg = ExperimentConfig(
                alg, n=args.n, k=8, eps=eps, delta=args.delta,
                trials=args.trials, seed=args.seed, dist=dist,
            )
            rep = run(cfg)
            lo, hi = rep.ci
            rows = np.mean([r.rows for r in rep.reports])
            lines.append(
                f"{eps} {rep.trials} {rep.successes} {rep.rate:.4f} "
                f"{lo:.4f} {hi:.4f} {rows:.1f}"
            )
            print(rep.summary_line())
        blocks.append("\n".join(lines))
    table = "\n\n\n".join(blocks) + "\n"
    if args.out:
        Path(args.out).write_text(table)
        print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
