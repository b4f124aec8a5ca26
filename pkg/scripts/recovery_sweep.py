"""Pipeline schedule comparison: rows and success rate over k.

    python3 scripts/recovery_sweep.py --n 16384 --trials 30 --out sweep.dat
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

import numpy as np

from sketchrec.harness import ExperimentConfig, run

K_GRID = [4, 8, 16]


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=16384)
    ap.add_argument("--eps", type=float, default=0.1)
    ap.add_argument("--trials", type=int, default=30)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--out", type=str, default=None)
    args = ap.parse_args()

    lines = ["# schedule k trials successes rate rows_mean"]
    for schedule in ("quadratic", "fast"):
        for k in K_GRID:
            cfg = ExperimentConfig(
                "sr-pipeline", n=args.n, k=k, eps=args.eps,
                trials=args.trials, seed=args.seed, dist="planted",
                params={"schedule": schedule},
            )
            rep = run(cfg)
            rows = np.mean([r.rows for r in rep.reports])
            lines.append(
                f"{schedule} {k} {rep.trials} {rep.successes} {rep.rate:.4f} {rows:.1f}"
            )
            print(rep.summary_line(), f"schedule={schedule}")
    if args.out:
        Path(args.out).write_text("\n".join(lines) + "\n")
        print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
