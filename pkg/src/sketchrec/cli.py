"""Command line front end for the experiment harness.

Each subcommand names an algorithm; shared flags set the experiment
parameters.  A config file of `key=value` lines can seed the settings,
with explicit flags taking precedence.  Exit status is 0 when the run
meets its configured target (or no target is set) and 1 otherwise.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .harness import ExperimentConfig, gaussian_fact_check, run

_DEFAULTS = {
    "hh-cm": dict(n=4096, k=8, eps=0.05, delta=0.01, trials=20, dist="zipf"),
    "hh-dyadic": dict(n=4096, k=8, eps=0.05, delta=0.01, trials=10, dist="zipf"),
    "hh-l2": dict(n=4096, k=8, eps=0.1, delta=0.05, trials=20, dist="planted"),
    "hh-det": dict(n=160, k=4, eps=0.25, delta=0.05, trials=10, dist="adversarial"),
    "sr-pipeline": dict(n=4096, k=16, eps=0.25, delta=0.05, trials=10, dist="planted"),
    "sr-adaptive": dict(n=4096, k=16, eps=0.25, delta=0.05, trials=5, dist="planted"),
    "spiked": dict(n=4096, k=32, eps=0.1, delta=0.1, trials=10, dist="spiked"),
}

_HELP = {
    "hh-cm": "l1 heavy hitters via the low-failure Count-Min sketch",
    "hh-dyadic": "l1 heavy hitters via dyadic interval search",
    "hh-l2": "l2 heavy hitters via the Gaussian bucket sketch",
    "hh-det": "deterministic l1 heavy hitters via an expander sketch",
    "sr-pipeline": "non-adaptive l2/l2 sparse recovery cascade",
    "sr-adaptive": "adaptive l2/l2 sparse recovery",
    "spiked": "support recovery for spike-plus-noise inputs",
    "facts": "Monte Carlo checks of the Gaussian facts used in the analysis",
}


def _add_common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--n", type=int, default=None, help="domain size")
    sp.add_argument("--k", type=int, default=None, help="sparsity / head size")
    sp.add_argument("--eps", type=float, default=None, help="accuracy parameter")
    sp.add_argument("--delta", type=float, default=None, help="failure probability")
    sp.add_argument("--trials", type=int, default=None, help="number of Monte Carlo trials")
    sp.add_argument("--seed", type=int, default=None, help="base seed")
    sp.add_argument(
        "--dist",
        choices=["zipf", "planted", "spiked", "adversarial"],
        default=None,
        help="input distribution",
    )
    sp.add_argument("--out", type=str, default=None, help="result table path (.csv and .dat)")
    sp.add_argument("--config", type=str, default=None, help="key=value config file")
    sp.add_argument("--target", type=float, default=None, help="required success rate for exit 0")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sketchrec", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _DEFAULTS:
        sp = sub.add_parser(name, help=_HELP[name])
        _add_common(sp)
        if name == "sr-pipeline":
            sp.add_argument("--schedule", choices=["quadratic", "fast"], default=None)
        if name == "sr-adaptive":
            sp.add_argument("--mode", choices=["full", "lowk", "one-sparse"], default=None)
    sp = sub.add_parser("facts", help=_HELP["facts"])
    sp.add_argument("--delta", type=float, default=0.05)
    sp.add_argument("--samples", type=int, default=200_000)
    sp.add_argument("--tv-samples", type=int, default=2_000_000)
    sp.add_argument("--seed", type=int, default=0)
    return parser


def _build_config(args: argparse.Namespace) -> ExperimentConfig:
    cfg = ExperimentConfig(algorithm=args.command, **_DEFAULTS[args.command])
    if args.config is not None:
        cfg = ExperimentConfig.from_kv_text(Path(args.config).read_text(), base=cfg)
        cfg = replace(cfg, algorithm=args.command)
    for key in ("n", "k", "eps", "delta", "trials", "seed", "dist", "out"):
        val = getattr(args, key, None)
        if val is not None:
            cfg = replace(cfg, **{key: val})
    cfg.params = dict(cfg.params)
    for key in ("schedule", "mode", "target"):
        val = getattr(args, key, None)
        if val is not None:
            cfg.params[key] = val
    return cfg


def _facts_main(args: argparse.Namespace) -> int:
    table = gaussian_fact_check(
        delta=args.delta,
        samples=args.samples,
        tv_samples=args.tv_samples,
        seed=args.seed,
    )
    print("shifted-Gaussian total variation, analytic vs Monte Carlo")
    for row in table["tv"]:
        print(
            f"  |tau|={row['tau']:.1f}  analytic={row['analytic']:.5f}  "
            f"mc={row['mc']:.5f}  gap={row['gap']:.5f}  {'ok' if row['ok'] else 'FAIL'}"
        )
    print("norm concentration events, claimed bound vs frequency")
    for row in table["events"]:
        line = (
            f"  {row['name']:<12} n={row['n']:<4} interval=[{row['lo']:.2f},{row['hi']:.2f}] "
            f"bound={row['bound']:.4f}  freq={row['frequency']:.4f}  "
            + ("ok" if row["ok"] else "FAIL")
        )
        if row["note"]:
            line += f"  ({row['note']})"
        print(line)
    claimed = [r for r in table["events"] if r["name"] != "l1-recentred"]
    return 0 if all(r["ok"] for r in table["tv"]) and all(r["ok"] for r in claimed) else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "facts":
        return _facts_main(args)
    cfg = _build_config(args)
    report = run(cfg)
    print(report.summary_line())
    return 0 if report.ok else 1


if __name__ == "__main__":
    sys.exit(main())
