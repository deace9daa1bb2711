"""Run the threshold scan on every bundled fixture and print the ranking tables."""

import argparse

from gateprune.cli import render_report
from gateprune.data import FIXTURES, fixture_path, ingest_csv
from gateprune.pipeline import ScanConfig, run_scan


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--step", type=float, default=0.02)
    ap.add_argument("--entanglement", choices=("linear", "full"), default="linear")
    ap.add_argument("--reps", type=int, default=1)
    ap.add_argument("--timing", choices=("wall", "cost"), default="wall")
    args = ap.parse_args()

    cfg = ScanConfig(
        entanglement=args.entanglement, reps=args.reps, seed=args.seed, step=args.step, timing=args.timing
    )
    for name in FIXTURES:
        X, y = ingest_csv(fixture_path(name))
        report = run_scan(X, y, cfg)
        print(f"== {name}: {X.shape[0]} rows, {X.shape[1]} features, baseline {report.baseline_gates} gates")
        print(render_report(report.to_dict()))
        print()


if __name__ == "__main__":
    main()
