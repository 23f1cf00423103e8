#!/usr/bin/env python3
"""Randomized finite-scale inequality sweep.

Generates seeded random explicit-metric systems and verifies every
finite-scale inequality in exact mode; writes one CSV row per report and
exits nonzero if anything is violated.
"""

import argparse
import csv
import sys
import time

from naifslab import run_finite_inequality_suite, summarize_reports


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--count", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--max-points", type=int, default=12)
    ap.add_argument("--max-maps", type=int, default=3)
    ap.add_argument("--max-cycle", type=int, default=2)
    ap.add_argument("--n-max", type=int, default=4)
    ap.add_argument("--out", default="finite_suite.csv")
    args = ap.parse_args()

    t0 = time.perf_counter()
    reports = run_finite_inequality_suite(
        count=args.count,
        base_seed=args.seed,
        max_points=args.max_points,
        max_maps=args.max_maps,
        max_cycle=args.max_cycle,
        n_max=args.n_max,
    )
    elapsed = time.perf_counter() - t0

    with open(args.out, "w", newline="") as f:
        f.write(f"# seed={args.seed}\n")
        w = csv.writer(f)
        w.writerow(["theorem", "level", "lhs", "rhs", "slack", "verdict", "context"])
        for r in reports:
            w.writerow([r.name, r.level, repr(r.lhs), repr(r.rhs), repr(r.slack), r.verdict, r.context])

    print(summarize_reports(reports))
    print(f"\n{args.count} instances in {elapsed:.1f}s -> {args.out}")
    violated = sum(1 for r in reports if r.verdict == "violated")
    return 1 if violated else 0


if __name__ == "__main__":
    sys.exit(main())
