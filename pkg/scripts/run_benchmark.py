#!/usr/bin/env python3
"""Run the full kinds x variations benchmark matrix and print the table.

Usage:
    python3 scripts/run_benchmark.py [--seeds 10] [--out bench.json]
"""

import argparse
import time

from funcframe.bench import format_table, run_benchmark
from funcframe.synth import KINDS, VARIATIONS


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--kinds", nargs="*", default=list(KINDS))
    ap.add_argument("--variations", nargs="*", default=list(VARIATIONS))
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    t0 = time.perf_counter()
    result = run_benchmark(args.kinds, args.variations, n_seeds=args.seeds)
    elapsed = time.perf_counter() - t0

    print(format_table(result, args.kinds, args.variations))
    print(f"{len(result.runs)} runs in {elapsed:.1f}s")
    if args.out:
        result.save(args.out)
        print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
