#!/usr/bin/env python3
"""Write one scenario file per (kind, variation) cell for a given seed.

Usage:
    python3 scripts/generate_scenarios.py --out-dir scenarios/ --seed 0
"""

import argparse
from pathlib import Path

from funcframe.scenario import save_scenario
from funcframe.synth import KINDS, VARIATIONS, generate_scenario


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default="scenarios")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for kind in KINDS:
        for variation in VARIATIONS:
            path = out / f"{kind}_{variation}_{args.seed}.json"
            save_scenario(path, generate_scenario(kind, variation, args.seed))
            print(path)


if __name__ == "__main__":
    main()
