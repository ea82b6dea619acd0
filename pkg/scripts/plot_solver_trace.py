#!/usr/bin/env python3
"""Solve a scenario and plot merit value / constraint violation per iterate.

Usage:
    python3 scripts/plot_solver_trace.py scenario.json --out trace.png
Without --out, prints the trace as text instead of plotting.
"""

import argparse

import numpy as np

from funcframe.pipeline import run_pipeline
from funcframe.scenario import load_scenario


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("scenario")
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    scenario = load_scenario(args.scenario)
    _, report = run_pipeline(scenario)
    trace = report.solution.trace
    outer = np.array([row[0] for row in trace])
    merit = np.array([row[2] for row in trace])
    viol = np.array([row[3] for row in trace])

    if args.out is None:
        for k, (o, _, m, v) in enumerate(trace):
            print(f"{k:5d}  outer={o:2d}  merit={m:.6e}  viol={v:.3e}")
        return

    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True, figsize=(7, 6))
    ax1.semilogy(np.maximum(merit, 1e-18))
    ax1.set_ylabel("merit")
    ax2.semilogy(np.maximum(viol, 1e-18))
    ax2.set_ylabel("max violation")
    ax2.set_xlabel("iterate")
    for ax in (ax1, ax2):
        for k in np.flatnonzero(np.diff(outer)) + 1:
            ax.axvline(k, color="0.8", lw=0.8)
    fig.tight_layout()
    fig.savefig(args.out, dpi=150)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
