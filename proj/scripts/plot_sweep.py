#!/usr/bin/env python3
"""Render an aggregated sweep CSV as a P_timely-vs-swept-value figure."""

import argparse
import csv

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("aggregated_csv")
    ap.add_argument("-o", "--output", default="sweep.png")
    args = ap.parse_args()

    with open(args.aggregated_csv, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    rows = list(csv.DictReader(lines))
    if not rows:
        raise SystemExit("no data rows")

    sweep_key = rows[0]["sweep_key"]
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    for policy, marker in [("dnn", "o"), ("mab", "s"), ("rch", "^")]:
        pts = [r for r in rows if r["policy"] == policy]
        if not pts:
            continue
        xs = [float(r["value"]) for r in pts]
        ys = [float(r["p_timely_mean"]) for r in pts]
        es = [float(r["p_timely_ci95"]) for r in pts]
        ax.errorbar(xs, ys, yerr=es, marker=marker, capsize=3, label=policy)
    ax.set_xlabel(sweep_key)
    ax.set_ylabel("P_timely")
    ax.set_ylim(0, 1)
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(args.output, dpi=150)
    print("wrote", args.output)


if __name__ == "__main__":
    main()
