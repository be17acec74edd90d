#!/usr/bin/env python3
"""Recompute the aggregated sweep table from a raw sweep CSV.

Independent of the simulator's own aggregation: reads raw.csv, groups by
(value, policy) and emits mean and normal-approximation 95% intervals in the
same column layout, so the two outputs can be cross-checked.
"""

import argparse
import csv
import math
import sys


POLICY_ORDER = ["dnn", "mab", "rch"]
METRICS = ["p_timely", "mean_delay", "collision_rate"]


def mean_ci(xs):
    n = len(xs)
    mean = sum(xs) / n
    if n < 2:
        return mean, 0.0
    var = sum((x - mean) ** 2 for x in xs) / (n - 1)
    return mean, 1.96 * math.sqrt(var) / math.sqrt(n)


def read_raw(path):
    rows = []
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    for row in csv.DictReader(lines):
        rows.append(row)
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("raw_csv")
    ap.add_argument("-o", "--output", default="-", help="output path (default stdout)")
    args = ap.parse_args()

    rows = read_raw(args.raw_csv)
    if not rows:
        sys.exit("no data rows in " + args.raw_csv)

    sweep_key = rows[0]["sweep_key"]
    values = []
    for row in rows:
        if row["value"] not in values:
            values.append(row["value"])

    out = sys.stdout if args.output == "-" else open(args.output, "w")
    out.write("# csra-sweep-agg-v1\n")
    out.write(
        "sweep_key,value,policy,n,p_timely_mean,p_timely_ci95,mean_delay_mean,"
        "mean_delay_ci95,collision_rate_mean,collision_rate_ci95\n"
    )
    for value in values:
        for policy in POLICY_ORDER:
            group = [r for r in rows if r["value"] == value and r["method"] == policy]
            if not group:
                continue
            cells = [sweep_key, value, policy, str(len(group))]
            for metric in METRICS:
                mean, ci = mean_ci([float(r[metric]) for r in group])
                cells.append(repr(mean))
                cells.append(repr(ci))
            out.write(",".join(cells) + "\n")
    if out is not sys.stdout:
        out.close()


if __name__ == "__main__":
    main()
