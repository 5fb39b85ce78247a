#!/usr/bin/env python3
"""Recompute formation-area metrics from an exported run, independently of the
C++ library: parse run.csv with the csv module, rebuild the per-tick area by
brute force and accumulate the mean and RMSE left to right.

    recompute_metrics.py RUN_DIR                  print the recomputed values
    recompute_metrics.py RUN_DIR --expect FILE    compare with a metrics.json

Exit status: 0 match (or printed), 1 mismatch, 2 unusable input.
"""

import argparse
import csv
import json
import math
import sys
from pathlib import Path


def load_positions(run_dir):
    meta = json.loads((run_dir / "events.json").read_text())
    n = meta["meta"]["blimps"]
    ticks = {}
    with open(run_dir / "run.csv", newline="") as fh:
        for row in csv.DictReader(fh):
            ticks.setdefault(int(row["tick"]), {})[int(row["id"])] = (float(row["x"]), float(row["y"]))
    if len(ticks) != meta["ticks"]:
        raise ValueError(f"run.csv holds {len(ticks)} ticks, events.json says {meta['ticks']}")
    frames = []
    for tick in sorted(ticks):
        by_id = ticks[tick]
        if sorted(by_id) != list(range(n)):
            raise ValueError(f"tick {tick}: expected ids 0..{n - 1}")
        frames.append([by_id[i] for i in range(n)])
    return n, frames


def area(p1, p2, p3):
    # Half the absolute cross product of two edges.
    return 0.5 * abs((p2[0] - p1[0]) * (p3[1] - p1[1]) - (p3[0] - p1[0]) * (p2[1] - p1[1]))


def recompute(run_dir):
    n, frames = load_positions(run_dir)
    if n < 3 or not frames:
        return {"average_area": None, "area_rmse": None, "samples": len(frames)}
    series = []
    for f in frames:
        a = 0.0
        for k in range(n - 2):
            a += area(f[k], f[k + 1], f[k + 2])
        series.append(a)
    total = 0.0
    for a in series:
        total += a
    avg = total / len(series)
    sq = 0.0
    for a in series:
        sq += (a - avg) * (a - avg)
    return {"average_area": avg, "area_rmse": math.sqrt(sq / len(series)), "samples": len(series)}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("run_dir", type=Path)
    ap.add_argument("--expect", type=Path, help="metrics.json to compare against (exact equality)")
    args = ap.parse_args()
    try:
        got = recompute(args.run_dir)
    except (OSError, ValueError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    print(json.dumps(got))
    if args.expect is None:
        return 0
    want = json.loads(args.expect.read_text())
    bad = [k for k in ("average_area", "area_rmse", "samples") if want.get(k) != got[k]]
    for k in bad:
        print(f"mismatch {k}: expected {want.get(k)!r}, recomputed {got[k]!r}", file=sys.stderr)
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
