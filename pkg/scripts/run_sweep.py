"""Run a scaling sweep and print the fitted constants.

    python3 scripts/run_sweep.py scripts/sweep_spec.json --csv sweep.csv

Reports, per cell, edges_out / (sqrt|S| n^1.5 ln n), rounds / ((D + sqrt(n|S|)) ln^2 n)
and the per-|S| log-log slope of rounds against n.
"""
import argparse
import json
import math
import sys
from collections import defaultdict

import numpy as np

from congest_ftp.harness import ExperimentSpec, records_csv, run_experiment


def fit(records):
    size = [r.edges_out / (math.sqrt(r.S) * r.n**1.5 * math.log(r.n)) for r in records]
    rounds = [r.rounds_used / ((r.D + math.sqrt(r.n * r.S)) * math.log(r.n) ** 2) for r in records]
    by_k = defaultdict(list)
    for r in records:
        by_k[r.S].append((r.n, r.rounds_used))
    slopes = {}
    for k, pts in sorted(by_k.items()):
        if len({n for n, _ in pts}) > 1:
            xs, ys = np.log([p[0] for p in pts]), np.log([p[1] for p in pts])
            slopes[k] = float(np.polyfit(xs, ys, 1)[0])
    return {
        "C1": max(size),
        "C2": max(rounds),
        "slopes": slopes,
        "max_edge_phase_load": max(r.max_edge_phase_load for r in records),
        "runs_with_slippage": sum(1 for r in records if r.slipped),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("spec")
    ap.add_argument("--csv")
    args = ap.parse_args(argv)
    with open(args.spec) as fh:
        spec = ExperimentSpec.from_dict(json.load(fh))
    records = []
    for rec in run_experiment(spec):
        records.append(rec)
        print(f"n={rec.n} |S|={rec.S} seed={rec.seed} edges={rec.edges_out}/{rec.m} rounds={rec.rounds_used} "
              f"load={rec.max_edge_phase_load} slipped={rec.slipped} {rec.wall_time:.1f}s", file=sys.stderr)
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(records_csv(records))
    print(json.dumps(fit(records), indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
