#!/usr/bin/env python3
"""The 46-path set of one to nine hops: cost against throughput and work."""
import argparse
import json
import logging
from pathlib import Path

from qrepeater.experiments import (PathSet, SweepConfig, calibrate_classes, default_path_set,
                                   ordering_report, r_squared, run_sweep, write_sweep_csv)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--path-set", help="path-set file; defaults to the built-in 46 paths")
    ap.add_argument("--out", default="results/variable_length.csv")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    ps = PathSet.load(args.path_set) if args.path_set else default_path_set()
    cal = calibrate_classes(ps.classes, reference="S" if "S" in ps.classes else None)
    rows = run_sweep(ps.paths, ps.classes, cal, SweepConfig(seeds=tuple(range(1, args.seeds + 1))),
                     progress=lambda c, st: logging.info("%s %s", c, st))
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    write_sweep_csv(rows, args.out)
    ok = [r for r in rows if r.status == "ok"]
    x = [r.cost_bellgent for r in ok]
    summary = {
        "paths": len(rows), "ok": len(ok),
        "r2_bellgent_measurements": r_squared(x, [r.measurements for r in ok]),
        "r2_bellgent_pulses": r_squared(x, [r.pulses for r in ok]),
        "r2_bellgent_inverse_throughput": r_squared(x, [1.0 / r.throughput for r in ok]),
        "ordering": ordering_report(rows).__dict__,
    }
    Path(args.out).with_suffix(".json").write_text(json.dumps(summary, indent=2) + "\n")
    print(json.dumps(summary, indent=2))


if __name__ == "__main__":
    main()
