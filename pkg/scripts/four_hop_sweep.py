#!/usr/bin/env python3
"""All 256 four-hop compositions over the S/G/F/P link classes.

Writes the sweep CSV and a JSON summary (R², ordering, bottleneck share).
"""
import argparse
import json
import logging
import time
from pathlib import Path

from qrepeater.experiments import (DEFAULT_CLASSES, SweepConfig, bottleneck_share,
                                   calibrate_classes, class_ranking, four_hop_compositions,
                                   ordering_report, r_squared, run_sweep, write_sweep_csv)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--limit", type=int, help="only the first N compositions (smoke run)")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default="results/four_hop.csv")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    t0 = time.perf_counter()
    cal = calibrate_classes(DEFAULT_CLASSES, reference="S")
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    cal.save(Path(args.out).with_name("calibration.csv"))
    comps = four_hop_compositions()[: args.limit]
    cfg = SweepConfig(seeds=tuple(range(1, args.seeds + 1)))
    rows = run_sweep(comps, DEFAULT_CLASSES, cal, cfg, workers=args.workers,
                     progress=lambda c, st: logging.info("%s %s", c, st))
    write_sweep_csv(rows, args.out)

    ok = [r for r in rows if r.status == "ok"]
    rep = ordering_report(rows)
    summary = {
        "compositions": len(rows),
        "ok": len(ok),
        "r2_bellgent_measurements": r_squared([r.cost_bellgent for r in ok],
                                              [r.measurements for r in ok]),
        "bottleneck_share": bottleneck_share(rows, class_ranking(cal, "SGFP")),
        "ordering": {**rep.__dict__, "correct_fraction": rep.correct_fraction},
        "seconds": time.perf_counter() - t0,
    }
    Path(args.out).with_suffix(".json").write_text(json.dumps(summary, indent=2) + "\n")
    print(json.dumps(summary, indent=2))


if __name__ == "__main__":
    main()
