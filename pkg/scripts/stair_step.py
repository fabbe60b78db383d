#!/usr/bin/env python3
"""Single-hop throughput against channel loss (3.0 to 5.5 dB).

Throughput falls in steps, one per extra purification round.
"""
import argparse
import csv
from pathlib import Path

from qrepeater.experiments import SweepConfig, loss_sweep, stair_steps


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--start", type=float, default=3.0)
    ap.add_argument("--stop", type=float, default=5.5)
    ap.add_argument("--step", type=float, default=0.1)
    ap.add_argument("--out", default="results/stair_step.csv")
    args = ap.parse_args()

    n = int(round((args.stop - args.start) / args.step)) + 1
    losses = [round(args.start + i * args.step, 6) for i in range(n)]
    pts = loss_sweep(losses, SweepConfig(seeds=tuple(range(1, args.seeds + 1))))
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["loss_db", "fidelity", "rounds", "status", "throughput", "throughput_sd"])
        for p in pts:
            w.writerow([p.loss_db, repr(p.fidelity), p.rounds, p.status, repr(p.throughput),
                        repr(p.throughput_sd)])
    rep = stair_steps(pts)
    for rounds, xs, mean, spread in rep.plateaus:
        print(f"rounds={rounds:2d}  {xs[0]:.1f}-{xs[-1]:.1f} dB  {mean:10.1f} pairs/s  spread {spread:.1%}")
    print(f"largest drop ratio between plateaus: {rep.max_drop_ratio:.3f}")


if __name__ == "__main__":
    main()
