#!/usr/bin/env python3
"""Single-hop throughput for transmitter/receiver buffer sizes.

Extra transmitter qubits help most: each one stays busy for a full
round trip waiting for its acknowledgment.
"""
import argparse
import statistics

from qrepeater.linklayer import link_throughput_effect

SIZES = [(25, 25), (50, 25), (100, 25), (25, 50), (50, 50), (100, 50)]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--loss-db", type=float, default=3.4)
    args = ap.parse_args()
    print("tx  rx   throughput      sd")
    for tx, rx in SIZES:
        t = [link_throughput_effect(tx, rx, loss_db=args.loss_db, seed=s).throughput
             for s in range(1, args.seeds + 1)]
        print(f"{tx:3d} {rx:3d} {statistics.fmean(t):12.1f} {statistics.stdev(t):7.1f}")


if __name__ == "__main__":
    main()
