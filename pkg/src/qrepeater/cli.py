"""Command-line front end: ``qrepeater <subcommand> ...``."""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path as FilePath
from typing import Optional, Sequence

from .calibration import CalibrationTable, calibrate_links, reference_table
from .experiments import (DEFAULT_CLASSES, PathSet, SweepConfig, bottleneck_share,
                          calibrate_classes, class_ranking, composition_path,
                          four_hop_compositions, ordering_report, r_squared, read_sweep_csv,
                          rows_to_csv, run_sweep)
from .fidelity import LinkModelParams, base_fidelity
from .network import load_topology
from .protocols import (DEFAULT_TARGET, DEFAULT_TELEPORTS, DEFAULT_TIME_CAP, Infeasible, Stalled,
                        TimedOut, plan_path, run_path_simulation)
from .routing import CostMetric, NoRoute, dijkstra, path_cost

log = logging.getLogger("qrepeater")


def _seeds(text: str) -> list[int]:
    """``5`` means seeds 1..5; ``3,7,11`` lists them."""
    if "," in text:
        return [int(s) for s in text.split(",") if s]
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("need at least one seed")
    return list(range(1, n + 1))


def _params(args) -> LinkModelParams:
    model = LinkModelParams() if args.model == "linear" else LinkModelParams.qubus_like()
    if args.p_ent is not None or args.pulse_rate is not None:
        kw = {k: v for k, v in (("p_ent", args.p_ent), ("pulse_rate", args.pulse_rate)) if v is not None}
        model = dataclasses.replace(model, **kw)
    return model


def _calibration(args) -> Optional[CalibrationTable]:
    if getattr(args, "calibration", None) == "reference":
        return reference_table()
    if getattr(args, "calibration", None):
        return CalibrationTable.load(args.calibration, getattr(args, "reference", None))
    return None


def _emit(text: str, out: Optional[str]):
    if out:
        FilePath(out).write_text(text, encoding="utf-8")
        log.info("wrote %s", out)
    else:
        sys.stdout.write(text)


def cmd_calibrate(args) -> int:
    params = _params(args)
    kw = dict(teleports=args.teleports, target=args.target_fidelity)
    if args.path_set:
        ps = PathSet.load(args.path_set)
        table = calibrate_classes(ps.classes, params, args.seeds, reference=args.reference, **kw)
    elif args.topology:
        topo = load_topology(args.topology)
        # one entry per class label when present, otherwise per link
        seen, links, keys = set(), [], []
        for ln in topo.links:
            key = ln.cls or ln.name
            if key not in seen:
                seen.add(key)
                links.append(ln)
                keys.append(key)
        table = calibrate_links(links, params, args.seeds, keys=keys, reference=args.reference, **kw)
    else:
        table = calibrate_classes(DEFAULT_CLASSES, params, args.seeds, reference=args.reference or "S",
                                  **kw)
    _emit(table.to_csv(), args.out)
    return 0


def cmd_route(args) -> int:
    topo = load_topology(args.topology)
    cal = _calibration(args)
    try:
        path = dijkstra(topo, args.src, args.dst, args.metric, cal, model=_params(args),
                        normalized=args.normalized)
    except NoRoute as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    cost = path_cost(path, args.metric, cal, normalized=args.normalized)
    print(json.dumps({"path": path.nodes, "hops": path.hops, "metric": CostMetric.parse(args.metric).value,
                      "cost": cost}))
    return 0


def cmd_simulate(args) -> int:
    params = _params(args)
    if args.composition:
        classes = PathSet.load(args.path_set).classes if args.path_set else DEFAULT_CLASSES
        path = composition_path(args.composition, classes)
    else:
        if not (args.topology and args.src and args.dst):
            print("error: give --composition or --topology with --from and --to", file=sys.stderr)
            return 2
        path = dijkstra(load_topology(args.topology), args.src, args.dst, args.metric,
                        _calibration(args), model=params)
    fids = [base_fidelity(ln.loss_db, params) for ln in path.links]
    try:
        plan = plan_path(path, fids, args.target_fidelity, p_ent=params.p_ent)
    except Infeasible as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    out = []
    status = 0
    for s in args.seeds:
        try:
            res = run_path_simulation(path, plan, params=params, fidelities=fids,
                                      teleports=args.teleports, seed=s, time_cap=args.time_cap)
        except (TimedOut, Stalled) as exc:
            res, status = exc.result, 4
        summary = res.summary()
        summary.update(path=str(path), tree=plan.tree.shape, rounds=plan.schedule.total)
        out.append(summary)
    _emit("".join(json.dumps(o) + "\n" for o in out), args.out)
    return status


def cmd_sweep(args) -> int:
    if args.four_hop:
        classes, comps = dict(DEFAULT_CLASSES), four_hop_compositions()
    elif args.path_set:
        ps = PathSet.load(args.path_set)
        classes, comps = ps.classes, ps.paths
    else:
        print("error: give --path-set or --four-hop", file=sys.stderr)
        return 2
    params = _params(args)
    cfg = SweepConfig(tuple(args.seeds), args.teleports, args.target_fidelity, args.time_cap, params)
    cal = _calibration(args) or calibrate_classes(classes, params, tuple(range(1, 6)),
                                                  teleports=args.teleports,
                                                  target=args.target_fidelity)
    rows = run_sweep(comps, classes, cal, cfg, workers=args.workers,
                     progress=lambda c, st: log.info("%s %s", c, st))
    _emit(rows_to_csv(rows), args.out)
    return 0


def cmd_report(args) -> int:
    rows = read_sweep_csv(args.sweep)
    ok = [r for r in rows if r.status == "ok"]
    metric = CostMetric.parse(args.metric)
    rep = ordering_report(rows, metric)
    x = [r.cost(metric) for r in ok]
    out = {
        "rows": len(rows), "ok": len(ok),
        "r2_cost_measurements": r_squared(x, [r.measurements for r in ok]),
        "r2_cost_pulses": r_squared(x, [r.pulses for r in ok]),
        "ordering": {**rep.__dict__, "correct_fraction": rep.correct_fraction},
    }
    if args.calibration:
        cal = _calibration(args)
        symbols = sorted({c for r in ok for c in r.composition})
        out["bottleneck_share"] = bottleneck_share(rows, class_ranking(cal, symbols))
    _emit(json.dumps(out, indent=2) + "\n", args.out)
    return 0


def _add_common(p: argparse.ArgumentParser, seeds: Sequence[int] = (1,)):
    p.add_argument("--topology", help="topology file (node/link lines)")
    p.add_argument("--seeds", dest="seeds", type=_seeds, default=list(seeds),
                   help="N for seeds 1..N, or a comma list")
    p.add_argument("--seed", dest="seeds", type=lambda s: [int(s)], help="a single seed")
    p.add_argument("--metric", type=CostMetric.parse, default=CostMetric.BELLGENT,
                   help="loss | invtrans | pulse | meas | bellgent")
    p.add_argument("--target-fidelity", type=float, default=DEFAULT_TARGET)
    p.add_argument("--teleports", type=int, default=DEFAULT_TELEPORTS)
    p.add_argument("--time-cap", type=float, default=DEFAULT_TIME_CAP,
                   help="simulated-seconds limit per run")
    p.add_argument("--out", help="output file (default stdout)")
    p.add_argument("--calibration", help="calibration CSV, or 'reference' for the built-in table")
    p.add_argument("--reference", help="calibration key used to normalize BellGenT")
    p.add_argument("--path-set", help="path-set file (class lines plus compositions)")
    p.add_argument("--model", choices=("qubus", "linear"), default="qubus",
                   help="base-fidelity model")
    p.add_argument("--p-ent", type=float)
    p.add_argument("--pulse-rate", type=float)
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qrepeater", description="Quantum repeater routing experiments")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("calibrate", help="single-hop cost table")
    _add_common(c, seeds=range(1, 6))
    c.set_defaults(func=cmd_calibrate)

    r = sub.add_parser("route", help="Dijkstra path under one metric")
    _add_common(r)
    r.add_argument("--from", dest="src", required=True)
    r.add_argument("--to", dest="dst", required=True)
    r.add_argument("--normalized", action="store_true", help="normalize BellGenT costs")
    r.set_defaults(func=cmd_route)

    s = sub.add_parser("simulate-path", help="simulate one path")
    _add_common(s)
    s.add_argument("--composition", help="link-class string such as SGFP")
    s.add_argument("--from", dest="src")
    s.add_argument("--to", dest="dst")
    s.set_defaults(func=cmd_simulate)

    w = sub.add_parser("sweep", help="simulate a path set, emit CSV")
    _add_common(w, seeds=range(1, 4))
    w.add_argument("--four-hop", action="store_true", help="all 256 four-hop compositions")
    w.add_argument("--workers", type=int, default=1)
    w.set_defaults(func=cmd_sweep)

    rp = sub.add_parser("report", help="statistics over a sweep CSV")
    _add_common(rp)
    rp.add_argument("--sweep", required=True)
    rp.set_defaults(func=cmd_report)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
