"""Path-ensemble sweeps and the statistics run over them.

Paths are written as strings of link-class symbols (``SGFP`` is a four-hop
path Standard, Good, Fair, Poor). A path-set file declares the classes and
then lists one composition per line::

    class S loss_db=3.4 length_km=20 tx_qubits=25 rx_qubits=25
    class P loss_db=4.3
    SSSS
    SPSS
"""
from __future__ import annotations

import csv
import io
import itertools
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path as FilePath
from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np

from .calibration import REFERENCE_CLASSES, CalibrationTable, calibrate_link
from .fidelity import LinkModelParams, base_fidelity, rounds_to_reach
from .network import LinkSpec, Path, chain
from .protocols import (DEFAULT_TARGET, DEFAULT_TELEPORTS, DEFAULT_TIME_CAP, Infeasible, Plan,
                        SimResult, Stalled, TimedOut, plan_path, run_path_simulation)
from .routing import CostMetric, path_cost


@dataclass(frozen=True)
class LinkClass:
    symbol: str
    loss_db: float
    length_km: float = 20.0
    tx_qubits: int = 25
    rx_qubits: int = 25

    def __post_init__(self):
        if len(self.symbol) != 1 or self.symbol.isspace() or self.symbol == "#":
            raise ValueError(f"class symbol must be one printable character, got {self.symbol!r}")

    def link(self, a: str, b: str) -> LinkSpec:
        return LinkSpec(a, b, self.loss_db, self.length_km, self.tx_qubits, self.rx_qubits,
                        cls=self.symbol)


DEFAULT_CLASSES = {sym: LinkClass(sym, row[1]) for sym, row in REFERENCE_CLASSES.items()}


def composition_path(comp: str, classes: dict = DEFAULT_CLASSES) -> Path:
    try:
        cl = [classes[c] for c in comp]
    except KeyError as exc:
        raise ValueError(f"composition {comp!r} uses undeclared class {exc.args[0]!r}") from None
    if not cl:
        raise ValueError("empty composition")
    return Path(tuple(c.link(f"n{i}", f"n{i + 1}") for i, c in enumerate(cl)))


def four_hop_compositions(symbols: str = "SGFP") -> list[str]:
    return ["".join(p) for p in itertools.product(symbols, repeat=4)]


# 46 paths of one to nine hops: homogeneous runs, single weak links at each
# position of a four-hop Standard path, mixed pairs and a few long paths.
VARIABLE_LENGTH_SET = (
    [("S" * n) for n in range(1, 10)]
    + [c * n for c in "GF" for n in range(1, 5)]
    + ["P" * n for n in range(1, 4)]
    + ["".join(c if i == j else "S" for i in range(4)) for c in "GFP" for j in range(4)]
    + ["GGSS", "FFSS", "PPSS", "GSGS", "FSFS", "GGGS", "FFFS"]
    + ["SPSSSSSS", "FFFFSSSS", "SSSSSG", "SSSSF", "SGSGSGS", "SSSSSSSSP", "GSSSSSSSG"]
)


@dataclass
class PathSet:
    classes: dict
    paths: list

    def to_text(self) -> str:
        lines = [f"class {c.symbol} loss_db={c.loss_db!r} length_km={c.length_km!r} "
                 f"tx_qubits={c.tx_qubits} rx_qubits={c.rx_qubits}" for c in self.classes.values()]
        return "\n".join(lines + list(self.paths)) + "\n"

    @classmethod
    def parse(cls, text: str) -> "PathSet":
        classes: dict = {}
        paths: list = []
        conv = {"loss_db": float, "length_km": float, "tx_qubits": int, "rx_qubits": int}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            words = line.split()
            if words[0] == "class":
                if len(words) < 3:
                    raise ValueError(f"line {lineno}: class needs a symbol and loss_db")
                kw = {}
                for item in words[2:]:
                    key, sep, val = item.partition("=")
                    if not sep or key not in conv:
                        raise ValueError(f"line {lineno}: unknown key {key!r}")
                    kw[key] = conv[key](val)
                if "loss_db" not in kw:
                    raise ValueError(f"line {lineno}: class needs loss_db")
                classes[words[1]] = LinkClass(words[1], **kw)
            elif len(words) == 1:
                paths.append(words[0])
            else:
                raise ValueError(f"line {lineno}: cannot parse {raw.strip()!r}")
        out = cls(classes, paths)
        for p in paths:
            composition_path(p, classes)
        return out

    @classmethod
    def load(cls, path: Union[str, FilePath]) -> "PathSet":
        return cls.parse(FilePath(path).read_text(encoding="utf-8"))

    def save(self, path: Union[str, FilePath]):
        FilePath(path).write_text(self.to_text(), encoding="utf-8")


def default_path_set(paths: Optional[Sequence[str]] = None) -> PathSet:
    return PathSet(dict(DEFAULT_CLASSES), list(VARIABLE_LENGTH_SET if paths is None else paths))


def calibrate_classes(classes: dict, params: Optional[LinkModelParams] = None,
                      seeds: Sequence[int] = (1, 2, 3, 4, 5), *, teleports: int = DEFAULT_TELEPORTS,
                      target: float = DEFAULT_TARGET, reference: Optional[str] = None) -> CalibrationTable:
    entries = [calibrate_link(c.link("a", "b"), params, seeds, teleports=teleports, target=target,
                              key=c.symbol) for c in classes.values()]
    return CalibrationTable(entries, reference)


# ---------------------------------------------------------------- sweeps

SWEEP_COLUMNS = ("composition", "hops", "cost_loss", "cost_invtrans", "cost_pulse", "cost_meas",
                 "cost_bellgent", "throughput", "throughput_sd", "pulses", "measurements", "status")


@dataclass
class SweepRow:
    composition: str
    hops: int
    cost_loss: float
    cost_invtrans: float
    cost_pulse: float
    cost_meas: float
    cost_bellgent: float
    throughput: float = math.nan
    throughput_sd: float = math.nan
    pulses: float = math.nan
    measurements: float = math.nan
    status: str = "ok"

    def __post_init__(self):
        if len(self.composition) != self.hops:
            raise ValueError("composition length must equal hop count")

    def cost(self, metric) -> float:
        return getattr(self, "cost_" + CostMetric.parse(metric).value)


@dataclass(frozen=True)
class SweepConfig:
    seeds: tuple = (1, 2, 3)
    teleports: int = DEFAULT_TELEPORTS
    target: float = DEFAULT_TARGET
    time_cap: float = DEFAULT_TIME_CAP
    params: LinkModelParams = field(default_factory=LinkModelParams.qubus_like)


def _status_of(exc: Exception) -> str:
    if isinstance(exc, TimedOut):
        return "timed-out"
    if isinstance(exc, Stalled):
        return "stalled"
    return "infeasible"


def _plan(comp: str, classes: dict, cfg: SweepConfig) -> tuple[Path, list, Plan]:
    path = composition_path(comp, classes)
    fids = [base_fidelity(ln.loss_db, cfg.params) for ln in path.links]
    return path, fids, plan_path(path, fids, cfg.target, p_ent=cfg.params.p_ent)


def simulate_composition(comp: str, classes: dict = DEFAULT_CLASSES, *, seed: int = 1,
                         cfg: SweepConfig = SweepConfig()) -> SimResult:
    path, fids, plan = _plan(comp, classes, cfg)
    return run_path_simulation(path, plan, params=cfg.params, fidelities=fids,
                               teleports=cfg.teleports, seed=seed, time_cap=cfg.time_cap)


def _run_one(job) -> tuple:
    """Worker: all seeds of one composition. Returns per-seed summaries."""
    comp, classes, cfg = job
    try:
        path, fids, plan = _plan(comp, classes, cfg)
    except Infeasible:
        return comp, "infeasible", []
    runs = []
    for s in cfg.seeds:
        try:
            r = run_path_simulation(path, plan, params=cfg.params, fidelities=fids,
                                    teleports=cfg.teleports, seed=s, time_cap=cfg.time_cap)
        except (TimedOut, Stalled) as exc:
            return comp, _status_of(exc), []
        runs.append((r.throughput, r.throughput_sd, r.pulses, r.measurements))
    return comp, "ok", runs


def _aggregate(comp: str, status: str, runs: list, classes: dict,
               calibration: Optional[CalibrationTable]) -> SweepRow:
    path = composition_path(comp, classes)
    costs = {}
    for m in CostMetric:
        try:
            costs[m] = path_cost(path, m, calibration, normalized=True)
        except (KeyError, ValueError):
            costs[m] = math.nan
    row = SweepRow(comp, len(comp), costs[CostMetric.LOSS], costs[CostMetric.INVTRANS],
                   costs[CostMetric.PULSE], costs[CostMetric.MEAS], costs[CostMetric.BELLGENT],
                   status=status)
    if status == "ok":
        tputs = [r[0] for r in runs]
        row.throughput = statistics.fmean(tputs)
        row.throughput_sd = statistics.stdev(tputs) if len(tputs) > 1 else runs[0][1]
        row.pulses = statistics.fmean(r[2] for r in runs)
        row.measurements = statistics.fmean(r[3] for r in runs)
    return row


def sort_rows(rows: Iterable[SweepRow]) -> list[SweepRow]:
    """Ascending throughput; failed rows last, by composition."""
    return sorted(rows, key=lambda r: (r.status != "ok", r.throughput if r.status == "ok" else 0.0,
                                       r.hops, r.composition))


def run_sweep(compositions: Sequence[str], classes: dict = DEFAULT_CLASSES,
              calibration: Optional[CalibrationTable] = None, cfg: SweepConfig = SweepConfig(), *,
              workers: int = 1, progress: Optional[Callable[[str, str], None]] = None) -> list[SweepRow]:
    """Simulate every composition once per seed and aggregate one row each.

    Runs may fan out over ``workers`` processes; aggregation happens after
    all runs finish, so the output does not depend on ``workers``.
    """
    jobs = [(c, classes, cfg) for c in compositions]
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            results = list(ex.map(_run_one, jobs))
    else:
        results = []
        for job in jobs:
            results.append(_run_one(job))
            if progress:
                progress(results[-1][0], results[-1][1])
    return sort_rows(_aggregate(c, st, runs, classes, calibration) for c, st, runs in results)


def rows_to_csv(rows: Iterable[SweepRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for r in rows:
        d = asdict(r)
        w.writerow([d["composition"], d["hops"]]
                   + [repr(float(d[c])) for c in SWEEP_COLUMNS[2:-1]] + [d["status"]])
    return buf.getvalue()


def rows_from_csv(text: str) -> list[SweepRow]:
    rows = []
    for d in csv.DictReader(io.StringIO(text)):
        kw = {f.name: d[f.name] for f in fields(SweepRow)}
        kw["hops"] = int(kw["hops"])
        for c in SWEEP_COLUMNS[2:-1]:
            kw[c] = float(kw[c])
        rows.append(SweepRow(**kw))
    return rows


def write_sweep_csv(rows: Iterable[SweepRow], path: Union[str, FilePath]):
    FilePath(path).write_text(rows_to_csv(rows), encoding="utf-8")


def read_sweep_csv(path: Union[str, FilePath]) -> list[SweepRow]:
    return rows_from_csv(FilePath(path).read_text(encoding="utf-8"))


# ---------------------------------------------------------------- statistics

def r_squared(x: Sequence[float], y: Sequence[float]) -> float:
    """Coefficient of determination of the least-squares line ``y ~ a + b x``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-D and the same length")
    if len(x) < 3:
        raise ValueError("need at least 3 points")
    sxx = float(np.sum((x - x.mean()) ** 2))
    if sxx == 0.0:
        raise ValueError("x is constant; the fit is undefined")
    syy = float(np.sum((y - y.mean()) ** 2))
    if syy == 0.0:
        return 0.0
    sxy = float(np.sum((x - x.mean()) * (y - y.mean())))
    return sxy * sxy / (sxx * syy)


@dataclass(frozen=True)
class OrderingReport:
    pairs_total: int
    pairs_equal_cost: int
    correct: int
    incorrect: int
    incorrect_with_gap_over_10pct: int

    @property
    def correct_fraction(self) -> float:
        judged = self.correct + self.incorrect
        return self.correct / judged if judged else math.nan


def ordering_report(rows: Sequence[SweepRow], metric=CostMetric.BELLGENT,
                    rel_tol: float = 1e-9) -> OrderingReport:
    """Pairwise check of whether lower cost means higher mean throughput.

    Costs within ``rel_tol`` of each other count as equal. An incorrect pair
    has a large gap when the higher-throughput path beats the other by more
    than 10% of the lower throughput.
    """
    ok = [r for r in rows if r.status == "ok"]
    total = equal = correct = incorrect = big = 0
    for a, b in itertools.combinations(ok, 2):
        total += 1
        ca, cb = a.cost(metric), b.cost(metric)
        if math.isclose(ca, cb, rel_tol=rel_tol, abs_tol=0.0):
            equal += 1
            continue
        cheap, dear = (a, b) if ca < cb else (b, a)
        if cheap.throughput > dear.throughput:
            correct += 1
        else:
            incorrect += 1
            lo, hi = sorted((cheap.throughput, dear.throughput))
            if hi - lo > 0.1 * lo:
                big += 1
    return OrderingReport(total, equal, correct, incorrect, big)


def weakest_class(comp: str, ranking: Sequence[str]) -> str:
    """The class in ``comp`` that comes last in ``ranking`` (best first)."""
    return max(comp, key=ranking.index)


def class_ranking(calibration: CalibrationTable, symbols: Iterable[str]) -> list[str]:
    """Symbols ordered by decreasing single-hop throughput."""
    return sorted(symbols, key=lambda s: (-calibration[s].throughput, s))


def bottleneck_share(rows: Sequence[SweepRow], ranking: Sequence[str]) -> float:
    """Fraction of throughput variance explained by grouping rows on their
    weakest link class (between-group over total sum of squares)."""
    ok = [r for r in rows if r.status == "ok"]
    y = np.array([r.throughput for r in ok])
    if len(y) < 2:
        raise ValueError("need at least 2 successful rows")
    groups: dict = {}
    for r in ok:
        groups.setdefault(weakest_class(r.composition, ranking), []).append(r.throughput)
    mean = y.mean()
    total = float(np.sum((y - mean) ** 2))
    between = sum(len(g) * (statistics.fmean(g) - mean) ** 2 for g in groups.values())
    return between / total if total else math.nan


# ---------------------------------------------------------------- loss sweep

@dataclass(frozen=True)
class LossPoint:
    loss_db: float
    fidelity: float
    rounds: Optional[int]
    status: str
    throughput: float = math.nan
    throughput_sd: float = math.nan


def loss_sweep(losses: Sequence[float], cfg: SweepConfig = SweepConfig(), *,
               max_rounds: int = 10) -> list[LossPoint]:
    """Single-hop throughput as a function of channel loss."""
    out = []
    for loss in losses:
        f0 = base_fidelity(loss, cfg.params)
        rounds = rounds_to_reach(f0, cfg.target)
        link = LinkSpec("a", "b", loss)
        path = Path((link,))
        try:
            plan = plan_path(path, [f0], cfg.target, p_ent=cfg.params.p_ent, max_rounds=max_rounds)
        except Infeasible:
            out.append(LossPoint(loss, f0, rounds, "infeasible"))
            continue
        tputs = [run_path_simulation(path, plan, params=cfg.params, fidelities=[f0],
                                     teleports=cfg.teleports, seed=s,
                                     time_cap=cfg.time_cap).throughput for s in cfg.seeds]
        sd = statistics.stdev(tputs) if len(tputs) > 1 else 0.0
        out.append(LossPoint(loss, f0, rounds, "ok", statistics.fmean(tputs), sd))
    return out


@dataclass(frozen=True)
class StairReport:
    plateaus: tuple          # (rounds, losses, mean throughput, relative spread)
    drops: tuple             # (rounds before, rounds after, ratio of plateau means)
    max_spread: float
    max_drop_ratio: float


def stair_steps(points: Sequence[LossPoint]) -> StairReport:
    """Group feasible points by purification rounds and compare plateaus.

    Spread is ``max/min - 1`` inside a plateau; drop ratio is the
    throughput of the first point of a plateau over the last point of the
    plateau before it.
    """
    ok = [p for p in points if p.status == "ok"]
    plateaus = []
    for rounds, grp in itertools.groupby(ok, key=lambda p: p.rounds):
        grp = list(grp)
        t = [p.throughput for p in grp]
        plateaus.append((rounds, tuple(p.loss_db for p in grp), statistics.fmean(t),
                         max(t) / min(t) - 1.0, t[0], t[-1]))
    drops = tuple((a[0], b[0], b[4] / a[5]) for a, b in zip(plateaus, plateaus[1:]))
    return StairReport(tuple(p[:4] for p in plateaus), drops,
                       max((p[3] for p in plateaus), default=0.0),
                       max((d[2] for d in drops), default=0.0))
