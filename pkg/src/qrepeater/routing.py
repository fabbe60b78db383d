"""Link cost metrics, additive path cost and Dijkstra path selection."""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional, Sequence, Union

from .calibration import CalibrationTable
from .fidelity import PURIFY_THRESHOLD, LinkModelParams, base_fidelity
from .network import LinkSpec, Path, Topology, TopologyError


class NoRoute(LookupError):
    pass


class CostMetric(str, Enum):
    LOSS = "loss"
    INVTRANS = "invtrans"
    PULSE = "pulse"
    MEAS = "meas"
    BELLGENT = "bellgent"

    @classmethod
    def parse(cls, value: Union[str, "CostMetric"]) -> "CostMetric":
        try:
            return cls(value.lower() if isinstance(value, str) else value)
        except ValueError:
            raise ValueError(f"unknown metric {value!r}; choose from "
                             f"{', '.join(m.value for m in cls)}") from None


@dataclass(frozen=True)
class CostVector:
    loss: float
    inv_trans: float
    pulse: float
    meas: float
    bell_gen_t: float

    def __getitem__(self, metric: CostMetric) -> float:
        return {CostMetric.LOSS: self.loss, CostMetric.INVTRANS: self.inv_trans,
                CostMetric.PULSE: self.pulse, CostMetric.MEAS: self.meas,
                CostMetric.BELLGENT: self.bell_gen_t}[CostMetric.parse(metric)]


def inv_trans(loss_db: float) -> float:
    """Inverse transmittance ``1/T`` of a channel with ``loss_db`` decibels."""
    if loss_db < 0:
        raise ValueError("loss must be non-negative")
    return 10.0 ** (loss_db / 10.0)


def link_cost(link: LinkSpec, metric, calibration: Optional[CalibrationTable] = None, *,
              normalized: bool = False) -> float:
    metric = CostMetric.parse(metric)
    if metric is CostMetric.LOSS:
        return link.loss_db
    if metric is CostMetric.INVTRANS:
        return inv_trans(link.loss_db)
    if calibration is None:
        raise ValueError(f"metric {metric.value} needs a calibration table")
    entry = calibration.lookup(link)
    if metric is CostMetric.PULSE:
        return entry.pulse_pt
    if metric is CostMetric.MEAS:
        return entry.meas_pt
    return calibration.normalized_bellgent(entry) if normalized else entry.bellgent_s


def cost_vector(link: LinkSpec, calibration: CalibrationTable, *, normalized: bool = False) -> CostVector:
    return CostVector(*(link_cost(link, m, calibration, normalized=normalized) for m in CostMetric))


def path_cost(path: Union[Path, Sequence[LinkSpec]], metric,
              calibration: Optional[CalibrationTable] = None, *, normalized: bool = False) -> float:
    links = path.links if isinstance(path, Path) else path
    return math.fsum(link_cost(ln, metric, calibration, normalized=normalized) for ln in links)


def usable_links(links: Iterable[LinkSpec], model: LinkModelParams) -> list[LinkSpec]:
    return [ln for ln in links if base_fidelity(ln.loss_db, model) > PURIFY_THRESHOLD]


def dijkstra(topology: Topology, src: str, dst: str, metric,
             calibration: Optional[CalibrationTable] = None, *,
             model: Optional[LinkModelParams] = None, normalized: bool = False) -> Path:
    """Minimum-cost simple path; ties go to fewer hops, then to the
    lexicographically smaller node sequence.

    Links whose base fidelity is at or below the purification threshold are
    dropped before the search.
    """
    model = model or LinkModelParams.qubus_like()
    ids = set(topology.node_ids)
    for n in (src, dst):
        if n not in ids:
            raise TopologyError(f"unknown node {n}")
    if src == dst:
        raise ValueError("source and destination must differ")
    adj: dict = {}
    for ln in usable_links(topology.links, model):
        c = link_cost(ln, metric, calibration, normalized=normalized)
        if not c >= 0 or math.isinf(c):
            raise ValueError(f"link {ln.name} has invalid cost {c}")
        adj.setdefault(ln.a, []).append((ln, c))

    heap = [(0.0, 0, (src,), ())]
    done = set()
    while heap:
        cost, hops, nodes, links = heapq.heappop(heap)
        node = nodes[-1]
        if node in done:
            continue
        done.add(node)
        if node == dst:
            return Path(links)
        for ln, c in adj.get(node, ()):
            if ln.b not in done:
                heapq.heappush(heap, (cost + c, hops + 1, nodes + (ln.b,), links + (ln,)))
    raise NoRoute(f"no usable route from {src} to {dst}")
