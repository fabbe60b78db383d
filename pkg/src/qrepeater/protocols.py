"""Purification and entanglement-swapping control over a whole path.

A plan fixes a binary swap tree over the path's hops and a number of
symmetric purification rounds for every tree node. ``run_path_simulation``
executes that plan event by event on top of the link layer until the
teleportation workload has been delivered.
"""
from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator, Optional, Sequence

import numpy as np
from scipy import stats

from .engine import C_FIBER_KM_S, EventKind, EventQueue, RandomStream
from .fidelity import LinkModelParams, PURIFY_THRESHOLD, purify_map, swap_map
from .linklayer import LinkLayer
from .network import Path

MAX_ROUNDS = 10
MAX_ENUM_HOPS = 12
DEFAULT_TARGET = 0.98
DEFAULT_TELEPORTS = 200
DEFAULT_TIME_CAP = 600.0


class Infeasible(ValueError):
    """No plan reaches the target fidelity within the search bounds."""


class TimedOut(RuntimeError):
    def __init__(self, result: "SimResult"):
        super().__init__(f"simulated time cap reached after {len(result.deliveries)} deliveries")
        self.result = result


class Stalled(RuntimeError):
    def __init__(self, result: "SimResult"):
        super().__init__(f"event queue drained after {len(result.deliveries)} deliveries")
        self.result = result


# ---------------------------------------------------------------- swap trees

@dataclass(frozen=True)
class SwapTree:
    """Binary tree over hops ``lo..hi``; a leaf is a single hop."""

    lo: int
    hi: int
    left: Optional["SwapTree"] = None
    right: Optional["SwapTree"] = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    @property
    def swap_node(self) -> int:
        """Index (along the path) of the node where this subtree's swap happens."""
        if self.is_leaf:
            raise ValueError("a leaf performs no swap")
        return self.left.hi + 1

    @property
    def hops(self) -> int:
        return self.hi - self.lo + 1

    def segments(self) -> Iterator["SwapTree"]:
        """Post-order walk over every tree node."""
        if not self.is_leaf:
            yield from self.left.segments()
            yield from self.right.segments()
        yield self

    @property
    def shape(self) -> str:
        if self.is_leaf:
            return str(self.lo)
        return f"({self.left.shape} {self.right.shape})"

    def __str__(self):
        return self.shape


@lru_cache(maxsize=None)
def _trees(lo: int, hi: int) -> tuple[SwapTree, ...]:
    if lo == hi:
        return (SwapTree(lo, hi),)
    out = []
    for s in range(lo, hi):
        for left in _trees(lo, s):
            for right in _trees(s + 1, hi):
                out.append(SwapTree(lo, hi, left, right))
    return tuple(out)


def enumerate_swap_trees(hops: int) -> list[SwapTree]:
    """Every distinct tree shape over ``hops`` leaves (Catalan(hops - 1) of them)."""
    if not 1 <= hops <= MAX_ENUM_HOPS:
        raise ValueError(f"tree enumeration supports 1..{MAX_ENUM_HOPS} hops; "
                         f"use balanced_tree() for {hops}")
    return list(_trees(0, hops - 1))


def balanced_tree(lo: int, hi: int) -> SwapTree:
    if lo == hi:
        return SwapTree(lo, hi)
    mid = (lo + hi) // 2
    return SwapTree(lo, hi, balanced_tree(lo, mid), balanced_tree(mid + 1, hi))


# --------------------------------------------------------------------- plans

@dataclass(frozen=True)
class PurificationSchedule:
    """Symmetric-pumping rounds per tree node, keyed by ``(lo, hi)``."""

    rounds: dict

    def __getitem__(self, seg) -> int:
        return self.rounds[seg]

    @property
    def total(self) -> int:
        return sum(self.rounds.values())

    @property
    def max_rounds(self) -> int:
        return max(self.rounds.values())


@dataclass(frozen=True)
class Plan:
    tree: SwapTree
    schedule: PurificationSchedule
    predicted_measurements: float
    root_fidelity: float
    target: float

    @property
    def hops(self) -> int:
        return self.tree.hops


@lru_cache(maxsize=65536)
def _pumping(f0: float, max_rounds: int) -> tuple:
    """(fidelity, a, b) per round count k, where cost_k = a * cost_0 + b."""
    out = [(f0, 1.0, 0.0)]
    f, a, b = f0, 1.0, 0.0
    for _ in range(max_rounds):
        res = purify_map(f, f)
        a, b = 2.0 * a / res.success_prob, (2.0 * b + 2.0) / res.success_prob
        f = res.new_fidelity
        out.append((f, a, b))
    return tuple(out)


def _chain(f0: float, cost0: float, max_rounds: int, limit: float = math.inf):
    """(k, fidelity, expected measurements) for k = 0.. rounds of pumping."""
    for k, (f, a, b) in enumerate(_pumping(f0, max_rounds)):
        c = a * cost0 + b
        if c > limit:
            return
        yield k, f, c


def segment_fidelities(tree: SwapTree, rounds, fidelities: Sequence[float]) -> dict:
    """``(lo, hi) -> (fidelity before purification, fidelity after)``."""
    out = {}
    for seg in tree.segments():
        if seg.is_leaf:
            f0 = fidelities[seg.lo]
        else:
            f0 = swap_map(out[(seg.left.lo, seg.left.hi)][1], out[(seg.right.lo, seg.right.hi)][1])
        f = f0
        for _ in range(rounds[(seg.lo, seg.hi)]):
            f = purify_map(f, f).new_fidelity
        out[(seg.lo, seg.hi)] = (f0, f)
    return out


def predicted_cost(tree: SwapTree, rounds, fidelities: Sequence[float], p_ent: float,
                   *, unit_pairs: bool = False) -> float:
    """Expected measurements per delivered pair (or link pairs with ``unit_pairs``).

    A leaf pair costs ``1/p_ent`` link measurements; a round of purification
    turns cost ``c`` into ``(2c + 2)/p``; a swap adds 2; teleportation adds 2.
    """
    fids = segment_fidelities(tree, rounds, fidelities)
    per_op = 0.0 if unit_pairs else 2.0
    cost: dict = {}
    for seg in tree.segments():
        key = (seg.lo, seg.hi)
        if seg.is_leaf:
            c = 1.0 if unit_pairs else 1.0 / p_ent
        else:
            c = cost[(seg.left.lo, seg.left.hi)] + cost[(seg.right.lo, seg.right.hi)] + per_op
        f = fids[key][0]
        for _ in range(rounds[key]):
            out = purify_map(f, f)
            c = (2.0 * c + per_op) / out.success_prob
            f = out.new_fidelity
        cost[key] = c
    return cost[(tree.lo, tree.hi)] + per_op


def buffer_loads(tree: SwapTree, rounds) -> tuple[dict, dict]:
    """Sum of purification rounds of every segment ending on each link buffer.

    Returns ``(tx_load, rx_load)`` keyed by hop index: a segment ``lo..hi``
    holds its left qubit in hop ``lo``'s transmitter buffer and its right qubit
    in hop ``hi``'s receiver buffer.
    """
    tx: dict = {}
    rx: dict = {}
    for seg in tree.segments():
        k = rounds[(seg.lo, seg.hi)]
        tx[seg.lo] = tx.get(seg.lo, 0) + k
        rx[seg.hi] = rx.get(seg.hi, 0) + k
    return tx, rx


def fits_buffers(path: Path, tree: SwapTree, rounds) -> bool:
    """A buffer can deadlock only if every slot waits for a purification
    partner, so each buffer needs more slots than the rounds that share it."""
    tx, rx = buffer_loads(tree, rounds)
    return all(tx[i] < path.links[i].tx_qubits for i in tx) and \
        all(rx[i] < path.links[i].rx_qubits for i in rx)


# option tuple: (fidelity, cost, total_rounds, tx_load_at_lo, rx_load_at_hi, order_key, node)
# node: (lo, hi, rounds, left_node, right_node)

def _q(x: float) -> float:
    """Drop float noise so trees that are equal in exact arithmetic tie."""
    return float(f"{x:.12g}")


def _prune(options: list, with_loads: bool) -> list:
    keyed = sorted(((-_q(o[0]), _q(o[1]), o[2], o[5]), o) for o in options)
    if not with_loads:
        kept = []
        best_c, best_r = math.inf, math.inf
        for (_, c, r, _), o in keyed:
            if c < best_c or (c == best_c and r < best_r):
                kept.append(o)
                best_c, best_r = c, r
        return kept
    kept = []
    for (_, c, r, _), o in keyed:
        if not any(_q(k[1]) <= c and k[2] <= r and k[3] <= o[3] and k[4] <= o[4] for k in kept):
            kept.append(o)
    return kept


def _leaf_only_bound(fidelities: Sequence[float], target: float, p_ent: float,
                     max_rounds: int) -> float:
    """Cost of a greedy plan that purifies only link pairs.

    Swapping multiplies Werner parameters ``w = (4F - 1)/3``, so a leaf-only
    plan is tree independent; rounds go to the leaf with the best gain in
    ``log w`` per unit cost until the target is met.
    """
    chains = [_pumping(f, max_rounds) for f in fidelities]
    rounds = [0] * len(fidelities)
    w_target = (4.0 * target - 1.0) / 3.0
    logw = lambda f: math.log((4.0 * f - 1.0) / 3.0)
    cost = lambda i, k: chains[i][k][1] / p_ent + chains[i][k][2]
    while sum(logw(ch[r][0]) for ch, r in zip(chains, rounds)) < math.log(w_target) - 1e-15:
        best, pick = -1.0, None
        for i, r in enumerate(rounds):
            if r == max_rounds:
                continue
            gain = (logw(chains[i][r + 1][0]) - logw(chains[i][r][0])) / (cost(i, r + 1) - cost(i, r))
            if gain > best:
                best, pick = gain, i
        if pick is None:
            return math.inf
        rounds[pick] += 1
    return sum(cost(i, r) for i, r in enumerate(rounds)) + 2.0 * len(fidelities)


class _Search:
    def __init__(self, path: Path, fidelities: Sequence[float], target: float, p_ent: float,
                 max_rounds: int, with_loads: bool):
        self.path = path
        self.fids = list(fidelities)
        self.target = target
        self.p_ent = p_ent
        self.max_rounds = max_rounds
        self.with_loads = with_loads
        # branch and bound: a partial plan over lo..hi still needs at least one
        # link pair per outside hop plus a swap per outside hop and teleportation
        bound = _leaf_only_bound(self.fids, target, p_ent, max_rounds)
        self.bound = bound * (1 + 1e-9) if not with_loads else math.inf
        self.outside = lambda lo, hi: (len(self.fids) - (hi - lo + 1)) * (1.0 / p_ent + 2.0) + 2.0

    def limit(self, lo: int, hi: int) -> float:
        return self.bound - self.outside(lo, hi)

    def leaf(self, i: int) -> list:
        cap = min(self.path.links[i].tx_qubits, self.path.links[i].rx_qubits)
        out = []
        for k, f, c in _chain(self.fids[i], 1.0 / self.p_ent, self.max_rounds, self.limit(i, i)):
            if self.with_loads and k >= cap:
                break
            out.append((f, c, k, k, k, (), (i, i, k, None, None)))
        return _prune(out, self.with_loads)

    def combine(self, lo: int, hi: int, s: int, lefts: list, rights: list, out: list):
        links = self.path.links
        rx_cap = links[s].rx_qubits
        tx_cap = links[s + 1].tx_qubits
        limit = self.limit(lo, hi)
        for a in lefts:
            if self.with_loads and a[4] >= rx_cap:
                continue
            for b in rights:
                if self.with_loads and b[3] >= tx_cap:
                    continue
                c0 = a[1] + b[1] + 2.0
                if c0 > limit:
                    continue
                f0 = swap_map(a[0], b[0])
                if f0 <= PURIFY_THRESHOLD:
                    continue
                key = (s, a[5], b[5])
                for k, f, c in _chain(f0, c0, self.max_rounds, limit):
                    out.append((f, c, a[2] + b[2] + k, a[3] + k, b[4] + k, key,
                                (lo, hi, k, a[6], b[6])))

    def root_choice(self, options: list):
        links = self.path.links
        ok = [o for o in options if o[0] >= self.target - 1e-12
              and (not self.with_loads
                   or (o[3] < links[0].tx_qubits and o[4] < links[-1].rx_qubits))]
        if not ok:
            return None
        best = min(o[1] for o in ok)
        tied = [o for o in ok if o[1] <= best * (1 + 1e-12)]
        return min(tied, key=lambda o: (o[2], o[5]))

    def over_all_trees(self):
        h = len(self.fids)
        table = {(i, i): self.leaf(i) for i in range(h)}
        for length in range(2, h + 1):
            for lo in range(0, h - length + 1):
                hi = lo + length - 1
                out: list = []
                for s in range(lo, hi):
                    self.combine(lo, hi, s, table[(lo, s)], table[(s + 1, hi)], out)
                table[(lo, hi)] = _prune(out, self.with_loads)
        return self.root_choice(table[(0, h - 1)])

    def over_tree(self, tree: SwapTree):
        def walk(t: SwapTree) -> list:
            if t.is_leaf:
                return self.leaf(t.lo)
            out: list = []
            self.combine(t.lo, t.hi, t.left.hi, walk(t.left), walk(t.right), out)
            return _prune(out, self.with_loads)
        return self.root_choice(walk(tree))


def _node_to_plan(node, fidelities, p_ent, target) -> Plan:
    rounds = {}

    def build(n) -> SwapTree:
        lo, hi, k, left, right = n
        rounds[(lo, hi)] = k
        if left is None:
            return SwapTree(lo, hi)
        return SwapTree(lo, hi, build(left), build(right))

    tree = build(node)
    fids = segment_fidelities(tree, rounds, fidelities)
    return Plan(tree, PurificationSchedule(rounds), predicted_cost(tree, rounds, fidelities, p_ent),
                fids[(tree.lo, tree.hi)][1], target)


def _check_inputs(path: Path, fidelities: Sequence[float]):
    if len(fidelities) != path.hops:
        raise ValueError("need one base fidelity per hop")
    for i, f in enumerate(fidelities):
        if f <= PURIFY_THRESHOLD:
            raise Infeasible(f"hop {i} ({path.links[i].name}) has fidelity {f:.4f} <= 0.5")


def plan_for_tree(path: Path, tree: SwapTree, fidelities: Sequence[float],
                  target: float = DEFAULT_TARGET, *, p_ent: float = 0.38,
                  max_rounds: int = MAX_ROUNDS) -> Plan:
    """Cheapest round assignment on one fixed tree."""
    _check_inputs(path, fidelities)
    for with_loads in (False, True):
        best = _Search(path, fidelities, target, p_ent, max_rounds, with_loads).over_tree(tree)
        if best is None:
            break
        plan = _node_to_plan(best[6], fidelities, p_ent, target)
        if fits_buffers(path, plan.tree, plan.schedule.rounds):
            return plan
    raise Infeasible(f"tree {tree} cannot reach fidelity {target}")


def plan_path(path: Path, fidelities: Sequence[float], target: float = DEFAULT_TARGET, *,
              p_ent: float = 0.38, max_rounds: int = MAX_ROUNDS) -> Plan:
    """Swap tree and purification rounds minimizing expected measurements per
    delivered pair, subject to the target fidelity and buffer sizes.

    Searches every tree shape (interval dynamic programming over Pareto
    fronts of fidelity vs cost, equivalent to trying each enumerated tree).
    Ties go to fewer total rounds, then to the earlier tree in enumeration
    order. Paths longer than the enumeration bound use a balanced tree with
    uniform rounds.
    """
    _check_inputs(path, fidelities)
    if path.hops > MAX_ENUM_HOPS:
        return balanced_plan(path, fidelities, target, p_ent=p_ent, max_rounds=max_rounds)
    for with_loads in (False, True):
        best = _Search(path, fidelities, target, p_ent, max_rounds, with_loads).over_all_trees()
        if best is None:
            break
        plan = _node_to_plan(best[6], fidelities, p_ent, target)
        if fits_buffers(path, plan.tree, plan.schedule.rounds):
            return plan
    raise Infeasible(f"no plan for {path} reaches fidelity {target} "
                     f"within {max_rounds} rounds per node")


def balanced_plan(path: Path, fidelities: Sequence[float], target: float = DEFAULT_TARGET, *,
                  p_ent: float = 0.38, max_rounds: int = MAX_ROUNDS) -> Plan:
    """Balanced tree, same number of rounds at every node, fewest rounds that work."""
    _check_inputs(path, fidelities)
    tree = balanced_tree(0, path.hops - 1)
    for k in range(max_rounds + 1):
        rounds = {(s.lo, s.hi): k for s in tree.segments()}
        fids = segment_fidelities(tree, rounds, fidelities)
        if fids[(0, path.hops - 1)][1] >= target and fits_buffers(path, tree, rounds):
            return Plan(tree, PurificationSchedule(rounds),
                        predicted_cost(tree, rounds, fidelities, p_ent),
                        fids[(0, path.hops - 1)][1], target)
    raise Infeasible(f"balanced plan for {path} cannot reach {target}")


# ---------------------------------------------------------------- simulation

@dataclass(frozen=True)
class DeliveryRecord:
    index: int
    completed_at: float
    fidelity_at_delivery: float
    link_pairs: int = 0


@dataclass
class SimResult:
    status: str
    seed: int
    teleports: int
    deliveries: list = field(default_factory=list)
    pulses: int = 0
    measurements: int = 0
    link_measurements: int = 0
    purifications: int = 0
    swaps: int = 0
    teleports_started: int = 0
    link_pairs: int = 0
    discarded: int = 0
    end_time: float = 0.0
    throughput: float = float("nan")
    throughput_sd: float = float("nan")

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @property
    def link_pairs_per_delivery(self) -> float:
        return sum(d.link_pairs for d in self.deliveries) / len(self.deliveries)

    def summary(self) -> dict:
        out = {k: v for k, v in self.__dict__.items() if k != "deliveries"}
        out["delivered"] = len(self.deliveries)
        return out


def fit_throughput(records: Sequence[DeliveryRecord]) -> tuple[float, float]:
    """Least-squares slope of delivery index against completion time, with its
    standard error, in pairs per second."""
    if len(records) < 3:
        raise ValueError("need at least 3 deliveries to fit a throughput")
    t = np.array([r.completed_at for r in records], dtype=float)
    n = np.array([r.index for r in records], dtype=float)
    if np.ptp(t) == 0:
        raise ValueError("all deliveries completed at the same instant")
    fit = stats.linregress(t, n)
    return float(fit.slope), float(fit.stderr)


class _Segment:
    __slots__ = ("lo", "hi", "rounds", "waiting", "finished", "debt", "parent", "sibling",
                 "is_left", "is_root", "purify_delay", "swap_delay")


class _Pair:
    __slots__ = ("seg", "level", "fidelity", "link_pairs")

    def __init__(self, seg, level, fidelity, link_pairs):
        self.seg = seg
        self.level = level
        self.fidelity = fidelity
        self.link_pairs = link_pairs


_PURIFY = EventKind.PURIFY_RESULT
_SWAP = EventKind.SWAP_NOTIFY
_TELEPORT = EventKind.TELEPORT_COMPLETE


class PathSimulation:
    """One deterministic run of a plan over a path."""

    def __init__(self, path: Path, plan: Plan, fidelities: Sequence[float],
                 params: LinkModelParams, *, teleports: int = DEFAULT_TELEPORTS, seed: int = 1,
                 time_cap: float = DEFAULT_TIME_CAP):
        if plan.hops != path.hops:
            raise ValueError("plan and path disagree on hop count")
        self.path = path
        self.plan = plan
        self.workload = teleports
        self.seed = seed
        self.time_cap = time_cap
        self.queue = EventQueue()
        self.rng = RandomStream(seed)
        self.links = [LinkLayer(i, ln, fidelities[i], params, self.queue, self.rng, self)
                      for i, ln in enumerate(path.links)]
        pos = [0.0]
        for ln in path.links:
            pos.append(pos[-1] + ln.length_km)
        lat = lambda u, v: abs(pos[v] - pos[u]) / C_FIBER_KM_S

        self.segments: dict = {}
        self.leaf_segment: list = [None] * path.hops
        for t in plan.tree.segments():
            s = _Segment()
            s.lo, s.hi = t.lo, t.hi
            s.rounds = plan.schedule[(t.lo, t.hi)]
            s.waiting = [None] * s.rounds
            s.debt = [0] * s.rounds
            s.finished = deque()
            s.parent = s.sibling = None
            s.is_left = False
            s.is_root = t is plan.tree
            s.purify_delay = 2.0 * lat(t.lo, t.hi + 1)
            s.swap_delay = 0.0 if t.is_leaf else max(lat(t.swap_node, t.lo), lat(t.swap_node, t.hi + 1))
            self.segments[(t.lo, t.hi)] = s
            if t.is_leaf:
                self.leaf_segment[t.lo] = s
            else:
                left = self.segments[(t.left.lo, t.left.hi)]
                right = self.segments[(t.right.lo, t.right.hi)]
                left.parent = right.parent = s
                left.sibling, right.sibling = right, left
                left.is_left = True
        self.teleport_delay = lat(0, path.hops)
        # minimum link pairs each hop contributes per delivery
        self.need = []
        for i in range(path.hops):
            s, k = self.leaf_segment[i], 0
            while s is not None:
                k += s.rounds
                s = s.parent
            self.need.append(2 ** k)

        self.deliveries: list = []
        self.purifications = 0
        self.swaps = 0
        self.teleports_started = 0
        self.done = False

    # hooks used by LinkLayer
    def wants_pulse(self, link: LinkLayer, occupied_after: int) -> bool:
        return occupied_after <= (self.workload - self.teleports_started) * self.need[link.index]

    def on_link_pair(self, link: LinkLayer):
        self._ready(_Pair(self.leaf_segment[link.index], 0, link.fidelity, 1))

    def _ready(self, pair: _Pair):
        s = pair.seg
        j = pair.level
        if j < s.rounds:
            w = s.waiting[j]
            if w is None:
                s.waiting[j] = pair
            else:
                s.waiting[j] = None
                self._purify(w, pair)
            return
        if s.is_root:
            if self.teleports_started < self.workload:
                self._teleport(pair)
            else:
                s.finished.append(pair)
            return
        sib = s.sibling
        if sib.finished:
            other = sib.finished.popleft()
            if s.is_left:
                self._swap(pair, other)
            else:
                self._swap(other, pair)
        else:
            s.finished.append(pair)

    def _purify(self, keep: _Pair, drop: _Pair):
        s = keep.seg
        left, right = self.links[s.lo], self.links[s.hi]
        self.purifications += 1
        out = purify_map(keep.fidelity, drop.fidelity)
        # kept pair is parked until both ends hear the parity result
        left.tx.entangled -= 1
        left.tx.reserved += 1
        right.rx.entangled -= 1
        right.rx.reserved += 1
        # the sacrificed pair is measured now
        left.release_tx()
        right.release_rx()
        ok = self.rng.random() < out.success_prob
        self.queue.schedule(self.queue.now + s.purify_delay, _PURIFY,
                            (keep, drop.link_pairs, ok, out.new_fidelity))

    def _on_purify_result(self, payload):
        keep, dropped, ok, f = payload
        s = keep.seg
        left, right = self.links[s.lo], self.links[s.hi]
        j = keep.level
        if ok:
            left.tx.reserved -= 1
            left.tx.entangled += 1
            right.rx.reserved -= 1
            right.rx.entangled += 1
            keep.level = j + 1
            keep.fidelity = f
            keep.link_pairs += dropped + s.debt[j]
            s.debt[j] = 0
            self._ready(keep)
        else:
            s.debt[j] += keep.link_pairs + dropped
            left.release_tx(reserved=True)
            right.release_rx(reserved=True)

    def _swap(self, a: _Pair, b: _Pair):
        self.swaps += 1
        self.links[a.seg.hi].release_rx()
        self.links[b.seg.lo].release_tx()
        parent = a.seg.parent
        new = _Pair(parent, 0, swap_map(a.fidelity, b.fidelity), a.link_pairs + b.link_pairs)
        self.queue.schedule(self.queue.now + parent.swap_delay, _SWAP, new)

    def _teleport(self, pair: _Pair):
        self.teleports_started += 1
        self.links[0].release_tx()
        self.queue.schedule(self.queue.now + self.teleport_delay, _TELEPORT, pair)

    def _on_teleport_complete(self, pair: _Pair):
        self.links[-1].release_rx()
        idx = len(self.deliveries) + 1
        self.deliveries.append(DeliveryRecord(idx, self.queue.now, pair.fidelity, pair.link_pairs))
        if idx >= self.workload:
            self.done = True

    def run(self) -> SimResult:
        q = self.queue
        heap = q._heap
        pop = heapq.heappop
        on_purify, on_swap, on_teleport = self._on_purify_result, self._ready, self._on_teleport_complete
        cap = self.time_cap
        for link in self.links:
            link.kick()
        status = "stalled"
        while heap:
            at, _, kind, payload = pop(heap)
            if at > cap:
                heapq.heappush(heap, (at, _, kind, payload))
                status = "timed-out"
                break
            q.now = at
            if kind == 0:
                payload.on_arrival()
            elif kind == 1:
                payload[0].on_ack(payload[1])
            elif kind == 2:
                on_purify(payload)
            elif kind == 3:
                on_swap(payload)
            else:
                on_teleport(payload)
            if self.done:
                status = "ok"
                break
        return self._result(status)

    def pending_emissions(self) -> list[int]:
        """Pulses already reserved on each link's clock but not yet emitted."""
        late = [0] * len(self.links)
        now = self.queue.now
        for at, _, kind, payload in self.queue._heap:
            if kind == EventKind.PULSE_ARRIVAL and at - payload.latency > now + 1e-12:
                late[payload.index] += 1
        return late

    def _result(self, status: str) -> SimResult:
        late = self.pending_emissions()
        pulses = sum(ln.counters.pulses for ln in self.links) - sum(late)
        link_meas = sum(ln.counters.measurements for ln in self.links)
        res = SimResult(
            status=status, seed=self.seed, teleports=self.workload,
            deliveries=self.deliveries, pulses=pulses,
            measurements=link_meas + 2 * (self.purifications + self.swaps + self.teleports_started),
            link_measurements=link_meas, purifications=self.purifications, swaps=self.swaps,
            teleports_started=self.teleports_started,
            link_pairs=sum(ln.successes for ln in self.links),
            discarded=sum(ln.discarded for ln in self.links), end_time=self.queue.now)
        if len(self.deliveries) >= 3:
            res.throughput, res.throughput_sd = fit_throughput(self.deliveries)
        return res


def run_path_simulation(path: Path, plan: Plan, *, params: Optional[LinkModelParams] = None,
                        fidelities: Optional[Sequence[float]] = None,
                        teleports: int = DEFAULT_TELEPORTS, seed: int = 1,
                        time_cap: float = DEFAULT_TIME_CAP) -> SimResult:
    """Run ``plan`` over ``path`` until ``teleports`` pairs are delivered.

    Raises ``TimedOut`` (or ``Stalled``) carrying the partial result.
    """
    from .fidelity import base_fidelity

    params = params or LinkModelParams.qubus_like()
    if fidelities is None:
        fidelities = [base_fidelity(ln.loss_db, params) for ln in path.links]
    sim = PathSimulation(path, plan, fidelities, params, teleports=teleports, seed=seed,
                         time_cap=time_cap)
    res = sim.run()
    if res.status == "timed-out":
        raise TimedOut(res)
    if res.status == "stalled":
        raise Stalled(res)
    return res
