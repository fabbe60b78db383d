"""Entanglement Control: per-link pulse generation, acknowledgments and buffers.

A transmitter slot fires a pulse, the receiver measures it if it has a free
slot (otherwise the pulse is discarded unmeasured), and the outcome reaches the
transmitter one light-time later. Until then the transmitter slot is busy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional

from .engine import EventKind, EventQueue, RandomStream, classical_latency
from .fidelity import LinkModelParams
from .network import LinkSpec

if TYPE_CHECKING:
    from .protocols import SimResult

_ARRIVAL = EventKind.PULSE_ARRIVAL
_ACK = EventKind.ACK_ARRIVAL


@dataclass
class QubitBuffer:
    """Slot accounting for one end of a link.

    ``awaiting`` slots have an outstanding acknowledgment, ``entangled`` slots
    hold half of a Bell pair, ``reserved`` slots hold a pair whose purification
    result is still in flight.
    """

    capacity: int
    free: int = -1
    awaiting: int = 0
    entangled: int = 0
    reserved: int = 0

    def __post_init__(self):
        if self.capacity < 1:
            raise ValueError("buffer capacity must be >= 1")
        if self.free < 0:
            self.free = self.capacity

    @property
    def occupied(self) -> int:
        return self.awaiting + self.entangled + self.reserved

    def consistent(self) -> bool:
        return min(self.free, self.awaiting, self.entangled, self.reserved) >= 0 and \
            self.free + self.occupied == self.capacity


@dataclass
class WorkCounters:
    pulses: int = 0
    measurements: int = 0


class LinkLayer:
    """Live state of one hop inside a running simulation.

    ``owner`` must provide ``wants_pulse(link, occupied_after)`` and
    ``on_link_pair(link)``.
    """

    def __init__(self, index: int, spec: LinkSpec, fidelity: float, params: LinkModelParams,
                 queue: EventQueue, rng: RandomStream, owner):
        self.index = index
        self.spec = spec
        self.fidelity = fidelity
        self.p_ent = params.p_ent
        self.rate = params.pulse_rate
        self.latency = classical_latency(spec.length_km)
        self.tx = QubitBuffer(spec.tx_qubits)
        self.rx = QubitBuffer(spec.rx_qubits)
        self.counters = WorkCounters()
        self.successes = 0
        self.discarded = 0
        self.queue = queue
        self.rng = rng
        self.owner = owner
        self._ticks: set[int] = set()
        self._prune_at = 4 * spec.tx_qubits + 64

    def _reserve_emission(self, at: float) -> float:
        """Earliest free pulse-clock tick at or after ``at``."""
        tick = math.ceil(at * self.rate - 1e-6)
        ticks = self._ticks
        while tick in ticks:
            tick += 1
        ticks.add(tick)
        if len(ticks) > self._prune_at:
            floor = int(self.queue.now * self.rate) - 1
            self._ticks = {t for t in ticks if t >= floor}
            self._prune_at = 2 * len(self._ticks) + 64
        return tick / self.rate

    def _emit(self, at: float):
        self.counters.pulses += 1
        self.queue.schedule(self._reserve_emission(at) + self.latency, _ARRIVAL, self)

    def kick(self):
        """Fire every free transmitter slot the workload still needs."""
        tx = self.tx
        while tx.free and self.owner.wants_pulse(self, tx.capacity - tx.free + 1):
            tx.free -= 1
            tx.awaiting += 1
            self._emit(self.queue.now)

    def on_arrival(self):
        now = self.queue.now
        rx = self.rx
        if rx.free:
            self.counters.measurements += 1
            if self.rng.random() < self.p_ent:
                rx.free -= 1
                rx.entangled += 1
                self.successes += 1
                self.queue.schedule(now + self.latency, _ACK, (self, True))
                return
        else:
            self.discarded += 1
        # the failure ack frees the slot one light-time later; re-fire from there
        tx = self.tx
        if self.owner.wants_pulse(self, tx.capacity - tx.free):
            self._emit(now + self.latency)
        else:
            self.queue.schedule(now + self.latency, _ACK, (self, False))

    def on_ack(self, success: bool):
        tx = self.tx
        tx.awaiting -= 1
        if success:
            tx.entangled += 1
            self.owner.on_link_pair(self)
        else:
            tx.free += 1
            self.kick()

    def release_tx(self, reserved: bool = False):
        tx = self.tx
        if reserved:
            tx.reserved -= 1
        else:
            tx.entangled -= 1
        tx.free += 1
        self.kick()

    def release_rx(self, reserved: bool = False):
        rx = self.rx
        if reserved:
            rx.reserved -= 1
        else:
            rx.entangled -= 1
        rx.free += 1


def link_throughput_effect(tx_qubits: int, rx_qubits: int, *, loss_db: float = 3.4,
                           length_km: float = 20.0,
                           params: Optional[LinkModelParams] = None, seed: int = 1,
                           teleports: int = 200, target: float = 0.98) -> "SimResult":
    """Single-hop run with the given buffer sizes at both ends."""
    from .fidelity import base_fidelity
    from .network import Path
    from .protocols import plan_path, run_path_simulation

    params = params or LinkModelParams.qubus_like()
    link = LinkSpec("tx", "rx", loss_db, length_km, tx_qubits, rx_qubits)
    path = Path((link,))
    fids = [base_fidelity(loss_db, params)]
    plan = plan_path(path, fids, target, p_ent=params.p_ent)
    return run_path_simulation(path, plan, params=params, teleports=teleports, seed=seed)
