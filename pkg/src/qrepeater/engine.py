"""Deterministic discrete-event core: clock, event queue and random stream."""
from __future__ import annotations

import heapq
import random
from enum import IntEnum
from typing import Any, NamedTuple

C_FIBER_KM_S = 2.0e5


class EventKind(IntEnum):
    PULSE_ARRIVAL = 0
    ACK_ARRIVAL = 1
    PURIFY_RESULT = 2
    SWAP_NOTIFY = 3
    TELEPORT_COMPLETE = 4


class Event(NamedTuple):
    at: float
    seq: int
    kind: EventKind
    payload: Any


class SchedulingError(ValueError):
    pass


def classical_latency(length_km: float) -> float:
    """One-way light travel time through ``length_km`` of fiber."""
    if length_km <= 0:
        raise ValueError(f"length must be positive, got {length_km}")
    return length_km / C_FIBER_KM_S


class EventQueue:
    """Min-heap of events ordered by ``(at, seq)``; ``seq`` breaks ties in
    scheduling order."""

    def __init__(self):
        self._heap: list[Event] = []
        self._seq = 0
        self.now = 0.0

    def __len__(self):
        return len(self._heap)

    def schedule(self, at: float, kind: EventKind, payload: Any = None) -> int:
        if at < self.now:
            raise SchedulingError(f"cannot schedule at {at} before now={self.now}")
        seq = self._seq
        self._seq = seq + 1
        heapq.heappush(self._heap, (at, seq, kind, payload))
        return seq

    def peek(self) -> Event:
        return Event(*self._heap[0])

    def pop(self) -> Event:
        ev = Event(*heapq.heappop(self._heap))
        self.now = ev.at
        return ev

    def pending(self) -> list[Event]:
        return [Event(*e) for e in sorted(self._heap)]


class RandomStream(random.Random):
    """Seeded uniform stream; one per simulation run."""

    def __init__(self, seed: int = 1):
        if not 0 <= seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        self.seed_value = seed
        super().__init__(seed)
