import math

import pytest

from qrepeater.engine import EventKind, EventQueue, RandomStream
from qrepeater.fidelity import LinkModelParams
from qrepeater.linklayer import LinkLayer, QubitBuffer, link_throughput_effect
from qrepeater.network import LinkSpec


class Owner:
    """Minimal stand-in for the protocol layer: fire a fixed number of pulses."""

    def __init__(self, budget=math.inf, hold=True):
        self.budget = budget
        self.hold = hold
        self.pairs = 0

    def wants_pulse(self, link, occupied_after):
        if link.counters.pulses >= self.budget:
            return False
        return True

    def on_link_pair(self, link):
        self.pairs += 1
        if not self.hold:
            link.release_tx()
            link.release_rx()


def drain(q):
    while len(q):
        e = q.pop()
        if e.kind == EventKind.PULSE_ARRIVAL:
            e.payload.on_arrival()
        else:
            e.payload[0].on_ack(e.payload[1])


def make(p_ent=1.0, tx=1, rx=1, owner=None, seed=1):
    q = EventQueue()
    params = LinkModelParams(p_ent=p_ent)
    link = LinkLayer(0, LinkSpec("a", "b", 3.4, 20, tx, rx), 0.9, params, q, RandomStream(seed),
                     owner or Owner(budget=1))
    return q, link


def test_buffer_accounting():
    b = QubitBuffer(3)
    assert b.free == 3 and b.consistent()
    b.free -= 1
    b.awaiting += 1
    assert b.occupied == 1 and b.consistent()
    with pytest.raises(ValueError):
        QubitBuffer(0)


def test_certain_success():
    q, link = make()
    link.kick()
    drain(q)
    assert link.counters.pulses == 1 and link.counters.measurements == 1
    assert link.tx.entangled == 1 and link.rx.entangled == 1
    # one-way flight plus ack
    assert q.now == pytest.approx(2e-4 + 0.0, abs=1e-12)


def test_discard_when_receiver_full():
    q, link = make()
    link.rx.free = 0
    link.rx.entangled = 1
    link.kick()
    drain(q)
    assert link.counters.pulses == 1 and link.counters.measurements == 0
    assert link.discarded == 1
    assert link.tx.free == 1 and link.tx.awaiting == 0


def test_binomial_successes():
    owner = Owner(budget=10000, hold=False)
    q, link = make(p_ent=0.38, tx=25, rx=25, owner=owner, seed=3)
    link.kick()
    drain(q)
    n = link.counters.measurements
    assert link.counters.pulses == 10000 and n == 10000
    sigma = math.sqrt(n * 0.38 * 0.62)
    assert abs(link.successes - 3800) < 3 * sigma
    assert link.tx.consistent() and link.rx.consistent()
    assert link.tx.free == 25 and link.rx.free == 25


def test_measurements_never_exceed_pulses():
    owner = Owner(budget=2000)
    q, link = make(p_ent=0.38, tx=5, rx=3, owner=owner)
    link.kick()
    drain(q)
    assert link.counters.measurements <= link.counters.pulses
    assert link.rx.entangled == 3 and link.discarded > 0


def test_pulse_clock_spacing():
    owner = Owner(budget=3)
    q, link = make(p_ent=1.0, tx=3, rx=3, owner=owner)
    link.kick()
    arrivals = sorted(e.at for e in q.pending())
    assert arrivals == pytest.approx([1e-4, 1e-4 + 1e-6, 1e-4 + 2e-6])


def test_single_qubit_buffers_complete():
    res = link_throughput_effect(1, 1, loss_db=3.0, seed=2)
    assert res.ok and len(res.deliveries) == 200


def test_more_transmitter_qubits_help():
    a = link_throughput_effect(25, 25, seed=1)
    b = link_throughput_effect(50, 25, seed=1)
    assert b.throughput > a.throughput
