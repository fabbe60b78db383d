import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import brute_paths
from qrepeater.network import (LinkSpec, Path, Topology, TopologyError, chain, dump_topology,
                               enumerate_paths, parse_topology, validate_topology)


def topo(nodes, edges, both=True):
    links = []
    for a, b in edges:
        links.append(LinkSpec(a, b, 3.4))
        if both:
            links.append(LinkSpec(b, a, 3.4))
    return Topology.build(nodes, links)


def test_valid_topology():
    assert validate_topology(topo("AB", [("A", "B")], both=False)) == []


def test_unknown_node_named():
    out = validate_topology(Topology.build("AB", [LinkSpec("A", "Z", 3.4)]))
    assert len(out) == 1 and "Z" in out[0]


def test_duplicate_link():
    out = validate_topology(Topology.build("AB", [LinkSpec("A", "B", 3.4), LinkSpec("A", "B", 4.0)]))
    assert len(out) == 1 and "duplicate" in out[0]


def test_bad_link_fields_reported():
    bad = Topology.build("AB", [LinkSpec("A", "B", -1.0, length_km=0, tx_qubits=0)])
    assert len(validate_topology(bad)) >= 3


def test_validate_is_idempotent():
    t = Topology.build("AB", [LinkSpec("A", "Z", 3.4), LinkSpec("A", "Z", 3.4)])
    assert validate_topology(t) == validate_topology(t)


def test_chain_paths():
    t = topo("ABC", [("A", "B"), ("B", "C")])
    assert [p.nodes for p in enumerate_paths(t, "A", "C", 4)] == [["A", "B", "C"]]
    assert enumerate_paths(t, "A", "C", 1) == []


def test_square_paths():
    t = topo("ABCD", [("A", "B"), ("B", "C"), ("A", "D"), ("D", "C")])
    assert [p.nodes for p in enumerate_paths(t, "A", "C", 2)] == [["A", "B", "C"], ["A", "D", "C"]]


def test_unknown_endpoint():
    with pytest.raises(TopologyError):
        enumerate_paths(topo("AB", [("A", "B")]), "A", "Q", 2)


def test_path_rejects_gaps_and_loops():
    with pytest.raises(TopologyError):
        Path((LinkSpec("A", "B", 1), LinkSpec("C", "D", 1)))
    with pytest.raises(TopologyError):
        Path((LinkSpec("A", "B", 1), LinkSpec("B", "A", 1)))
    with pytest.raises(TopologyError):
        Path(())


def test_chain_builder():
    p = chain([3.4, 4.0], classes=["S", "F"])
    assert p.nodes == ["n0", "n1", "n2"] and p.hops == 2 and p.links[1].cls == "F"


TEXT = """
# two hops
node A
node B
node C
link A B loss_db=3.4 length_km=20 tx_qubits=25 rx_qubits=25
link B C loss_db=4.3 class=P   # defaults for the rest
"""


def test_parse_and_dump_round_trip():
    t = parse_topology(TEXT)
    assert t.node_ids == ["A", "B", "C"]
    assert t.link("B", "C").loss_db == 4.3 and t.link("B", "C").cls == "P"
    again = parse_topology(dump_topology(t))
    assert again == t and again.link("B", "C").cls == "P"


@pytest.mark.parametrize("bad,line", [
    ("node A\nlink A B loss=3\n", 2),
    ("node A\n\nlink A B length_km=3\n", 3),
    ("nodes A\n", 1),
    ("link A B loss_db=x\n", 1),
])
def test_parse_errors_carry_line_number(bad, line):
    with pytest.raises(TopologyError, match=f"line {line}"):
        parse_topology(bad)


@st.composite
def small_graphs(draw):
    n = draw(st.integers(2, 6))
    nodes = [chr(ord("A") + i) for i in range(n)]
    pairs = [(a, b) for a in nodes for b in nodes if a != b]
    edges = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=len(pairs)))
    return nodes, edges


@given(small_graphs(), st.integers(1, 5))
def test_enumeration_matches_brute_force(g, max_hops):
    nodes, edges = g
    t = Topology.build(nodes, [LinkSpec(a, b, 1.0) for a, b in edges])
    adj: dict = {}
    for a, b in edges:
        adj.setdefault(a, set()).add(b)
    got = enumerate_paths(t, nodes[0], nodes[-1], max_hops)
    assert [tuple(p.nodes) for p in got] == brute_paths(adj, nodes[0], nodes[-1], max_hops)
    for p in got:
        assert 1 <= p.hops <= max_hops and len(set(p.nodes)) == len(p.nodes)
