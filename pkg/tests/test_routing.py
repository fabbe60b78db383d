import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qrepeater.calibration import (CalibrationEntry, CalibrationError, CalibrationTable,
                                   reference_table)
from qrepeater.fidelity import LinkModelParams, base_fidelity
from qrepeater.network import LinkSpec, Path, Topology, chain, enumerate_paths
from qrepeater.routing import (CostMetric, CostVector, NoRoute, cost_vector, dijkstra, inv_trans,
                               link_cost, path_cost)

REF = reference_table()
MODEL = LinkModelParams.qubus_like()
CLASS_LOSS = {"S": 3.4, "G": 3.7, "F": 4.0, "P": 4.3}


def classed(a, b, sym, **kw):
    return LinkSpec(a, b, CLASS_LOSS[sym], cls=sym, **kw)


def composition(comp):
    return chain([CLASS_LOSS[c] for c in comp], classes=list(comp))


@pytest.mark.parametrize("loss,expected", [(3.4, 2.19), (3.7, 2.34), (4.0, 2.51), (4.3, 2.69)])
def test_inv_trans_reference_values(loss, expected):
    assert inv_trans(loss) == pytest.approx(expected, abs=0.01)


def test_inv_trans_lossless_and_negative():
    assert inv_trans(0.0) == 1.0
    with pytest.raises(ValueError):
        inv_trans(-1)


def test_normalized_bellgent_reference_links():
    assert link_cost(classed("a", "b", "S"), "bellgent", REF, normalized=True) == pytest.approx(1.0)
    poor = link_cost(classed("a", "b", "P"), CostMetric.BELLGENT, REF, normalized=True)
    assert poor == pytest.approx(217.7 / 33.1, abs=0.02)
    assert poor == pytest.approx(6.57, abs=1e-12)


def test_meas_per_teleport():
    assert link_cost(classed("a", "b", "F"), "meas", REF) == 2020


def test_loss_metric_needs_no_table():
    assert link_cost(LinkSpec("a", "b", 3.9), "loss") == 3.9


def test_missing_entry_names_link():
    with pytest.raises(CalibrationError, match="x-y"):
        link_cost(LinkSpec("x", "y", 3.4), "pulse", REF)
    with pytest.raises(ValueError):
        link_cost(LinkSpec("x", "y", 3.4), "pulse", None)


def test_unknown_metric():
    with pytest.raises(ValueError, match="bellgent"):
        CostMetric.parse("hops")


def test_published_path_costs():
    assert path_cost(composition("SPSSSSSS"), "bellgent", REF, normalized=True) == 13.57
    assert path_cost(composition("FFFFSSSS"), "bellgent", REF, normalized=True) == 15.72


def test_one_hop_path_cost_is_link_cost():
    link = classed("a", "b", "G")
    assert path_cost(Path((link,)), "pulse", REF) == link_cost(link, "pulse", REF)


def test_cost_vector():
    v = cost_vector(classed("a", "b", "G"), REF, normalized=True)
    assert isinstance(v, CostVector)
    assert v[CostMetric.MEAS] == 1237 and v["bellgent"] == pytest.approx(1.83)
    assert v.inv_trans == pytest.approx(10 ** 0.37)


def test_chain_route():
    t = Topology.build("ABC", [classed("A", "B", "S"), classed("B", "C", "S")])
    p = dijkstra(t, "A", "C", "bellgent", REF, normalized=True)
    assert p.nodes == ["A", "B", "C"]
    assert path_cost(p, "bellgent", REF, normalized=True) == pytest.approx(2.0)


def test_diamond_prefers_cheaper_branch():
    t = Topology.build("ABCD", [classed("A", "B", "S"), classed("B", "C", "S"),
                                classed("A", "D", "P"), classed("D", "C", "S")])
    p = dijkstra(t, "A", "C", "bellgent", REF, normalized=True)
    assert p.nodes == ["A", "B", "C"]
    assert path_cost(Path((t.link("A", "D"), t.link("D", "C"))), "bellgent", REF,
                     normalized=True) == pytest.approx(7.57)


def test_ties_fewer_hops_then_lexicographic():
    links = [LinkSpec("A", "C", 2.0), LinkSpec("A", "B", 1.0), LinkSpec("B", "C", 1.0),
             LinkSpec("A", "E", 1.0), LinkSpec("E", "D", 1.0), LinkSpec("D", "F", 1.0),
             LinkSpec("A", "X", 1.5), LinkSpec("X", "F", 1.5), LinkSpec("A", "W", 1.5),
             LinkSpec("W", "F", 1.5)]
    t = Topology.build("ABCDEFWX", links)
    assert dijkstra(t, "A", "C", "loss").nodes == ["A", "C"]
    assert dijkstra(t, "A", "F", "loss").nodes == ["A", "W", "F"]


def test_unusable_links_pruned():
    t = Topology.build("ABC", [LinkSpec("A", "C", 5.6), LinkSpec("A", "B", 3.4), LinkSpec("B", "C", 3.4)])
    assert dijkstra(t, "A", "C", "loss").nodes == ["A", "B", "C"]
    t2 = Topology.build("AC", [LinkSpec("A", "C", 5.6)])
    with pytest.raises(NoRoute):
        dijkstra(t2, "A", "C", "loss")


def test_unreachable():
    t = Topology.build("ABC", [LinkSpec("A", "B", 3.4)])
    with pytest.raises(NoRoute):
        dijkstra(t, "A", "C", "invtrans")


# ------------------------------------------------------------ oracle property

@st.composite
def random_graphs(draw):
    n = draw(st.integers(2, 8))
    nodes = [f"v{i}" for i in range(n)]
    pairs = [(a, b) for a in nodes for b in nodes if a != b]
    edges = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=min(len(pairs), 20)))
    links = [classed(a, b, draw(st.sampled_from("SGFP"))) for a, b in edges]
    # the odd unusable link
    if draw(st.booleans()) and edges:
        a, b = edges[0]
        links[0] = LinkSpec(a, b, 5.8, cls="S")
    return Topology.build(nodes, links), nodes[0], nodes[-1]


def exhaustive_min(t, src, dst, metric):
    usable = Topology(t.nodes, tuple(ln for ln in t.links if base_fidelity(ln.loss_db, MODEL) > 0.5))
    costs = [path_cost(p, metric, REF) for p in enumerate_paths(usable, src, dst, len(t.nodes))]
    return min(costs) if costs else None


@settings(max_examples=200)
@given(random_graphs(), st.sampled_from(list(CostMetric)))
def test_dijkstra_matches_exhaustive(g, metric):
    t, src, dst = g
    best = exhaustive_min(t, src, dst, metric)
    if best is None:
        with pytest.raises(NoRoute):
            dijkstra(t, src, dst, metric, REF)
        return
    p = dijkstra(t, src, dst, metric, REF)
    assert math.isclose(path_cost(p, metric, REF), best, rel_tol=1e-9)


@settings(max_examples=60)
# powers of two scale every float sum exactly, so the argmin must not move
@given(random_graphs(), st.sampled_from([2.0 ** e for e in range(-6, 11)]),
       st.sampled_from(["pulse", "meas", "bellgent"]))
def test_argmin_scale_invariant(g, k, metric):
    t, src, dst = g
    entries = [CalibrationEntry(e.link, e.loss_db, e.pulse_total, e.pulse_pt * k, e.meas_total,
                                e.meas_pt * k, e.throughput / k, e.throughput_sd, e.bellgent_s * k)
               for e in REF]
    table = CalibrationTable(entries, "S")
    try:
        a = dijkstra(t, src, dst, metric, REF)
    except NoRoute:
        return
    b = dijkstra(t, src, dst, metric, table)
    assert b.nodes == a.nodes


@given(st.text("SGFP", min_size=1, max_size=6), st.text("SGFP", min_size=1, max_size=6))
def test_additive(a, b):
    whole = composition(a + b)
    left = whole.links[: len(a)]
    right = whole.links[len(a):]
    for m in CostMetric:
        assert path_cost(whole, m, REF) == pytest.approx(path_cost(left, m, REF) + path_cost(right, m, REF))
