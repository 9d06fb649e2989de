from __future__ import annotations

import json

import pytest

from tracebench.docgraph import (
    DocGraph,
    DocGraphError,
    build_graph,
    leaf_adjacency,
    sample_nodes,
    token_count,
)
from tracebench.genport import RecordingAdapter, ReplayAdapter, StageRequest, StageResponse

MANUAL = """\
# Fulfillment Operations Manual

Shared rules for the fulfillment desk.

## Standard fulfillment

Check the stock ledger before anything else. In-stock items get a warehouse
picker assignment and never a purchase order.

## Lab procurement

Lab requests that need purchasing must consult the refurbished-hardware portal
first, and only then raise a purchase order.

## Delivery

High-value items require a signature tag. Residential deliveries take the
evening window.
"""


def test_small_document_single_node():
    g = build_graph("just a short note", max_chunk_tokens=50)
    assert len(g.nodes) == 1
    assert g.nodes[g.root].is_leaf
    assert not g.reference_edges


def test_two_section_split():
    doc = "# A\n\n" + ("alpha " * 30) + "\n\n# B\n\n" + ("beta " * 30)
    g = build_graph(doc, max_chunk_tokens=40)
    root = g.nodes[g.root]
    assert len(root.children) == 2
    for child in root.children:
        assert g.nodes[child].parent == g.root
        assert g.nodes[child].token_count <= 40


def test_recursive_split_and_leaf_limit():
    g = build_graph(MANUAL, max_chunk_tokens=30)
    for leaf_id in g.leaves():
        leaf = g.nodes[leaf_id]
        assert leaf.token_count <= 30 or leaf.oversize
    # exactly one root; every non-root has one parent
    roots = [n for n in g.nodes.values() if n.parent is None]
    assert [r.id for r in roots] == [g.root]
    for n in g.nodes.values():
        for child in n.children:
            assert g.nodes[child].parent == n.id


def test_indivisible_oversize_leaf_warns():
    doc = "word " * 100  # no headings at all
    g = build_graph(doc, max_chunk_tokens=10)
    assert g.nodes[g.root].oversize
    assert any("kept whole" in w for w in g.warnings)


def test_reference_edges_from_fixture(tmp_path):
    class EdgeGen:
        def respond(self, req: StageRequest) -> StageResponse:
            nodes = [n["id"] for n in req.payload["nodes"]]
            return StageResponse({"edges": [{"from": nodes[0], "to": nodes[-1], "kind": "implicit"}]}, "live")

    store = tmp_path / "fixtures"
    recording = RecordingAdapter(EdgeGen(), store)
    g1 = build_graph(MANUAL, max_chunk_tokens=30, gen=recording)
    assert len(g1.reference_edges) == 1
    src, dst, kind = g1.reference_edges[0]
    assert kind == "implicit" and src in g1.nodes and dst in g1.nodes

    replay = ReplayAdapter(store)
    g2 = build_graph(MANUAL, max_chunk_tokens=30, gen=replay)
    assert g2.reference_edges == g1.reference_edges


def test_bad_reference_edges_leave_hierarchy_only():
    class BadGen:
        def respond(self, req):
            return StageResponse({"edges": [{"from": "nope", "to": "nah"}]}, "live")

    g = build_graph(MANUAL, max_chunk_tokens=30, gen=BadGen())
    assert not g.reference_edges
    assert any("hierarchy edges only" in w for w in g.warnings)


def test_graph_roundtrip(tmp_path):
    g = build_graph(MANUAL, max_chunk_tokens=30)
    path = tmp_path / "graph.json"
    g.save(path)
    again = DocGraph.load(path)
    assert again.to_json() == g.to_json()


def test_empty_document_rejected():
    with pytest.raises(DocGraphError):
        build_graph("   \n  ", 10)
    with pytest.raises(DocGraphError):
        build_graph("text", 0)


# ---------------------------------------------------------------------------
# Sampling


def _graph() -> DocGraph:
    return build_graph(MANUAL, max_chunk_tokens=30)


@pytest.mark.parametrize("strategy", ["uniform", "coverage_driven", "connected_diverse_coverage", "coverage_islands"])
def test_sampling_deterministic(strategy):
    a = sample_nodes(_graph(), strategy, 1, 2, seed=7, count=3)
    b = sample_nodes(_graph(), strategy, 1, 2, seed=7, count=3)
    assert [s.node_ids for s in a] == [s.node_ids for s in b]
    assert [s.text for s in a] == [s.text for s in b]


def test_unknown_strategy_and_empty_graph():
    g = _graph()
    with pytest.raises(DocGraphError):
        sample_nodes(g, "bogus", 1, 2, 0, 1)
    with pytest.raises(DocGraphError):
        sample_nodes(g, "uniform", 3, 2, 0, 1)


def test_coverage_monotone_and_totals():
    g = _graph()
    before = dict(g.coverage)
    samples = sample_nodes(g, "coverage_driven", 1, 2, seed=3, count=4)
    total_drawn = sum(len(s.node_ids) for s in samples)
    assert sum(g.coverage.values()) - sum(before.values()) == total_drawn
    assert all(g.coverage[n] >= before.get(n, 0) for n in g.coverage)


def test_coverage_driven_prefers_uncovered():
    g = _graph()
    leaves = sorted(g.leaves())
    # cover one node heavily by hand
    g.bump_coverage([leaves[0]] * 1)
    g.coverage[leaves[0]] = 5
    samples = sample_nodes(g, "coverage_driven", 1, 1, seed=1, count=len(leaves) - 1)
    picked = {s.node_ids[0] for s in samples}
    assert leaves[0] not in picked  # zero-coverage nodes exist, tier rule forbids it


def test_coverage_driven_tier_fairness():
    g = _graph()
    for _ in range(12):
        sample_nodes(g, "coverage_driven", 1, 1, seed=_, count=1)
    values = [g.coverage[leaf] for leaf in g.leaves()]
    assert max(values) - min(values) <= 1


def test_truncation_when_fewer_eligible():
    g = _graph()
    n_leaves = len(g.leaves())
    samples = sample_nodes(g, "uniform", n_leaves + 5, n_leaves + 9, seed=2, count=1)
    assert len(samples[0].node_ids) == n_leaves


def test_connected_samples_are_connected():
    g = _graph()
    adj = leaf_adjacency(g)
    samples = sample_nodes(g, "connected_diverse_coverage", 2, 3, seed=5, count=4)
    for s in samples:
        nodes = set(s.node_ids)
        seen = {s.node_ids[0]}
        frontier = [s.node_ids[0]]
        while frontier:
            cur = frontier.pop()
            for nb in adj[cur]:
                if nb in nodes and nb not in seen:
                    seen.add(nb)
                    frontier.append(nb)
        assert seen == nodes, f"sample {s.node_ids} is disconnected"


def test_islands_cover_separated_regions():
    g = _graph()
    samples = sample_nodes(g, "coverage_islands", 2, 4, seed=11, count=6)
    assert samples
    drawn = {n for s in samples for n in s.node_ids}
    assert len(drawn) >= min(len(g.leaves()), 3)  # spreads beyond one island over time


def test_sample_text_is_document_ordered():
    g = _graph()
    samples = sample_nodes(g, "uniform", 2, 3, seed=9, count=2)
    for s in samples:
        assert list(s.node_ids) == sorted(s.node_ids)
        pieces = [g.nodes[nid].text for nid in s.node_ids]
        assert s.text == "\n\n".join(pieces)
