import pytest

from plantguard.query import (
    CausalChain,
    Query,
    causal_chains,
    expand,
    match_nodes,
    recommend,
    result_to_dict,
    result_to_text,
    run_query,
)
from plantguard.riskgraph import NodeKind, RelationKind, RiskGraph, Triple


def chain_graph():
    """a -> b -> c -> d plus e -> d, treatments on b and d."""
    g = RiskGraph()
    for name in ("a", "b", "c", "d", "e"):
        g.add_entity(NodeKind.EVENT, f"{name} event")
    g.add_entity(NodeKind.TREATMENT, "fix b")
    g.add_entity(NodeKind.TREATMENT, "fix d")
    edges = [("a", "b"), ("b", "c"), ("c", "d"), ("e", "d")]
    for h, t in edges:
        g.add_triple(Triple(head=f"event:{h}-event", relation=RelationKind.CAUSES,
                            tail=f"event:{t}-event"))
    g.add_triple(Triple(head="treatment:fix-b", relation=RelationKind.MITIGATES,
                        tail="event:b-event"))
    g.add_triple(Triple(head="treatment:fix-d", relation=RelationKind.MITIGATES,
                        tail="event:d-event"))
    return g


class TestMatching:
    def test_and_semantics(self, ref_graph):
        hits = match_nodes(ref_graph, ["tank temperature", "high"])
        assert [n.id for n in hits] == ["event:high-tank-temperature-deviation"]

    def test_or_semantics(self, ref_graph):
        any_hits = match_nodes(ref_graph, ["pump", "stirrer"], match_any=True)
        all_hits = match_nodes(ref_graph, ["pump", "stirrer"], match_any=False)
        assert len(any_hits) > len(all_hits)

    def test_case_and_whitespace_insensitive(self, ref_graph):
        a = match_nodes(ref_graph, ["  TANK   Temperature ", "HIGH"])
        b = match_nodes(ref_graph, ["tank temperature", "high"])
        assert a == b

    def test_slots_are_searched(self, ref_graph):
        # "operator" only appears via who-slots and the worker label
        hits = match_nodes(ref_graph, ["operator"])
        assert any(n.kind == NodeKind.EVENT for n in hits)

    def test_no_match_is_empty(self, ref_graph):
        assert match_nodes(ref_graph, ["flux capacitor"]) == []

    def test_empty_keywords_rejected(self, ref_graph):
        with pytest.raises(ValueError):
            match_nodes(ref_graph, ["   "])


class TestExpansion:
    def test_depth_limit(self):
        g = chain_graph()
        nodes, _ = expand(g, ["event:d-event"], max_depth=1)
        assert "event:c-event" in nodes
        assert "event:b-event" not in nodes

    def test_directions(self):
        g = chain_graph()
        up, _ = expand(g, ["event:c-event"], max_depth=4, directions="upstream")
        down, _ = expand(g, ["event:c-event"], max_depth=4, directions="downstream")
        assert "event:a-event" in up and "event:d-event" not in up
        assert "event:d-event" in down and "event:a-event" not in down

    def test_treatments_attached_one_hop(self):
        g = chain_graph()
        nodes, triples = expand(g, ["event:d-event"], max_depth=4)
        assert "treatment:fix-b" in nodes
        assert any(t.relation == RelationKind.MITIGATES for t in triples)

    def test_induced_triples_only(self):
        g = chain_graph()
        nodes, triples = expand(g, ["event:d-event"], max_depth=1)
        for t in triples:
            assert t.head in nodes and t.tail in nodes

    def test_unknown_seed_rejected(self):
        with pytest.raises(ValueError):
            expand(chain_graph(), ["event:nope"])


class TestChains:
    def test_maximal_paths_longest_first(self):
        g = chain_graph()
        nodes, triples = expand(g, ["event:d-event"], max_depth=4)
        chains = causal_chains(nodes, triples, ["event:d-event"])
        assert chains[0].nodes == ("event:a-event", "event:b-event",
                                   "event:c-event", "event:d-event")
        assert chains[1].nodes == ("event:e-event", "event:d-event")

    def test_cycle_terminates(self):
        g = RiskGraph()
        for n in ("x", "y"):
            g.add_entity(NodeKind.EVENT, n)
        g.add_triple(Triple(head="event:x", relation=RelationKind.CAUSES, tail="event:y"))
        g.add_triple(Triple(head="event:y", relation=RelationKind.CAUSES, tail="event:x"))
        nodes, triples = expand(g, ["event:x"], max_depth=5)
        chains = causal_chains(nodes, triples, ["event:x"])
        assert all(len(set(c.nodes)) == len(c.nodes) for c in chains)

    def test_root_only_seed(self):
        g = chain_graph()
        nodes, triples = expand(g, ["event:a-event"], max_depth=4)
        chains = causal_chains(nodes, triples, ["event:a-event"])
        assert chains == [CausalChain(nodes=("event:a-event",))]


class TestRecommend:
    def test_root_proximity_wins(self):
        g = chain_graph()
        nodes, triples = expand(g, ["event:d-event"], max_depth=4)
        chains = causal_chains(nodes, triples, ["event:d-event"])
        recs = recommend(nodes, triples, chains)
        assert [r.treatment for r in recs] == ["treatment:fix-b", "treatment:fix-d"]
        assert recs[0].score == pytest.approx(1.0 / 2.0)
        # d appears at depth 1 in the short chain but depth 3 in the long one;
        # the deeper (more explanatory) position is the one that counts
        assert recs[1].score == pytest.approx(1.0 / 4.0)

    def test_scores_bounded(self, ref_graph):
        res = run_query(ref_graph, Query(keywords=("tank temperature", "high")))
        assert all(0.0 < r.score <= 1.0 for r in res.recommendations)


class TestRunQuery:
    def test_reference_chain(self, ref_graph):
        res = run_query(ref_graph, Query(keywords=("tank temperature", "high")))
        assert res.chains[0].nodes == (
            "event:temperature-sensor-malfunction",
            "event:upstream-heater-activation",
            "event:high-feed-temperature-deviation",
            "event:high-tank-temperature-deviation",
        )
        ranked = [r.treatment for r in res.recommendations]
        assert ranked[0] == "treatment:turn-off-heater"
        assert ranked.index("treatment:turn-off-heater") < ranked.index(
            "treatment:open-coolant-valve"
        )

    def test_empty_result(self, ref_graph):
        res = run_query(ref_graph, Query(keywords=("warp drive",)))
        assert res.empty
        assert result_to_text(res) == "no matches\n"

    def test_serialization_shape(self, ref_graph):
        res = run_query(ref_graph, Query(keywords=("tank temperature", "high")))
        d = result_to_dict(res)
        assert set(d) == {"seeds", "nodes", "triples", "chains", "recommendations"}
        assert d["recommendations"][0]["treatment"] == "treatment:turn-off-heater"
        text = result_to_text(res)
        assert "causal chains:" in text and "recommendations:" in text

    def test_query_validation(self):
        with pytest.raises(ValueError):
            Query(keywords=())
        with pytest.raises(ValueError):
            Query(keywords=("x",), max_depth=0)
        with pytest.raises(ValueError):
            Query(keywords=("x",), directions="sideways")
