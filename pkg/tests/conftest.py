import numpy as np
import pytest

from plantguard.plant import calibrate_params
from plantguard.riskgraph import (
    RELATION_SIGNATURES,
    NodeKind,
    RelationKind,
    RiskGraph,
    Triple,
)


@pytest.fixture(scope="session")
def params():
    return calibrate_params()


@pytest.fixture(scope="session")
def ref_graph():
    from plantguard.corpus import reference_graph

    return reference_graph()


def make_random_graph(rng: np.random.Generator, max_nodes: int = 50,
                      edge_factor: float = 2.0) -> RiskGraph:
    """Random signature-respecting graph for property tests."""
    g = RiskGraph()
    n = int(rng.integers(2, max_nodes + 1))
    kinds = list(NodeKind)
    nodes_by_kind: dict[NodeKind, list[str]] = {k: [] for k in kinds}
    for i in range(n):
        # events dominate, mirroring real corpora
        kind = kinds[int(rng.integers(0, len(kinds)))] if rng.random() < 0.4 else NodeKind.EVENT
        node = g.add_entity(kind, f"{kind.value} node {i}")
        nodes_by_kind[kind].append(node.id)
    n_edges = int(edge_factor * n)
    relations = list(RelationKind)
    for _ in range(n_edges):
        rel = relations[int(rng.integers(0, len(relations)))]
        head_kinds, tail_kinds = RELATION_SIGNATURES[rel]
        heads = [nid for k in head_kinds for nid in nodes_by_kind[k]]
        tails = [nid for k in tail_kinds for nid in nodes_by_kind[k]]
        if not heads or not tails:
            continue
        h = heads[int(rng.integers(0, len(heads)))]
        t = tails[int(rng.integers(0, len(tails)))]
        if h == t:
            continue
        g.add_triple(Triple(head=h, relation=rel, tail=t, provenance=("random",)))
    return g
