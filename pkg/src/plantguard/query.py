"""Keyword-triggered sub-graph extraction, causal-chain enumeration, and
countermeasure ranking over a risk knowledge graph."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .riskgraph import (
    Node,
    NodeKind,
    RelationKind,
    RiskGraph,
    Triple,
    normalize_label,
)

__all__ = [
    "Query",
    "QueryResult",
    "CausalChain",
    "Recommendation",
    "match_nodes",
    "expand",
    "causal_chains",
    "recommend",
    "run_query",
    "result_to_dict",
    "result_to_text",
]

MAX_CHAIN_LEN = 8
MAX_CHAINS = 1000

_ATTACH_KINDS = (NodeKind.TREATMENT, NodeKind.WORKER, NodeKind.HAZARD)


@dataclass(frozen=True)
class Query:
    keywords: tuple[str, ...]
    max_depth: int = 4
    directions: str = "both"  # upstream | downstream | both
    match_any: bool = False  # OR-semantics behind a flag; default AND

    def __post_init__(self):
        cleaned = tuple(normalize_label(k) for k in self.keywords if normalize_label(k))
        object.__setattr__(self, "keywords", cleaned)
        if not cleaned:
            raise ValueError("query keywords must be non-empty")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.directions not in ("upstream", "downstream", "both"):
            raise ValueError(f"unknown direction {self.directions!r}")


@dataclass(frozen=True)
class CausalChain:
    """Root-to-seed node-id path along `causes` edges; no repeats."""

    nodes: tuple[str, ...]

    @property
    def length(self) -> int:
        return len(self.nodes)


@dataclass(frozen=True)
class Recommendation:
    treatment: str  # node id
    anchor: str  # node id it mitigates
    chain: CausalChain
    score: float  # 1/(1 + hops from root to anchor), in (0, 1]


@dataclass
class QueryResult:
    seeds: list[str]
    nodes: dict[str, Node]
    triples: list[Triple]
    chains: list[CausalChain]
    recommendations: list[Recommendation]

    @property
    def empty(self) -> bool:
        return not self.seeds


def _searchable_text(node: Node) -> str:
    parts = [node.label] + list(node.slots.to_dict().values())
    return normalize_label(" ".join(parts))


def match_nodes(graph: RiskGraph, keywords, match_any: bool = False) -> list[Node]:
    """Nodes whose label+slots contain all keywords (phrases, case-insensitive);
    deterministic id order."""
    cleaned = [normalize_label(k) for k in keywords if normalize_label(k)]
    if not cleaned:
        raise ValueError("keywords must be non-empty")
    combine = any if match_any else all
    hits = [
        node
        for node in graph.nodes.values()
        if combine(kw in _searchable_text(node) for kw in cleaned)
    ]
    return sorted(hits, key=lambda n: n.id)


def expand(
    graph: RiskGraph, seeds: list[str], max_depth: int = 4, directions: str = "both"
) -> tuple[dict[str, Node], list[Triple]]:
    """Breadth-first closure over `causes` edges up to max_depth, plus
    one-hop attachment of treatment/worker/hazard neighbors of included
    events.  Returns the induced sub-graph (nodes, triples)."""
    for seed in seeds:
        if seed not in graph.nodes:
            raise ValueError(f"seed {seed!r} not in graph")
    visited = {s: 0 for s in seeds}
    frontier = deque(seeds)
    while frontier:
        nid = frontier.popleft()
        depth = visited[nid]
        if depth >= max_depth:
            continue
        neighbors = []
        if directions in ("upstream", "both"):
            neighbors += [t.head for t in graph.neighbors_in(nid, RelationKind.CAUSES)]
        if directions in ("downstream", "both"):
            neighbors += [t.tail for t in graph.neighbors_out(nid, RelationKind.CAUSES)]
        for nb in neighbors:
            if nb not in visited:
                visited[nb] = depth + 1
                frontier.append(nb)
    included = set(visited)
    # one-hop attachment of non-event neighbors of included events
    for nid in list(included):
        if graph.nodes[nid].kind != NodeKind.EVENT:
            continue
        for t in list(graph.neighbors_in(nid)) + list(graph.neighbors_out(nid)):
            for endpoint in (t.head, t.tail):
                if endpoint != nid and graph.nodes[endpoint].kind in _ATTACH_KINDS:
                    included.add(endpoint)
    nodes = {nid: graph.nodes[nid] for nid in sorted(included)}
    triples = [
        graph.triples[key]
        for key in sorted(graph.triples)
        if graph.triples[key].head in included and graph.triples[key].tail in included
    ]
    return nodes, triples


def causal_chains(
    nodes: dict[str, Node],
    triples: list[Triple],
    seeds: list[str],
    max_len: int = MAX_CHAIN_LEN,
) -> list[CausalChain]:
    """All maximal simple `causes` paths ending at a seed, longest first,
    ties broken by node-id order."""
    parents: dict[str, list[str]] = {}
    for t in triples:
        if t.relation == RelationKind.CAUSES:
            parents.setdefault(t.tail, []).append(t.head)
    for v in parents.values():
        v.sort()
    chains: list[CausalChain] = []

    def walk(path: list[str]):
        if len(chains) >= MAX_CHAINS:
            return
        head = path[0]
        preds = [p for p in parents.get(head, []) if p not in path]
        if not preds or len(path) >= max_len:
            chains.append(CausalChain(nodes=tuple(path)))
            return
        for p in preds:
            walk([p] + path)

    for seed in sorted(seeds):
        if seed in nodes:
            walk([seed])
    chains.sort(key=lambda c: (-c.length, c.nodes))
    return chains


def recommend(
    nodes: dict[str, Node],
    triples: list[Triple],
    chains: list[CausalChain],
) -> list[Recommendation]:
    """Treatments mitigating any chain node, scored by closeness of the
    mitigated node to the root cause.

    An anchor's depth is its largest root distance over all chains that
    contain it (the most complete causal explanation available), so a fix
    at the symptom end never outranks one at the root.  A treatment with
    several anchors keeps its best-scoring anchor.
    """
    mitigators: dict[str, list[str]] = {}
    for t in triples:
        if t.relation == RelationKind.MITIGATES:
            mitigators.setdefault(t.tail, []).append(t.head)
    depth: dict[str, tuple[int, CausalChain]] = {}
    for chain in chains:
        for hops, anchor in enumerate(chain.nodes):
            if anchor not in depth or hops > depth[anchor][0]:
                depth[anchor] = (hops, chain)
    best: dict[str, Recommendation] = {}
    for anchor, (hops, chain) in depth.items():
        score = 1.0 / (1.0 + hops)
        for treatment in mitigators.get(anchor, []):
            current = best.get(treatment)
            if current is None or score > current.score:
                best[treatment] = Recommendation(
                    treatment=treatment, anchor=anchor, chain=chain, score=score
                )
    return sorted(best.values(), key=lambda r: (-r.score, r.treatment))


def run_query(graph: RiskGraph, query: Query) -> QueryResult:
    seeds = [n.id for n in match_nodes(graph, query.keywords, query.match_any)]
    if not seeds:
        return QueryResult(seeds=[], nodes={}, triples=[], chains=[], recommendations=[])
    nodes, triples = expand(graph, seeds, query.max_depth, query.directions)
    chains = causal_chains(nodes, triples, seeds)
    recommendations = recommend(nodes, triples, chains)
    return QueryResult(
        seeds=seeds,
        nodes=nodes,
        triples=triples,
        chains=chains,
        recommendations=recommendations,
    )


def result_to_dict(result: QueryResult) -> dict:
    return {
        "seeds": result.seeds,
        "nodes": [
            {
                "id": n.id,
                "kind": n.kind.value,
                "label": n.label,
                "slots": n.slots.to_dict(),
            }
            for n in result.nodes.values()
        ],
        "triples": [
            {"head": t.head, "relation": t.relation.value, "tail": t.tail}
            for t in result.triples
        ],
        "chains": [list(c.nodes) for c in result.chains],
        "recommendations": [
            {
                "treatment": r.treatment,
                "anchor": r.anchor,
                "score": r.score,
                "chain": list(r.chain.nodes),
            }
            for r in result.recommendations
        ],
    }


def result_to_text(result: QueryResult) -> str:
    if result.empty:
        return "no matches\n"
    lines = ["seeds:"]
    lines += [f"  {s}" for s in result.seeds]
    lines.append("nodes:")
    lines += [f"  {n.id} [{n.kind.value}] {n.label}" for n in result.nodes.values()]
    lines.append("edges:")
    lines += [f"  {t.head} -{t.relation.value}-> {t.tail}" for t in result.triples]
    lines.append("causal chains:")
    for c in result.chains:
        lines.append("  " + " -> ".join(c.nodes))
    lines.append("recommendations:")
    for r in result.recommendations:
        lines.append(f"  {r.treatment} (mitigates {r.anchor}, score {r.score:.3f})")
    return "\n".join(lines) + "\n"
