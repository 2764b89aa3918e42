"""Ontology-typed risk knowledge graph: nodes, head-relation-tail triples,
validation, and line-oriented persistence."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from enum import Enum

__all__ = [
    "GraphError",
    "NodeKind",
    "RelationKind",
    "RELATION_SIGNATURES",
    "FiveW1Y",
    "Node",
    "Triple",
    "RiskGraph",
    "ValidationReport",
    "normalize_label",
    "node_id",
    "save_graph",
    "load_graph",
    "export_dot",
]


class GraphError(ValueError):
    """Graph constraint violation (dangling ref, bad signature, ...)."""


class NodeKind(str, Enum):
    EVENT = "event"
    WORKER = "worker"
    HAZARD = "hazard"
    RISK = "risk"
    TREATMENT = "treatment"


class RelationKind(str, Enum):
    # event-to-event
    CAUSES = "causes"
    PRECEDES = "precedes"
    CONTAINS = "contains"
    CONCURRENT = "concurrent"
    # cross-kind
    PERFORMS = "performs"
    EXPOSED_TO = "exposed_to"
    INVOLVES = "involves"
    POSES = "poses"
    MITIGATES = "mitigates"


# (allowed head kinds, allowed tail kinds) per relation
RELATION_SIGNATURES: dict[RelationKind, tuple[frozenset, frozenset]] = {
    RelationKind.CAUSES: (frozenset({NodeKind.EVENT}), frozenset({NodeKind.EVENT})),
    RelationKind.PRECEDES: (frozenset({NodeKind.EVENT}), frozenset({NodeKind.EVENT})),
    RelationKind.CONTAINS: (frozenset({NodeKind.EVENT}), frozenset({NodeKind.EVENT})),
    RelationKind.CONCURRENT: (frozenset({NodeKind.EVENT}), frozenset({NodeKind.EVENT})),
    RelationKind.PERFORMS: (frozenset({NodeKind.WORKER}), frozenset({NodeKind.EVENT})),
    RelationKind.EXPOSED_TO: (frozenset({NodeKind.WORKER}), frozenset({NodeKind.HAZARD})),
    RelationKind.INVOLVES: (frozenset({NodeKind.EVENT}), frozenset({NodeKind.HAZARD})),
    RelationKind.POSES: (frozenset({NodeKind.HAZARD}), frozenset({NodeKind.RISK})),
    RelationKind.MITIGATES: (
        frozenset({NodeKind.TREATMENT}),
        frozenset({NodeKind.EVENT, NodeKind.RISK}),
    ),
}

CAUSAL = RelationKind.CAUSES


@dataclass(frozen=True)
class FiveW1Y:
    """who/what/when/where/why/how slot schema describing an event."""

    who: str | None = None
    what: str | None = None
    when: str | None = None
    where: str | None = None
    why: str | None = None
    how: str | None = None

    def to_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if v is not None}

    @classmethod
    def from_dict(cls, data: dict) -> "FiveW1Y":
        return cls(**{k: data.get(k) for k in ("who", "what", "when", "where", "why", "how")})


def normalize_label(label: str) -> str:
    return re.sub(r"\s+", " ", label.strip().lower())


def node_id(kind: NodeKind, label: str) -> str:
    slug = re.sub(r"[^a-z0-9]+", "-", normalize_label(label)).strip("-")
    return f"{kind.value}:{slug}"


@dataclass(frozen=True)
class Node:
    id: str
    kind: NodeKind
    label: str
    slots: FiveW1Y = field(default_factory=FiveW1Y)
    provenance: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.label.strip():
            raise GraphError("node label must be non-empty")


@dataclass(frozen=True)
class Triple:
    head: str  # node id
    relation: RelationKind
    tail: str  # node id
    provenance: tuple[str, ...] = ()

    def key(self) -> tuple[str, str, str]:
        return (self.head, self.relation.value, self.tail)


@dataclass
class ValidationReport:
    dangling: list[str] = field(default_factory=list)
    signature_violations: list[str] = field(default_factory=list)
    duplicate_labels: list[str] = field(default_factory=list)
    isolated_nodes: list[str] = field(default_factory=list)
    causal_cycles: list[list[str]] = field(default_factory=list)
    index_errors: list[str] = field(default_factory=list)

    @property
    def clean(self) -> bool:
        return not (
            self.dangling
            or self.signature_violations
            or self.duplicate_labels
            or self.index_errors
        )


class RiskGraph:
    """Node map + triple set with adjacency and label-token indices.

    Mutations are single-owner; queries treat a graph as an immutable
    snapshot.
    """

    def __init__(self):
        self.nodes: dict[str, Node] = {}
        self.triples: dict[tuple[str, str, str], Triple] = {}
        self.out_edges: dict[str, list[Triple]] = {}
        self.in_edges: dict[str, list[Triple]] = {}
        self._label_index: dict[tuple[NodeKind, str], str] = {}

    # --- mutation --------------------------------------------------------

    def add_node(self, node: Node) -> Node:
        """Insert a node; same-kind nodes with equal normalized labels merge
        (provenance union).  Returns the stored node."""
        norm = normalize_label(node.label)
        existing_id = self._label_index.get((node.kind, norm))
        if existing_id is not None:
            stored = self.nodes[existing_id]
            merged_prov = tuple(dict.fromkeys(stored.provenance + node.provenance))
            merged_slots = _merge_slots(stored.slots, node.slots)
            merged = replace(stored, provenance=merged_prov, slots=merged_slots)
            self.nodes[existing_id] = merged
            return merged
        if node.id in self.nodes:
            raise GraphError(f"duplicate node id {node.id!r}")
        self.nodes[node.id] = node
        self.out_edges.setdefault(node.id, [])
        self.in_edges.setdefault(node.id, [])
        self._label_index[(node.kind, norm)] = node.id
        return node

    def add_entity(self, kind: NodeKind, label: str, slots: FiveW1Y | None = None,
                   provenance: tuple[str, ...] = ()) -> Node:
        return self.add_node(
            Node(id=node_id(kind, label), kind=kind, label=normalize_label(label),
                 slots=slots or FiveW1Y(), provenance=provenance)
        )

    def add_triple(self, triple: Triple) -> None:
        """Signature-checked insertion; idempotent for exact duplicates."""
        for endpoint in (triple.head, triple.tail):
            if endpoint not in self.nodes:
                raise GraphError(f"triple references unknown node {endpoint!r}")
        if triple.head == triple.tail:
            raise GraphError(f"self-loop rejected on {triple.head!r}")
        head_kinds, tail_kinds = RELATION_SIGNATURES[triple.relation]
        hk = self.nodes[triple.head].kind
        tk = self.nodes[triple.tail].kind
        if hk not in head_kinds or tk not in tail_kinds:
            raise GraphError(
                f"relation {triple.relation.value!r} does not accept "
                f"({hk.value}, {tk.value}); expected head in "
                f"{sorted(k.value for k in head_kinds)} and tail in "
                f"{sorted(k.value for k in tail_kinds)}"
            )
        key = triple.key()
        if key in self.triples:
            return
        self.triples[key] = triple
        self.out_edges.setdefault(triple.head, []).append(triple)
        self.in_edges.setdefault(triple.tail, []).append(triple)

    # --- lookup ----------------------------------------------------------

    def node_by_label(self, kind: NodeKind, label: str) -> Node | None:
        nid = self._label_index.get((kind, normalize_label(label)))
        return self.nodes.get(nid) if nid else None

    def neighbors_out(self, nid: str, relation: RelationKind | None = None):
        for t in self.out_edges.get(nid, []):
            if relation is None or t.relation == relation:
                yield t

    def neighbors_in(self, nid: str, relation: RelationKind | None = None):
        for t in self.in_edges.get(nid, []):
            if relation is None or t.relation == relation:
                yield t

    # --- validation ------------------------------------------------------

    def validate(self) -> ValidationReport:
        report = ValidationReport()
        for key, triple in self.triples.items():
            for endpoint in (triple.head, triple.tail):
                if endpoint not in self.nodes:
                    report.dangling.append(f"{key}: missing {endpoint}")
            if triple.head in self.nodes and triple.tail in self.nodes:
                head_kinds, tail_kinds = RELATION_SIGNATURES[triple.relation]
                if (
                    self.nodes[triple.head].kind not in head_kinds
                    or self.nodes[triple.tail].kind not in tail_kinds
                ):
                    report.signature_violations.append(str(key))
        seen_labels: dict[tuple[NodeKind, str], str] = {}
        for node in self.nodes.values():
            lk = (node.kind, normalize_label(node.label))
            if lk in seen_labels:
                report.duplicate_labels.append(f"{seen_labels[lk]} / {node.id}")
            seen_labels[lk] = node.id
        linked = {t.head for t in self.triples.values()} | {
            t.tail for t in self.triples.values()
        }
        report.isolated_nodes = sorted(set(self.nodes) - linked)
        report.causal_cycles = self._causal_cycles()
        report.index_errors = self._check_indices()
        return report

    def _check_indices(self) -> list[str]:
        errors = []
        from_index = {
            t.key() for edges in self.out_edges.values() for t in edges
        }
        if from_index != set(self.triples):
            errors.append("out-edge index out of sync with triple set")
        from_index = {t.key() for edges in self.in_edges.values() for t in edges}
        if from_index != set(self.triples):
            errors.append("in-edge index out of sync with triple set")
        return errors

    def _causal_cycles(self) -> list[list[str]]:
        """Cycles in the `causes` sub-graph (reported, not rejected)."""
        adj: dict[str, list[str]] = {}
        for t in self.triples.values():
            if t.relation == RelationKind.CAUSES:
                adj.setdefault(t.head, []).append(t.tail)
        cycles = []
        color: dict[str, int] = {}
        stack: list[str] = []

        def visit(u: str):
            color[u] = 1
            stack.append(u)
            for v in adj.get(u, []):
                if color.get(v, 0) == 0:
                    visit(v)
                elif color.get(v) == 1:
                    cycles.append(stack[stack.index(v) :] + [v])
            stack.pop()
            color[u] = 2

        for u in sorted(adj):
            if color.get(u, 0) == 0:
                visit(u)
        return cycles

    # --- stats -----------------------------------------------------------

    def stats(self) -> dict:
        by_kind = {k.value: 0 for k in NodeKind}
        for node in self.nodes.values():
            by_kind[node.kind.value] += 1
        by_relation = {r.value: 0 for r in RelationKind}
        for t in self.triples.values():
            by_relation[t.relation.value] += 1
        return {
            "nodes": len(self.nodes),
            "triples": len(self.triples),
            "by_kind": by_kind,
            "by_relation": by_relation,
        }

    def __eq__(self, other):
        if not isinstance(other, RiskGraph):
            return NotImplemented
        return self.nodes == other.nodes and self.triples == other.triples


# --- persistence ---------------------------------------------------------
# One record per line, nodes first then triples, tab-separated fields with
# JSON-escaped text; byte-stable given an equal graph.


def _node_line(node: Node) -> str:
    fields = [
        "node",
        node.id,
        node.kind.value,
        json.dumps(node.label, ensure_ascii=False),
        json.dumps(node.slots.to_dict(), sort_keys=True, ensure_ascii=False),
        json.dumps(list(node.provenance), ensure_ascii=False),
    ]
    return "\t".join(fields)


def _triple_line(triple: Triple) -> str:
    return "\t".join(
        [
            "triple",
            triple.head,
            triple.relation.value,
            triple.tail,
            json.dumps(list(triple.provenance), ensure_ascii=False),
        ]
    )


def save_graph(graph: RiskGraph, path: str) -> None:
    lines = [_node_line(graph.nodes[nid]) for nid in sorted(graph.nodes)]
    lines += [_triple_line(graph.triples[key]) for key in sorted(graph.triples)]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in lines:
            fh.write(line + "\n")


def load_graph(path: str) -> RiskGraph:
    graph = RiskGraph()
    pending_triples: list[Triple] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            try:
                if parts[0] == "node" and len(parts) == 6:
                    _, nid, kind, label, slots, prov = parts
                    graph.add_node(
                        Node(
                            id=nid,
                            kind=NodeKind(kind),
                            label=json.loads(label),
                            slots=FiveW1Y.from_dict(json.loads(slots)),
                            provenance=tuple(json.loads(prov)),
                        )
                    )
                elif parts[0] == "triple" and len(parts) == 5:
                    _, head, rel, tail, prov = parts
                    pending_triples.append(
                        Triple(
                            head=head,
                            relation=RelationKind(rel),
                            tail=tail,
                            provenance=tuple(json.loads(prov)),
                        )
                    )
                else:
                    raise ValueError(f"unrecognized record {parts[0]!r}")
            except (ValueError, KeyError, json.JSONDecodeError) as exc:
                raise GraphError(f"{path}:{lineno}: malformed graph line: {exc}") from exc
    for triple in pending_triples:
        graph.add_triple(triple)
    return graph


def export_dot(graph: RiskGraph, path: str) -> None:
    """Graphviz DOT export for visualization tools."""
    kind_colors = {
        NodeKind.EVENT: "lightblue",
        NodeKind.WORKER: "lightyellow",
        NodeKind.HAZARD: "salmon",
        NodeKind.RISK: "orange",
        NodeKind.TREATMENT: "lightgreen",
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("digraph riskgraph {\n")
        for nid in sorted(graph.nodes):
            node = graph.nodes[nid]
            fh.write(
                f'  {json.dumps(nid)} [label={json.dumps(node.label)} '
                f'kind={json.dumps(node.kind.value)} '
                f'fillcolor={json.dumps(kind_colors[node.kind])} style=filled];\n'
            )
        for key in sorted(graph.triples):
            t = graph.triples[key]
            fh.write(
                f'  {json.dumps(t.head)} -> {json.dumps(t.tail)} '
                f'[label={json.dumps(t.relation.value)}];\n'
            )
        fh.write("}\n")


def _merge_slots(a: FiveW1Y, b: FiveW1Y) -> FiveW1Y:
    merged = dict(a.to_dict())
    for k, v in b.to_dict().items():
        merged.setdefault(k, v)
    return FiveW1Y.from_dict(merged)
