"""Parsers for HAZOP sheets, operation event logs, and inspection records,
plus the rule-based triple extractor and the manual review gate.

Structured-text parsing and gazetteer rules stand in for PDF extraction
and statistical NER; candidates always pass through an explicit review
file before they may reach the graph.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass, field, replace
from importlib import resources

from .riskgraph import (
    FiveW1Y,
    Node,
    NodeKind,
    RelationKind,
    RiskGraph,
    Triple,
    node_id,
    normalize_label,
)

__all__ = [
    "IngestError",
    "ReviewError",
    "HazopRow",
    "LogEntry",
    "InspectionItem",
    "Entity",
    "CandidateTriple",
    "Gazetteers",
    "parse_hazop",
    "parse_event_log",
    "parse_inspection",
    "extract",
    "extract_corpus",
    "review",
    "load_decisions",
    "build_graph",
    "write_candidates_csv",
    "read_candidates_csv",
    "HAZOP_HEADERS",
]

HAZOP_HEADERS = ["Deviation", "Causes", "Consequences", "Safeguards", "Recommendations"]

# leading enumeration tokens stripped from itemized cells
_ENUM_PREFIX = re.compile(r"^\s*(?:\d+[.)]|[-*•●])\s*")
_SENTENCE_SPLIT = re.compile(r"(?<=[.!?])\s+")


class IngestError(ValueError):
    """Unrecoverable parse failure."""


class ReviewError(ValueError):
    """Review decision references an unknown candidate or is malformed."""


@dataclass(frozen=True)
class HazopRow:
    deviation: str
    causes: tuple[str, ...] = ()
    consequences: tuple[str, ...] = ()
    safeguards: tuple[str, ...] = ()
    recommendations: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.deviation.strip():
            raise IngestError("HAZOP row is missing its deviation")
        if not (self.causes or self.consequences):
            raise IngestError(
                f"HAZOP row {self.deviation!r} has neither causes nor consequences"
            )


@dataclass(frozen=True)
class LogEntry:
    t: float
    source: str
    description: str

    def __post_init__(self):
        if self.t < 0:
            raise IngestError("log entry time must be >= 0")
        if not self.description.strip():
            raise IngestError("log entry description must be non-empty")


@dataclass(frozen=True)
class InspectionItem:
    item: str
    result: str
    status: str  # pass | fail | note

    def __post_init__(self):
        if not self.item.strip():
            raise IngestError("inspection item must be non-empty")


@dataclass(frozen=True)
class Entity:
    label: str
    kind: NodeKind
    slots: FiveW1Y = field(default_factory=FiveW1Y)


@dataclass(frozen=True)
class CandidateTriple:
    id: str
    head: Entity
    relation: RelationKind
    tail: Entity
    provenance: str  # source document + row/line
    status: str = "pending"  # pending | accepted | rejected | edited

    def __post_init__(self):
        if normalize_label(self.head.label) == normalize_label(self.tail.label) and (
            self.head.kind == self.tail.kind
        ):
            raise IngestError(f"candidate {self.id} has identical head and tail")


# --- gazetteers ----------------------------------------------------------


def _load_wordlist(name: str) -> tuple[str, ...]:
    text = resources.files("plantguard.data.gazetteers").joinpath(name).read_text(
        encoding="utf-8"
    )
    return tuple(
        line.strip().lower()
        for line in text.splitlines()
        if line.strip() and not line.startswith("#")
    )


@dataclass(frozen=True)
class Gazetteers:
    roles: tuple[str, ...]
    equipment: tuple[str, ...]
    negative_findings: tuple[str, ...]
    finding_terms: tuple[str, ...]

    @classmethod
    def load(cls) -> "Gazetteers":
        return cls(
            roles=_load_wordlist("roles.txt"),
            equipment=_load_wordlist("equipment.txt"),
            negative_findings=_load_wordlist("negative_findings.txt"),
            finding_terms=_load_wordlist("finding_terms.txt"),
        )


# --- parsers -------------------------------------------------------------


def split_items(cell: str) -> tuple[str, ...]:
    """Split an itemized table cell on semicolons, newlines, and leading
    enumeration markers."""
    items = []
    for chunk in re.split(r"[;\n]", cell):
        cleaned = _ENUM_PREFIX.sub("", chunk).strip()
        if cleaned:
            items.append(cleaned)
    return tuple(items)


def parse_hazop(text: str, source: str = "<hazop>") -> tuple[list[HazopRow], list[str]]:
    """Parse a HAZOP CSV with the five canonical headers.

    Returns (rows, row-level errors); a bad row is collected, not fatal.
    """
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        return [], []
    missing = [h for h in HAZOP_HEADERS if h not in reader.fieldnames]
    if missing:
        raise IngestError(f"{source}: HAZOP sheet is missing columns {missing}")
    rows: list[HazopRow] = []
    errors: list[str] = []
    for i, record in enumerate(reader, start=2):
        try:
            rows.append(
                HazopRow(
                    deviation=(record["Deviation"] or "").strip(),
                    causes=split_items(record["Causes"] or ""),
                    consequences=split_items(record["Consequences"] or ""),
                    safeguards=split_items(record["Safeguards"] or ""),
                    recommendations=split_items(record["Recommendations"] or ""),
                )
            )
        except IngestError as exc:
            errors.append(f"{source}:{i}: {exc}")
    return rows, errors


def parse_event_log(text: str) -> list[LogEntry]:
    """Parse an event log CSV (time,source,description); multi-sentence
    descriptions split into one entry per sentence sharing the timestamp."""
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        return []
    expected = ["time", "source", "description"]
    if [f.strip().lower() for f in reader.fieldnames] != expected:
        raise IngestError(f"event log must have columns {expected}, got {reader.fieldnames}")
    entries: list[LogEntry] = []
    for record in reader:
        description = (record["description"] or "").strip()
        if not description:
            continue
        t = float(record["time"])
        source = (record["source"] or "").strip()
        for sentence in _SENTENCE_SPLIT.split(description):
            sentence = sentence.strip()
            if sentence:
                entries.append(LogEntry(t=t, source=source, description=sentence))
    return entries


def parse_inspection(text: str, gazetteers: Gazetteers | None = None) -> list[InspectionItem]:
    """Parse an inspection CSV (item,result) into status-labelled items."""
    gaz = gazetteers or Gazetteers.load()
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        return []
    expected = ["item", "result"]
    if [f.strip().lower() for f in reader.fieldnames] != expected:
        raise IngestError(f"inspection record must have columns {expected}")
    items = []
    for record in reader:
        item = (record["item"] or "").strip()
        result = (record["result"] or "").strip()
        if not item:
            continue
        items.append(InspectionItem(item=item, result=result, status=_classify(result, gaz)))
    return items


def _classify(result: str, gaz: Gazetteers) -> str:
    if not result:
        return "note"
    lowered = result.lower()
    for pattern in gaz.negative_findings:
        if re.search(pattern, lowered):
            return "pass"
    for term in gaz.finding_terms:
        if term in lowered:
            return "fail"
    return "note"


# --- extraction ----------------------------------------------------------


def _deviation_label(deviation: str, parameter: str) -> str:
    return normalize_label(f"{deviation} {parameter} deviation")


def _where_slot(text: str, gaz: Gazetteers) -> str | None:
    lowered = text.lower()
    for equipment in gaz.equipment:
        if equipment in lowered:
            return equipment
    return None


def _who_slot(source: str, gaz: Gazetteers) -> str | None:
    lowered = source.lower()
    for role in gaz.roles:
        if role in lowered:
            return role
    return None


class _Counter:
    def __init__(self):
        self.n = 0

    def next_id(self) -> str:
        self.n += 1
        return f"c{self.n:04d}"


def extract(
    hazop_rows: list[HazopRow] | None = None,
    log_entries: list[LogEntry] | None = None,
    parameter: str = "flow",
    source: str = "<memory>",
    gazetteers: Gazetteers | None = None,
    _counter: _Counter | None = None,
) -> list[CandidateTriple]:
    """Deterministic rule mapping from parsed rows/entries to candidates.

    HAZOP: cause -> (cause event, causes, deviation event); deviation ->
    (deviation event, causes, consequence event); safeguard/recommendation
    -> (treatment, mitigates, deviation event).  Logs: distinct consecutive
    timestamps give `precedes`, equal timestamps give `concurrent`.
    """
    gaz = gazetteers or Gazetteers.load()
    counter = _counter or _Counter()
    candidates: list[CandidateTriple] = []

    def event(label: str, **slots) -> Entity:
        where = _where_slot(label, gaz)
        return Entity(
            label=normalize_label(label),
            kind=NodeKind.EVENT,
            slots=FiveW1Y(what=normalize_label(label), where=where, **slots),
        )

    for row_no, row in enumerate(hazop_rows or [], start=1):
        deviation = event(_deviation_label(row.deviation, parameter))
        prov = f"{source}:row{row_no}"
        for cause in row.causes:
            candidates.append(
                CandidateTriple(
                    id=counter.next_id(),
                    head=event(cause),
                    relation=RelationKind.CAUSES,
                    tail=deviation,
                    provenance=prov,
                )
            )
        for consequence in row.consequences:
            candidates.append(
                CandidateTriple(
                    id=counter.next_id(),
                    head=deviation,
                    relation=RelationKind.CAUSES,
                    tail=event(consequence),
                    provenance=prov,
                )
            )
        for treatment in row.safeguards + row.recommendations:
            candidates.append(
                CandidateTriple(
                    id=counter.next_id(),
                    head=Entity(label=normalize_label(treatment), kind=NodeKind.TREATMENT),
                    relation=RelationKind.MITIGATES,
                    tail=deviation,
                    provenance=prov,
                )
            )

    entries = sorted(log_entries or [], key=lambda e: e.t)
    log_events = []
    for line_no, entry in enumerate(entries, start=1):
        who = _who_slot(entry.source, gaz)
        ev = event(entry.description, when=str(entry.t), who=who)
        log_events.append((entry, ev, f"{source}:entry{line_no}"))
        if who is not None:
            worker = Entity(label=who, kind=NodeKind.WORKER)
            candidates.append(
                CandidateTriple(
                    id=counter.next_id(),
                    head=worker,
                    relation=RelationKind.PERFORMS,
                    tail=ev,
                    provenance=f"{source}:entry{line_no}",
                )
            )
    for (ea, eva, prov_a), (eb, evb, _) in zip(log_events, log_events[1:]):
        if eb.t > ea.t:
            relation = RelationKind.PRECEDES
        else:
            relation = RelationKind.CONCURRENT
        if normalize_label(eva.label) == normalize_label(evb.label):
            continue
        candidates.append(
            CandidateTriple(
                id=counter.next_id(),
                head=eva,
                relation=relation,
                tail=evb,
                provenance=prov_a,
            )
        )
    return candidates


def extract_corpus(documents: list[tuple[str, str, str]],
                   gazetteers: Gazetteers | None = None) -> list[CandidateTriple]:
    """Extract candidates from a corpus of (name, kind, text) documents.

    kind is `hazop:<parameter>` or `eventlog`; inspection records carry no
    relations and are skipped here.
    """
    gaz = gazetteers or Gazetteers.load()
    counter = _Counter()
    candidates: list[CandidateTriple] = []
    for name, kind, text in documents:
        if kind.startswith("hazop"):
            _, _, parameter = kind.partition(":")
            rows, errors = parse_hazop(text, source=name)
            if errors:
                raise IngestError("; ".join(errors))
            candidates.extend(
                extract(hazop_rows=rows, parameter=parameter or "flow",
                        source=name, gazetteers=gaz, _counter=counter)
            )
        elif kind == "eventlog":
            entries = parse_event_log(text)
            candidates.extend(
                extract(log_entries=entries, source=name, gazetteers=gaz,
                        _counter=counter)
            )
        elif kind == "inspection":
            parse_inspection(text, gaz)  # validated, but yields no triples
        else:
            raise IngestError(f"unknown corpus document kind {kind!r}")
    return candidates


# --- review gate ---------------------------------------------------------


def load_decisions(text: str) -> dict[str, tuple[str, tuple[str, str, str] | None]]:
    """Parse a review file: `id,decision[,edited_head,edited_relation,edited_tail]`.

    Empty edit fields keep the original value.
    """
    decisions = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in next(csv.reader([line]))]
        if len(parts) not in (2, 5):
            raise ReviewError(f"line {line_no}: expected 2 or 5 fields, got {len(parts)}")
        cid, decision = parts[0], parts[1].lower()
        if decision not in ("accept", "reject", "edit"):
            raise ReviewError(f"line {line_no}: unknown decision {decision!r}")
        edit = None
        if decision == "edit":
            if len(parts) != 5:
                raise ReviewError(f"line {line_no}: edit needs edited head/relation/tail")
            edit = (parts[2], parts[3], parts[4])
        decisions[cid] = (decision, edit)
    return decisions


def review(
    candidates: list[CandidateTriple],
    decisions: dict[str, tuple[str, tuple[str, str, str] | None]],
) -> list[CandidateTriple]:
    """Apply review decisions; only accepted/edited candidates come back."""
    by_id = {c.id: c for c in candidates}
    unknown = sorted(set(decisions) - set(by_id))
    if unknown:
        raise ReviewError(f"decisions reference unknown candidate ids: {unknown}")
    result: list[CandidateTriple] = []
    known_entities = {}
    for c in candidates:
        for ent in (c.head, c.tail):
            known_entities.setdefault(normalize_label(ent.label), ent)
    for candidate in candidates:
        decision = decisions.get(candidate.id)
        if decision is None:
            continue  # still pending; the build gate refuses pending sets
        verdict, edit = decision
        if verdict == "reject":
            continue
        if verdict == "accept":
            result.append(replace(candidate, status="accepted"))
            continue
        head_label, rel_name, tail_label = edit
        head = candidate.head if not head_label else _resolve_entity(head_label, known_entities)
        tail = candidate.tail if not tail_label else _resolve_entity(tail_label, known_entities)
        relation = candidate.relation if not rel_name else RelationKind(rel_name)
        result.append(
            CandidateTriple(
                id=candidate.id,
                head=head,
                relation=relation,
                tail=tail,
                provenance=candidate.provenance + " (edited)",
                status="edited",
            )
        )
    return result


def _resolve_entity(label: str, known: dict[str, Entity]) -> Entity:
    norm = normalize_label(label)
    if norm in known:
        return known[norm]
    return Entity(label=norm, kind=NodeKind.EVENT)


def build_graph(accepted: list[CandidateTriple]) -> RiskGraph:
    """Load reviewed triples into a fresh graph."""
    graph = RiskGraph()
    for candidate in accepted:
        if candidate.status not in ("accepted", "edited"):
            raise ReviewError(
                f"candidate {candidate.id} with status {candidate.status!r} "
                "may not enter the graph"
            )
        head = graph.add_entity(
            candidate.head.kind, candidate.head.label, candidate.head.slots,
            provenance=(candidate.provenance,),
        )
        tail = graph.add_entity(
            candidate.tail.kind, candidate.tail.label, candidate.tail.slots,
            provenance=(candidate.provenance,),
        )
        graph.add_triple(
            Triple(
                head=head.id,
                relation=candidate.relation,
                tail=tail.id,
                provenance=(candidate.provenance,),
            )
        )
    return graph


# --- candidate CSV (intermediate artifact for the CLI workflow) ----------

_CANDIDATE_HEADER = [
    "id", "head_label", "head_kind", "relation", "tail_label", "tail_kind",
    "provenance", "status",
]


def write_candidates_csv(candidates: list[CandidateTriple], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_CANDIDATE_HEADER)
        for c in candidates:
            writer.writerow(
                [c.id, c.head.label, c.head.kind.value, c.relation.value,
                 c.tail.label, c.tail.kind.value, c.provenance, c.status]
            )


def read_candidates_csv(path: str) -> list[CandidateTriple]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != _CANDIDATE_HEADER:
            raise IngestError(f"{path}: not a candidates file")
        return [
            CandidateTriple(
                id=row["id"],
                head=Entity(label=row["head_label"], kind=NodeKind(row["head_kind"])),
                relation=RelationKind(row["relation"]),
                tail=Entity(label=row["tail_label"], kind=NodeKind(row["tail_kind"])),
                provenance=row["provenance"],
                status=row["status"],
            )
            for row in reader
        ]
