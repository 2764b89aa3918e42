"""Access to the packaged fixture corpus and its review decisions.

The corpus directory layout is a `manifest.csv` (columns name,kind) next to
the documents it lists; the same layout works for user-supplied corpora via
the CLI.
"""

from __future__ import annotations

import csv
import io
import os
from importlib import resources

from .ingest import IngestError, build_graph, extract_corpus, load_decisions, review
from .riskgraph import RiskGraph

__all__ = [
    "load_corpus_dir",
    "packaged_corpus",
    "packaged_decisions_text",
    "reference_graph",
    "REVIEW_FILE_NAME",
]

MANIFEST_NAME = "manifest.csv"
REVIEW_FILE_NAME = "review_decisions.csv"


def _parse_manifest(text: str) -> list[tuple[str, str]]:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["name", "kind"]:
        raise IngestError("corpus manifest must have columns name,kind")
    entries = []
    for row in reader:
        name = (row["name"] or "").strip()
        kind = (row["kind"] or "").strip()
        if name:
            entries.append((name, kind))
    return entries


def load_corpus_dir(path: str) -> list[tuple[str, str, str]]:
    """Read a corpus directory into (name, kind, text) documents."""
    manifest = os.path.join(path, MANIFEST_NAME)
    if not os.path.isfile(manifest):
        raise IngestError(f"{path}: missing {MANIFEST_NAME}")
    with open(manifest, "r", encoding="utf-8") as fh:
        entries = _parse_manifest(fh.read())
    documents = []
    for name, kind in entries:
        doc_path = os.path.join(path, name)
        if not os.path.isfile(doc_path):
            raise IngestError(f"{manifest}: listed document {name!r} not found")
        with open(doc_path, "r", encoding="utf-8") as fh:
            documents.append((name, kind, fh.read()))
    return documents


def _packaged_root():
    return resources.files("plantguard.data").joinpath("corpus")


def packaged_corpus() -> list[tuple[str, str, str]]:
    """The shipped CSTR fixture corpus."""
    root = _packaged_root()
    entries = _parse_manifest(root.joinpath(MANIFEST_NAME).read_text(encoding="utf-8"))
    return [
        (name, kind, root.joinpath(name).read_text(encoding="utf-8"))
        for name, kind in entries
    ]


def packaged_decisions_text() -> str:
    return _packaged_root().joinpath(REVIEW_FILE_NAME).read_text(encoding="utf-8")


def reference_graph() -> RiskGraph:
    """Extract + review + build over the shipped corpus."""
    candidates = extract_corpus(packaged_corpus())
    decisions = load_decisions(packaged_decisions_text())
    accepted = review(candidates, decisions)
    return build_graph(accepted)
