"""Loaders for the bundled synthetic demo corpus.

Five small documents across four domains exercise every structural type:
tables with objects/attributes/values, sequences with steps, disjunction /
conjunction / negation condition groups with solutions, plain text, and
cross-document see_more links (two of the documents are deliberately
unlinked). Useful for demos, tests, and seeding a collection service.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .graph import DocumentGraph, MarkingRuleSet, build_graph
from .ingest import DocumentIR, parse_docmk

DOC_DOMAINS = {
    "permit-guide": "public-services",
    "fee-schedule": "public-services",
    "device-setup": "technology",
    "warranty-terms": "insurance",
    "herb-garden": "howto",
}

_DOC_ORDER = ["permit-guide", "fee-schedule", "device-setup", "warranty-terms", "herb-garden"]


def bundled_doc_text(doc_id: str) -> str:
    return resources.files("docdialog").joinpath("sample_docs", f"{doc_id}.docmk").read_text(encoding="utf-8")


def bundled_doc_paths() -> list[Path]:
    base = resources.files("docdialog").joinpath("sample_docs")
    return [Path(str(base.joinpath(f"{doc_id}.docmk"))) for doc_id in _DOC_ORDER]


def load_bundled_documents() -> list[DocumentIR]:
    return [parse_docmk(bundled_doc_text(doc_id)) for doc_id in _DOC_ORDER]


def load_bundled_graph(mark: bool = True) -> DocumentGraph:
    """Parse, build, and (by default) super-leaf-mark the demo corpus."""
    graph = build_graph(load_bundled_documents(), DOC_DOMAINS)
    if mark:
        graph.mark_super_leaves(MarkingRuleSet())
    return graph
