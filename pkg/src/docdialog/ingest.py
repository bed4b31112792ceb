"""Parsers that normalize structured sources into DocumentIR, plus link
resolution and the document ranking score.

Two front-ends compile to the same IR:

* ``.docmk`` — line-oriented markup. One block per line::

      @<type> <node_id> [{k=v; k2=v2}] [-> <doc_id>#<node_id>] | <text>

  Nesting is two spaces of indentation per level. A document starts with
  ``#doc <doc_id>`` and ``#title <text>`` header lines; the title becomes a
  synthetic section node with the reserved id ``root``. Type labels accept
  ``-`` or ``_`` (``see-more`` == ``see_more``). Text is a single line and
  is stripped; ids must not contain ``#`` or whitespace.

* ``.docir.json`` — a lossless JSON tree mirroring IRNode exactly.

Parsers do no shape checking: malformed nesting (for example a value node
outside an attribute) parses fine here and is rejected by build_graph.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .errors import DuplicateIdError, MarkupSyntaxError
from .graph import FAMILY_BY_TYPE, DocumentGraph, NodeRef, NodeType

INDENT = 2

# `-> target` is only meaningful (and only parsed) on see_more blocks, so
# ordinary text may begin with "->" without being misread as a link.
_BLOCK_RE = re.compile(
    r"^@(?P<type>[A-Za-z_-]+)\s+(?P<id>[^\s#|{]+)"
    r"(?:\s+\{(?P<props>[^}]*)\})?"
    r"\s*\|\s?(?P<text>.*)$"
)
_SEE_MORE_BLOCK_RE = re.compile(
    r"^@(?P<type>see[-_]more)\s+(?P<id>[^\s#|{]+)"
    r"(?:\s+\{(?P<props>[^}]*)\})?"
    r"(?:\s+->\s+(?P<target>\S+))?"
    r"\s*\|\s?(?P<text>.*)$"
)


@dataclass
class IRNode:
    node_id: str
    type_label: str
    text: str
    properties: dict[str, str] = field(default_factory=dict)
    children: list["IRNode"] = field(default_factory=list)


@dataclass
class DocumentIR:
    doc_id: str
    title: str
    root: IRNode


@dataclass
class RankingScore:
    doc_id: str
    structural_richness: int
    link_degree: int
    score: float


@dataclass
class LinkReport:
    resolved: int
    dangling: list[NodeRef]


def parse_docmk(source: str) -> DocumentIR:
    """Parse ``.docmk`` markup into a DocumentIR."""
    doc_id: str | None = None
    title = ""
    root: IRNode | None = None
    # stack of (depth, node); depth -1 is the synthetic title node
    stack: list[tuple[int, IRNode]] = []
    seen_ids: set[str] = set()

    for lineno, raw in enumerate(source.splitlines(), start=1):
        if not raw.strip():
            continue
        stripped = raw.lstrip(" ")
        indent = len(raw) - len(stripped)
        if "\t" in raw[:indent + 1]:
            raise MarkupSyntaxError("tabs are not allowed for indentation", lineno, 1)

        if stripped.startswith("#doc "):
            doc_id = stripped[len("#doc "):].strip()
            if not doc_id or "#" in doc_id:
                raise MarkupSyntaxError("bad document id", lineno, 6)
            continue
        if stripped.startswith("#title "):
            title = stripped[len("#title "):].strip()
            continue

        if not stripped.startswith("@"):
            raise MarkupSyntaxError(f"expected a @type block, got {stripped[:20]!r}", lineno, indent + 1)
        if doc_id is None:
            raise MarkupSyntaxError("block before #doc header", lineno, 1)
        if indent % INDENT:
            raise MarkupSyntaxError(f"indentation must be a multiple of {INDENT}", lineno, 1)
        depth = indent // INDENT

        is_see_more = stripped.startswith(("@see_more", "@see-more"))
        m = (_SEE_MORE_BLOCK_RE if is_see_more else _BLOCK_RE).match(stripped)
        if not m:
            raise MarkupSyntaxError("malformed block line", lineno, indent + 1)
        type_label = m.group("type")
        NodeType.parse(type_label)  # UnknownTypeLabel on bad labels
        node_id = m.group("id")
        if node_id in seen_ids or node_id == "root":
            raise DuplicateIdError(f"duplicate node id {node_id!r} in document {doc_id!r}")
        seen_ids.add(node_id)

        props: dict[str, str] = {}
        if m.group("props"):
            for item in m.group("props").split(";"):
                item = item.strip()
                if not item:
                    continue
                key, eq, value = item.partition("=")
                if not eq:
                    raise MarkupSyntaxError(f"bad property {item!r}", lineno, indent + 1)
                props[key.strip()] = value.strip()
        if is_see_more and m.group("target"):
            NodeRef.parse(m.group("target"))  # validates doc#node form
            props["linked_node"] = m.group("target")

        node = IRNode(node_id, type_label, m.group("text").strip(), props)

        if root is None:
            root = IRNode("root", "section", "")
            stack = [(-1, root)]
        while stack and stack[-1][0] >= depth:
            stack.pop()
        if not stack or stack[-1][0] != depth - 1:
            raise MarkupSyntaxError("indentation skips a level", lineno, indent + 1)
        stack[-1][1].children.append(node)
        stack.append((depth, node))

    if doc_id is None:
        raise MarkupSyntaxError("missing #doc header", 1, 1)
    if root is None:
        root = IRNode("root", "section", "")
    root.text = title
    return DocumentIR(doc_id, title, root)


def serialize_docmk(doc: DocumentIR) -> str:
    """Inverse of parse_docmk for IRs expressible in the line format
    (single-line, stripped text; property values without ``;`` or ``}``)."""
    lines = [f"#doc {doc.doc_id}", f"#title {doc.title}"]

    def emit(node: IRNode, depth: int) -> None:
        props = {k: v for k, v in node.properties.items() if k != "linked_node"}
        parts = [f"@{node.type_label} {node.node_id}"]
        if props:
            inner = "; ".join(f"{k}={v}" for k, v in sorted(props.items()))
            parts.append("{" + inner + "}")
        target = node.properties.get("linked_node")
        if target:
            parts.append(f"-> {target}")
        lines.append(" " * (INDENT * depth) + " ".join(parts) + f" | {node.text}")
        for child in node.children:
            emit(child, depth + 1)

    for child in doc.root.children:
        emit(child, 0)
    return "\n".join(lines) + "\n"


def parse_docir_json(source: str) -> DocumentIR:
    """Parse the lossless ``.docir.json`` form of a document."""
    data = json.loads(source)
    seen: set[str] = set()

    def load(nd: dict) -> IRNode:
        node_id = nd["node_id"]
        if node_id in seen:
            raise DuplicateIdError(f"duplicate node id {node_id!r} in document {data['doc_id']!r}")
        seen.add(node_id)
        NodeType.parse(nd["type"])
        return IRNode(
            node_id, nd["type"], nd["text"],
            dict(nd.get("properties", {})),
            [load(c) for c in nd.get("children", [])],
        )

    return DocumentIR(data["doc_id"], data["title"], load(data["root"]))


def serialize_docir_json(doc: DocumentIR) -> str:
    def dump(node: IRNode) -> dict:
        return {
            "node_id": node.node_id,
            "type": node.type_label,
            "text": node.text,
            "properties": dict(sorted(node.properties.items())),
            "children": [dump(c) for c in node.children],
        }

    payload = {"doc_id": doc.doc_id, "title": doc.title, "root": dump(doc.root)}
    return json.dumps(payload, ensure_ascii=False, sort_keys=True, separators=(",", ":")) + "\n"


def parse_document(source: bytes | str, fmt: str = "docmk") -> DocumentIR:
    """Parse one source document; fmt is ``docmk`` or ``json``."""
    text = source.decode("utf-8") if isinstance(source, bytes) else source
    if fmt == "docmk":
        return parse_docmk(text)
    if fmt == "json":
        return parse_docir_json(text)
    raise ValueError(f"unknown source format: {fmt!r}")


def parse_document_file(path) -> DocumentIR:
    from pathlib import Path

    p = Path(path)
    fmt = "json" if p.name.endswith(".docir.json") or p.suffix == ".json" else "docmk"
    return parse_document(p.read_bytes(), fmt)


def resolve_links(graph: DocumentGraph) -> LinkReport:
    """Check every see_more target; dangling links are listed, not removed."""
    resolved = 0
    dangling: list[NodeRef] = []
    for ref, node in graph.nodes.items():
        if node.node_type != NodeType.SEE_MORE:
            continue
        target = node.linked_node
        if target is not None and target in graph.nodes:
            resolved += 1
        else:
            dangling.append(ref)
    return LinkReport(resolved, sorted(dangling))


# Families that count toward structural richness. Sections and plain text
# are present in nearly every document, so only the three heavyweight
# structures make a document "rich".
RICHNESS_FAMILIES = ("table", "sequence", "condition")


def score_document(doc: DocumentIR, w_richness: float = 1.0, w_links: float = 1.0) -> RankingScore:
    families: set[str] = set()
    links = 0

    def walk(node: IRNode) -> None:
        nonlocal links
        node_type = NodeType.parse(node.type_label)
        fam = FAMILY_BY_TYPE[node_type]
        if fam in RICHNESS_FAMILIES:
            families.add(fam)
        if node_type == NodeType.SEE_MORE:
            links += 1
        for child in node.children:
            walk(child)

    walk(doc.root)
    richness = len(families)
    return RankingScore(doc.doc_id, richness, links, w_richness * richness + w_links * links)


def rank_documents(docs: list[DocumentIR], w_richness: float = 1.0,
                   w_links: float = 1.0) -> list[tuple[str, RankingScore]]:
    """Score and sort documents, highest first; ties break by doc_id."""
    if w_richness <= 0 or w_links <= 0:
        raise ValueError("ranking weights must be positive")
    scored = [(doc.doc_id, score_document(doc, w_richness, w_links)) for doc in docs]
    scored.sort(key=lambda pair: (-pair[1].score, pair[0]))
    return scored
