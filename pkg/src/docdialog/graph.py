"""Typed directed document graph with validation, path queries, and
goal-eligibility marking.

Every node is a typed span of document text identified by (doc_id, node_id).
Hierarchy edges form a per-domain forest (one synthetic root node per
domain, with each document's top node attached beneath it); link edges come
from see_more nodes and may cross documents, so they are excluded from all
path queries. Child order is document order and is preserved exactly.

Graphs are immutable after the build phase (construction plus
mark_super_leaves); after that they are safe to share across threads for
reads. Builders are single-threaded per graph.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator

from .errors import (
    DuplicateNodeIdError,
    NotDescendantError,
    OrphanNodeError,
    ShapeViolationError,
    UnknownDocError,
    UnknownDomainError,
    UnknownOverrideRefError,
    UnknownRefError,
    UnknownTypeLabelError,
)

DOMAIN_DOC_PREFIX = "domain:"
TOP_NODE_ID = "root"


class NodeType(Enum):
    ROOT = "root"
    SECTION = "section"
    ORDINARY = "ordinary"
    DISJUNCTION = "disjunction"
    CONJUNCTION = "conjunction"
    CONDITION = "condition"
    SOLUTION = "solution"
    NEGATION = "negation"
    TABLE = "table"
    OBJECT = "object"
    ATTRIBUTE = "attribute"
    VALUE = "value"
    SEQUENCE = "sequence"
    SEQUENCE_STEP = "sequence_step"
    SEE_MORE = "see_more"

    @classmethod
    def parse(cls, label: str) -> "NodeType":
        normalized = label.strip().lower().replace("-", "_")
        for member in cls:
            if member.value == normalized:
                return member
        raise UnknownTypeLabelError(f"unknown node type label: {label!r}")


GROUP_TYPES = {NodeType.DISJUNCTION, NodeType.CONJUNCTION, NodeType.NEGATION}

# Structural family a node belongs to, used for goal-type statistics,
# marking rules, and prompt-pattern selection.
FAMILY_BY_TYPE = {
    NodeType.ROOT: "root",
    NodeType.SECTION: "section",
    NodeType.ORDINARY: "ordinary",
    NodeType.DISJUNCTION: "condition",
    NodeType.CONJUNCTION: "condition",
    NodeType.CONDITION: "condition",
    NodeType.SOLUTION: "condition",
    NodeType.NEGATION: "condition",
    NodeType.TABLE: "table",
    NodeType.OBJECT: "table",
    NodeType.ATTRIBUTE: "table",
    NodeType.VALUE: "table",
    NodeType.SEQUENCE: "sequence",
    NodeType.SEQUENCE_STEP: "sequence",
    NodeType.SEE_MORE: "link",
}


@dataclass(frozen=True, order=True)
class NodeRef:
    doc_id: str
    node_id: str

    def __str__(self) -> str:
        return f"{self.doc_id}#{self.node_id}"

    @classmethod
    def parse(cls, text: str) -> "NodeRef":
        doc_id, sep, node_id = text.partition("#")
        if not sep or not doc_id or not node_id:
            raise UnknownRefError(f"malformed node reference: {text!r}")
        return cls(doc_id, node_id)


@dataclass
class Node:
    ref: NodeRef
    node_type: NodeType
    text: str
    properties: dict[str, str] = field(default_factory=dict)

    @property
    def is_super_leaf(self) -> bool:
        return self.properties.get("is_super_leaf") == "true"

    @property
    def linked_node(self) -> NodeRef | None:
        raw = self.properties.get("linked_node")
        return NodeRef.parse(raw) if raw else None

    @property
    def family(self) -> str:
        return FAMILY_BY_TYPE[self.node_type]


@dataclass
class Violation:
    ref: NodeRef
    rule: str
    detail: str = ""

    def __str__(self) -> str:
        return f"{self.rule} at {self.ref}" + (f": {self.detail}" if self.detail else "")


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, ref: NodeRef, rule: str, detail: str = "") -> None:
        self.violations.append(Violation(ref, rule, detail))


@dataclass
class Context:
    """Path and hierarchy neighborhood shown to a writer for one goal."""

    path_from_root: list[NodeRef]
    parent: NodeRef | None
    siblings: list[NodeRef]
    children: list[NodeRef]


@dataclass
class MarkingRuleSet:
    """Which nodes become eligible dialog goals (super-leaves).

    Defaults mark ordinary hierarchy leaves plus the roots of table,
    sequence, and condition-group substructures; section, root, and
    see_more nodes are never marked by rules.
    """

    ordinary_leaves: bool = True
    table_roots: bool = True
    sequence_roots: bool = True
    condition_groups: bool = True


# Permitted hierarchy children per node type. Types bound to a structure
# (object/attribute/value, sequence_step, condition, solution) are only
# valid beneath it: tables are strictly table -> object -> attribute ->
# value, sequences hold steps, and condition groups hold conditions or
# nested groups. ``solution`` moves from group-child to group-sibling when
# solution_attachment="sibling".
_FREE_TYPES = (
    NodeType.SECTION,
    NodeType.ORDINARY,
    NodeType.TABLE,
    NodeType.SEQUENCE,
    NodeType.DISJUNCTION,
    NodeType.CONJUNCTION,
    NodeType.NEGATION,
    NodeType.SEE_MORE,
)


def permitted_children(solution_attachment: str = "child") -> dict[NodeType, frozenset[NodeType]]:
    group_kids = {NodeType.CONDITION, NodeType.DISJUNCTION, NodeType.CONJUNCTION, NodeType.NEGATION}
    container_kids = set(_FREE_TYPES)
    if solution_attachment == "child":
        group_kids.add(NodeType.SOLUTION)
    elif solution_attachment == "sibling":
        container_kids.add(NodeType.SOLUTION)
    else:
        raise ValueError(f"solution_attachment must be 'child' or 'sibling', got {solution_attachment!r}")
    return {
        NodeType.ROOT: frozenset(container_kids),
        NodeType.SECTION: frozenset(container_kids),
        NodeType.ORDINARY: frozenset({NodeType.ORDINARY, NodeType.SEE_MORE}),
        NodeType.DISJUNCTION: frozenset(group_kids),
        NodeType.CONJUNCTION: frozenset(group_kids),
        NodeType.NEGATION: frozenset(group_kids),
        NodeType.CONDITION: frozenset(),
        NodeType.SOLUTION: frozenset({NodeType.ORDINARY, NodeType.SEE_MORE}),
        NodeType.TABLE: frozenset({NodeType.OBJECT}),
        NodeType.OBJECT: frozenset({NodeType.ATTRIBUTE}),
        NodeType.ATTRIBUTE: frozenset({NodeType.VALUE}),
        NodeType.VALUE: frozenset(),
        NodeType.SEQUENCE: frozenset({NodeType.SEQUENCE_STEP}),
        NodeType.SEQUENCE_STEP: frozenset({NodeType.ORDINARY, NodeType.SEQUENCE, NodeType.SEE_MORE}),
        NodeType.SEE_MORE: frozenset(),
    }


class DocumentGraph:
    """Unified property graph over all domains' documents.

    The constructor is permissive so that imported or hand-built graphs can
    be inspected with validate(); build_graph() is the checked entry point.
    """

    def __init__(self, solution_attachment: str = "child"):
        self.solution_attachment = solution_attachment
        self.nodes: dict[NodeRef, Node] = {}
        self.domains: dict[str, NodeRef] = {}
        self.children: dict[NodeRef, list[NodeRef]] = {}
        self.parent: dict[NodeRef, NodeRef] = {}
        self.link_edges: list[tuple[NodeRef, NodeRef]] = []
        self.doc_order: list[str] = []
        self.doc_top: dict[str, NodeRef] = {}
        self.doc_domain: dict[str, str] = {}

    # -- accessors -------------------------------------------------------

    def node(self, ref: NodeRef) -> Node:
        try:
            return self.nodes[ref]
        except KeyError:
            raise UnknownRefError(f"unknown node: {ref}") from None

    def child_refs(self, ref: NodeRef) -> list[NodeRef]:
        return self.children.get(ref, [])

    def domain_of(self, ref: NodeRef) -> str:
        if ref.doc_id.startswith(DOMAIN_DOC_PREFIX):
            return ref.doc_id[len(DOMAIN_DOC_PREFIX):]
        try:
            return self.doc_domain[ref.doc_id]
        except KeyError:
            raise UnknownDocError(f"unknown document: {ref.doc_id}") from None

    def domain_root(self, domain: str) -> NodeRef:
        try:
            return self.domains[domain]
        except KeyError:
            raise UnknownDomainError(f"unknown domain: {domain}") from None

    def top_node(self, doc_id: str) -> NodeRef:
        try:
            return self.doc_top[doc_id]
        except KeyError:
            raise UnknownDocError(f"unknown document: {doc_id}") from None

    def iter_preorder(self, root: NodeRef) -> Iterator[NodeRef]:
        """Depth-first preorder over the hierarchy, in document order."""
        self.node(root)
        stack = [root]
        while stack:
            ref = stack.pop()
            yield ref
            stack.extend(reversed(self.child_refs(ref)))

    def subtree_nodes(self, root: NodeRef) -> list[NodeRef]:
        return list(self.iter_preorder(root))

    # -- queries -----------------------------------------------------------

    def get_path(self, ancestor: NodeRef, node: NodeRef) -> list[NodeRef]:
        """Hierarchy path ancestor..node inclusive; NotDescendant otherwise."""
        self.node(ancestor)
        self.node(node)
        path = [node]
        cur = node
        while cur != ancestor:
            nxt = self.parent.get(cur)
            if nxt is None:
                raise NotDescendantError(f"{node} is not in the subtree of {ancestor}")
            cur = nxt
            path.append(cur)
        path.reverse()
        return path

    def subtree_super_leaves(self, root: NodeRef, excluded: Iterable[NodeRef] = ()) -> list[NodeRef]:
        """Eligible goals in root's subtree, document order, minus excluded."""
        skip = set(excluded)
        return [
            ref for ref in self.iter_preorder(root)
            if self.nodes[ref].is_super_leaf and ref not in skip
        ]

    def goal_context(self, goal: NodeRef) -> Context:
        node = self.node(goal)
        domain = self.domain_of(goal)
        root = self.domain_root(domain)
        path = self.get_path(root, goal)
        parent = self.parent.get(goal)
        siblings = [s for s in self.child_refs(parent)] if parent is not None else []
        siblings = [s for s in siblings if s != goal]
        return Context(
            path_from_root=path,
            parent=parent,
            siblings=siblings,
            children=list(self.child_refs(goal)),
        )

    def connected_docs(self, doc_id: str) -> list[str]:
        """Documents this doc links to via see_more, deduplicated, in the
        order the links appear in the document; excludes self."""
        top = self.top_node(doc_id)
        seen: set[str] = set()
        out: list[str] = []
        targets = {src: dst for src, dst in self.link_edges}
        for ref in self.iter_preorder(top):
            dst = targets.get(ref)
            if dst is None:
                continue
            if dst.doc_id != doc_id and dst.doc_id in self.doc_top and dst.doc_id not in seen:
                seen.add(dst.doc_id)
                out.append(dst.doc_id)
        return out

    def has_outlink(self, root: NodeRef) -> bool:
        """True if root's subtree contains a see_more to another document."""
        targets = {src: dst for src, dst in self.link_edges}
        for ref in self.iter_preorder(root):
            dst = targets.get(ref)
            if dst is not None and dst.doc_id != ref.doc_id:
                return True
        return False

    def associated_solution(self, group: NodeRef) -> NodeRef | None:
        """Solution node tied to a condition group, honoring the configured
        attachment (child: anywhere in the group subtree; sibling: among the
        group's hierarchy siblings)."""
        for ref in self.iter_preorder(group):
            if self.nodes[ref].node_type == NodeType.SOLUTION:
                return ref
        if self.solution_attachment == "sibling":
            parent = self.parent.get(group)
            if parent is not None:
                for sib in self.child_refs(parent):
                    if sib != group and self.nodes[sib].node_type == NodeType.SOLUTION:
                        return sib
        return None

    # -- marking ------------------------------------------------------------

    def mark_super_leaves(self, rules: MarkingRuleSet | None = None,
                          overrides: dict[NodeRef, bool] | None = None) -> int:
        """Recompute is_super_leaf for every node from rules, then apply
        overrides. Idempotent; returns the number of marked nodes."""
        rules = rules or MarkingRuleSet()
        overrides = overrides or {}
        for ref in overrides:
            if ref not in self.nodes:
                raise UnknownOverrideRefError(f"override for unknown node: {ref}")
        count = 0
        for ref, node in self.nodes.items():
            flag = self._rule_mark(ref, node, rules)
            if ref in overrides:
                flag = overrides[ref]
            if flag:
                node.properties["is_super_leaf"] = "true"
                count += 1
            else:
                node.properties.pop("is_super_leaf", None)
        return count

    def _rule_mark(self, ref: NodeRef, node: Node, rules: MarkingRuleSet) -> bool:
        t = node.node_type
        if t in (NodeType.SECTION, NodeType.ROOT, NodeType.SEE_MORE):
            return False
        if rules.ordinary_leaves and t == NodeType.ORDINARY and not self.child_refs(ref):
            return True
        if rules.table_roots and t == NodeType.TABLE:
            return True
        if rules.sequence_roots and t == NodeType.SEQUENCE:
            return True
        if rules.condition_groups and t in GROUP_TYPES:
            parent = self.parent.get(ref)
            parent_is_group = parent is not None and self.nodes[parent].node_type in GROUP_TYPES
            return not parent_is_group
        return False

    # -- validation -----------------------------------------------------------

    def validate(self) -> ValidationReport:
        """Enumerate every invariant breach; empty report means valid."""
        report = ValidationReport()
        allowed = permitted_children(self.solution_attachment)

        parent_count: dict[NodeRef, int] = {}
        for parent_ref, kids in self.children.items():
            if parent_ref not in self.nodes:
                report.add(parent_ref, "DanglingEdge", "edge from unknown parent")
            for kid in kids:
                if kid not in self.nodes:
                    report.add(kid, "DanglingEdge", f"unknown child of {parent_ref}")
                    continue
                parent_count[kid] = parent_count.get(kid, 0) + 1

        roots = set(self.domains.values())
        for domain, root in self.domains.items():
            if root not in self.nodes:
                report.add(root, "BadDomainRoot", f"domain {domain!r} root missing")
            elif self.nodes[root].node_type != NodeType.ROOT:
                report.add(root, "BadDomainRoot", f"domain {domain!r} root is not root-typed")

        for ref, node in self.nodes.items():
            n_parents = parent_count.get(ref, 0)
            if node.node_type == NodeType.ROOT:
                if ref not in roots:
                    report.add(ref, "StrayRoot", "root-typed node not registered as a domain root")
                if n_parents:
                    report.add(ref, "RootWithParent")
            else:
                if n_parents == 0:
                    report.add(ref, "OrphanNode", "no hierarchy parent")
                elif n_parents > 1:
                    report.add(ref, "MultipleParents", f"{n_parents} parents")
            if node.node_type != NodeType.ROOT and not node.text:
                report.add(ref, "EmptyText")
            if node.node_type == NodeType.SEE_MORE:
                target = node.linked_node
                if target is None:
                    report.add(ref, "MissingLink", "see_more without linked_node property")
                elif target not in self.nodes:
                    report.add(ref, "DanglingLink", f"linked_node {target} does not exist")

        for parent_ref, kids in self.children.items():
            parent_node = self.nodes.get(parent_ref)
            if parent_node is None:
                continue
            ok_types = allowed[parent_node.node_type]
            for kid in kids:
                kid_node = self.nodes.get(kid)
                if kid_node is None:
                    continue
                if kid_node.node_type not in ok_types:
                    report.add(
                        kid, "ShapeViolation",
                        f"{kid_node.node_type.value} not permitted under {parent_node.node_type.value}",
                    )

        for ref, node in self.nodes.items():
            if node.node_type in GROUP_TYPES:
                parent = self.parent.get(ref)
                parent_is_group = parent is not None and parent in self.nodes \
                    and self.nodes[parent].node_type in GROUP_TYPES
                if not parent_is_group and self.associated_solution(ref) is None:
                    report.add(ref, "MissingSolution", "condition group without an associated solution")

        # cycle check over hierarchy edges
        state: dict[NodeRef, int] = {}

        def visit(start: NodeRef) -> None:
            stack: list[tuple[NodeRef, int]] = [(start, 0)]
            state[start] = 1
            while stack:
                ref, idx = stack[-1]
                kids = [k for k in self.children.get(ref, []) if k in self.nodes]
                if idx < len(kids):
                    stack[-1] = (ref, idx + 1)
                    kid = kids[idx]
                    mark = state.get(kid, 0)
                    if mark == 1:
                        report.add(kid, "HierarchyCycle")
                    elif mark == 0:
                        state[kid] = 1
                        stack.append((kid, 0))
                else:
                    state[ref] = 2
                    stack.pop()

        for root in self.domains.values():
            if root in self.nodes:
                visit(root)

        return report

    # -- serialization -----------------------------------------------------------

    def to_dict(self) -> dict:
        def ref_d(ref: NodeRef) -> dict:
            return {"doc_id": ref.doc_id, "node_id": ref.node_id}

        nodes = []
        edges = []
        for domain in sorted(self.domains):
            root = self.domains[domain]
            nodes.append(self._node_dict(root))
            for doc_id in self.doc_order:
                if self.doc_domain.get(doc_id) == domain:
                    edges.append({"parent": ref_d(root), "child": ref_d(self.doc_top[doc_id]), "kind": "hierarchy"})
        for doc_id in self.doc_order:
            for ref in self.iter_preorder(self.doc_top[doc_id]):
                nodes.append(self._node_dict(ref))
                for kid in self.child_refs(ref):
                    edges.append({"parent": ref_d(ref), "child": ref_d(kid), "kind": "hierarchy"})
        for src, dst in self.link_edges:
            edges.append({"parent": ref_d(src), "child": ref_d(dst), "kind": "link"})
        return {
            "domains": {d: ref_d(r) for d, r in self.domains.items()},
            "docs": [{"doc_id": d, "domain": self.doc_domain[d], "top": ref_d(self.doc_top[d])}
                     for d in self.doc_order],
            "solution_attachment": self.solution_attachment,
            "nodes": nodes,
            "edges": edges,
        }

    def _node_dict(self, ref: NodeRef) -> dict:
        node = self.nodes[ref]
        return {
            "doc_id": ref.doc_id,
            "node_id": ref.node_id,
            "type": node.node_type.value,
            "text": node.text,
            "properties": dict(sorted(node.properties.items())),
        }

    def to_json(self) -> str:
        return canonical_json(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "DocumentGraph":
        g = cls(solution_attachment=data.get("solution_attachment", "child"))
        for nd in data["nodes"]:
            ref = NodeRef(nd["doc_id"], nd["node_id"])
            if ref in g.nodes:
                raise DuplicateNodeIdError(f"duplicate node: {ref}")
            g.nodes[ref] = Node(ref, NodeType.parse(nd["type"]), nd["text"], dict(nd.get("properties", {})))
        g.domains = {d: NodeRef(r["doc_id"], r["node_id"]) for d, r in data["domains"].items()}
        for doc in data.get("docs", []):
            g.doc_order.append(doc["doc_id"])
            g.doc_top[doc["doc_id"]] = NodeRef(doc["top"]["doc_id"], doc["top"]["node_id"])
            g.doc_domain[doc["doc_id"]] = doc["domain"]
        for edge in data["edges"]:
            parent = NodeRef(edge["parent"]["doc_id"], edge["parent"]["node_id"])
            child = NodeRef(edge["child"]["doc_id"], edge["child"]["node_id"])
            if edge["kind"] == "hierarchy":
                g.children.setdefault(parent, []).append(child)
                g.parent[child] = parent
            elif edge["kind"] == "link":
                g.link_edges.append((parent, child))
            else:
                raise UnknownRefError(f"unknown edge kind: {edge['kind']!r}")
        return g

    @classmethod
    def from_json(cls, text: str) -> "DocumentGraph":
        return cls.from_dict(json.loads(text))


def canonical_json(obj) -> str:
    """Stable key order, compact separators; byte-identical round trips."""
    return json.dumps(obj, ensure_ascii=False, sort_keys=True, separators=(",", ":"))


def build_graph(documents, domain_assignments: dict[str, str],
                solution_attachment: str = "child") -> DocumentGraph:
    """Assemble a validated DocumentGraph from parsed documents.

    Creates one root node per domain, attaches each document's top node to
    its domain root, copies hierarchy and see_more link edges, and rejects
    the result if any structural invariant is broken.
    """
    graph = DocumentGraph(solution_attachment=solution_attachment)
    for doc in documents:
        if doc.doc_id in graph.doc_top:
            raise DuplicateNodeIdError(f"duplicate document id: {doc.doc_id}")
        if doc.doc_id not in domain_assignments:
            raise UnknownDomainError(f"document {doc.doc_id!r} has no domain assignment")
        domain = domain_assignments[doc.doc_id]
        if domain not in graph.domains:
            root_ref = NodeRef(DOMAIN_DOC_PREFIX + domain, TOP_NODE_ID)
            graph.domains[domain] = root_ref
            graph.nodes[root_ref] = Node(root_ref, NodeType.ROOT, domain)
            graph.children[root_ref] = []
        root_ref = graph.domains[domain]

        graph.doc_order.append(doc.doc_id)
        graph.doc_domain[doc.doc_id] = domain
        top_ref = _attach_ir(graph, doc)
        graph.doc_top[doc.doc_id] = top_ref
        graph.children[root_ref].append(top_ref)
        graph.parent[top_ref] = root_ref

    report = graph.validate()
    for violation in report.violations:
        # Links may legitimately point at documents outside this build;
        # resolve_links() reports them rather than the build failing.
        if violation.rule == "DanglingLink":
            continue
        if violation.rule in ("OrphanNode", "MultipleParents"):
            raise OrphanNodeError(str(violation))
        raise ShapeViolationError(violation.ref, violation.rule, violation.detail)
    return graph


def _attach_ir(graph: DocumentGraph, doc) -> NodeRef:
    """Copy one DocumentIR tree into the graph; returns the top NodeRef."""
    top = doc.root

    def add(ir_node) -> NodeRef:
        ref = NodeRef(doc.doc_id, ir_node.node_id)
        if ref in graph.nodes:
            raise DuplicateNodeIdError(f"duplicate node id within graph: {ref}")
        node_type = NodeType.parse(ir_node.type_label)
        props = dict(ir_node.properties)
        graph.nodes[ref] = Node(ref, node_type, ir_node.text, props)
        kid_refs = []
        for child in ir_node.children:
            kid_ref = add(child)
            kid_refs.append(kid_ref)
            graph.parent[kid_ref] = ref
        graph.children[ref] = kid_refs
        if node_type == NodeType.SEE_MORE:
            target = graph.nodes[ref].linked_node
            if target is not None:
                graph.link_edges.append((ref, target))
        return ref

    return add(top)
