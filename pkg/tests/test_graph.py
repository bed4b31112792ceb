import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from docdialog.errors import (
    DuplicateNodeIdError,
    NotDescendantError,
    ShapeViolationError,
    UnknownDomainError,
    UnknownOverrideRefError,
)
from docdialog.graph import (
    DocumentGraph,
    MarkingRuleSet,
    Node,
    NodeRef,
    NodeType,
    build_graph,
)
from docdialog.ingest import DocumentIR, IRNode

from conftest import chain_doc
from oracles import bfs_path, brute_super_leaves, parent_counts


def ref(doc, node):
    return NodeRef(doc, node)


# -- build_graph ----------------------------------------------------------------


def test_build_minimal_chain():
    doc = DocumentIR("d", "T", IRNode("root", "section", "T", children=[
        IRNode("s", "section", "S", children=[IRNode("o", "ordinary", "text")]),
    ]))
    graph = build_graph([doc], {"d": "dom"})
    # domain root + 3 document nodes
    assert len(graph.nodes) == 4
    assert graph.validate().ok
    assert graph.parent[ref("d", "o")] == ref("d", "s")
    assert graph.parent[ref("d", "root")] == graph.domains["dom"]


def test_build_figure_fixture_validates(demo_graph):
    assert demo_graph.validate().ok
    # the permit guide carries all four structure kinds
    types = {demo_graph.nodes[r].node_type for r in demo_graph.iter_preorder(demo_graph.top_node("permit-guide"))}
    assert {NodeType.SECTION, NodeType.DISJUNCTION, NodeType.CONDITION, NodeType.SOLUTION,
            NodeType.SEQUENCE, NodeType.SEQUENCE_STEP, NodeType.TABLE, NodeType.OBJECT,
            NodeType.ATTRIBUTE, NodeType.VALUE, NodeType.ORDINARY, NodeType.SEE_MORE} <= types


def test_build_rejects_forbidden_table_child():
    doc = DocumentIR("d", "T", IRNode("root", "section", "T", children=[
        IRNode("t", "table", "materials", children=[
            IRNode("q", "sequence", "steps"),
        ]),
    ]))
    with pytest.raises(ShapeViolationError) as einfo:
        build_graph([doc], {"d": "dom"})
    assert einfo.value.rule == "ShapeViolation"


def test_build_rejects_value_outside_attribute():
    doc = DocumentIR("d", "T", IRNode("root", "section", "T", children=[
        IRNode("v", "value", "A4"),
    ]))
    with pytest.raises(ShapeViolationError):
        build_graph([doc], {"d": "dom"})


def test_build_duplicate_doc_and_node_ids():
    doc = chain_doc()
    with pytest.raises(DuplicateNodeIdError):
        build_graph([doc, doc], {"d1": "dom"})


def test_build_missing_domain_assignment():
    with pytest.raises(UnknownDomainError):
        build_graph([chain_doc()], {})


def test_condition_group_needs_solution():
    doc = DocumentIR("d", "T", IRNode("root", "section", "T", children=[
        IRNode("g", "disjunction", "either of:", children=[
            IRNode("c", "condition", "you qualify"),
        ]),
    ]))
    with pytest.raises(ShapeViolationError) as einfo:
        build_graph([doc], {"d": "dom"})
    assert einfo.value.rule == "MissingSolution"


def test_solution_as_sibling_attachment():
    doc = DocumentIR("d", "T", IRNode("root", "section", "T", children=[
        IRNode("s", "section", "rules", children=[
            IRNode("g", "disjunction", "either of:", children=[
                IRNode("c", "condition", "you qualify"),
            ]),
            IRNode("sol", "solution", "you may apply"),
        ]),
    ]))
    graph = build_graph([doc], {"d": "dom"}, solution_attachment="sibling")
    assert graph.validate().ok
    assert graph.associated_solution(ref("d", "g")) == ref("d", "sol")
    # same document under child attachment is invalid twice over
    with pytest.raises(ShapeViolationError):
        build_graph([doc], {"d": "dom"}, solution_attachment="child")


# -- validate -------------------------------------------------------------------


def test_validate_dangling_link(chain_graph):
    see = ref("d1", "X")
    chain_graph.nodes[see] = Node(see, NodeType.SEE_MORE, "see elsewhere",
                                  {"linked_node": "gone#root"})
    chain_graph.parent[see] = ref("d1", "S")
    chain_graph.children[ref("d1", "S")].append(see)
    rules = [v.rule for v in chain_graph.validate().violations]
    assert rules == ["DanglingLink"]


def test_validate_multiple_parents(chain_graph):
    # hand-wire G3 under two parents, then check via an independent scan
    chain_graph.children[ref("d1", "root")].append(ref("d1", "G3"))
    counts = parent_counts(chain_graph)
    assert counts[ref("d1", "G3")] == 2
    rules = [v.rule for v in chain_graph.validate().violations]
    assert "MultipleParents" in rules


def test_validate_orphan_and_empty_text(chain_graph):
    lost = ref("d1", "lost")
    chain_graph.nodes[lost] = Node(lost, NodeType.ORDINARY, "")
    report = chain_graph.validate()
    rules = {v.rule for v in report.violations}
    assert {"OrphanNode", "EmptyText"} <= rules


def test_validate_is_pure(chain_graph):
    before = chain_graph.to_json()
    chain_graph.validate()
    assert chain_graph.to_json() == before


# -- get_path ---------------------------------------------------------------------


def test_get_path_identity(chain_graph):
    assert chain_graph.get_path(ref("d1", "S"), ref("d1", "S")) == [ref("d1", "S")]


def test_get_path_chain(chain_graph):
    assert chain_graph.get_path(ref("d1", "root"), ref("d1", "G3")) == [
        ref("d1", "root"), ref("d1", "S"), ref("d1", "G3")]


def test_get_path_not_descendant(chain_graph):
    with pytest.raises(NotDescendantError):
        chain_graph.get_path(ref("d1", "G1"), ref("d1", "G2"))


def test_get_path_matches_bfs_oracle(demo_graph):
    top = demo_graph.top_node("permit-guide")
    value = ref("permit-guide", "N4v1")
    path = demo_graph.get_path(top, value)
    assert path == bfs_path(demo_graph, top, value)
    # root, section, table, object, attribute, value
    assert len(path) == 6
    assert [demo_graph.nodes[r].node_type.value for r in path[-4:]] == [
        "table", "object", "attribute", "value"]


def test_every_path_from_parent_is_two_nodes(demo_graph):
    for node, parent in demo_graph.parent.items():
        assert demo_graph.get_path(parent, node) == [parent, node]


# -- subtree_super_leaves ------------------------------------------------------------


def test_super_leaves_all_excluded(demo_graph):
    top = demo_graph.top_node("permit-guide")
    all_leaves = demo_graph.subtree_super_leaves(top)
    assert demo_graph.subtree_super_leaves(top, set(all_leaves)) == []


def test_super_leaves_figure_fixture(demo_graph):
    top = demo_graph.top_node("permit-guide")
    got = demo_graph.subtree_super_leaves(top)
    assert got == brute_super_leaves(demo_graph, top)
    assert ref("permit-guide", "N2") in got
    assert ref("permit-guide", "N3") in got
    assert ref("permit-guide", "N4") in got


def test_super_leaves_subtree_root(demo_graph):
    seq = ref("permit-guide", "N3")
    assert demo_graph.subtree_super_leaves(seq) == brute_super_leaves(demo_graph, seq) == [seq]


@st.composite
def random_marked_graph(draw):
    n = draw(st.integers(min_value=1, max_value=200))
    parents = [draw(st.integers(min_value=0, max_value=i - 1)) for i in range(1, n)]
    marks = draw(st.lists(st.booleans(), min_size=n, max_size=n))
    kids = {i: [] for i in range(n)}
    for i, p in enumerate(parents, start=1):
        kids[p].append(i)

    def node(i):
        is_leaf = not kids[i]
        if i == 0 or not is_leaf:
            return IRNode(f"n{i}", "section", f"sec {i}", children=[node(k) for k in kids[i]])
        return IRNode(f"n{i}", "ordinary", f"text {i}")

    doc = DocumentIR("d", "T", IRNode("root", "section", "T", children=[node(0)]))
    graph = build_graph([doc], {"d": "dom"})
    overrides = {}
    for i in range(n):
        if not kids[i] and marks[i]:
            overrides[NodeRef("d", f"n{i}")] = True
    graph.mark_super_leaves(MarkingRuleSet(False, False, False, False), overrides)
    return graph


@settings(max_examples=40, deadline=None)
@given(random_marked_graph(), st.randoms(use_true_random=False))
def test_super_leaves_equal_brute_force_for_all_roots(graph, rnd):
    refs = list(graph.nodes)
    excluded = set(rnd.sample(refs, min(len(refs), 3)))
    for root in refs:
        if graph.nodes[root].node_type == NodeType.ROOT:
            continue
        assert graph.subtree_super_leaves(root, excluded) == \
            brute_super_leaves(graph, root, excluded)


# -- mark_super_leaves ------------------------------------------------------------


def test_mark_default_rules(demo_graph):
    marked = {r for r, n in demo_graph.nodes.items() if n.is_super_leaf}
    for r in marked:
        assert demo_graph.nodes[r].node_type not in (
            NodeType.SECTION, NodeType.ROOT, NodeType.SEE_MORE)
    # rule-by-rule on the permit guide
    assert ref("permit-guide", "N1a") in marked     # ordinary leaf
    assert ref("permit-guide", "N2") in marked      # condition group
    assert ref("permit-guide", "N3") in marked      # sequence
    assert ref("permit-guide", "N4") in marked      # table
    assert ref("permit-guide", "N1") not in marked  # section
    assert ref("permit-guide", "N4v1") not in marked


def test_mark_empty_rules_single_override(chain_graph):
    count = chain_graph.mark_super_leaves(
        MarkingRuleSet(False, False, False, False), {ref("d1", "G2"): True})
    assert count == 1
    assert chain_graph.subtree_super_leaves(ref("d1", "root")) == [ref("d1", "G2")]


def test_mark_idempotent(chain_graph):
    rules = MarkingRuleSet()
    first = chain_graph.mark_super_leaves(rules)
    state = chain_graph.to_json()
    second = chain_graph.mark_super_leaves(rules)
    assert first == second
    assert chain_graph.to_json() == state


def test_mark_unknown_override(chain_graph):
    with pytest.raises(UnknownOverrideRefError):
        chain_graph.mark_super_leaves(overrides={ref("d1", "nope"): True})


# -- goal_context ---------------------------------------------------------------------


def test_context_domain_root(demo_graph):
    root = demo_graph.domains["public-services"]
    context = demo_graph.goal_context(root)
    assert context.path_from_root == [root]
    assert context.parent is None
    assert context.siblings == []


def test_context_sequence_step(demo_graph):
    step = ref("permit-guide", "N3s2")
    context = demo_graph.goal_context(step)
    assert context.parent == ref("permit-guide", "N3")
    assert context.siblings == [ref("permit-guide", "N3s1"), ref("permit-guide", "N3s3")]
    assert context.path_from_root[0] == demo_graph.domains["public-services"]
    assert context.path_from_root[-1] == step


def test_context_includes_see_more_sibling(demo_graph):
    goal = ref("permit-guide", "N6a")
    context = demo_graph.goal_context(goal)
    assert ref("permit-guide", "N7") in context.siblings


# -- connected_docs ----------------------------------------------------------------------


def test_connected_none(demo_graph):
    assert demo_graph.connected_docs("herb-garden") == []
    assert demo_graph.connected_docs("warranty-terms") == []


def test_connected_single_and_dedup(demo_graph, linked_pair_graph):
    assert demo_graph.connected_docs("permit-guide") == ["fee-schedule"]
    assert linked_pair_graph.connected_docs("docA") == ["docB"]
    # a second see_more to the same target does not duplicate
    doc_a = linked_pair_graph
    see = ref("docA", "MA2")
    doc_a.nodes[see] = Node(see, NodeType.SEE_MORE, "again", {"linked_node": "docB#LB"})
    doc_a.parent[see] = ref("docA", "root")
    doc_a.children[ref("docA", "root")].append(see)
    doc_a.link_edges.append((see, ref("docB", "LB")))
    assert doc_a.connected_docs("docA") == ["docB"]


def test_connected_directional(linked_pair_graph):
    assert linked_pair_graph.connected_docs("docA") == ["docB"]
    assert linked_pair_graph.connected_docs("docB") == []


# -- serialization ---------------------------------------------------------------------------


def test_json_round_trip_byte_identical(demo_graph):
    text = demo_graph.to_json()
    again = DocumentGraph.from_json(text)
    assert again.to_json() == text
    assert again.validate().ok
    assert again.connected_docs("permit-guide") == ["fee-schedule"]
