import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from docdialog.bundled import load_bundled_graph
from docdialog.graph import build_graph
from docdialog.ingest import DocumentIR, IRNode


@pytest.fixture(scope="session")
def demo_graph():
    return load_bundled_graph()


def chain_doc():
    """One document: root section -> section S -> three ordinary leaves."""
    root = IRNode("root", "section", "Guide", children=[
        IRNode("S", "section", "Overview", children=[
            IRNode("G1", "ordinary", "First paragraph of plain text."),
            IRNode("G2", "ordinary", "Second paragraph of plain text."),
            IRNode("G3", "ordinary", "Third paragraph of plain text."),
        ]),
    ])
    return DocumentIR("d1", "Guide", root)


@pytest.fixture()
def chain_graph():
    graph = build_graph([chain_doc()], {"d1": "demo"})
    graph.mark_super_leaves()
    return graph


def linked_pair_docs():
    """docA has one leaf and a see_more to docB; docB has one leaf."""
    doc_a = DocumentIR("docA", "Doc A", IRNode("root", "section", "Doc A", children=[
        IRNode("LA", "ordinary", "The only paragraph in document A."),
        IRNode("MA", "see_more", "See document B.", {"linked_node": "docB#root"}),
    ]))
    doc_b = DocumentIR("docB", "Doc B", IRNode("root", "section", "Doc B", children=[
        IRNode("LB", "ordinary", "The only paragraph in document B."),
    ]))
    return [doc_a, doc_b]


@pytest.fixture()
def linked_pair_graph():
    graph = build_graph(linked_pair_docs(), {"docA": "demo", "docB": "demo"})
    graph.mark_super_leaves()
    return graph


# -- acceptance summary: one line per criterion --------------------------------

_acceptance = []


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py" in report.nodeid:
        _acceptance.append((report.nodeid.split("::")[-1], report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for name, outcome in _acceptance:
        mark = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"[{mark}] {name}")
