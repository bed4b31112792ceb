"""docdialog: build document graphs, generate agenda-based dialog flows,
and collect annotated document-grounded dialogs."""

from .graph import (
    Context,
    DocumentGraph,
    MarkingRuleSet,
    Node,
    NodeRef,
    NodeType,
    ValidationReport,
    build_graph,
)
from .ingest import (
    DocumentIR,
    IRNode,
    LinkReport,
    RankingScore,
    parse_document,
    parse_document_file,
    rank_documents,
    resolve_links,
)
from .flows import (
    DialogFlow,
    FlowParams,
    Goal,
    TransitionRates,
    generate_batch,
    generate_flow,
    sample_transition,
)
from .prompts import Prompt, gen_prompt, render_template, select_pattern
from .store import (
    ActTaxonomy,
    Dialog,
    DialogStore,
    StatsReport,
    Turn,
    compute_stats,
    export_corpus,
    import_corpus,
    split_dataset,
)
from .bundled import load_bundled_documents, load_bundled_graph

__version__ = "0.1.0"

__all__ = [
    "ActTaxonomy",
    "Context",
    "Dialog",
    "DialogFlow",
    "DialogStore",
    "DocumentGraph",
    "DocumentIR",
    "FlowParams",
    "Goal",
    "IRNode",
    "LinkReport",
    "MarkingRuleSet",
    "Node",
    "NodeRef",
    "NodeType",
    "Prompt",
    "RankingScore",
    "StatsReport",
    "TransitionRates",
    "Turn",
    "ValidationReport",
    "build_graph",
    "compute_stats",
    "export_corpus",
    "gen_prompt",
    "generate_batch",
    "generate_flow",
    "import_corpus",
    "load_bundled_documents",
    "load_bundled_graph",
    "parse_document",
    "parse_document_file",
    "rank_documents",
    "render_template",
    "resolve_links",
    "sample_transition",
    "select_pattern",
    "split_dataset",
]
