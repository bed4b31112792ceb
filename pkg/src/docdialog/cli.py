"""Batch command-line entry points for the whole pipeline.

Exit codes: 0 success, 1 validation or runtime failure, 2 usage error.
All randomness is controlled by --seed. The store path may be overridden
with the DOCDIALOG_STORE environment variable.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .api import ServiceConfig, load_flows_file, serve
from .bundled import DOC_DOMAINS, bundled_doc_paths
from .errors import ToolkitError
from .flows import (
    DEFAULT_RATES,
    FlowParams,
    TransitionRates,
    flows_to_jsonl,
    generate_batch,
)
from .graph import DocumentGraph, MarkingRuleSet, NodeRef, build_graph, canonical_json
from .ingest import parse_document_file, rank_documents, resolve_links
from .prompts import render_template
from .store import DialogStore, compute_stats, export_corpus, import_corpus, split_dataset


def _load_graph(path: str) -> DocumentGraph:
    return DocumentGraph.from_json(Path(path).read_text(encoding="utf-8"))


def _write(path: str, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8")


def _parse_rates(text: str, boost: float) -> TransitionRates:
    parts = [float(x) for x in text.split(",")]
    if len(parts) != 3:
        raise ValueError("rates must be three comma-separated numbers")
    return TransitionRates(parts[0], parts[1], parts[2], out_jump_boost=boost)


def _source_paths(args) -> list[str]:
    if args.bundled:
        return [str(p) for p in bundled_doc_paths()]
    return args.sources


def cmd_ingest(args) -> int:
    docs = [parse_document_file(p) for p in _source_paths(args)]
    if args.bundled:
        assignments = dict(DOC_DOMAINS)
    elif args.domains_file:
        assignments = json.loads(Path(args.domains_file).read_text(encoding="utf-8"))
    else:
        assignments = {doc.doc_id: args.domain for doc in docs}
    graph = build_graph(docs, assignments, solution_attachment=args.solution_attachment)
    _write(args.out, graph.to_json() + "\n")
    report = resolve_links(graph)
    print(f"ingested {len(docs)} documents, {len(graph.nodes)} nodes; "
          f"links resolved={report.resolved} dangling={len(report.dangling)}")
    return 0


def cmd_validate(args) -> int:
    graph = _load_graph(args.graph)
    report = graph.validate()
    if args.format == "json":
        payload = [{"ref": str(v.ref), "rule": v.rule, "detail": v.detail}
                   for v in report.violations]
        print(canonical_json(payload))
    else:
        for violation in report.violations:
            print(str(violation), file=sys.stderr)
        print(f"{len(report.violations)} violation(s)")
    return 0 if report.ok else 1


def cmd_rank(args) -> int:
    docs = [parse_document_file(p) for p in _source_paths(args)]
    ranked = rank_documents(docs, args.w_richness, args.w_links)
    if args.format == "json":
        payload = [
            {"doc_id": doc_id, "structural_richness": s.structural_richness,
             "link_degree": s.link_degree, "score": s.score}
            for doc_id, s in ranked
        ]
        print(canonical_json(payload))
    else:
        for doc_id, s in ranked:
            print(f"{s.score:8.2f}  richness={s.structural_richness}  links={s.link_degree}  {doc_id}")
    return 0


def cmd_mark(args) -> int:
    graph = _load_graph(args.graph)
    rules = MarkingRuleSet(
        ordinary_leaves=not args.no_ordinary,
        table_roots=not args.no_tables,
        sequence_roots=not args.no_sequences,
        condition_groups=not args.no_conditions,
    )
    overrides: dict[NodeRef, bool] = {}
    if args.overrides:
        raw = json.loads(Path(args.overrides).read_text(encoding="utf-8"))
        overrides = {NodeRef.parse(k): bool(v) for k, v in raw.items()}
    count = graph.mark_super_leaves(rules, overrides)
    _write(args.out or args.graph, graph.to_json() + "\n")
    print(f"marked {count} super-leaf node(s)")
    return 0


def cmd_gen_flows(args) -> int:
    graph = _load_graph(args.graph)
    params = FlowParams(
        rates=_parse_rates(args.rates, args.boost),
        n_goals=args.n_goals,
        seed=0,
        start_doc=args.start_doc,
    )
    result = generate_batch(graph, params, args.count, args.seed, locale=args.locale)
    _write(args.out, flows_to_jsonl(result.flows))
    for index, code, message in result.errors:
        print(f"flow {index} failed: {code}: {message}", file=sys.stderr)
    print(f"wrote {len(result.flows)} flow(s) to {args.out}")
    return 0 if not result.errors else 1


def cmd_gen_prompts(args) -> int:
    flows = load_flows_file(args.flows)
    rerendered = []
    for flow in flows:
        goals = []
        for goal in flow.goals:
            slots = {name: slot.text for name, slot in goal.prompt.slots.items()}
            goal.prompt.guideline_text = render_template(
                goal.prompt.pattern, slots, args.locale, template_dir=args.template_dir)
            goals.append(goal)
        flow.goals = goals
        rerendered.append(flow)
    _write(args.out or args.flows, flows_to_jsonl(rerendered))
    print(f"re-rendered prompts for {len(rerendered)} flow(s) in locale {args.locale!r}")
    return 0


def _store_path(args) -> str:
    return os.environ.get("DOCDIALOG_STORE", args.store)


def cmd_serve(args) -> int:
    graph = _load_graph(args.graph)
    flows = load_flows_file(args.flows)
    config = ServiceConfig.from_file(args.config) if args.config else None
    serve(args.bind, graph, flows, _store_path(args), config, static_dir=args.static_dir)
    return 0


def cmd_stats(args) -> int:
    graph = _load_graph(args.graph)
    if args.corpus:
        dialogs, _splits = import_corpus(Path(args.corpus).read_text(encoding="utf-8"))
    else:
        store = DialogStore(_store_path(args), [], graph)
        dialogs = store.all_dialogs()
        store.close()
    report = compute_stats(dialogs, graph)
    if args.format == "json":
        print(canonical_json(report.to_dict()))
    else:
        for key, value in report.to_dict().items():
            print(f"{key}: {value}")
    return 0


def cmd_split(args) -> int:
    dialogs, _ = import_corpus(Path(args.corpus).read_text(encoding="utf-8"))
    ratios = tuple(float(x) for x in args.ratios.split(","))
    splits = split_dataset(dialogs, ratios, args.seed)  # type: ignore[arg-type]
    if args.out:
        _write(args.out, canonical_json(splits) + "\n")
    print(canonical_json({k: len(v) for k, v in splits.items()}))
    return 0


def cmd_export(args) -> int:
    graph = _load_graph(args.graph)
    flows = load_flows_file(args.flows) if args.flows else []
    store = DialogStore(_store_path(args), flows, graph)
    dialogs = store.all_dialogs()
    store.close()
    ratios = tuple(float(x) for x in args.ratios.split(","))
    splits = split_dataset(dialogs, ratios, args.seed)  # type: ignore[arg-type]
    _write(args.out, export_corpus(dialogs, splits))
    print(f"exported {len(dialogs)} dialog(s) to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="docdialog",
        description="Document-grounded dialog collection toolkit.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse sources and build a graph JSON file")
    p.add_argument("sources", nargs="*", help=".docmk or .docir.json files")
    p.add_argument("--bundled", action="store_true", help="use the bundled demo corpus")
    p.add_argument("--domain", default="default", help="domain for all docs")
    p.add_argument("--domains-file", help="JSON mapping doc_id -> domain")
    p.add_argument("--solution-attachment", choices=["child", "sibling"], default="child")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_ingest)

    p = sub.add_parser("validate", help="report graph invariant violations")
    p.add_argument("--graph", required=True)
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("rank", help="score documents by structural richness and links")
    p.add_argument("sources", nargs="*")
    p.add_argument("--bundled", action="store_true")
    p.add_argument("--w-richness", type=float, default=1.0)
    p.add_argument("--w-links", type=float, default=1.0)
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.set_defaults(fn=cmd_rank)

    p = sub.add_parser("mark", help="recompute super-leaf goal eligibility")
    p.add_argument("--graph", required=True)
    p.add_argument("--out", help="default: rewrite --graph in place")
    p.add_argument("--overrides", help="JSON mapping 'doc#node' -> bool")
    p.add_argument("--no-ordinary", action="store_true")
    p.add_argument("--no-tables", action="store_true")
    p.add_argument("--no-sequences", action="store_true")
    p.add_argument("--no-conditions", action="store_true")
    p.set_defaults(fn=cmd_mark)

    p = sub.add_parser("gen-flows", help="generate a batch of dialog flows")
    p.add_argument("--graph", required=True)
    p.add_argument("--out", required=True, help="JSONL file, one flow object per line")
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rates", default=f"{DEFAULT_RATES.follow_up},{DEFAULT_RATES.in_jump},{DEFAULT_RATES.out_jump}")
    p.add_argument("--boost", type=float, default=DEFAULT_RATES.out_jump_boost)
    p.add_argument("--n-goals", type=int, default=5)
    p.add_argument("--start-doc", help="fix the start document (default: sampled per flow)")
    p.add_argument("--locale", default="en")
    p.set_defaults(fn=cmd_gen_flows)

    p = sub.add_parser("gen-prompts", help="re-render prompt guidelines from stored slots")
    p.add_argument("--flows", required=True)
    p.add_argument("--out", help="default: rewrite --flows in place")
    p.add_argument("--locale", default="en")
    p.add_argument("--template-dir", help="directory with <locale>.json template files")
    p.set_defaults(fn=cmd_gen_prompts)

    p = sub.add_parser("serve", help="run the collection HTTP service")
    p.add_argument("--bind", default="127.0.0.1:8470")
    p.add_argument("--graph", required=True)
    p.add_argument("--flows", required=True)
    p.add_argument("--store", default="./dialog-store")
    p.add_argument("--config", help="JSON service config (tokens, anonymous access)")
    p.add_argument("--static-dir", help="serve a built UI from this directory under /ui")
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("stats", help="corpus statistics report")
    p.add_argument("--graph", required=True)
    p.add_argument("--store", default="./dialog-store")
    p.add_argument("--corpus", help="read an exported .dialogs.jsonl instead of a store")
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.set_defaults(fn=cmd_stats)

    p = sub.add_parser("split", help="partition an exported corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--ratios", default="0.70,0.10,0.20")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write the split membership JSON here")
    p.set_defaults(fn=cmd_split)

    p = sub.add_parser("export", help="export the store as a split .dialogs.jsonl corpus")
    p.add_argument("--graph", required=True)
    p.add_argument("--store", default="./dialog-store")
    p.add_argument("--flows", help="flow file the store was collected against")
    p.add_argument("--ratios", default="0.70,0.10,0.20")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_export)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ToolkitError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
