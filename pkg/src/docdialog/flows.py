"""Agenda-stack dialog-flow generation over a document graph.

A flow is an ordered list of goals, each a super-leaf node paired with a
rendered prompt. Generation walks the graph with an agenda stack:

1. Sample an initial goal among the start document's unvisited super-leaves
   and push the path from the document top to the goal, top-of-stack being
   the goal itself (nodes nearer the top are closer to the latest goal).
2. Loop: pop the goal off the stack, generate its prompt, append it, then
   sample a transition:

   * ``follow_up``  — pop the next stack node; its subtree is the new
     sampling root, so the dialog stays near the last goal.
   * ``in_jump``    — pick a uniformly random stack position and pop down
     to and including it; the dialog returns to an earlier neighborhood.
   * ``out_jump``   — pick a linked document that still has unvisited
     super-leaves and restart from its top node.

   Then sample the next goal among the chosen root's unvisited
   super-leaves and push the root-to-goal path.

Visited goals are excluded from every sampling step, so goals never
repeat. When a chosen root has no eligible leaves the generator keeps
popping the agenda, then falls back to an out-jump, and if nothing remains
the flow is returned truncated (with ``truncated=True``) rather than
failing: partial flows are still usable for collection.

Transition probabilities may be boosted toward ``out_jump`` when the
current goal's subtree links out (see sample_transition); ``out_jump``
never fires when the current document has no linked documents with
eligible leaves.

Everything is driven by one SplitMix64 stream per flow, so a (graph,
params) pair fully determines the flow, its trace, and its serialized
bytes. Draw order is documented on each function and is part of the
contract. Flows in a batch use counter-split child seeds and never share
RNG state, so batches may safely run flows in parallel.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import InvalidRatesError, NoSuperLeavesError, UnknownDocError
from .graph import DocumentGraph, NodeRef, canonical_json
from .prompts import Prompt, gen_prompt
from .rng import SplitMix64, split

TRANSITIONS = ("follow_up", "in_jump", "out_jump")


@dataclass
class TransitionRates:
    follow_up: float
    in_jump: float
    out_jump: float
    out_jump_boost: float = 1.0

    def validate(self) -> None:
        triple = (self.follow_up, self.in_jump, self.out_jump)
        if any(r < 0 for r in triple):
            raise InvalidRatesError(f"rates must be non-negative: {triple}")
        if abs(sum(triple) - 1.0) > 1e-9:
            raise InvalidRatesError(f"rates must sum to 1, got {sum(triple)!r}")
        if self.out_jump_boost < 1.0:
            raise InvalidRatesError(f"out_jump_boost must be >= 1, got {self.out_jump_boost!r}")


DEFAULT_RATES = TransitionRates(0.6, 0.25, 0.15, out_jump_boost=2.0)


@dataclass
class FlowParams:
    rates: TransitionRates
    n_goals: int
    seed: int
    start_doc: str | None = None

    def validate(self) -> None:
        self.rates.validate()
        if self.n_goals < 1:
            raise InvalidRatesError(f"n_goals must be >= 1, got {self.n_goals}")


@dataclass
class Goal:
    node: NodeRef
    prompt: Prompt
    transition_used: str


@dataclass
class DialogFlow:
    flow_id: str
    params: FlowParams
    goals: list[Goal]
    truncated: bool = False
    trace: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "flow_id": self.flow_id,
            "params": {
                "rates": {
                    "follow_up": self.params.rates.follow_up,
                    "in_jump": self.params.rates.in_jump,
                    "out_jump": self.params.rates.out_jump,
                    "out_jump_boost": self.params.rates.out_jump_boost,
                },
                "n_goals": self.params.n_goals,
                "seed": self.params.seed,
                "start_doc": self.params.start_doc,
            },
            "goals": [
                {
                    "node": {"doc_id": g.node.doc_id, "node_id": g.node.node_id},
                    "prompt": g.prompt.to_dict(),
                    "pattern": g.prompt.pattern,
                    "transition_used": g.transition_used,
                }
                for g in self.goals
            ],
            "truncated": self.truncated,
            "trace": self.trace,
        }

    def to_json(self) -> str:
        return canonical_json(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "DialogFlow":
        params = FlowParams(
            rates=TransitionRates(**data["params"]["rates"]),
            n_goals=data["params"]["n_goals"],
            seed=data["params"]["seed"],
            start_doc=data["params"]["start_doc"],
        )
        goals = [
            Goal(
                NodeRef(g["node"]["doc_id"], g["node"]["node_id"]),
                Prompt.from_dict(g["prompt"]),
                g["transition_used"],
            )
            for g in data["goals"]
        ]
        return cls(data["flow_id"], params, goals, data.get("truncated", False),
                   data.get("trace", []))

    @classmethod
    def from_json(cls, text: str) -> "DialogFlow":
        return cls.from_dict(json.loads(text))


def adjusted_weights(rates: TransitionRates, goal_has_outlink: bool,
                     out_jump_available: bool = True) -> tuple[float, float, float]:
    """Transition weights after availability and boost adjustments.

    When no linked document is reachable the out_jump mass is redistributed
    proportionally onto follow_up and in_jump (a single-document graph is
    the degenerate case). Otherwise, a goal whose subtree links out has its
    out_jump mass multiplied by the boost. Weights are returned
    unnormalized; the categorical draw normalizes.
    """
    fl, inj, outj = rates.follow_up, rates.in_jump, rates.out_jump
    if not out_jump_available:
        return (fl, inj, 0.0)
    if goal_has_outlink:
        outj *= rates.out_jump_boost
    return (fl, inj, outj)


def sample_transition(rng: SplitMix64, rates: TransitionRates, goal_has_outlink: bool,
                      out_jump_available: bool = True) -> str:
    """One categorical draw over follow_up / in_jump / out_jump."""
    rates.validate()
    weights = adjusted_weights(rates, goal_has_outlink, out_jump_available)
    if sum(weights) <= 0:
        raise InvalidRatesError("no transition has positive probability")
    return TRANSITIONS[rng.categorical(weights)]


class _Agenda:
    """Stack of candidate nodes; every push/pop lands in the trace."""

    def __init__(self, trace: list[dict]):
        self.items: list[NodeRef] = []
        self.trace = trace

    def __len__(self) -> int:
        return len(self.items)

    def push_path(self, path: list[NodeRef]) -> None:
        for ref in path:
            self.items.append(ref)
            self.trace.append({"op": "push", "node": str(ref)})

    def pop(self) -> NodeRef:
        ref = self.items.pop()
        self.trace.append({"op": "pop", "node": str(ref)})
        return ref


def generate_flow(graph: DocumentGraph, params: FlowParams, flow_id: str = "flow-00000",
                  locale: str = "en") -> DialogFlow:
    """Generate one dialog flow; deterministic in (graph, params).

    Draw order: [optional start-doc choice when params.start_doc is None];
    initial goal choice; then per appended goal: prompt draws (see
    gen_prompt), one transition draw, the transition's own draw (in_jump
    stack position or out_jump document choice), and the next goal choice.
    """
    params.validate()
    rng = SplitMix64(params.seed)
    trace: list[dict] = []

    start_doc = params.start_doc
    if start_doc is None:
        eligible = [d for d in graph.doc_order if graph.subtree_super_leaves(graph.top_node(d))]
        if not eligible:
            raise NoSuperLeavesError("no document has eligible super-leaves")
        start_doc = rng.choice(eligible)
        trace.append({"op": "sample_doc", "doc": start_doc, "candidates": len(eligible)})
    elif start_doc not in graph.doc_top:
        raise UnknownDocError(f"unknown start document: {start_doc}")

    visited: set[NodeRef] = set()
    agenda = _Agenda(trace)
    goals: list[Goal] = []
    truncated = False

    candidates = graph.subtree_super_leaves(graph.top_node(start_doc), visited)
    if not candidates:
        raise NoSuperLeavesError(f"document {start_doc!r} has no eligible super-leaves")
    goal = rng.choice(candidates)
    trace.append({"op": "sample_goal", "node": str(goal), "candidates": len(candidates)})
    agenda.push_path(graph.get_path(graph.top_node(start_doc), goal))

    transition = "initial"
    current_doc = start_doc

    while True:
        popped = agenda.pop()
        assert popped == goal
        prompt = gen_prompt(graph, goal, rng, locale=locale)
        goals.append(Goal(goal, prompt, transition))
        visited.add(goal)
        current_doc = goal.doc_id
        if len(goals) >= params.n_goals:
            break

        out_docs = _eligible_out_docs(graph, current_doc, visited)
        has_outlink = graph.has_outlink(goal)
        weights = adjusted_weights(params.rates, has_outlink, bool(out_docs))
        if sum(weights) <= 0:
            # only out_jump had mass and no linked document can continue
            truncated = True
            trace.append({"op": "truncated"})
            break
        action = TRANSITIONS[rng.categorical(weights)]
        trace.append({"op": "action", "value": action})

        st: NodeRef | None = None
        if action == "follow_up":
            st = agenda.pop() if len(agenda) else None
        elif action == "in_jump":
            if len(agenda):
                index = rng.randbelow(len(agenda))
                st = agenda.items[index]
                trace.append({"op": "jump_target", "node": str(st), "index": index})
                while len(agenda) > index:
                    agenda.pop()
            else:
                st = None
        else:  # out_jump
            doc = rng.choice(out_docs)
            trace.append({"op": "out_doc", "doc": doc})
            st = graph.top_node(doc)

        candidates = graph.subtree_super_leaves(st, visited) if st is not None else []

        # Exhaustion fallback: walk further down the agenda, then try any
        # linked document, else stop with a truncated flow.
        while not candidates and len(agenda):
            st = agenda.pop()
            candidates = graph.subtree_super_leaves(st, visited)
        if not candidates:
            out_docs = _eligible_out_docs(graph, current_doc, visited)
            if not out_docs:
                truncated = True
                trace.append({"op": "truncated"})
                break
            doc = rng.choice(out_docs)
            trace.append({"op": "out_doc", "doc": doc, "fallback": True})
            st = graph.top_node(doc)
            candidates = graph.subtree_super_leaves(st, visited)
            action = "out_jump"

        goal = rng.choice(candidates)
        trace.append({"op": "sample_goal", "node": str(goal), "candidates": len(candidates)})
        agenda.push_path(graph.get_path(st, goal))
        transition = action

    return DialogFlow(flow_id, FlowParams(params.rates, params.n_goals, params.seed, start_doc=params.start_doc),
                      goals, truncated=truncated, trace=trace)


def _eligible_out_docs(graph: DocumentGraph, doc_id: str, visited: set[NodeRef]) -> list[str]:
    """Linked documents that still contain unvisited super-leaves."""
    return [
        d for d in graph.connected_docs(doc_id)
        if graph.subtree_super_leaves(graph.top_node(d), visited)
    ]


@dataclass
class BatchResult:
    flows: list[DialogFlow]
    errors: list[tuple[int, str, str]] = field(default_factory=list)


def generate_batch(graph: DocumentGraph, params_template: FlowParams, count: int,
                   base_seed: int, locale: str = "en") -> BatchResult:
    """Generate ``count`` independent flows; flow i runs on split(base_seed, i).

    Per-flow failures are collected as (index, error code, message) and do
    not abort the batch.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    result = BatchResult(flows=[])
    for i in range(count):
        params = FlowParams(
            rates=params_template.rates,
            n_goals=params_template.n_goals,
            seed=split(base_seed, i),
            start_doc=params_template.start_doc,
        )
        try:
            result.flows.append(generate_flow(graph, params, flow_id=f"flow-{i:05d}", locale=locale))
        except Exception as exc:  # noqa: BLE001 - per-flow isolation is the contract
            code = getattr(exc, "code", type(exc).__name__)
            result.errors.append((i, code, str(exc)))
    return result


def flows_to_jsonl(flows: list[DialogFlow]) -> str:
    return "".join(flow.to_json() + "\n" for flow in flows)


def flows_from_jsonl(text: str) -> list[DialogFlow]:
    return [DialogFlow.from_json(line) for line in text.splitlines() if line.strip()]
