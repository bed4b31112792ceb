"""Goal-prompt rendering: pattern selection per structural family and
template-based guideline text.

A prompt is a writer-facing guideline built from the subtree below a goal
node. Tables get a general / per-object / value-lookup pattern, sequences a
general / per-step / step-detail pattern, condition groups one of
YES / NO / CONDITIONAL / SOLUTION, and ordinary text a span-answer pattern.
Templates live in locale-keyed JSON files (``templates/<locale>.json``);
the mechanism is locale-neutral, only an English set ships filled in.

All sampling goes through the caller's RNG so flow generation stays
deterministic. Draw order is part of the contract: select_pattern consumes
exactly one randbelow over the eligible patterns (listed in a fixed order),
then slot filling consumes one draw per sampled slot as documented on
gen_prompt.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import (
    EmptySubtreeError,
    MissingSlotError,
    MissingTemplateError,
    UnknownLocaleError,
    UnsupportedFamilyError,
)
from .graph import DocumentGraph, NodeRef, NodeType
from .rng import SplitMix64

TABLE_PATTERNS = ("TABLE_GENERAL", "OBJECT_GENERAL", "VALUE_LOOKUP")
SEQUENCE_PATTERNS = ("SEQ_GENERAL", "STEP_GENERAL", "STEP_DETAIL")
CONDITION_PATTERNS = ("YES", "NO", "CONDITIONAL", "SOLUTION")
ORDINARY_PATTERNS = ("SPAN",)
ALL_PATTERNS = TABLE_PATTERNS + SEQUENCE_PATTERNS + CONDITION_PATTERNS + ORDINARY_PATTERNS

PATTERN_FAMILY = {p: "table" for p in TABLE_PATTERNS}
PATTERN_FAMILY.update({p: "sequence" for p in SEQUENCE_PATTERNS})
PATTERN_FAMILY.update({p: "condition" for p in CONDITION_PATTERNS})
PATTERN_FAMILY.update({p: "ordinary" for p in ORDINARY_PATTERNS})

_PLACEHOLDER_RE = re.compile(r"\{([a-z_]+)\}")


@dataclass
class Slot:
    text: str
    node: NodeRef | None = None


@dataclass
class Prompt:
    pattern: str
    guideline_text: str
    slots: dict[str, Slot] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "pattern": self.pattern,
            "guideline_text": self.guideline_text,
            "slots": {
                name: {"text": s.text, "node": None if s.node is None else
                       {"doc_id": s.node.doc_id, "node_id": s.node.node_id}}
                for name, s in sorted(self.slots.items())
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Prompt":
        slots = {}
        for name, s in data.get("slots", {}).items():
            node = s.get("node")
            slots[name] = Slot(s["text"], None if node is None else NodeRef(node["doc_id"], node["node_id"]))
        return cls(data["pattern"], data["guideline_text"], slots)


def load_templates(locale: str, template_dir: str | Path | None = None) -> dict[str, str]:
    if template_dir is not None:
        path = Path(template_dir) / f"{locale}.json"
        if not path.exists():
            raise UnknownLocaleError(f"no template file for locale {locale!r} in {template_dir}")
        return json.loads(path.read_text(encoding="utf-8"))
    try:
        data = resources.files("docdialog").joinpath("templates", f"{locale}.json").read_text(encoding="utf-8")
    except FileNotFoundError:
        raise UnknownLocaleError(f"no template file for locale {locale!r}") from None
    return json.loads(data)


def render_template(pattern: str, slots: dict[str, str], locale: str = "en",
                    template_dir: str | Path | None = None) -> str:
    """Pure interpolation of ``{slot}`` placeholders; a placeholder without
    a matching slot raises rather than rendering blank."""
    templates = load_templates(locale, template_dir)
    if pattern not in templates:
        raise MissingTemplateError(f"no template for pattern {pattern!r} in locale {locale!r}")

    def fill(match: re.Match) -> str:
        name = match.group(1)
        if name not in slots:
            raise MissingSlotError(f"template for {pattern} needs slot {name!r}")
        return slots[name]

    return _PLACEHOLDER_RE.sub(fill, templates[pattern])


def _typed_descendants(graph: DocumentGraph, root: NodeRef, node_type: NodeType) -> list[NodeRef]:
    return [r for r in graph.iter_preorder(root) if graph.nodes[r].node_type == node_type]


def select_pattern(graph: DocumentGraph, goal: NodeRef, rng: SplitMix64) -> str:
    """Uniform draw over the patterns available for the goal's family.

    Availability guards keep prompts answerable: value lookup needs a value
    node, per-object and per-step patterns need an object or step, and
    CONDITIONAL/SOLUTION need at least one condition plus an associated
    solution. Exactly one randbelow draw is consumed.
    """
    node = graph.node(goal)
    family = node.family
    if family == "ordinary":
        eligible = list(ORDINARY_PATTERNS)
    elif family == "table":
        eligible = ["TABLE_GENERAL"]
        if _typed_descendants(graph, goal, NodeType.OBJECT):
            eligible.append("OBJECT_GENERAL")
        if _typed_descendants(graph, goal, NodeType.VALUE):
            eligible.append("VALUE_LOOKUP")
    elif family == "sequence":
        eligible = ["SEQ_GENERAL"]
        if _typed_descendants(graph, goal, NodeType.SEQUENCE_STEP):
            eligible.extend(["STEP_GENERAL", "STEP_DETAIL"])
    elif family == "condition":
        eligible = ["YES", "NO"]
        if _typed_descendants(graph, goal, NodeType.CONDITION) and \
                graph.associated_solution(goal) is not None:
            eligible.extend(["CONDITIONAL", "SOLUTION"])
    else:
        raise UnsupportedFamilyError(f"no prompt patterns for {family!r} node {goal}")
    return eligible[rng.randbelow(len(eligible))]


def gen_prompt(graph: DocumentGraph, goal: NodeRef, rng: SplitMix64,
               locale: str = "en", template_dir: str | Path | None = None) -> Prompt:
    """Select a pattern and fill its slots from the goal subtree.

    Slot draws, in order, after the select_pattern draw:
      VALUE_LOOKUP    one choice over value nodes (object/attribute derived)
      OBJECT_GENERAL  one choice over object nodes
      STEP_GENERAL / STEP_DETAIL  one choice over step nodes
      SOLUTION        one choice over condition nodes
      all others      no draws
    """
    node = graph.node(goal)
    pattern = select_pattern(graph, goal, rng)
    slots: dict[str, Slot] = {}

    if pattern == "TABLE_GENERAL":
        slots["table"] = Slot(node.text, goal)
    elif pattern == "OBJECT_GENERAL":
        objects = _typed_descendants(graph, goal, NodeType.OBJECT)
        obj = rng.choice(objects)
        slots["table"] = Slot(node.text, goal)
        slots["object"] = Slot(graph.nodes[obj].text, obj)
    elif pattern == "VALUE_LOOKUP":
        values = _typed_descendants(graph, goal, NodeType.VALUE)
        value = rng.choice(values)
        attribute = graph.parent[value]
        obj = graph.parent[attribute]
        slots["object"] = Slot(graph.nodes[obj].text, obj)
        slots["attribute"] = Slot(graph.nodes[attribute].text, attribute)
        slots["value"] = Slot(graph.nodes[value].text, value)
    elif pattern == "SEQ_GENERAL":
        slots["sequence"] = Slot(node.text, goal)
    elif pattern in ("STEP_GENERAL", "STEP_DETAIL"):
        steps = _typed_descendants(graph, goal, NodeType.SEQUENCE_STEP)
        step = rng.choice(steps)
        slots["sequence"] = Slot(node.text, goal)
        slots["step"] = Slot(graph.nodes[step].text, step)
    elif pattern in ("YES", "NO", "CONDITIONAL"):
        solution = graph.associated_solution(goal)
        subject = graph.nodes[solution] if solution is not None else node
        slots["subject"] = Slot(subject.text, subject.ref)
        if pattern in ("YES", "NO"):
            slots["verdict"] = Slot(pattern)
    elif pattern == "SOLUTION":
        conditions = _typed_descendants(graph, goal, NodeType.CONDITION)
        solution = graph.associated_solution(goal)
        if not conditions or solution is None:
            raise EmptySubtreeError(f"condition group {goal} has no conditions or solution")
        cond = rng.choice(conditions)
        slots["condition"] = Slot(graph.nodes[cond].text, cond)
        slots["solution"] = Slot(graph.nodes[solution].text, solution)
    elif pattern == "SPAN":
        if not node.text:
            raise EmptySubtreeError(f"ordinary goal {goal} has no text to span")
        slots["passage"] = Slot(node.text, goal)
    else:
        raise UnsupportedFamilyError(f"unhandled pattern {pattern!r}")

    guideline = render_template(pattern, {k: s.text for k, s in slots.items()},
                                locale, template_dir)
    return Prompt(pattern, guideline, slots)
