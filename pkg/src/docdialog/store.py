"""Dialog persistence and the collection protocol.

One writer plays both roles and works a flow's goals strictly in order:
turns alternate starting with the user, every turn carries an act label
from the configured taxonomy plus grounding node references, goals are
completed or skipped one by one, and the dialog closes when none remain.

The store is an append-only event log (``events.jsonl``): every mutation
is one fsync'd JSON line, acknowledged only after it is durable, and
reopening the store replays the log (tolerating a torn trailing line from
a crash). A state snapshot is written every SNAPSHOT_EVERY events so
recovery does not replay the whole history. Turns are never mutated in
place; corrections append a new turn whose ``revises`` field points at the
superseded index. Operations are serialized by a store-wide lock, so
per-dialog ordering is guaranteed; reads see only acknowledged writes.

Corpus-level helpers (split_dataset, compute_stats, export/import) are
plain functions over Dialog values so they also work on data that never
touched a store.
"""

from __future__ import annotations

import json
import os
import re
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterable

from .errors import (
    AlreadyClosedError,
    BadRatiosError,
    DanglingGroundingError,
    DialogClosedError,
    FlowAlreadyClaimedError,
    NotActiveError,
    OpenDialogPresentError,
    RoleOrderViolationError,
    UnknownActError,
    UnknownDialogError,
    UnknownFlowError,
    WrongGoalError,
)
from .flows import DialogFlow
from .graph import DocumentGraph, NodeRef, canonical_json
from .rng import SplitMix64

SNAPSHOT_EVERY = 100

_WORD_RE = re.compile(r"\w+", re.UNICODE)


def word_count(text: str) -> int:
    """Default turn-length metric: word-boundary segments."""
    return len(_WORD_RE.findall(text))


@dataclass
class ActTaxonomy:
    user_acts: list[str]
    system_acts: list[str]
    question_acts: list[str] = field(default_factory=list)

    def validate(self) -> None:
        if len(set(self.user_acts)) != len(self.user_acts) or \
                len(set(self.system_acts)) != len(self.system_acts):
            raise ValueError("act labels must be unique")
        extra = set(self.question_acts) - set(self.system_acts)
        if extra:
            raise ValueError(f"question_acts not in system_acts: {sorted(extra)}")

    def acts_for(self, role: str) -> list[str]:
        return self.user_acts if role == "user" else self.system_acts

    def to_dict(self) -> dict:
        return {"user_acts": self.user_acts, "system_acts": self.system_acts,
                "question_acts": self.question_acts}

    @classmethod
    def from_dict(cls, data: dict) -> "ActTaxonomy":
        tax = cls(list(data["user_acts"]), list(data["system_acts"]),
                  list(data.get("question_acts", [])))
        tax.validate()
        return tax


DEFAULT_TAXONOMY = ActTaxonomy(
    user_acts=["query", "answer_clarification", "chitchat_open", "chitchat_close"],
    system_acts=["answer", "clarify_choice", "verify_condition", "chitchat"],
    question_acts=["clarify_choice", "verify_condition"],
)


@dataclass
class Turn:
    index: int
    role: str
    utterance: str
    act: str
    grounding: list[NodeRef]
    goal_index: int
    revises: int | None = None
    ts: str = ""

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "role": self.role,
            "utterance": self.utterance,
            "act": self.act,
            "grounding": [str(ref) for ref in self.grounding],
            "goal_index": self.goal_index,
            "revises": self.revises,
            "ts": self.ts,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Turn":
        return cls(
            index=data["index"],
            role=data["role"],
            utterance=data["utterance"],
            act=data["act"],
            grounding=[NodeRef.parse(g) for g in data["grounding"]],
            goal_index=data["goal_index"],
            revises=data.get("revises"),
            ts=data.get("ts", ""),
        )


GOAL_STATUSES = ("pending", "active", "completed", "skipped")


@dataclass
class Dialog:
    dialog_id: str
    flow_id: str
    writer_id: str
    turns: list[Turn] = field(default_factory=list)
    goal_status: list[str] = field(default_factory=list)
    goal_nodes: list[NodeRef] = field(default_factory=list)
    flow_params: dict = field(default_factory=dict)
    created_at: str = ""

    @property
    def closed(self) -> bool:
        return bool(self.goal_status) and \
            all(s in ("completed", "skipped") for s in self.goal_status)

    @property
    def active_goal(self) -> int | None:
        for i, s in enumerate(self.goal_status):
            if s == "active":
                return i
        return None

    def effective_turns(self) -> list[Turn]:
        """Transcript with revisions applied: base turns in order, each
        replaced by its latest revision if any."""
        base = [t for t in self.turns if t.revises is None]
        latest = {t.index: t for t in base}
        for t in self.turns:
            if t.revises is not None:
                latest[t.revises] = t
        return [latest[t.index] for t in base]

    def to_dict(self) -> dict:
        return {
            "dialog_id": self.dialog_id,
            "flow_id": self.flow_id,
            "writer_id": self.writer_id,
            "created_at": self.created_at,
            "goal_status": list(self.goal_status),
            "goal_nodes": [str(ref) for ref in self.goal_nodes],
            "flow_params": self.flow_params,
            "turns": [t.to_dict() for t in self.turns],
            "empty": not self.turns,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Dialog":
        return cls(
            dialog_id=data["dialog_id"],
            flow_id=data["flow_id"],
            writer_id=data["writer_id"],
            turns=[Turn.from_dict(t) for t in data["turns"]],
            goal_status=list(data["goal_status"]),
            goal_nodes=[NodeRef.parse(g) for g in data["goal_nodes"]],
            flow_params=data.get("flow_params", {}),
            created_at=data.get("created_at", ""),
        )


class DialogStore:
    """Durable store for dialogs written against a fixed set of flows."""

    def __init__(self, root: str | Path, flows: Iterable[DialogFlow], graph: DocumentGraph,
                 taxonomy: ActTaxonomy | None = None,
                 clock: Callable[[], datetime] | None = None):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.graph = graph
        self.taxonomy = taxonomy or DEFAULT_TAXONOMY
        self.taxonomy.validate()
        self._clock = clock or (lambda: datetime.now(timezone.utc))
        self.flows: dict[str, DialogFlow] = {}
        self.flow_order: list[str] = []
        for flow in flows:
            self.flows[flow.flow_id] = flow
            self.flow_order.append(flow.flow_id)
        self._lock = threading.RLock()
        self._log_path = self.root / "events.jsonl"
        self._snap_dir = self.root / "snapshots"

        self.dialogs: dict[str, Dialog] = {}
        self.claims: dict[str, str] = {}  # flow_id -> dialog_id
        self.request_log: dict[str, dict] = {}  # request_id -> result payload
        self._event_count = 0
        self._recover()
        self._log_file = open(self._log_path, "ab")

    # -- durability ---------------------------------------------------------

    def _now(self) -> str:
        return self._clock().strftime("%Y-%m-%dT%H:%M:%SZ")

    def _recover(self) -> None:
        state_events = 0
        if self._snap_dir.is_dir():
            snaps = sorted(self._snap_dir.glob("snapshot-*.json"),
                           key=lambda p: int(p.stem.split("-")[1]))
            for snap in reversed(snaps):
                try:
                    data = json.loads(snap.read_text(encoding="utf-8"))
                except (OSError, json.JSONDecodeError):
                    continue
                self._load_state(data["state"])
                state_events = data["event_count"]
                break
        self._event_count = state_events
        if not self._log_path.exists():
            return
        with open(self._log_path, "rb") as fh:
            for i, raw in enumerate(fh):
                if i < state_events:
                    continue
                try:
                    event = json.loads(raw.decode("utf-8"))
                except (UnicodeDecodeError, json.JSONDecodeError):
                    break  # torn trailing write; acknowledged prefix only
                self._apply(event)
                self._event_count += 1

    def _append_event(self, event: dict) -> None:
        # durable first, then visible: a failed write must not leave
        # unacknowledged state in memory
        self._log_file.write((canonical_json(event) + "\n").encode("utf-8"))
        self._log_file.flush()
        os.fsync(self._log_file.fileno())
        self._apply(event)
        self._event_count += 1
        if self._event_count % SNAPSHOT_EVERY == 0:
            self._write_snapshot()

    def _write_snapshot(self) -> None:
        self._snap_dir.mkdir(exist_ok=True)
        payload = {"event_count": self._event_count, "state": self._dump_state()}
        path = self._snap_dir / f"snapshot-{self._event_count}.json"
        tmp = path.with_suffix(".tmp")
        tmp.write_text(canonical_json(payload), encoding="utf-8")
        tmp.replace(path)

    def _dump_state(self) -> dict:
        return {
            "dialogs": [d.to_dict() for d in self.dialogs.values()],
            "claims": dict(self.claims),
            "request_log": dict(self.request_log),
        }

    def _load_state(self, state: dict) -> None:
        self.dialogs = {d["dialog_id"]: Dialog.from_dict(d) for d in state["dialogs"]}
        self.claims = dict(state["claims"])
        self.request_log = dict(state["request_log"])

    def close(self) -> None:
        self._log_file.close()

    # -- event application -----------------------------------------------------

    def _apply(self, event: dict) -> None:
        kind = event["type"]
        if kind == "dialog_created":
            n_goals = event["n_goals"]
            dialog = Dialog(
                dialog_id=event["dialog_id"],
                flow_id=event["flow_id"],
                writer_id=event["writer_id"],
                goal_status=["active"] + ["pending"] * (n_goals - 1),
                goal_nodes=[NodeRef.parse(g) for g in event["goal_nodes"]],
                flow_params=event.get("flow_params", {}),
                created_at=event["ts"],
            )
            self.dialogs[dialog.dialog_id] = dialog
            self.claims[dialog.flow_id] = dialog.dialog_id
        elif kind == "turn_appended":
            dialog = self.dialogs[event["dialog_id"]]
            dialog.turns.append(Turn.from_dict(event["turn"]))
        elif kind == "goal_status_set":
            dialog = self.dialogs[event["dialog_id"]]
            dialog.goal_status[event["goal_index"]] = event["status"]
            if event.get("next_active") is not None:
                dialog.goal_status[event["next_active"]] = "active"
        else:
            raise ValueError(f"unknown event type: {kind!r}")
        request_id = event.get("request_id")
        if request_id:
            self.request_log[request_id] = event.get("result", {})

    # -- operations ---------------------------------------------------------------

    def seen_request(self, request_id: str | None) -> dict | None:
        if not request_id:
            return None
        with self._lock:
            return self.request_log.get(request_id)

    def create_dialog(self, flow_id: str, writer_id: str) -> str:
        """Claim a flow for a writer; re-entrant for the same writer."""
        with self._lock:
            if flow_id not in self.flows:
                raise UnknownFlowError(f"unknown flow: {flow_id}")
            existing = self.claims.get(flow_id)
            if existing is not None:
                dialog = self.dialogs[existing]
                if dialog.writer_id != writer_id:
                    raise FlowAlreadyClaimedError(
                        f"flow {flow_id} already claimed by {dialog.writer_id!r}")
                return existing
            flow = self.flows[flow_id]
            dialog_id = f"d{len(self.dialogs):05d}"
            self._append_event({
                "type": "dialog_created",
                "dialog_id": dialog_id,
                "flow_id": flow_id,
                "writer_id": writer_id,
                "n_goals": len(flow.goals),
                "goal_nodes": [str(g.node) for g in flow.goals],
                "flow_params": flow.to_dict()["params"],
                "ts": self._now(),
            })
            return dialog_id

    def next_flow(self, writer_id: str) -> str | None:
        """FIFO flow assignment: the writer's open dialog if any, else the
        least-recently-created unclaimed flow, atomically claimed."""
        with self._lock:
            for dialog in self.dialogs.values():
                if dialog.writer_id == writer_id and not dialog.closed:
                    return dialog.flow_id
            for flow_id in self.flow_order:
                if flow_id not in self.claims:
                    self.create_dialog(flow_id, writer_id)
                    return flow_id
            return None

    def dialog(self, dialog_id: str) -> Dialog:
        with self._lock:
            try:
                return self.dialogs[dialog_id]
            except KeyError:
                raise UnknownDialogError(f"unknown dialog: {dialog_id}") from None

    def _validate_turn(self, dialog: Dialog, turn: Turn) -> None:
        if dialog.closed:
            raise DialogClosedError(f"dialog {dialog.dialog_id} is closed")
        if turn.role not in ("user", "system"):
            raise RoleOrderViolationError(f"unknown role {turn.role!r}")
        if turn.revises is not None:
            effective = {t.index: t for t in dialog.turns if t.revises is None}
            if turn.revises not in effective:
                raise WrongGoalError(f"revision of unknown turn {turn.revises}")
            target = effective[turn.revises]
            if turn.role != target.role:
                raise RoleOrderViolationError("revision must keep the original role")
            if turn.goal_index != target.goal_index:
                raise WrongGoalError("revision must keep the original goal")
        else:
            position = sum(1 for t in dialog.turns if t.revises is None)
            expected = "user" if position % 2 == 0 else "system"
            if turn.role != expected:
                raise RoleOrderViolationError(
                    f"turn {position} must be {expected!r}, got {turn.role!r}")
            if turn.goal_index != dialog.active_goal:
                raise WrongGoalError(
                    f"goal {turn.goal_index} is not active (active: {dialog.active_goal})")
        if turn.act not in self.taxonomy.acts_for(turn.role):
            raise UnknownActError(f"act {turn.act!r} not in {turn.role} taxonomy")
        for ref in turn.grounding:
            if ref not in self.graph.nodes:
                raise DanglingGroundingError(f"grounding node does not exist: {ref}")

    def append_turn(self, dialog_id: str, role: str, utterance: str, act: str,
                    grounding: list[NodeRef], goal_index: int,
                    revises: int | None = None, request_id: str | None = None) -> int:
        with self._lock:
            prior = self.seen_request(request_id)
            if prior is not None:
                return prior["turn_index"]
            dialog = self.dialog(dialog_id)
            turn = Turn(
                index=len(dialog.turns),
                role=role,
                utterance=utterance,
                act=act,
                grounding=list(grounding),
                goal_index=goal_index,
                revises=revises,
                ts=self._now(),
            )
            self._validate_turn(dialog, turn)
            event = {
                "type": "turn_appended",
                "dialog_id": dialog_id,
                "turn": turn.to_dict(),
            }
            if request_id:
                event["request_id"] = request_id
                event["result"] = {"turn_index": turn.index}
            self._append_event(event)
            return turn.index

    def set_goal_status(self, dialog_id: str, goal_index: int, status: str,
                        request_id: str | None = None) -> int | None:
        """Complete the active goal or skip a not-yet-worked goal; returns
        the next active goal index, or None when the dialog closes."""
        with self._lock:
            prior = self.seen_request(request_id)
            if prior is not None:
                return prior["next_active"]
            dialog = self.dialog(dialog_id)
            if status not in ("completed", "skipped"):
                raise NotActiveError(f"status must be completed or skipped, got {status!r}")
            if dialog.closed:
                raise AlreadyClosedError(f"dialog {dialog_id} is already closed")
            if goal_index < 0 or goal_index >= len(dialog.goal_status):
                raise NotActiveError(f"no goal {goal_index}")
            current = dialog.goal_status[goal_index]
            if status == "completed" and current != "active":
                raise NotActiveError(f"goal {goal_index} is {current}, not active")
            if status == "skipped" and current not in ("active", "pending"):
                raise NotActiveError(f"goal {goal_index} is {current}, cannot skip")

            statuses = list(dialog.goal_status)
            statuses[goal_index] = status
            next_active = None
            if current == "active":
                for i in range(goal_index + 1, len(statuses)):
                    if statuses[i] == "pending":
                        next_active = i
                        break
            else:
                next_active_now = dialog.active_goal
                next_active = next_active_now if next_active_now != goal_index else None
            event = {
                "type": "goal_status_set",
                "dialog_id": dialog_id,
                "goal_index": goal_index,
                "status": status,
                "next_active": next_active if current == "active" else None,
                "ts": self._now(),
            }
            if request_id:
                event["request_id"] = request_id
                event["result"] = {"next_active": next_active}
            self._append_event(event)
            return self.dialogs[dialog_id].active_goal

    def all_dialogs(self) -> list[Dialog]:
        with self._lock:
            return [self.dialogs[k] for k in sorted(self.dialogs)]


# -- corpus-level functions ---------------------------------------------------------


def split_dataset(dialogs: list[Dialog], ratios: tuple[float, float, float] = (0.70, 0.10, 0.20),
                  seed: int = 0) -> dict[str, list[str]]:
    """Dialog-level train/validation/test partition.

    Sizes are the ratio floors with the remainder assigned to train, so
    10 dialogs under 0.70/0.10/0.20 split exactly 7/1/2. Membership is a
    seeded shuffle; the result is a disjoint cover of the input.
    """
    if len(ratios) != 3 or any(r < 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise BadRatiosError(f"ratios must be 3 non-negative numbers summing to 1: {ratios!r}")
    ids = [d.dialog_id for d in dialogs]
    n = len(ids)
    n_val = int(n * ratios[1])
    n_test = int(n * ratios[2])
    n_train = n - n_val - n_test
    rng = SplitMix64(seed)
    shuffled = list(ids)
    rng.shuffle(shuffled)
    return {
        "train": shuffled[:n_train],
        "validation": shuffled[n_train:n_train + n_val],
        "test": shuffled[n_train + n_val:],
    }


@dataclass
class StatsReport:
    n_dialogs: int
    n_turns: int
    n_dialogs_multidoc: int
    docs_per_dialog: float | None
    gr_per_user_turn: float | None
    gr_per_system_turn: float | None
    user_turn_len: float | None
    system_turn_len: float | None
    goals_by_type: dict[str, int]
    per_domain: dict[str, dict[str, int]]

    def to_dict(self) -> dict:
        return {
            "n_dialogs": self.n_dialogs,
            "n_turns": self.n_turns,
            "n_dialogs_multidoc": self.n_dialogs_multidoc,
            "docs_per_dialog": self.docs_per_dialog,
            "gr_per_user_turn": self.gr_per_user_turn,
            "gr_per_system_turn": self.gr_per_system_turn,
            "user_turn_len": self.user_turn_len,
            "system_turn_len": self.system_turn_len,
            "goals_by_type": dict(sorted(self.goals_by_type.items())),
            "per_domain": {k: dict(sorted(v.items())) for k, v in sorted(self.per_domain.items())},
        }


GOAL_TYPE_BUCKETS = {"ordinary": "ordinary", "table": "tables",
                     "sequence": "sequences", "condition": "conditions"}


def compute_stats(dialogs: list[Dialog], graph: DocumentGraph,
                  segmenter: Callable[[str], int] | None = None) -> StatsReport:
    """Corpus aggregates over effective turns.

    Goal-type counts cover completed goals only (each corresponds to a
    written dialog segment); turn lengths use the pluggable segmenter
    (default: word-boundary count); means over an empty denominator are
    reported as None.
    """
    seg = segmenter or word_count
    n_turns = 0
    user_turns = system_turns = 0
    user_gr = system_gr = 0
    user_len = system_len = 0
    multidoc = 0
    docs_total = 0
    goals_by_type = {bucket: 0 for bucket in GOAL_TYPE_BUCKETS.values()}

    for dialog in dialogs:
        docs: set[str] = set()
        for turn in dialog.effective_turns():
            for ref in turn.grounding:
                if ref not in graph.nodes:
                    raise DanglingGroundingError(f"grounding node does not exist: {ref}")
                docs.add(ref.doc_id)
            n_turns += 1
            if turn.role == "user":
                user_turns += 1
                user_gr += len(turn.grounding)
                user_len += seg(turn.utterance)
            else:
                system_turns += 1
                system_gr += len(turn.grounding)
                system_len += seg(turn.utterance)
        docs_total += len(docs)
        if len(docs) > 1:
            multidoc += 1
        for status, node in zip(dialog.goal_status, dialog.goal_nodes):
            if status == "completed":
                family = graph.node(node).family
                bucket = GOAL_TYPE_BUCKETS.get(family)
                if bucket is not None:
                    goals_by_type[bucket] += 1

    def mean(total: int, count: int) -> float | None:
        return total / count if count else None

    return StatsReport(
        n_dialogs=len(dialogs),
        n_turns=n_turns,
        n_dialogs_multidoc=multidoc,
        docs_per_dialog=mean(docs_total, len(dialogs)),
        gr_per_user_turn=mean(user_gr, user_turns),
        gr_per_system_turn=mean(system_gr, system_turns),
        user_turn_len=mean(user_len, user_turns),
        system_turn_len=mean(system_len, system_turns),
        goals_by_type=goals_by_type,
        per_domain=domain_structure_counts(graph),
    )


def domain_structure_counts(graph: DocumentGraph) -> dict[str, dict[str, int]]:
    """Per-domain document and structure counts (tables, sequences,
    condition groups, sections)."""
    from .graph import GROUP_TYPES, NodeType

    out: dict[str, dict[str, int]] = {}
    for domain in graph.domains:
        out[domain] = {"docs": 0, "tables": 0, "sequences": 0, "conditions": 0, "sections": 0}
    for doc_id in graph.doc_order:
        domain = graph.doc_domain[doc_id]
        counts = out[domain]
        counts["docs"] += 1
        for ref in graph.iter_preorder(graph.top_node(doc_id)):
            node_type = graph.nodes[ref].node_type
            if node_type == NodeType.TABLE:
                counts["tables"] += 1
            elif node_type == NodeType.SEQUENCE:
                counts["sequences"] += 1
            elif node_type == NodeType.SECTION:
                counts["sections"] += 1
            elif node_type in GROUP_TYPES:
                parent = graph.parent.get(ref)
                if parent is None or graph.nodes[parent].node_type not in GROUP_TYPES:
                    counts["conditions"] += 1
    return out


def export_corpus(dialogs: list[Dialog], splits: dict[str, list[str]]) -> str:
    """One canonical JSON record per line, split field on each; requires
    every dialog to be closed."""
    for dialog in dialogs:
        if not dialog.closed:
            raise OpenDialogPresentError(f"dialog {dialog.dialog_id} is still open")
    split_of = {}
    for name, ids in splits.items():
        for dialog_id in ids:
            split_of[dialog_id] = name
    lines = []
    for dialog in dialogs:
        record = dialog.to_dict()
        record["split"] = split_of.get(dialog.dialog_id)
        lines.append(canonical_json(record))
    return "\n".join(lines) + ("\n" if lines else "")


def import_corpus(text: str) -> tuple[list[Dialog], dict[str, list[str]]]:
    dialogs = []
    splits: dict[str, list[str]] = {"train": [], "validation": [], "test": []}
    for line in text.splitlines():
        if not line.strip():
            continue
        record = json.loads(line)
        dialogs.append(Dialog.from_dict(record))
        name = record.get("split")
        if name:
            splits.setdefault(name, []).append(record["dialog_id"])
    return dialogs, splits
