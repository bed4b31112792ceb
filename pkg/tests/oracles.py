"""Independent reference implementations used to check the library.

Nothing here may call the code path it verifies: paths come from a BFS
parent scan, super-leaf listings from a recursive walk over raw children
lists, stats from exported dict records, and the flow oracle is a direct
transcription of the agenda procedure sharing only the RNG primitive
(which is itself pinned by C-generated vectors).
"""

from __future__ import annotations

import re
from collections import deque

from docdialog.rng import SplitMix64

# --- graph oracles -------------------------------------------------------------


def bfs_path(graph, ancestor, node):
    """Shortest hierarchy path via BFS over children lists."""
    if ancestor == node:
        return [ancestor]
    prev = {ancestor: None}
    queue = deque([ancestor])
    while queue:
        cur = queue.popleft()
        for kid in graph.children.get(cur, []):
            if kid not in prev:
                prev[kid] = cur
                if kid == node:
                    path = [node]
                    while prev[path[-1]] is not None:
                        path.append(prev[path[-1]])
                    return list(reversed(path))
                queue.append(kid)
    return None


def brute_super_leaves(graph, root, excluded=()):
    """Recursive preorder filter over raw children lists."""
    out = []
    skip = set(excluded)

    def walk(ref):
        node = graph.nodes[ref]
        if node.properties.get("is_super_leaf") == "true" and ref not in skip:
            out.append(ref)
        for kid in graph.children.get(ref, []):
            walk(kid)

    walk(root)
    return out


def parent_counts(graph):
    """Scan children lists for per-node parent counts (multi-parent check)."""
    counts = {}
    for kids in graph.children.values():
        for kid in kids:
            counts[kid] = counts.get(kid, 0) + 1
    return counts


# --- stats oracle ----------------------------------------------------------------

_WORDS = re.compile(r"\w+", re.UNICODE)

_FAMILY = {
    "ordinary": "ordinary",
    "table": "tables", "object": "tables", "attribute": "tables", "value": "tables",
    "sequence": "sequences", "sequence_step": "sequences",
    "disjunction": "conditions", "conjunction": "conditions", "negation": "conditions",
    "condition": "conditions", "solution": "conditions",
}


def _effective(record):
    base = [t for t in record["turns"] if t.get("revises") is None]
    latest = {}
    for t in record["turns"]:
        if t.get("revises") is not None:
            latest[t["revises"]] = t
    return [latest.get(t["index"], t) for t in base]


def brute_stats(records, graph):
    """Recompute the full stats report from exported dialog dicts."""
    type_of = {str(ref): node.node_type.value for ref, node in graph.nodes.items()}
    n_turns = user_turns = system_turns = 0
    user_gr = system_gr = user_len = system_len = 0
    multidoc = docs_total = 0
    goals = {"ordinary": 0, "tables": 0, "sequences": 0, "conditions": 0}

    for record in records:
        docs = set()
        for turn in _effective(record):
            n_turns += 1
            for g in turn["grounding"]:
                docs.add(g.split("#", 1)[0])
            words = len(_WORDS.findall(turn["utterance"]))
            if turn["role"] == "user":
                user_turns += 1
                user_gr += len(turn["grounding"])
                user_len += words
            else:
                system_turns += 1
                system_gr += len(turn["grounding"])
                system_len += words
        docs_total += len(docs)
        if len(docs) > 1:
            multidoc += 1
        for status, node in zip(record["goal_status"], record["goal_nodes"]):
            if status == "completed":
                bucket = _FAMILY.get(type_of[node])
                if bucket:
                    goals[bucket] += 1

    def mean(total, count):
        return total / count if count else None

    return {
        "n_dialogs": len(records),
        "n_turns": n_turns,
        "n_dialogs_multidoc": multidoc,
        "docs_per_dialog": mean(docs_total, len(records)),
        "gr_per_user_turn": mean(user_gr, user_turns),
        "gr_per_system_turn": mean(system_gr, system_turns),
        "user_turn_len": mean(user_len, user_turns),
        "system_turn_len": mean(system_len, system_turns),
        "goals_by_type": goals,
    }


# --- trace replay audit -------------------------------------------------------------


def replay_trace(trace):
    """Re-execute every push/pop against a plain list; raises on mismatch."""
    stack = []
    for op in trace:
        if op["op"] == "push":
            stack.append(op["node"])
        elif op["op"] == "pop":
            popped = stack.pop()
            assert popped == op["node"], f"trace pop {op['node']} but stack had {popped}"
    return stack


# --- independent agenda-procedure oracle -----------------------------------------------

_TABLEY = ("table", "object", "attribute", "value")
_SEQY = ("sequence", "sequence_step")
_GROUPY = ("disjunction", "conjunction", "negation")
_CONDY = _GROUPY + ("condition", "solution")


def _descendants_typed(graph, root, type_name):
    out = []

    def walk(ref):
        if graph.nodes[ref].node_type.value == type_name:
            out.append(ref)
        for kid in graph.children.get(ref, []):
            walk(kid)

    walk(root)
    return out


def _solution_for(graph, group):
    sols = _descendants_typed(graph, group, "solution")
    if sols:
        return sols[0]
    parent = graph.parent.get(group)
    if graph.solution_attachment == "sibling" and parent is not None:
        for sib in graph.children.get(parent, []):
            if sib != group and graph.nodes[sib].node_type.value == "solution":
                return sib
    return None


def consume_prompt_draws(graph, goal, rng):
    """Replicate the documented prompt draw sequence; returns the pattern."""
    t = graph.nodes[goal].node_type.value
    if t == "ordinary":
        eligible = ["SPAN"]
    elif t in _TABLEY:
        eligible = ["TABLE_GENERAL"]
        if _descendants_typed(graph, goal, "object"):
            eligible.append("OBJECT_GENERAL")
        if _descendants_typed(graph, goal, "value"):
            eligible.append("VALUE_LOOKUP")
    elif t in _SEQY:
        eligible = ["SEQ_GENERAL"]
        if _descendants_typed(graph, goal, "sequence_step"):
            eligible.extend(["STEP_GENERAL", "STEP_DETAIL"])
    elif t in _CONDY:
        eligible = ["YES", "NO"]
        if _descendants_typed(graph, goal, "condition") and _solution_for(graph, goal):
            eligible.extend(["CONDITIONAL", "SOLUTION"])
    else:
        raise AssertionError(f"not a goal family: {t}")
    pattern = eligible[rng.randbelow(len(eligible))]
    slot_kind = {
        "OBJECT_GENERAL": "object",
        "VALUE_LOOKUP": "value",
        "STEP_GENERAL": "sequence_step",
        "STEP_DETAIL": "sequence_step",
        "SOLUTION": "condition",
    }.get(pattern)
    if slot_kind is not None:
        rng.randbelow(len(_descendants_typed(graph, goal, slot_kind)))
    return pattern


def reference_flow(graph, rates, n_goals, seed, start_doc, boost=1.0):
    """Direct transcription of the agenda procedure; returns (goals,
    transitions, patterns, trace, truncated)."""
    rng = SplitMix64(seed)
    trace = []
    stack = []
    visited = set()
    goals, transitions, patterns = [], [], []
    truncated = False

    def leaves(ref):
        return [r for r in brute_super_leaves(graph, ref) if r not in visited]

    def push_path(path):
        for ref in path:
            stack.append(ref)
            trace.append({"op": "push", "node": str(ref)})

    def pop():
        ref = stack.pop()
        trace.append({"op": "pop", "node": str(ref)})
        return ref

    def out_candidates(doc_id):
        docs = []
        targets = dict(graph.link_edges)
        for ref in sorted_preorder(graph, graph.doc_top[doc_id]):
            dst = targets.get(ref)
            if dst and dst.doc_id != doc_id and dst.doc_id in graph.doc_top \
                    and dst.doc_id not in docs and leaves(graph.doc_top[dst.doc_id]):
                docs.append(dst.doc_id)
        return docs

    def subtree_has_outlink(ref):
        targets = dict(graph.link_edges)
        return any(
            targets.get(r) is not None and targets[r].doc_id != r.doc_id
            for r in sorted_preorder(graph, ref)
        )

    doc = start_doc
    candidates = leaves(graph.doc_top[doc])
    goal = candidates[rng.randbelow(len(candidates))]
    trace.append({"op": "sample_goal", "node": str(goal), "candidates": len(candidates)})
    push_path(bfs_path(graph, graph.doc_top[doc], goal))

    transition = "initial"
    while True:
        pop()
        patterns.append(consume_prompt_draws(graph, goal, rng))
        goals.append(goal)
        transitions.append(transition)
        visited.add(goal)
        doc = goal.doc_id
        if len(goals) >= n_goals:
            break

        outs = out_candidates(doc)
        fl, inj, outj = rates
        if not outs:
            outj = 0.0
        elif subtree_has_outlink(goal):
            outj *= boost
        total = fl + inj + outj
        if total <= 0:
            truncated = True
            trace.append({"op": "truncated"})
            break
        u = rng.random() * total
        if u < fl:
            action = "follow_up"
        elif u < fl + inj:
            action = "in_jump"
        else:
            action = "out_jump"
        trace.append({"op": "action", "value": action})

        st = None
        if action == "follow_up":
            st = pop() if stack else None
        elif action == "in_jump":
            if stack:
                index = rng.randbelow(len(stack))
                st = stack[index]
                trace.append({"op": "jump_target", "node": str(st), "index": index})
                while len(stack) > index:
                    pop()
            else:
                st = None
        else:
            target = outs[rng.randbelow(len(outs))]
            trace.append({"op": "out_doc", "doc": target})
            st = graph.doc_top[target]

        candidates = leaves(st) if st is not None else []
        while not candidates and stack:
            st = pop()
            candidates = leaves(st)
        if not candidates:
            outs = out_candidates(doc)
            if not outs:
                truncated = True
                trace.append({"op": "truncated"})
                break
            target = outs[rng.randbelow(len(outs))]
            trace.append({"op": "out_doc", "doc": target, "fallback": True})
            st = graph.doc_top[target]
            candidates = leaves(st)
            action = "out_jump"

        goal = candidates[rng.randbelow(len(candidates))]
        trace.append({"op": "sample_goal", "node": str(goal), "candidates": len(candidates)})
        push_path(bfs_path(graph, st, goal))
        transition = action

    return goals, transitions, patterns, trace, truncated


def sorted_preorder(graph, root):
    out = []

    def walk(ref):
        out.append(ref)
        for kid in graph.children.get(ref, []):
            walk(kid)

    walk(root)
    return out
