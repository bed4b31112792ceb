"""HTTP/JSON facade over the graph, flows, and dialog store.

Endpoints (all payloads carry a ``v`` schema-version field; errors are
``{code, message, detail}``):

    GET  /flows/next?writer_id=     current assignment for a writer (read-only)
    POST /flows/next                atomically claim the oldest unclaimed flow
    GET  /flows/{flow_id}           one flow with goals and prompts
    GET  /goals/{flow_id}/{idx}/context   goal context: root-to-goal path,
                                    neighbors, prompt, and subtree suggestions
    GET  /dialogs/{dialog_id}       dialog transcript and goal statuses
    POST /dialogs                   create (claim) a dialog for a flow
    POST /dialogs/{id}/turns        append a turn
    POST /dialogs/{id}/goals/{idx}/status   complete or skip a goal
    GET  /taxonomy                  configured act labels
    GET  /stats                     corpus statistics report
    GET  /export?seed=&ratios=      split and export the closed corpus (JSONL)

Mutating calls require a bearer token with the ``annotate`` capability and
accept a client-supplied ``request_id`` for idempotent retries. GET
endpoints never mutate; the claim is therefore a POST even though it is
the "next flow" query, and re-POSTing it for the same writer returns the
same assignment.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import Depends, FastAPI, Header, HTTPException, Request
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles

from . import errors as err
from .flows import DialogFlow, flows_from_jsonl
from .graph import DocumentGraph, NodeRef
from .store import DialogStore, compute_stats, export_corpus, split_dataset

SCHEMA_VERSION = 1

# HTTP status per error code; anything unlisted maps to 400.
_STATUS_BY_CODE = {
    "UnknownFlow": 404,
    "UnknownDialog": 404,
    "UnknownRef": 404,
    "UnknownDoc": 404,
    "FlowAlreadyClaimed": 409,
    "DialogClosed": 409,
    "AlreadyClosed": 409,
    "OpenDialogPresent": 409,
    "RoleOrderViolation": 422,
    "UnknownAct": 422,
    "DanglingGrounding": 422,
    "WrongGoal": 422,
    "NotActive": 422,
    "BadRatios": 422,
}


@dataclass
class ApiSession:
    writer_id: str
    capabilities: set[str] = field(default_factory=lambda: {"annotate"})

    def can(self, capability: str) -> bool:
        return capability in self.capabilities or "admin" in self.capabilities


@dataclass
class ServiceConfig:
    """Token table plus store wiring; see serve()."""

    tokens: dict[str, ApiSession] = field(default_factory=dict)
    allow_anonymous: bool = False

    @classmethod
    def from_file(cls, path: str | Path) -> "ServiceConfig":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        tokens = {
            token: ApiSession(entry["writer_id"], set(entry.get("capabilities", ["annotate"])))
            for token, entry in data.get("tokens", {}).items()
        }
        return cls(tokens=tokens, allow_anonymous=data.get("allow_anonymous", False))


def _node_payload(graph: DocumentGraph, ref: NodeRef) -> dict:
    node = graph.node(ref)
    return {
        "doc_id": ref.doc_id,
        "node_id": ref.node_id,
        "type": node.node_type.value,
        "text": node.text,
        "is_super_leaf": node.is_super_leaf,
    }


def create_app(graph: DocumentGraph, store: DialogStore,
               config: ServiceConfig | None = None,
               static_dir: str | Path | None = None) -> FastAPI:
    config = config or ServiceConfig(allow_anonymous=True)
    app = FastAPI(title="docdialog collection service", version="0.1.0")

    def session_for(authorization: str | None, writer_id: str | None) -> ApiSession:
        if authorization and authorization.lower().startswith("bearer "):
            token = authorization[7:].strip()
            session = config.tokens.get(token)
            if session is None:
                raise HTTPException(status_code=401, detail="unknown token")
            return session
        if config.allow_anonymous and writer_id:
            return ApiSession(writer_id)
        raise HTTPException(status_code=401, detail="missing bearer token")

    def require_annotate(
        request: Request,
        authorization: str | None = Header(default=None),
    ) -> ApiSession:
        writer_id = request.query_params.get("writer_id")
        session = session_for(authorization, writer_id)
        if not session.can("annotate"):
            raise HTTPException(status_code=403, detail="annotate capability required")
        return session

    @app.exception_handler(err.ToolkitError)
    async def toolkit_error_handler(_request: Request, exc: err.ToolkitError):
        status = _STATUS_BY_CODE.get(exc.code, 400)
        return JSONResponse(
            status_code=status,
            content={"code": exc.code, "message": str(exc), "detail": {"v": SCHEMA_VERSION}},
        )

    def flow_payload(flow: DialogFlow) -> dict:
        return {"v": SCHEMA_VERSION, **flow.to_dict()}

    def assignment_payload(writer_id: str) -> dict:
        flow_id = None
        for dialog in store.all_dialogs():
            if dialog.writer_id == writer_id and not dialog.closed:
                flow_id = dialog.flow_id
                break
        if flow_id is None:
            return {"v": SCHEMA_VERSION, "assignment": None}
        dialog_id = store.claims[flow_id]
        return {
            "v": SCHEMA_VERSION,
            "assignment": {
                "flow": flow_payload(store.flows[flow_id]),
                "dialog_id": dialog_id,
                "dialog": dialog_payload(dialog_id),
            },
        }

    def dialog_payload(dialog_id: str) -> dict:
        dialog = store.dialog(dialog_id)
        payload = dialog.to_dict()
        payload["closed"] = dialog.closed
        payload["active_goal"] = dialog.active_goal
        payload["v"] = SCHEMA_VERSION
        return payload

    @app.get("/flows/next")
    def get_next_flow(writer_id: str):
        # read-only view of the writer's current assignment
        return assignment_payload(writer_id)

    @app.post("/flows/next")
    def claim_next_flow(session: ApiSession = Depends(require_annotate)):
        store.next_flow(session.writer_id)
        return assignment_payload(session.writer_id)

    @app.get("/flows/{flow_id}")
    def get_flow(flow_id: str):
        if flow_id not in store.flows:
            raise err.UnknownFlowError(f"unknown flow: {flow_id}")
        return flow_payload(store.flows[flow_id])

    @app.get("/goals/{flow_id}/{goal_index}/context")
    def get_goal_context(flow_id: str, goal_index: int):
        if flow_id not in store.flows:
            raise err.UnknownFlowError(f"unknown flow: {flow_id}")
        flow = store.flows[flow_id]
        if goal_index < 0 or goal_index >= len(flow.goals):
            raise err.UnknownFlowError(f"flow {flow_id} has no goal {goal_index}")
        goal = flow.goals[goal_index]
        context = graph.goal_context(goal.node)
        return {
            "v": SCHEMA_VERSION,
            "goal": _node_payload(graph, goal.node),
            "prompt": goal.prompt.to_dict(),
            "pattern": goal.prompt.pattern,
            "path_from_root": [_node_payload(graph, r) for r in context.path_from_root],
            "parent": None if context.parent is None else _node_payload(graph, context.parent),
            "siblings": [_node_payload(graph, r) for r in context.siblings],
            "children": [_node_payload(graph, r) for r in context.children],
            "subtree": [_node_payload(graph, r) for r in graph.iter_preorder(goal.node)],
        }

    @app.get("/dialogs/{dialog_id}")
    def get_dialog(dialog_id: str):
        return dialog_payload(dialog_id)

    @app.post("/dialogs")
    def post_dialog(body: dict, session: ApiSession = Depends(require_annotate)):
        dialog_id = store.create_dialog(body["flow_id"], session.writer_id)
        return dialog_payload(dialog_id)

    @app.post("/dialogs/{dialog_id}/turns")
    def post_turn(dialog_id: str, body: dict, session: ApiSession = Depends(require_annotate)):
        dialog = store.dialog(dialog_id)
        if dialog.writer_id != session.writer_id:
            raise HTTPException(status_code=403, detail="dialog belongs to another writer")
        index = store.append_turn(
            dialog_id,
            role=body["role"],
            utterance=body["utterance"],
            act=body["act"],
            grounding=[NodeRef.parse(g) for g in body.get("grounding", [])],
            goal_index=body["goal_index"],
            revises=body.get("revises"),
            request_id=body.get("request_id"),
        )
        return {"v": SCHEMA_VERSION, "turn_index": index, "dialog": dialog_payload(dialog_id)}

    @app.post("/dialogs/{dialog_id}/goals/{goal_index}/status")
    def post_goal_status(dialog_id: str, goal_index: int, body: dict,
                         session: ApiSession = Depends(require_annotate)):
        dialog = store.dialog(dialog_id)
        if dialog.writer_id != session.writer_id:
            raise HTTPException(status_code=403, detail="dialog belongs to another writer")
        next_active = store.set_goal_status(
            dialog_id, goal_index, body["status"], request_id=body.get("request_id"))
        return {"v": SCHEMA_VERSION, "next_active": next_active,
                "dialog": dialog_payload(dialog_id)}

    @app.get("/taxonomy")
    def get_taxonomy():
        return {"v": SCHEMA_VERSION, **store.taxonomy.to_dict()}

    @app.get("/stats")
    def get_stats():
        report = compute_stats(store.all_dialogs(), graph)
        return {"v": SCHEMA_VERSION, **report.to_dict()}

    @app.get("/export")
    def get_export(seed: int = 0, ratios: str = "0.70,0.10,0.20"):
        parts = tuple(float(x) for x in ratios.split(","))
        dialogs = store.all_dialogs()
        splits = split_dataset(dialogs, parts, seed)  # type: ignore[arg-type]
        return PlainTextResponse(export_corpus(dialogs, splits),
                                 media_type="application/x-ndjson")

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app


def serve(bind: str, graph: DocumentGraph, flows: list[DialogFlow], store_path: str | Path,
          config: ServiceConfig | None = None, static_dir: str | Path | None = None):
    """Run the service under uvicorn; blocks until interrupted."""
    import uvicorn

    store = DialogStore(store_path, flows, graph)
    app = create_app(graph, store, config, static_dir=static_dir)
    host, _, port = bind.rpartition(":")
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port))


def load_flows_file(path: str | Path) -> list[DialogFlow]:
    return flows_from_jsonl(Path(path).read_text(encoding="utf-8"))
