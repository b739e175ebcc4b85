"""REST orchestration over the workflow engine.

Sessions are created, stepped, and answered through plain JSON endpoints;
every mutation appends to the session's event log before the response goes
out, so any replica reading the same data directory serves the same state.

Auth is a single shared bearer token: set NESY_TOKEN and every route except
/healthz requires `Authorization: Bearer <token>`.  Requests for different
sessions run concurrently; requests for the same session serialize on a
per-session lock so an in-flight agent call never interleaves with feedback.

Scripted backends supplied at session creation live in process memory only.
After a restart such a session still loads and reports state, but stepping
it falls back to the remote backend (or fails with model-endpoint unset).
"""

from __future__ import annotations

import os
import threading
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, Response

from .. import workflow
from ..agents import RemoteBackend, ScriptedBackend
from ..errors import AgentError, GateMismatchError, NesyError, PhaseError
from ..export import export_notebook
from ..rag import ExampleStore
from .store import SessionStore, session_status

_AWAITING = (
    workflow.GRAPH_HUMAN_GATE,
    workflow.SENSOR_HUMAN_GATE,
    workflow.PROPERTY_INPUT,
)


def _err(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse({"error": {"code": code, "message": message}}, status_code=status)


def _seed_corpus_root() -> Path | None:
    root = Path(__file__).resolve().parent.parent / "seed" / "corpus"
    return root if root.is_dir() else None


def default_rag_store() -> ExampleStore | None:
    root = _seed_corpus_root()
    return ExampleStore(root) if root is not None else None


def _outcome_json(outcome: workflow.StepOutcome) -> dict:
    return {
        "kind": outcome.kind,
        "gate": outcome.gate,
        "view": outcome.view,
        "bundle": outcome.bundle,
        "reason": outcome.reason,
    }


def _check_dataset(dataset) -> str | None:
    if not isinstance(dataset, list):
        return "dataset must be a list of records"
    seen = set()
    for i, record in enumerate(dataset):
        if not isinstance(record, dict):
            return f"dataset[{i}] is not an object"
        rid = record.get("id")
        if not isinstance(rid, str) or not rid:
            return f"dataset[{i}] needs a non-empty string id"
        if rid in seen:
            return f"dataset id {rid!r} repeats"
        seen.add(rid)
    return None


def create_app(root=None, backend=None, rag=None) -> FastAPI:
    app = FastAPI(title="nesyflow service")
    app.state.store = SessionStore(root or os.environ.get("NESY_DATA_DIR", "./nesy-data"))
    app.state.sessions = {}
    app.state.backends = {}
    app.state.default_backend = backend
    app.state.rag = rag if rag is not None else default_rag_store()
    app.state.locks = {}
    app.state.locks_guard = threading.Lock()

    def lock_for(session_id: str) -> threading.Lock:
        with app.state.locks_guard:
            return app.state.locks.setdefault(session_id, threading.Lock())

    def find(session_id: str) -> workflow.Session | None:
        session = app.state.sessions.get(session_id)
        if session is None and app.state.store.exists(session_id):
            session = app.state.store.load(session_id)
            app.state.sessions[session_id] = session
        return session

    def backend_for(session_id: str):
        backend = app.state.backends.get(session_id) or app.state.default_backend
        return backend if backend is not None else RemoteBackend()

    def state_json(session: workflow.Session) -> dict:
        return dict(session.to_json(), status=session_status(session))

    @app.middleware("http")
    async def bearer_auth(request: Request, call_next):
        token = os.environ.get("NESY_TOKEN")
        if token and request.url.path != "/healthz":
            if request.headers.get("Authorization") != f"Bearer {token}":
                return _err(401, "unauthorized", "missing or wrong bearer token")
        return await call_next(request)

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.post("/sessions", status_code=201)
    async def create_session(request: Request):
        try:
            body = await request.json()
        except ValueError:
            return _err(400, "bad-body", "request body is not valid JSON")
        if not isinstance(body, dict):
            return _err(400, "bad-body", "request body must be an object")
        task = body.get("task_description") or body.get("task") or ""
        dataset = body.get("dataset", [])
        problem = _check_dataset(dataset)
        if problem:
            return _err(400, "bad-body", problem)
        limit = body.get("limit", workflow.DEFAULT_ATTEMPT_LIMIT)
        if not isinstance(limit, int) or limit < 1:
            return _err(400, "bad-body", "limit must be a positive integer")
        exclude = body.get("exclude", [])
        if not isinstance(exclude, list) or not all(isinstance(x, str) for x in exclude):
            return _err(400, "bad-body", "exclude must be a list of example ids")
        try:
            session = workflow.start(task, dataset=dataset, exclude=exclude, limit=limit)
        except PhaseError as e:
            return _err(400, e.code, str(e))
        scripts = body.get("scripts")
        if scripts is not None:
            if not isinstance(scripts, dict) or not all(
                isinstance(k, str)
                and isinstance(v, list)
                and all(isinstance(s, str) for s in v)
                for k, v in scripts.items()
            ):
                return _err(400, "bad-body", "scripts must map role to a list of replies")
            app.state.backends[session.id] = ScriptedBackend(scripts)
        app.state.sessions[session.id] = session
        app.state.store.save(session)
        return {"session_id": session.id}

    @app.get("/sessions")
    def list_sessions():
        return app.state.store.list()

    @app.get("/sessions/{session_id}/state")
    def get_state(session_id: str):
        session = find(session_id)
        if session is None:
            return _err(404, "unknown-session", f"no session {session_id!r}")
        with lock_for(session_id):
            return state_json(session)

    @app.post("/sessions/{session_id}/step")
    def step_session(session_id: str):
        session = find(session_id)
        if session is None:
            return _err(404, "unknown-session", f"no session {session_id!r}")
        with lock_for(session_id):
            if session.phase in _AWAITING:
                outcome = workflow.step(session, backend_for(session_id))
                return JSONResponse(_outcome_json(outcome), status_code=409)
            if session.phase in (workflow.DONE, workflow.FAILED):
                return _err(409, "finished", f"session is {session.phase}")
            try:
                outcome = workflow.step(session, backend_for(session_id), app.state.rag)
            except AgentError as e:
                app.state.store.save(session)  # the agent-error event just appended
                return _err(500, e.code, str(e))
            except NesyError as e:
                app.state.store.save(session)
                return _err(500, e.code, str(e))
            app.state.store.save(session)
            return _outcome_json(outcome)

    @app.post("/sessions/{session_id}/feedback")
    async def post_feedback(session_id: str, request: Request):
        session = find(session_id)
        if session is None:
            return _err(404, "unknown-session", f"no session {session_id!r}")
        try:
            body = await request.json()
        except ValueError:
            return _err(400, "bad-body", "request body is not valid JSON")
        if not isinstance(body, dict) or "gate" not in body or "action" not in body:
            return _err(400, "bad-body", "feedback needs gate and action")
        decision = workflow.HumanDecision(
            gate=str(body["gate"]),
            action=str(body["action"]),
            feedback=str(body.get("feedback", "")),
            edited=str(body.get("code", "")),
        )
        with lock_for(session_id):
            try:
                workflow.submit_human(session, decision)
            except GateMismatchError as e:
                return _err(409, e.code, str(e))
            except PhaseError as e:
                return _err(400, e.code, str(e))
            app.state.store.save(session)
            return state_json(session)

    @app.post("/sessions/{session_id}/mapping")
    async def post_mapping(session_id: str, request: Request):
        session = find(session_id)
        if session is None:
            return _err(404, "unknown-session", f"no session {session_id!r}")
        try:
            body = await request.json()
        except ValueError:
            return _err(400, "bad-body", "request body is not valid JSON")
        if not isinstance(body, dict) or not isinstance(body.get("text"), str):
            return _err(400, "bad-body", "mapping needs a text field")
        with lock_for(session_id):
            try:
                workflow.provide_mapping(session, body["text"])
            except PhaseError as e:
                if e.code == "bad-phase":
                    return _err(409, e.code, str(e))
                return _err(400, e.code, str(e))
            app.state.store.save(session)
            return state_json(session)

    @app.get("/sessions/{session_id}/export.ipynb")
    def get_notebook(session_id: str):
        session = find(session_id)
        if session is None:
            return _err(404, "unknown-session", f"no session {session_id!r}")
        with lock_for(session_id):
            if session.phase != workflow.DONE or session.bundle is None:
                return _err(409, "not-exported", f"session is at {session.phase}, not Done")
            document = export_notebook(session.bundle)
        return Response(
            content=document,
            media_type="application/x-ipynb+json",
            headers={
                "Content-Disposition": f'attachment; filename="{session_id}.ipynb"'
            },
        )

    return app
