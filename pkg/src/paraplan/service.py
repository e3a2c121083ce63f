"""HTTP facade over sessions.

Endpoints (JSON in, JSON out; errors as ``{code, message, detail}``):

    POST /sessions                  create a session from a scenario document
    POST /sessions/{id}/plan        run the search for the current epoch
    POST /sessions/{id}/queries     submit dispatcher queries
    POST /sessions/{id}/apply       apply the recommendation or an override
    GET  /sessions/{id}/state       current epoch snapshot
    GET  /sessions/{id}/tree        labeled search-tree dump

Sessions live in memory; per-session operations are serialized with a lock.
With ``persist_dir`` set, the scenario and an event log are written through
to disk so a run can be replayed.
"""

from __future__ import annotations

import itertools
import json
import threading
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .errors import (
    ConstraintError,
    InvalidInputError,
    ParaplanError,
    QueryValidationError,
    SessionStateError,
    ValidationError,
)
from .explain import ExplainParams
from .mcts import SearchParams
from .scenario import load_scenario
from .session import Session


class _Registry:
    def __init__(self, persist_dir: str | None = None):
        self.sessions: dict[str, Session] = {}
        self.locks: dict[str, threading.Lock] = {}
        self.counter = itertools.count(1)
        self.persist_dir = Path(persist_dir) if persist_dir else None
        self.global_lock = threading.Lock()

    def create(self, scenario_doc: dict, params: dict | None = None) -> Session:
        scenario = load_scenario(scenario_doc)
        params = params or {}
        search = SearchParams(
            iterations=params.get("iterations", 150),
            rollout_depth=params.get("rollout_depth", 10),
            seed=params.get("seed", scenario.seed),
        )
        explain = ExplainParams(
            t3_budget=params.get("t3_budget", 74),
            contrastive_budget=params.get("contrastive_budget", 25),
            seed=params.get("seed", scenario.seed),
        )
        with self.global_lock:
            session_id = f"s-{next(self.counter):06d}"
        session = Session(scenario, search_params=search, explain_params=explain, id=session_id)
        self.sessions[session_id] = session
        self.locks[session_id] = threading.Lock()
        if self.persist_dir is not None:
            self.persist_dir.mkdir(parents=True, exist_ok=True)
            path = self.persist_dir / f"{session_id}.scenario.json"
            path.write_text(json.dumps(scenario.raw, sort_keys=True), encoding="utf-8")
        return session

    def log_event(self, session_id: str, event: dict) -> None:
        if self.persist_dir is None:
            return
        path = self.persist_dir / f"{session_id}.events.ndjson"
        with path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(event, sort_keys=True, default=str) + "\n")

    def get(self, session_id: str) -> tuple[Session, threading.Lock]:
        session = self.sessions.get(session_id)
        if session is None:
            raise LookupError(session_id)
        return session, self.locks[session_id]


def _error(status: int, code: str, message: str, detail=None) -> JSONResponse:
    return JSONResponse(
        status_code=status,
        content={"code": code, "message": message, "detail": detail},
    )


def create_app(persist_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="paraplan service", version="0.1.0")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    registry = _Registry(persist_dir)
    app.state.registry = registry

    @app.exception_handler(ParaplanError)
    async def _domain_error(_request: Request, exc: ParaplanError):
        if isinstance(exc, ValidationError):
            return _error(400, "validation_error", str(exc), {"field": exc.field})
        if isinstance(exc, QueryValidationError):
            return _error(400, "query_validation_error", str(exc), {"problems": exc.problems})
        if isinstance(exc, SessionStateError):
            return _error(409, "conflict", str(exc))
        if isinstance(exc, ConstraintError):
            return _error(
                409,
                "constraint_violation",
                str(exc),
                [
                    {"kind": v.kind, "vehicle_id": v.vehicle_id, "request_id": v.request_id, "degree": v.degree}
                    for v in exc.violations
                ],
            )
        if isinstance(exc, InvalidInputError):
            return _error(400, "invalid_input", str(exc))
        return _error(500, "internal_error", str(exc))

    def _session(session_id: str):
        try:
            return registry.get(session_id)
        except LookupError:
            raise SessionStateError(f"unknown session {session_id!r}")

    @app.post("/sessions", status_code=201)
    async def create_session(body: dict):
        scenario_doc = body.get("scenario", body)
        session = registry.create(scenario_doc, body.get("params"))
        registry.log_event(session.id, {"event": "created"})
        return {"id": session.id, "epoch": session.epoch, "status": session.status}

    @app.post("/sessions/{session_id}/plan")
    async def plan_epoch(session_id: str, body: dict | None = None):
        session, lock = _session(session_id)
        with lock:
            payload = session.plan_epoch((body or {}).get("params"))
            registry.log_event(session_id, {"event": "plan", "payload": payload})
            return payload

    @app.post("/sessions/{session_id}/queries")
    async def submit_queries(session_id: str, body: dict):
        session, lock = _session(session_id)
        queries = body.get("queries")
        if not isinstance(queries, list):
            raise ValidationError("queries", "must be a list of {qtype, bindings} objects")
        with lock:
            explanations = session.submit_queries(queries)
            payload = {"explanations": [e.to_json() for e in explanations]}
            registry.log_event(session_id, {"event": "queries", "count": len(queries)})
            return payload

    @app.post("/sessions/{session_id}/apply")
    async def apply_recommendation(session_id: str, body: dict | None = None):
        session, lock = _session(session_id)
        body = body or {}
        with lock:
            payload = session.apply_recommendation(
                override_vehicle=body.get("override_vehicle"),
                force=bool(body.get("force", False)),
            )
            registry.log_event(session_id, {"event": "apply", "payload": payload})
            return payload

    @app.get("/sessions/{session_id}/state")
    async def get_state(session_id: str):
        session, lock = _session(session_id)
        with lock:
            return session.state_payload()

    @app.get("/sessions/{session_id}/tree")
    async def get_tree(session_id: str):
        session, lock = _session(session_id)
        with lock:
            if session.current_tree is None:
                return _error(404, "not_found", "no search tree for the current epoch")
            return session.tree_dump()

    return app
