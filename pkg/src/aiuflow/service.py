"""HTTP facade exposing specs, device profiles, plans, pages and sessions.

All mutable state lives in the in-memory session store; spec and device
registries are read-only after startup.  Submissions to one session are
serialized behind a per-session lock, while distinct sessions proceed in
parallel.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import fixtures
from .adapt import DecisionKind, plan_service
from .engine import (
    FieldValidationError,
    IllegalOutcome,
    NoMatchingTransition,
    NotActive,
    Session,
    SessionFinished,
    ValidationFailed,
    current_pages,
    render_session_page,
    start_session,
    submit,
)
from .metrics import DeviceProfile, Thresholds, device_to_doc
from .model import Outcome, ServiceSpec
from .render import PageOutOfRange, RowOutOfRange, page_to_doc, render_detail


class ApiError(Exception):
    """Error surfaced to clients as ``{"code", "message"}`` with an HTTP status."""

    def __init__(self, http_status: int, code: str, message: str):
        super().__init__(message)
        self.http_status = http_status
        self.code = code
        self.message = message


@dataclass
class _StoredSession:
    session: Session
    lock: threading.Lock = field(default_factory=threading.Lock)
    touched: float = field(default_factory=time.monotonic)


class SessionStore:
    """In-memory session registry with TTL eviction (default 30 minutes)."""

    def __init__(self, ttl: float = 1800.0):
        self._ttl = ttl
        self._lock = threading.Lock()
        self._sessions: dict[str, _StoredSession] = {}

    def add(self, session: Session) -> None:
        with self._lock:
            self._evict()
            self._sessions[session.id] = _StoredSession(session=session)

    def get(self, session_id: str) -> _StoredSession:
        with self._lock:
            self._evict()
            stored = self._sessions.get(session_id)
            if stored is None:
                raise ApiError(404, "UnknownSession", f"no session {session_id!r}")
            stored.touched = time.monotonic()
            return stored

    def _evict(self) -> None:
        deadline = time.monotonic() - self._ttl
        expired = [
            sid for sid, stored in self._sessions.items() if stored.touched < deadline
        ]
        for sid in expired:
            del self._sessions[sid]


class StartSessionBody(BaseModel):
    spec: str
    device: str


class OutcomeBody(BaseModel):
    node: str
    outcome: dict


def _pages_doc(session: Session) -> dict[str, Any]:
    pages = current_pages(session)
    return {
        "pages": [page_to_doc(page) for _, page in pages],
        "activeNodes": sorted(session.active),
        "status": session.status,
    }


def create_app(
    specs: Optional[Mapping[str, ServiceSpec]] = None,
    devices: Optional[Mapping[str, DeviceProfile]] = None,
    thresholds: Optional[Thresholds] = None,
    *,
    session_ttl: float = 1800.0,
    ui_dir: Optional[Path] = None,
) -> FastAPI:
    """Build the service; registries default to the bundled fixtures."""
    if specs is None:
        specs = {
            name: fixtures.load_bundled_spec(name)
            for name in fixtures.bundled_spec_names()
        }
    if devices is None:
        devices = {
            name: fixtures.load_bundled_device(name)
            for name in fixtures.bundled_device_names()
        }
    thresholds = thresholds or Thresholds()
    store = SessionStore(ttl=session_ttl)

    app = FastAPI(title="aiuflow", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.specs = specs
    app.state.devices = devices
    app.state.store = store

    @app.exception_handler(ApiError)
    async def _api_error(request: Request, exc: ApiError) -> JSONResponse:
        return JSONResponse(
            status_code=exc.http_status,
            content={"code": exc.code, "message": exc.message},
        )

    def _spec(name: str) -> ServiceSpec:
        if name not in specs:
            raise ApiError(404, "UnknownSpec", f"no spec {name!r}")
        return specs[name]

    def _device(name: str) -> DeviceProfile:
        if name not in devices:
            raise ApiError(404, "UnknownDevice", f"no device {name!r}")
        return devices[name]

    @app.get("/specs")
    def list_specs() -> list[str]:
        return sorted(specs)

    @app.get("/devices")
    def list_devices() -> list[dict[str, Any]]:
        return [device_to_doc(devices[name]) for name in sorted(devices)]

    @app.get("/plan")
    def get_plan(spec: str, device: str) -> dict[str, Any]:
        plan = plan_service(_spec(spec), _device(device), thresholds)
        return plan.to_doc()

    @app.post("/sessions", status_code=201)
    def create_session(body: StartSessionBody) -> dict[str, Any]:
        try:
            session = start_session(
                _spec(body.spec), _device(body.device), thresholds
            )
        except ValidationFailed as exc:
            raise ApiError(422, exc.code, str(exc)) from None
        store.add(session)
        doc: dict[str, Any] = {"sessionId": session.id}
        if session.status == "running":
            doc.update(_pages_doc(session))
        else:
            doc["status"] = session.status
        return doc

    @app.get("/sessions/{session_id}/pages")
    def get_pages(
        session_id: str, node: Optional[str] = None, page: int = 1
    ) -> dict[str, Any]:
        stored = store.get(session_id)
        with stored.lock:
            session = stored.session
            try:
                if node is not None:
                    rendered = render_session_page(session, node, page)
                    return {
                        "pages": [page_to_doc(rendered)],
                        "activeNodes": sorted(session.active),
                        "status": session.status,
                    }
                return _pages_doc(session)
            except SessionFinished as exc:
                raise ApiError(409, exc.code, str(exc)) from None
            except NotActive as exc:
                raise ApiError(422, exc.code, str(exc)) from None
            except PageOutOfRange as exc:
                raise ApiError(422, "PageOutOfRange", str(exc)) from None

    @app.post("/sessions/{session_id}/outcome")
    def post_outcome(session_id: str, body: OutcomeBody) -> dict[str, Any]:
        stored = store.get(session_id)
        with stored.lock:
            session = stored.session
            if not session.spec.has_node(body.node):
                raise ApiError(404, "UnknownNode", f"no node {body.node!r}")
            try:
                outcome = Outcome.from_doc(body.outcome)
            except ValueError as exc:
                raise ApiError(422, "IllegalOutcome", str(exc)) from None
            try:
                submit(session, body.node, outcome)
            except SessionFinished as exc:
                raise ApiError(409, exc.code, str(exc)) from None
            except (
                NotActive,
                IllegalOutcome,
                NoMatchingTransition,
                FieldValidationError,
            ) as exc:
                raise ApiError(422, exc.code, str(exc)) from None
            if session.status != "running":
                return {"finished": True}
            doc = _pages_doc(session)
            doc["finished"] = False
            return doc

    @app.get("/sessions/{session_id}/detail")
    def get_detail(
        session_id: str, node: str, row: int, page: int = 1
    ) -> dict[str, Any]:
        stored = store.get(session_id)
        with stored.lock:
            session = stored.session
            if not session.spec.has_node(node):
                raise ApiError(404, "UnknownNode", f"no node {node!r}")
            decision = session.plan.per_node.get(node)
            if decision is None or decision.kind is not DecisionKind.TWO_STEP:
                raise ApiError(
                    422,
                    "DetailUnavailable",
                    f"node {node!r} is not presented as a two-step table",
                )
            try:
                rendered = render_detail(
                    session.spec.node(node),
                    row,
                    session.device,
                    page,
                    env=session.env,
                )
            except RowOutOfRange as exc:
                raise ApiError(422, "RowOutOfRange", str(exc)) from None
            except PageOutOfRange as exc:
                raise ApiError(422, "PageOutOfRange", str(exc)) from None
            return page_to_doc(rendered)

    @app.get("/sessions/{session_id}/history")
    def get_history(session_id: str) -> dict[str, Any]:
        stored = store.get(session_id)
        with stored.lock:
            session = stored.session
            return {
                "status": session.status,
                "history": [
                    {"node": node_id, "outcome": outcome.to_doc()}
                    for node_id, outcome in session.history
                ],
                "env": dict(session.env),
            }

    if ui_dir is not None and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
