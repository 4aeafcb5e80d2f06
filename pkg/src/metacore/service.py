"""HTTP service wrapping the kernel.

Each session owns one store; every mutation goes through the same request
engine the library exposes, so wire behavior is identical whether the
kernel is driven in-process or over the network.  A per-session lock keeps
the single-writer discipline under concurrent clients.
"""

from __future__ import annotations

import threading

from fastapi import FastAPI, HTTPException

from .errors import MetaError
from .kernel import MetaKind, kind_of_token
from .levels import validate_model
from .metaconstructor import execute_line
from .persistence import deserialize, serialize
from .reflection import MetaChange, apply_change, impact_of
from .schemas import (
    ReflectReport,
    ReflectRequest,
    RequestBatch,
    ResponseBatch,
    SessionCreate,
    SessionInfo,
    SnapshotDocument,
    ValidationReport,
)
from .store import Store, parse_id


class Session:
    def __init__(self, store: Store):
        self.store = store
        self.lock = threading.Lock()


def _parse_capacities(raw: dict[str, int] | None) -> dict[MetaKind, int]:
    capacities: dict[MetaKind, int] = {}
    for name, value in (raw or {}).items():
        try:
            kind = kind_of_token(name)
        except MetaError as exc:
            raise HTTPException(400, {"code": exc.code, "detail": exc.detail})
        capacities[kind] = value
    return capacities


def _required_id(token: str):
    eid = parse_id(token)
    if eid is None:
        raise HTTPException(400, {"code": "ParseError", "detail": f"bad id {token!r}"})
    return eid


def _optional_id(token: str | None):
    return None if token is None else _required_id(token)


def create_app() -> FastAPI:
    app = FastAPI(title="metacore", version="0.1.0")
    sessions: dict[str, Session] = {}
    counter = {"next": 1}
    registry_lock = threading.Lock()

    def get_session(session_id: str) -> Session:
        session = sessions.get(session_id)
        if session is None:
            raise HTTPException(404, {"code": "UnknownSession", "detail": session_id})
        return session

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/sessions", response_model=SessionInfo)
    def create_session(body: SessionCreate):
        capacities = _parse_capacities(body.capacities)
        try:
            if body.snapshot is not None:
                store = deserialize(body.snapshot.encode("utf-8"))
                if capacities:
                    raise HTTPException(
                        400,
                        {
                            "code": "ParseError",
                            "detail": "capacities and snapshot are exclusive",
                        },
                    )
            else:
                store = Store(capacities)
        except MetaError as exc:
            raise HTTPException(400, {"code": exc.code, "detail": exc.detail})
        with registry_lock:
            session_id = f"s{counter['next']}"
            counter["next"] += 1
            sessions[session_id] = Session(store)
        return SessionInfo(session_id=session_id)

    @app.delete("/sessions/{session_id}")
    def drop_session(session_id: str):
        get_session(session_id)
        del sessions[session_id]
        return {"status": "ok"}

    @app.post("/sessions/{session_id}/requests", response_model=ResponseBatch)
    def run_requests(session_id: str, batch: RequestBatch):
        session = get_session(session_id)
        responses = []
        with session.lock:
            for line in batch.lines:
                response = execute_line(line, session.store)
                responses.append(response)
                if batch.stop_on_error and response.startswith("error "):
                    break
        return ResponseBatch(responses=responses)

    @app.post("/sessions/{session_id}/validate", response_model=ValidationReport)
    def validate(session_id: str):
        session = get_session(session_id)
        with session.lock:
            diagnostics = validate_model(session.store)
        return ValidationReport(
            diagnostics=[d.line for d in diagnostics],
            errors=sum(1 for d in diagnostics if d.severity == "error"),
            warnings=sum(1 for d in diagnostics if d.severity == "warning"),
        )

    @app.post("/sessions/{session_id}/reflect", response_model=ReflectReport)
    def reflect(session_id: str, body: ReflectRequest):
        session = get_session(session_id)
        change = MetaChange(
            operation=body.operation,
            subject=_required_id(body.subject),
            feature=_optional_id(body.feature),
            datatype=_optional_id(body.datatype),
            potency_value=body.potency_value,
            per_level=body.per_level,
            name=body.name,
        )
        mode = "force" if body.force else "restrict"
        with session.lock:
            try:
                if body.dry_run:
                    report = impact_of(change, session.store)
                    applied = False
                else:
                    report = apply_change(change, mode, session.store)
                    applied = True
            except MetaError as exc:
                report = getattr(exc, "report", None)
                return ReflectReport(
                    applied=False,
                    verdict=report.verdict if report else "error",
                    affected_instances=[
                        str(i) for i in (report.affected_instances if report else [])
                    ],
                    affected_slots=report.affected_slots if report else 0,
                    report_lines=report.lines if report else [],
                    error=f"error {exc.code} {exc.detail}",
                )
        return ReflectReport(
            applied=applied,
            verdict=report.verdict,
            affected_instances=[str(i) for i in report.affected_instances],
            affected_slots=report.affected_slots,
            report_lines=report.lines,
        )

    @app.get("/sessions/{session_id}/snapshot", response_model=SnapshotDocument)
    def snapshot(session_id: str):
        session = get_session(session_id)
        with session.lock:
            data = serialize(session.store)
        return SnapshotDocument(snapshot=data.decode("utf-8"))

    return app


app = create_app()
