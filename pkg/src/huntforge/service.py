"""HTTP facade over hunt sessions.

Each hunt session owns one state, one journal file, and one lock: all
mutation is serialized per hunt. Everything a session needs to come
back after a restart lives under the data directory:

    <data_dir>/<hunt_id>/
        spec.hunt            the bound .hunt document
        meta.json            id, name, analyst gate, creation time
        journal.ndjson       the step journal
        http.ndjson          raw telemetry as ingested, per source
        syslog.ndjson
        forensics.ndjson

Reload is replay: rebind the spec, fold the journal, re-ingest the
telemetry, and the session continues where it stopped.
"""

from __future__ import annotations

import json
import logging
import os
import threading
import time
import uuid
from dataclasses import dataclass, field
from typing import Literal, Optional

from fastapi import Body, FastAPI, HTTPException, Query, Request
from fastapi.responses import PlainTextResponse, Response
from pydantic import BaseModel

from .dsl import BindError, ParseError, bind, parse_hunt
from .dsl.lexer import LexError
from .engine import (
    dispose_recommendation,
    hunt_status,
    ingest_telemetry,
    promote,
    replay,
    run,
    step_once,
)
from .journal import JournalWriter, StepRecord, check_contiguous, read_journal
from .model import Decision, HypStatus, RecStatus, analyst
from .state import HuntState, StateError, init_hunt
from .telemetry import (
    ForensicInventory,
    TelemetryError,
    parse_http_record,
    parse_syslog_record,
)

log = logging.getLogger(__name__)

DATA_DIR_ENV = "HUNTFORGE_DATA_DIR"
SOURCES = ("http", "syslog", "forensics")


@dataclass
class Session:
    id: str
    name: str
    state: HuntState
    writer: JournalWriter
    directory: str
    lock: threading.Lock = field(default_factory=threading.Lock)


class HuntService:
    def __init__(self, data_dir: str):
        self.data_dir = data_dir
        os.makedirs(data_dir, exist_ok=True)
        self.sessions: dict[str, Session] = {}
        self._registry_lock = threading.Lock()
        for entry in sorted(os.listdir(data_dir)):
            if os.path.isfile(os.path.join(data_dir, entry, "meta.json")):
                try:
                    self._load(entry)
                except Exception:
                    log.exception("could not restore hunt %s", entry)

    # -- session lifecycle ---------------------------------------------------

    def create(self, spec_text: str, analyst_gate: str) -> Session:
        config = bind(parse_hunt(spec_text), analyst_gate=analyst_gate)
        hunt_id = uuid.uuid4().hex[:12]
        directory = os.path.join(self.data_dir, hunt_id)
        os.makedirs(directory)
        with open(os.path.join(directory, "spec.hunt"), "w", encoding="utf-8") as fh:
            fh.write(spec_text)
        meta = {
            "id": hunt_id,
            "name": config.name,
            "analyst_gate": analyst_gate,
            "created": time.time(),
        }
        with open(os.path.join(directory, "meta.json"), "w", encoding="utf-8") as fh:
            json.dump(meta, fh)
        session = Session(
            id=hunt_id,
            name=config.name,
            state=init_hunt(config),
            writer=JournalWriter(os.path.join(directory, "journal.ndjson")),
            directory=directory,
        )
        with self._registry_lock:
            self.sessions[hunt_id] = session
        return session

    def _load(self, hunt_id: str) -> Session:
        directory = os.path.join(self.data_dir, hunt_id)
        with open(os.path.join(directory, "meta.json"), encoding="utf-8") as fh:
            meta = json.load(fh)
        with open(os.path.join(directory, "spec.hunt"), encoding="utf-8") as fh:
            spec_text = fh.read()
        config = bind(parse_hunt(spec_text), analyst_gate=meta["analyst_gate"])
        journal_path = os.path.join(directory, "journal.ndjson")
        records = read_journal(journal_path) if os.path.exists(journal_path) else []
        check_contiguous(records)
        state = replay(records, config)

        http_path = os.path.join(directory, "http.ndjson")
        syslog_path = os.path.join(directory, "syslog.ndjson")
        forensics_path = os.path.join(directory, "forensics.ndjson")
        http, syslog, inventories = [], [], []
        if os.path.exists(http_path):
            http = [
                parse_http_record(line)
                for line in open(http_path, encoding="utf-8")
                if line.strip()
            ]
        if os.path.exists(syslog_path):
            syslog = [
                parse_syslog_record(line)
                for line in open(syslog_path, encoding="utf-8")
                if line.strip()
            ]
        if os.path.exists(forensics_path):
            inventories = [
                ForensicInventory.from_dict(json.loads(line))
                for line in open(forensics_path, encoding="utf-8")
                if line.strip()
            ]
        ingest_telemetry(state, http=http, syslog=syslog, inventories=inventories)

        session = Session(
            id=hunt_id,
            name=meta["name"],
            state=state,
            writer=JournalWriter(journal_path),
            directory=directory,
        )
        with self._registry_lock:
            self.sessions[hunt_id] = session
        return session

    def get(self, hunt_id: str) -> Session:
        session = self.sessions.get(hunt_id)
        if session is None:
            raise HTTPException(status_code=404, detail=f"no hunt {hunt_id!r}")
        return session


# -- request bodies ----------------------------------------------------------


class CreateHuntBody(BaseModel):
    spec: str
    analyst_gate: Literal["required", "auto"] = "required"


class DecisionBody(BaseModel):
    verdict: Literal["accepted", "rejected"]
    analyst: str


class AdvanceBody(BaseModel):
    mode: Literal["step", "run"] = "run"


class DispositionBody(BaseModel):
    status: Literal["approved", "declined"]
    analyst: str


# -- responses ---------------------------------------------------------------


def _state_payload(session: Session) -> dict:
    state = session.state
    status = hunt_status(state)
    if status == "ran":
        status = "runnable"
    view = state.semantic_view()
    return {
        "id": session.id,
        "name": session.name,
        "gate": state.analyst_gate,
        "status": status,
        "seq": state.seq,
        "facts": view["facts"],
        "hypotheses": view["hypotheses"],
        "recommendations": view["recommendations"],
        "telemetry_counts": {
            "http": len(state.telemetry.http),
            "syslog": len(state.telemetry.syslog),
            "forensics": len(state.telemetry.inventories),
        },
    }


def _parse_diagnostic(exc: Exception) -> dict:
    detail: dict = {"error": str(exc)}
    span = getattr(exc, "span", None)
    if span is not None:
        detail["line"] = span.line
        detail["col"] = span.col
    expected = getattr(exc, "expected", None)
    if expected:
        detail["expected"] = list(expected)
    return detail


def create_app(data_dir: Optional[str] = None) -> FastAPI:
    if data_dir is None:
        data_dir = os.environ.get(DATA_DIR_ENV, os.path.join(os.getcwd(), "huntforge-data"))
    service = HuntService(data_dir)
    app = FastAPI(title="huntforge", version="0.1.0")
    app.state.service = service

    @app.get("/hunts")
    def list_hunts() -> list[dict]:
        return [
            {
                "id": s.id,
                "name": s.name,
                "status": _state_payload(s)["status"],
                "seq": s.state.seq,
            }
            for s in service.sessions.values()
        ]

    @app.post("/hunts", status_code=201)
    def create_hunt(body: CreateHuntBody) -> dict:
        try:
            session = service.create(body.spec, body.analyst_gate)
        except (LexError, ParseError, BindError) as exc:
            raise HTTPException(status_code=422, detail=_parse_diagnostic(exc))
        return _state_payload(session)

    @app.get("/hunts/{hunt_id}/state")
    def get_state(hunt_id: str) -> dict:
        return _state_payload(service.get(hunt_id))

    @app.get("/hunts/{hunt_id}/hypotheses")
    def get_hypotheses(hunt_id: str, status: Optional[str] = Query(default=None)) -> list[dict]:
        session = service.get(hunt_id)
        if status is not None:
            try:
                wanted = HypStatus(status)
            except ValueError:
                raise HTTPException(
                    status_code=422,
                    detail=f"bad status {status!r}; one of "
                    + ", ".join(s.value for s in HypStatus),
                )
            items = [h for h in session.state.hypotheses.values() if h.status is wanted]
        else:
            items = list(session.state.hypotheses.values())
        return [h.to_dict() for h in items]

    @app.post("/hunts/{hunt_id}/hypotheses/{hyp_id}/decision")
    def decide(hunt_id: str, hyp_id: str, body: DecisionBody) -> dict:
        session = service.get(hunt_id)
        with session.lock:
            if hyp_id not in session.state.hypotheses:
                raise HTTPException(status_code=404, detail=f"no hypothesis {hyp_id!r}")
            try:
                state, record = promote(
                    session.state,
                    hyp_id,
                    Decision(body.verdict),
                    actor=analyst(body.analyst),
                    override=True,
                )
            except StateError as exc:
                raise HTTPException(status_code=409, detail=str(exc))
            session.writer.append(record)
            session.state = state
            return {
                "seq": record.seq,
                "hypothesis": state.hypotheses[hyp_id].to_dict(),
                "status": _state_payload(session)["status"],
            }

    @app.post("/hunts/{hunt_id}/advance")
    def advance(hunt_id: str, body: AdvanceBody = Body(default=AdvanceBody())) -> dict:
        session = service.get(hunt_id)
        with session.lock:
            if body.mode == "step":
                state, records, status = step_once(session.state, session.writer)
            else:
                state, records, status = run(session.state, session.writer)
            session.state = state
            if status == "ran":
                status = "runnable"
            return {
                "status": status,
                "seq": state.seq,
                "new_records": [r.to_dict() for r in records],
            }

    @app.get("/hunts/{hunt_id}/recommendations")
    def get_recommendations(hunt_id: str) -> list[dict]:
        session = service.get(hunt_id)
        return [r.to_dict() for r in session.state.recommendations]

    @app.post("/hunts/{hunt_id}/recommendations/{rec_id}/disposition")
    def dispose(hunt_id: str, rec_id: str, body: DispositionBody) -> dict:
        session = service.get(hunt_id)
        with session.lock:
            if session.state.find_recommendation(rec_id) is None:
                raise HTTPException(status_code=404, detail=f"no recommendation {rec_id!r}")
            try:
                state, record = dispose_recommendation(
                    session.state,
                    rec_id,
                    RecStatus(body.status),
                    actor=analyst(body.analyst),
                )
            except StateError as exc:
                raise HTTPException(status_code=409, detail=str(exc))
            session.writer.append(record)
            session.state = state
            rec = state.find_recommendation(rec_id)
            return {"seq": record.seq, "recommendation": rec.to_dict()}

    @app.get("/hunts/{hunt_id}/journal")
    def get_journal(hunt_id: str) -> Response:
        session = service.get(hunt_id)
        path = os.path.join(session.directory, "journal.ndjson")
        body = ""
        if os.path.exists(path):
            with open(path, encoding="utf-8") as fh:
                body = fh.read()
        return PlainTextResponse(content=body, media_type="application/x-ndjson")

    @app.post("/hunts/{hunt_id}/telemetry")
    async def post_telemetry(
        hunt_id: str, request: Request, source: str = Query(...)
    ) -> dict:
        if source not in SOURCES:
            raise HTTPException(
                status_code=422,
                detail=f"bad source {source!r}; one of " + ", ".join(SOURCES),
            )
        session = service.get(hunt_id)
        raw = (await request.body()).decode("utf-8")
        lines = [line for line in raw.splitlines() if line.strip()]
        http, syslog, inventories = [], [], []
        try:
            for i, line in enumerate(lines, 1):
                if source == "http":
                    http.append(parse_http_record(line))
                elif source == "syslog":
                    syslog.append(parse_syslog_record(line))
                else:
                    inventories.append(ForensicInventory.from_dict(json.loads(line)))
        except (TelemetryError, ValueError, KeyError) as exc:
            raise HTTPException(status_code=422, detail=f"line {i}: {exc}")
        with session.lock:
            ingest_telemetry(session.state, http=http, syslog=syslog, inventories=inventories)
            with open(
                os.path.join(session.directory, f"{source}.ndjson"), "a", encoding="utf-8"
            ) as fh:
                for line in lines:
                    fh.write(line + "\n")
            return {
                "ingested": len(lines),
                "status": _state_payload(session)["status"],
            }

    return app
