"""HTTP transport for the session service.

Message schemas (field names are the contract):
  client -> server   {"session": id, "utterance": text}
  server -> client   events as {"type": ..., "payload": {...}, "seq": n}
  errors             {"error": code, "detail": text}

Endpoints:
  POST /api/sessions            {pacing?}               -> {session}
  POST /api/utterance           {session, utterance}    -> {events: [...]}
  GET  /api/state?session=      world snapshot + pending-move summary
  GET  /api/events?session=&since=&wait_ms=   ordered events, long-poll

The web console (frontend/dist) is served at / when present; override
the directory with PSABOT_UI_DIST.
"""

from __future__ import annotations

import os
import time
from pathlib import Path

from fastapi import FastAPI
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .service import ProtocolError, ServerEvent, SessionManager
from .world import InvalidConfig


class CreateSessionRequest(BaseModel):
    pacing: str | None = None


class UtteranceRequest(BaseModel):
    session: str
    utterance: str


def _event_json(event: ServerEvent) -> dict:
    return {"type": event.type, "payload": event.payload, "seq": event.seq}


def _error(status: int, code: str, detail: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": code, "detail": detail})


def build_app(manager: SessionManager, ui_dist: Path | None = None) -> FastAPI:
    app = FastAPI(title="psabot", docs_url=None, redoc_url=None)

    @app.exception_handler(ProtocolError)
    def _protocol_error(_request, exc: ProtocolError):
        status = 404 if exc.code == "UnknownSession" else 400
        return _error(status, exc.code, exc.detail)

    @app.post("/api/sessions")
    def create_session(body: CreateSessionRequest):
        try:
            session_id = manager.create_session(pacing=body.pacing)
        except (InvalidConfig, ValueError) as exc:
            return _error(400, "InvalidConfig", str(exc))
        return {"session": session_id}

    @app.post("/api/utterance")
    def post_utterance(body: UtteranceRequest):
        events = manager.post_utterance(body.session, body.utterance)
        return {"events": [_event_json(e) for e in events]}

    @app.get("/api/state")
    def get_state(session: str):
        return manager.get_state(session)

    @app.get("/api/events")
    def get_events(session: str, since: int = 0, wait_ms: int = 0):
        deadline = time.monotonic() + wait_ms / 1000.0
        while True:
            events = manager.events_since(session, since)
            if events or time.monotonic() >= deadline:
                return {"events": [_event_json(e) for e in events]}
            time.sleep(0.02)

    dist = ui_dist or _default_ui_dist()
    if dist is not None and dist.is_dir():
        app.mount("/", StaticFiles(directory=str(dist), html=True), name="console")

    return app


def _default_ui_dist() -> Path | None:
    override = os.environ.get("PSABOT_UI_DIST")
    if override:
        return Path(override)
    candidate = Path(__file__).resolve().parents[2] / "frontend"
    return candidate if candidate.is_dir() else None


def serve(config_text: str, host: str = "127.0.0.1", port: int = 8765, pacing: str | None = None):
    import uvicorn

    manager = SessionManager(default_config_text=config_text, default_pacing=pacing)
    app = build_app(manager)
    uvicorn.run(app, host=host, port=port, log_level="warning")
