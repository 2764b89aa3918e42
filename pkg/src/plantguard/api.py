"""HTTP facade over the session manager.

JSON field names here are the stable wire contract the console consumes;
change them only with a version bump.
"""

from __future__ import annotations

import asyncio
import json

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import StreamingResponse

from .scenario import (
    ScenarioConfig,
    _config_from_dict,
    default_config,
    reference_config,
)
from .service import (
    ActionError,
    ServiceError,
    SessionManager,
    UnknownSessionError,
)

__all__ = ["create_app"]

STREAM_POLL_S = 0.05


def _config_from_payload(payload: dict) -> ScenarioConfig:
    if "config" in payload and payload["config"] is not None:
        return _config_from_dict(payload["config"])
    scenario = payload.get("scenario", "reference")
    if scenario == "reference":
        cfg = reference_config(seed=int(payload.get("seed", 0)))
    elif scenario == "default":
        cfg = default_config(seed=int(payload.get("seed", 0)))
    else:
        raise ValueError(f"unknown scenario {scenario!r}")
    if "noise" in payload:
        cfg.noise = bool(payload["noise"])
    if "duration" in payload:
        cfg.duration = int(payload["duration"])
    if "ticks_per_second" in payload:
        cfg.ticks_per_second = float(payload["ticks_per_second"])
    return cfg


def create_app(manager: SessionManager | None = None) -> FastAPI:
    app = FastAPI(title="plantguard", docs_url=None, redoc_url=None)
    app.state.manager = manager or SessionManager()

    def mgr() -> SessionManager:
        return app.state.manager

    def get_session(session_id: str):
        try:
            return mgr().get(session_id)
        except UnknownSessionError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc

    @app.get("/health")
    def health():
        return {"status": "ok", "sessions": len(mgr().sessions)}

    @app.post("/sessions", status_code=201)
    async def create_session(request: Request):
        payload = await _json_body(request)
        try:
            config = _config_from_payload(payload)
        except (ValueError, TypeError, KeyError) as exc:
            raise HTTPException(status_code=400, detail=f"bad config: {exc}") from exc
        session = mgr().create(config)
        return session.snapshot()

    @app.get("/sessions/{session_id}")
    def session_state(session_id: str):
        return get_session(session_id).snapshot()

    @app.post("/sessions/{session_id}/actions")
    async def post_action(session_id: str, request: Request):
        get_session(session_id)
        payload = await _json_body(request)
        kind = payload.get("kind")
        try:
            return mgr().apply_action(
                session_id,
                kind,
                target=payload.get("target"),
                alarm_id=payload.get("alarm_id"),
            )
        except ActionError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        except ServiceError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc

    @app.get("/sessions/{session_id}/telemetry")
    def telemetry(session_id: str, since: int = 0):
        session = get_session(session_id)
        return {"session_id": session.id, "records": session.telemetry_since(since)}

    @app.get("/sessions/{session_id}/alarms")
    def alarms(session_id: str):
        session = get_session(session_id)
        return {"session_id": session.id, "alarms": session.alarms_snapshot()}

    @app.post("/sessions/{session_id}/query")
    async def query(session_id: str, request: Request):
        session = get_session(session_id)
        payload = await _json_body(request)
        keywords = payload.get("keywords")
        if not keywords or not isinstance(keywords, list):
            raise HTTPException(status_code=400, detail="keywords must be a non-empty list")
        try:
            result = session.query_graph(keywords, max_depth=int(payload.get("max_depth", 4)))
        except (ServiceError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        from .query import result_to_dict

        return result_to_dict(result)

    @app.get("/sessions/{session_id}/stream")
    async def stream(session_id: str, request: Request, since: int = 0):
        session = get_session(session_id)

        async def event_source():
            cursor = since
            while True:
                events = session.events_since(cursor)
                for event in events:
                    cursor = event["seq"]
                    yield (
                        f"id: {event['seq']}\n"
                        f"event: {event['type']}\n"
                        f"data: {json.dumps(event, separators=(',', ':'))}\n\n"
                    )
                if session.finished and not session.events_since(cursor):
                    yield "event: end\ndata: {}\n\n"
                    return
                if await request.is_disconnected():
                    return
                await asyncio.sleep(STREAM_POLL_S)

        return StreamingResponse(event_source(), media_type="text/event-stream")

    return app


async def _json_body(request: Request) -> dict:
    body = await request.body()
    if not body:
        return {}
    try:
        payload = json.loads(body)
    except json.JSONDecodeError as exc:
        raise HTTPException(status_code=400, detail="body is not valid JSON") from exc
    if not isinstance(payload, dict):
        raise HTTPException(status_code=400, detail="body must be a JSON object")
    return payload
