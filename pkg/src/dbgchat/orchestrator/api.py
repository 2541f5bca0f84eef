"""HTTP API over the session engine.

Endpoints:
  POST /sessions                   -> {session_id}
  POST /sessions/{id}/messages     -> {response, state_view, legal_next_acts}
  GET  /sessions/{id}              -> session record view (+ current state_view)
  GET  /scenarios                  -> bundled scenario list
"""

from __future__ import annotations

from typing import Literal

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

from ..conversation import Origin, legal_next_acts
from ..errors import (
    DbgchatError,
    GatewayFailure,
    IllegalTransition,
    ScriptExhausted,
    SessionClosed,
    SessionNotFound,
    UnknownScenario,
)
from .engine import Orchestrator


class CreateSessionRequest(BaseModel):
    scenario_id: str | None = None
    mode_override: Literal["ForceEager", "ForceCollaborative"] | None = None
    backend: Literal["scripted", "live"] = "scripted"


class CreateSessionResponse(BaseModel):
    session_id: str


class MessageRequest(BaseModel):
    text: str = Field(min_length=1)
    origin: Literal["Typed", "FollowupClick"] = "Typed"


class MessageResponse(BaseModel):
    response: dict | None
    state_view: dict
    legal_next_acts: list[tuple[str, str]]


class ScenarioInfo(BaseModel):
    id: str
    title: str


def create_app(engine: Orchestrator | None = None) -> FastAPI:
    engine = engine or Orchestrator()
    app = FastAPI(title="dbgchat", version="0.1.0")
    app.state.engine = engine
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.post("/sessions", response_model=CreateSessionResponse)
    def create_session(body: CreateSessionRequest):
        try:
            session_id = engine.create_session(
                scenario_id=body.scenario_id,
                mode_override=body.mode_override,
                backend=body.backend,
            )
        except UnknownScenario as exc:
            raise HTTPException(status_code=404, detail=f"unknown scenario: {exc}") from exc
        except DbgchatError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return CreateSessionResponse(session_id=session_id)

    @app.post("/sessions/{session_id}/messages", response_model=MessageResponse)
    def post_message(session_id: str, body: MessageRequest):
        try:
            result = engine.handle_user_message(
                session_id, body.text, Origin(body.origin)
            )
        except SessionNotFound as exc:
            raise HTTPException(status_code=404, detail=f"unknown session: {exc}") from exc
        except SessionClosed as exc:
            raise HTTPException(status_code=409, detail="session is closed") from exc
        except IllegalTransition as exc:
            hint = []
            try:
                session = engine._get(session_id)
                if session.state is not None:
                    hint = sorted(
                        (s.value, a.value) for s, a in legal_next_acts(session.state)
                    )
            except DbgchatError:
                pass
            raise HTTPException(
                status_code=409,
                detail={"error": str(exc), "rule": exc.rule, "legal_next_acts": hint},
            ) from exc
        except (ScriptExhausted, GatewayFailure) as exc:
            raise HTTPException(status_code=502, detail=str(exc)) from exc
        return MessageResponse(
            response=result.response.to_dict() if result.response else None,
            state_view=result.state_view,
            legal_next_acts=result.legal_next_acts,
        )

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        try:
            record = engine.get_record(session_id)
            view = engine.get_state_view(session_id)
        except SessionNotFound as exc:
            raise HTTPException(status_code=404, detail=f"unknown session: {exc}") from exc
        out = record.to_dict()
        out["state_view"] = view
        return out

    @app.get("/scenarios", response_model=list[ScenarioInfo])
    def get_scenarios():
        return engine.scenario_catalog()

    return app
