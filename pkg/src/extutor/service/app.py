"""FastAPI application factory wiring sessions, banks and log storage."""
from __future__ import annotations

import json
import random
import threading
import uuid
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .. import __version__
from ..diagnosis import Diagnosis
from ..paramgen import ParamBank, load_bank_dir
from ..rules import apply_feedback_overrides, catalog_document
from ..session import ActionSet, IllegalAction, SessionState
from ..tasks import TaskKind, Topic, WorkedSolution
from .schemas import AnswerRequest, CreateSessionRequest
from .storage import EventLogStore, valid_session_id


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str,
                 actions: Optional[ActionSet] = None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.actions = actions


@dataclass
class _LiveSession:
    state: SessionState
    lock: threading.Lock


def _task_dict(state: SessionState) -> Optional[dict]:
    instance = state.current_instance()
    return None if instance is None else instance.to_record()


def _diag_dict(diag: Optional[Diagnosis]) -> Optional[dict]:
    return None if diag is None else diag.as_dict()


def _envelope(state: SessionState, request_kind: str,
              feedback: Optional[list] = None,
              diagnosis: Optional[Diagnosis] = None,
              worked_example: Optional[WorkedSolution] = None,
              video: Optional[dict] = None) -> dict:
    body = {
        "sessionId": state.session_id,
        "requestKind": request_kind,
        "context": state.current_context.value,
        "task": _task_dict(state),
        "feedback": None if feedback is None else [
            {"type": m.type.value,
             "specificity": None if m.specificity is None else m.specificity.value,
             "text": m.text} for m in feedback],
        "diagnosis": _diag_dict(diagnosis),
        "actions": state.actions().as_dict(),
        "workedExample": None if worked_example is None else worked_example.as_dict(),
        "video": video,
        "mainSolved": state.main_solved,
        "subtaskSolved": state.subtask_solved,
        "ended": state.ended,
    }
    return body


def create_app(banks: Optional[dict[TaskKind, ParamBank]] = None,
               banks_dir: Optional[Path | str] = None,
               logs_dir: Optional[Path | str] = None,
               seed: Optional[int] = None,
               feedback_overrides: Optional[Path | str] = None,
               static_dir: Optional[Path | str] = None,
               cors: bool = True) -> FastAPI:
    """Build the service. Banks must cover all eight task kinds; they come
    either preloaded or from a directory of tuned bank files."""
    if banks is None:
        if banks_dir is None:
            raise ValueError("either banks or banks_dir is required")
        banks = load_bank_dir(banks_dir)
    missing = [k.value for k in TaskKind if k not in banks]
    if missing:
        raise ValueError(f"missing parameter banks: {', '.join(missing)}")
    if feedback_overrides is not None:
        overrides = json.loads(Path(feedback_overrides).read_text(encoding="utf-8"))
        apply_feedback_overrides(overrides)

    store = EventLogStore(logs_dir) if logs_dir is not None else None
    registry: dict[str, _LiveSession] = {}
    registry_lock = threading.Lock()
    service_rng = random.Random(seed)

    app = FastAPI(title="extrapolation-tutor", version=__version__)
    if cors:
        app.add_middleware(CORSMiddleware, allow_origins=["*"],
                           allow_methods=["*"], allow_headers=["*"])

    @app.exception_handler(ApiError)
    def _on_api_error(request: Request, exc: ApiError) -> JSONResponse:
        error = {"code": exc.code, "message": exc.message}
        if exc.actions is not None:
            error["actions"] = exc.actions.as_dict()
        return JSONResponse(status_code=exc.status, content={"error": error})

    @app.exception_handler(RequestValidationError)
    def _on_validation_error(request: Request,
                             exc: RequestValidationError) -> JSONResponse:
        return JSONResponse(status_code=400, content={
            "error": {"code": "bad_request", "message": str(exc.errors())}})

    def get_live(session_id: str) -> _LiveSession:
        with registry_lock:
            live = registry.get(session_id)
        if live is None:
            raise ApiError(404, "unknown_session",
                           f"no session {session_id!r}")
        return live

    def guarded(live: _LiveSession, fn) -> dict:
        with live.lock:
            try:
                return fn(live.state)
            except IllegalAction as exc:
                raise ApiError(409, "illegal_action", str(exc),
                               actions=exc.actions) from exc
            except ValueError as exc:
                raise ApiError(400, "bad_request", str(exc)) from exc

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "version": __version__,
                "topics": [t.value for t in Topic]}

    @app.get("/rules")
    def rules() -> dict:
        return {"rules": catalog_document()}

    @app.post("/sessions", status_code=201)
    def create_session(req: CreateSessionRequest) -> dict:
        try:
            topic = Topic(req.topic)
        except ValueError as exc:
            raise ApiError(400, "bad_request",
                           f"unknown topic {req.topic!r}") from exc
        session_id = req.sessionId or uuid.uuid4().hex[:12]
        if not valid_session_id(session_id):
            raise ApiError(400, "bad_request",
                           f"invalid session id {session_id!r}")
        with registry_lock:
            if session_id in registry:
                raise ApiError(409, "session_exists",
                               f"session {session_id!r} already exists")
            if store is not None and store.exists(session_id):
                raise ApiError(409, "session_exists",
                               f"log for {session_id!r} already exists")
            draw_seed = service_rng.getrandbits(32)
            on_event = store.writer(session_id) if store is not None else None
            state = SessionState.start(topic, banks, session_id=session_id,
                                       seed=draw_seed, on_event=on_event)
            registry[session_id] = _LiveSession(state, threading.Lock())
        return _envelope(state, "create-session")

    @app.post("/sessions/{session_id}/answer")
    def submit_answer(session_id: str, req: AnswerRequest) -> dict:
        live = get_live(session_id)

        def run(state: SessionState) -> dict:
            messages, _ = state.submit(req.value, ground_truth=req.groundTruth)
            diag = (state.last_subtask_diagnosis
                    if state.current_context.value == "subtask"
                    else state.last_main_diagnosis)
            return _envelope(state, "submit-answer", feedback=messages,
                             diagnosis=diag)
        return guarded(live, run)

    @app.post("/sessions/{session_id}/subtask")
    def choose_subtask(session_id: str) -> dict:
        live = get_live(session_id)

        def run(state: SessionState) -> dict:
            state.choose_subtask()
            return _envelope(state, "choose-subtask")
        return guarded(live, run)

    @app.post("/sessions/{session_id}/return")
    def return_to_main(session_id: str) -> dict:
        live = get_live(session_id)

        def run(state: SessionState) -> dict:
            state.return_to_main()
            return _envelope(state, "return-to-main")
        return guarded(live, run)

    @app.post("/sessions/{session_id}/instruction")
    def view_instruction(session_id: str) -> dict:
        live = get_live(session_id)

        def run(state: SessionState) -> dict:
            video = state.view_instruction()
            return _envelope(state, "view-instruction", video=video)
        return guarded(live, run)

    @app.post("/sessions/{session_id}/worked-example")
    def view_worked_example(session_id: str) -> dict:
        live = get_live(session_id)

        def run(state: SessionState) -> dict:
            solution = state.view_worked_example()
            return _envelope(state, "view-worked-example",
                             worked_example=solution)
        return guarded(live, run)

    @app.post("/sessions/{session_id}/stuck")
    def declare_stuck(session_id: str) -> dict:
        live = get_live(session_id)

        def run(state: SessionState) -> dict:
            state.declare_stuck()
            return _envelope(state, "declare-stuck")
        return guarded(live, run)

    @app.post("/sessions/{session_id}/close")
    def close_session(session_id: str) -> dict:
        live = get_live(session_id)

        def run(state: SessionState) -> dict:
            state.close()
            return _envelope(state, "close-session")
        return guarded(live, run)

    @app.get("/sessions/{session_id}/log")
    def get_log(session_id: str) -> dict:
        with registry_lock:
            live = registry.get(session_id)
        if live is not None:
            with live.lock:
                events = list(live.state.log)
        elif store is not None:
            if not valid_session_id(session_id) or not store.exists(session_id):
                raise ApiError(404, "unknown_session",
                               f"no session {session_id!r}")
            events = store.read(session_id)
        else:
            raise ApiError(404, "unknown_session", f"no session {session_id!r}")
        return {"sessionId": session_id,
                "events": [{"seq": e.seq, "kind": e.kind.value,
                            "payload": e.payload, "ts": e.ts}
                           for e in events]}

    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles
        app.mount("/ui", StaticFiles(directory=str(static_dir), html=True),
                  name="ui")

    return app
