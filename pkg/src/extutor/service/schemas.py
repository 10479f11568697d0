"""Wire models. Field names are part of the contract; clients and test
fixtures rely on them bit-exactly."""
from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, Field


class CreateSessionRequest(BaseModel):
    topic: str
    sessionId: Optional[str] = Field(default=None, max_length=64)


class AnswerRequest(BaseModel):
    value: Optional[float] = None
    # simulator-only: the trace actually followed, embedded in the log
    groundTruth: Optional[dict] = None


class TaskModel(BaseModel):
    kind: str
    x: list[int]
    y: list[int]
    givenRate: Optional[float] = None
    question: str


class FeedbackModel(BaseModel):
    type: str
    specificity: Optional[str] = None
    text: str


class ActionsModel(BaseModel):
    canSubmit: bool
    canTryAgain: bool
    canSubtask: bool
    canViewDI: bool
    canViewWE: bool
    canReturnToMain: bool


class DiagnosisModel(BaseModel):
    outcome: str
    chain: list[str]
    rounding: Optional[int] = None
    matchedValue: Optional[float] = None


class WorkedExampleModel(BaseModel):
    steps: list[str]
    answer: float


class VideoModel(BaseModel):
    video: str
    placeholder: bool


class EnvelopeModel(BaseModel):
    sessionId: str
    requestKind: str
    context: str
    task: Optional[TaskModel] = None
    feedback: Optional[list[FeedbackModel]] = None
    diagnosis: Optional[DiagnosisModel] = None
    actions: ActionsModel
    workedExample: Optional[WorkedExampleModel] = None
    video: Optional[VideoModel] = None
    mainSolved: bool = False
    subtaskSolved: bool = False
    ended: bool = False


class EventModel(BaseModel):
    seq: int
    kind: str
    payload: dict
    ts: str


class LogResponse(BaseModel):
    sessionId: str
    events: list[EventModel]


class ErrorBody(BaseModel):
    code: str
    message: str
    actions: Optional[ActionsModel] = None


class ErrorEnvelope(BaseModel):
    error: ErrorBody
