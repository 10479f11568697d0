"""Session state machine: feedback gating and the append-only event log.

Every state change is an event; replaying a log against a fresh machine
reproduces the same logical state, which is what the persistence layer
and the analytics coder rely on.

Gating in brief: direct instruction plays at most once and only from the
main task; the main worked example unlocks after the first return from a
subtask and redraws the main parameters when viewed; subtask worked
examples are always available and never redraw.
"""
from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from typing import Callable, Optional

from .diagnosis import (
    Diagnosis,
    DiagnosisClass,
    FeedbackMessage,
    TaskContext,
    diagnose,
    feedback_for,
    route_subtask,
)
from .paramgen import ParamBank, draw
from .tasks import (
    ParamSet,
    TaskInstance,
    TaskKind,
    Topic,
    WorkedSolution,
    instantiate,
    main_kind,
    topic_kinds,
    worked_solution,
)


class EventKind(Enum):
    SESSION_START = "SessionStart"
    TASK_SHOWN = "TaskShown"
    ANSWER_SUBMITTED = "AnswerSubmitted"
    FEEDBACK_GIVEN = "FeedbackGiven"
    SUBTASK_ENTERED = "SubtaskEntered"
    RETURNED_TO_MAIN = "ReturnedToMain"
    WE_VIEWED = "WEViewed"
    DI_VIEWED = "DIViewed"
    NEW_PARAMS_DRAWN = "NewParamsDrawn"
    CANNOT_CONTINUE = "CannotContinue"
    SESSION_END = "SessionEnd"


@dataclass(frozen=True)
class Event:
    seq: int
    kind: EventKind
    payload: dict
    ts: str

    def to_json_line(self) -> str:
        return json.dumps({"seq": self.seq, "kind": self.kind.value,
                           "payload": self.payload, "ts": self.ts})

    @staticmethod
    def from_json_line(line: str) -> "Event":
        data = json.loads(line)
        return Event(seq=data["seq"], kind=EventKind(data["kind"]),
                     payload=data["payload"], ts=data["ts"])


@dataclass(frozen=True)
class ActionSet:
    can_submit: bool = False
    can_try_again: bool = False
    can_subtask: bool = False
    can_view_di: bool = False
    can_view_we: bool = False
    can_return_to_main: bool = False

    def as_dict(self) -> dict:
        return {
            "canSubmit": self.can_submit,
            "canTryAgain": self.can_try_again,
            "canSubtask": self.can_subtask,
            "canViewDI": self.can_view_di,
            "canViewWE": self.can_view_we,
            "canReturnToMain": self.can_return_to_main,
        }


class IllegalAction(RuntimeError):
    """The requested operation is outside the current ActionSet."""

    def __init__(self, message: str, actions: ActionSet):
        super().__init__(message)
        self.actions = actions


class SessionLogError(ValueError):
    """An event log fails replay validation."""


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


class SessionState:
    """One student's run at a main task, with optional subtask detours."""

    def __init__(self, session_id: str, topic: Topic,
                 banks: Optional[dict[TaskKind, ParamBank]] = None,
                 seed: Optional[int] = None,
                 on_event: Optional[Callable[[Event], None]] = None):
        self.session_id = session_id
        self.topic = topic
        self.banks = banks
        self.draw_seed = seed
        self.rng = random.Random(seed) if banks is not None else None
        self.on_event = on_event
        self.main_instance: Optional[TaskInstance] = None
        self.current_context = TaskContext.MAIN
        self.current_subtask: Optional[TaskInstance] = None
        self.di_used = False
        self.subtask_visited = False
        self.we_main_unlocked = False
        self.last_main_input: Optional[float] = None
        self.last_subtask_input: Optional[float] = None
        self.last_main_diagnosis: Optional[Diagnosis] = None
        self.last_subtask_diagnosis: Optional[Diagnosis] = None
        self.main_solved = False
        self.subtask_solved = False
        self.main_attempts = 0
        self.subtask_attempts = 0
        self.ended = False
        self.log: list[Event] = []
        self.clock = 1
        self._last_drawn: dict[TaskKind, ParamSet] = {}

    # ------------------------------------------------------------------
    # construction

    @classmethod
    def start(cls, topic: Topic, banks: dict[TaskKind, ParamBank],
              session_id: str = "session", seed: Optional[int] = None,
              on_event: Optional[Callable[[Event], None]] = None) -> "SessionState":
        """Open a session on the topic's main task.

        `banks` must hold a matching bank for each of the topic's four
        kinds; the main parameters are drawn immediately.
        """
        for kind in topic_kinds(topic):
            bank = banks.get(kind)
            if bank is None:
                raise ValueError(f"missing parameter bank for {kind.value}")
            if bank.kind is not kind:
                raise ValueError(
                    f"bank for {kind.value} actually holds {bank.kind.value}")
            if not bank.entries:
                raise ValueError(f"empty parameter bank for {kind.value}")
        if seed is None:
            seed = random.getrandbits(32)
        state = cls(session_id, topic, banks, seed, on_event)
        state._emit(EventKind.SESSION_START,
                    topic=topic.value, sessionId=session_id, drawSeed=seed,
                    howToVideo="placeholder")
        state._show_task(TaskContext.MAIN, state._draw_instance(main_kind(topic)))
        return state

    # ------------------------------------------------------------------
    # helpers

    def _emit(self, event_kind: EventKind, **payload) -> Event:
        event = Event(seq=self.clock, kind=event_kind, payload=payload, ts=_now())
        self.clock += 1
        self.log.append(event)
        if self.on_event is not None:
            self.on_event(event)
        return event

    def _draw_instance(self, kind: TaskKind) -> TaskInstance:
        params = draw(self.banks[kind], self.rng, exclude=self._last_drawn.get(kind))
        self._last_drawn[kind] = params
        return instantiate(kind, params)

    def _show_task(self, context: TaskContext, instance: TaskInstance) -> None:
        if context is TaskContext.MAIN:
            self.main_instance = instance
            self.main_solved = False
            self.main_attempts = 0
            self.last_main_input = None
            self.last_main_diagnosis = None
        else:
            self.current_subtask = instance
            self.subtask_solved = False
            self.subtask_attempts = 0
            self.last_subtask_input = None
            self.last_subtask_diagnosis = None
        self._emit(EventKind.TASK_SHOWN, context=context.value,
                   **instance.to_record())

    def current_instance(self) -> TaskInstance:
        if self.current_context is TaskContext.SUBTASK:
            return self.current_subtask
        return self.main_instance

    def _require(self, allowed: bool, what: str) -> None:
        if not allowed:
            raise IllegalAction(what, self.actions())

    # ------------------------------------------------------------------
    # action availability

    def actions(self) -> ActionSet:
        if self.ended or self.main_instance is None:
            return ActionSet()
        in_main = self.current_context is TaskContext.MAIN
        solved = self.main_solved if in_main else self.subtask_solved
        attempts = self.main_attempts if in_main else self.subtask_attempts
        return ActionSet(
            can_submit=not solved,
            can_try_again=not solved and attempts > 0,
            can_subtask=in_main and not self.main_solved,
            can_view_di=in_main and not self.di_used,
            can_view_we=self.we_main_unlocked if in_main else True,
            can_return_to_main=not in_main,
        )

    # ------------------------------------------------------------------
    # operations

    def submit(self, value: Optional[float],
               ground_truth: Optional[dict] = None
               ) -> tuple[list[FeedbackMessage], ActionSet]:
        """Diagnose an answer and log the attempt plus its feedback.

        `ground_truth` is the simulator's actual trace; real clients leave
        it unset. Non-finite values are rejected before any log mutation.
        """
        self._require(not self.ended, "session is closed")
        self._require(self.actions().can_submit, "task already solved")
        if value is not None:
            value = float(value)
            if not math.isfinite(value):
                raise ValueError("submitted answer must be a finite number")
        context = self.current_context
        instance = self.current_instance()
        diag = diagnose(instance, value)
        messages = feedback_for(diag, context, instance)
        payload = {"context": context.value, "value": value,
                   "kind": instance.kind.value}
        if ground_truth is not None:
            payload["groundTruth"] = ground_truth
        self._emit(EventKind.ANSWER_SUBMITTED, **payload)
        self._emit(EventKind.FEEDBACK_GIVEN, context=context.value,
                   outcome=diag.outcome.value, chain=list(diag.chain),
                   rounding=diag.rounding, matchedValue=diag.matched_value,
                   feedbackTypes=[m.type.value for m in messages])
        if context is TaskContext.MAIN:
            self.main_attempts += 1
            if value is not None:
                self.last_main_input = value
            self.last_main_diagnosis = diag
            if diag.outcome is DiagnosisClass.CORRECT:
                self.main_solved = True
        else:
            self.subtask_attempts += 1
            if value is not None:
                self.last_subtask_input = value
            self.last_subtask_diagnosis = diag
            if diag.outcome is DiagnosisClass.CORRECT:
                self.subtask_solved = True
        return messages, self.actions()

    def choose_subtask(self) -> TaskInstance:
        """Enter the subtask matching the last main diagnosis.

        Without a prior attempt the choice counts as no-input and routes to
        the simpler variant.
        """
        self._require(not self.ended, "session is closed")
        self._require(self.current_context is TaskContext.MAIN,
                      "already inside a subtask")
        self._require(self.actions().can_subtask, "no subtask to enter")
        diag = self.last_main_diagnosis or Diagnosis(DiagnosisClass.NO_INPUT)
        kind = route_subtask(diag, self.main_instance.kind)
        assert kind is not None  # Correct diagnoses never reach here
        self._emit(EventKind.SUBTASK_ENTERED, kind=kind.value,
                   routedFrom=diag.outcome.value, chain=list(diag.chain))
        self.current_context = TaskContext.SUBTASK
        self.subtask_visited = True
        self._show_task(TaskContext.SUBTASK, self._draw_instance(kind))
        return self.current_subtask

    def return_to_main(self) -> TaskInstance:
        """Back to the unchanged main task; unlocks the main worked example."""
        self._require(not self.ended, "session is closed")
        self._require(self.current_context is TaskContext.SUBTASK,
                      "not inside a subtask")
        self._emit(EventKind.RETURNED_TO_MAIN)
        self.current_context = TaskContext.MAIN
        self.current_subtask = None
        self.we_main_unlocked = True
        return self.main_instance

    def view_instruction(self) -> dict:
        """Direct instruction: one viewing per session, main context only."""
        self._require(not self.ended, "session is closed")
        if self.di_used:
            raise IllegalAction("instruction already viewed", self.actions())
        self._require(self.actions().can_view_di,
                      "instruction is not available here")
        self.di_used = True
        self._emit(EventKind.DI_VIEWED)
        return {"video": f"direct-instruction-{self.topic.value}",
                "placeholder": True}

    def view_worked_example(self) -> WorkedSolution:
        """Show the worked solution; in the main task this redraws the
        parameters so the next attempt starts from fresh values."""
        self._require(not self.ended, "session is closed")
        self._require(self.actions().can_view_we,
                      "worked example is not unlocked")
        context = self.current_context
        instance = self.current_instance()
        solution = worked_solution(instance)
        self._emit(EventKind.WE_VIEWED, context=context.value,
                   kind=instance.kind.value)
        if context is TaskContext.MAIN:
            fresh = self._draw_instance(self.main_instance.kind)
            self._emit(EventKind.NEW_PARAMS_DRAWN, context=context.value)
            self._show_task(TaskContext.MAIN, fresh)
        return solution

    def declare_stuck(self) -> None:
        self._require(not self.ended, "session is closed")
        self._emit(EventKind.CANNOT_CONTINUE, context=self.current_context.value)

    def close(self) -> None:
        self._require(not self.ended, "session is closed")
        self._emit(EventKind.SESSION_END)
        self.ended = True

    # ------------------------------------------------------------------
    # event sourcing

    def snapshot(self) -> dict:
        """Logical state for replay-equality comparison (no RNG, no banks)."""
        def rec(inst: Optional[TaskInstance]):
            return inst.to_record() if inst else None

        def diag(d: Optional[Diagnosis]):
            return d.as_dict() if d else None

        return {
            "sessionId": self.session_id,
            "topic": self.topic.value,
            "context": self.current_context.value,
            "main": rec(self.main_instance),
            "subtask": rec(self.current_subtask),
            "diUsed": self.di_used,
            "subtaskVisited": self.subtask_visited,
            "weMainUnlocked": self.we_main_unlocked,
            "lastMainInput": self.last_main_input,
            "lastSubtaskInput": self.last_subtask_input,
            "lastMainDiagnosis": diag(self.last_main_diagnosis),
            "lastSubtaskDiagnosis": diag(self.last_subtask_diagnosis),
            "mainSolved": self.main_solved,
            "subtaskSolved": self.subtask_solved,
            "mainAttempts": self.main_attempts,
            "subtaskAttempts": self.subtask_attempts,
            "ended": self.ended,
            "clock": self.clock,
            "events": len(self.log),
        }

    @classmethod
    def replay(cls, events: list[Event]) -> "SessionState":
        """Rebuild the logical state from a log alone (no banks, no RNG)."""
        validate_log(events)
        first = events[0]
        state = cls(first.payload["sessionId"], Topic(first.payload["topic"]))
        state.draw_seed = first.payload.get("drawSeed")
        for event in events:
            state._apply(event)
        state.log = list(events)
        state.clock = events[-1].seq + 1
        return state

    def _apply(self, event: Event) -> None:
        p = event.payload
        k = event.kind
        if k is EventKind.SESSION_START:
            return
        if k is EventKind.TASK_SHOWN:
            context = TaskContext(p["context"])
            instance = TaskInstance.from_record(p)
            if context is TaskContext.MAIN:
                self.main_instance = instance
                self.main_solved = False
                self.main_attempts = 0
                self.last_main_input = None
                self.last_main_diagnosis = None
            else:
                self.current_subtask = instance
                self.subtask_solved = False
                self.subtask_attempts = 0
                self.last_subtask_input = None
                self.last_subtask_diagnosis = None
        elif k is EventKind.ANSWER_SUBMITTED:
            context = TaskContext(p["context"])
            value = p["value"]
            if context is TaskContext.MAIN:
                self.main_attempts += 1
                if value is not None:
                    self.last_main_input = value
            else:
                self.subtask_attempts += 1
                if value is not None:
                    self.last_subtask_input = value
        elif k is EventKind.FEEDBACK_GIVEN:
            diag = Diagnosis(DiagnosisClass(p["outcome"]), tuple(p["chain"]),
                             p.get("rounding"), p.get("matchedValue"))
            if TaskContext(p["context"]) is TaskContext.MAIN:
                self.last_main_diagnosis = diag
                if diag.outcome is DiagnosisClass.CORRECT:
                    self.main_solved = True
            else:
                self.last_subtask_diagnosis = diag
                if diag.outcome is DiagnosisClass.CORRECT:
                    self.subtask_solved = True
        elif k is EventKind.SUBTASK_ENTERED:
            self.current_context = TaskContext.SUBTASK
            self.subtask_visited = True
        elif k is EventKind.RETURNED_TO_MAIN:
            self.current_context = TaskContext.MAIN
            self.current_subtask = None
            self.we_main_unlocked = True
        elif k is EventKind.DI_VIEWED:
            self.di_used = True
        elif k is EventKind.SESSION_END:
            self.ended = True
        # WE_VIEWED, NEW_PARAMS_DRAWN, CANNOT_CONTINUE carry no state change
        # beyond the TaskShown that follows a main redraw.


def validate_log(events: list[Event]) -> None:
    """Structural checks shared by replay and the analytics coder."""
    if not events:
        raise SessionLogError("empty log")
    if events[0].kind is not EventKind.SESSION_START or events[0].seq != 1:
        raise SessionLogError("log must begin with SessionStart at seq 1")
    for i, event in enumerate(events):
        if event.seq != i + 1:
            raise SessionLogError(
                f"seq gap: expected {i + 1}, found {event.seq}")
        if event.kind is EventKind.ANSWER_SUBMITTED:
            if i + 1 >= len(events) or events[i + 1].kind is not EventKind.FEEDBACK_GIVEN:
                raise SessionLogError(
                    "AnswerSubmitted must be immediately followed by FeedbackGiven")


def dump_log(events: list[Event]) -> str:
    return "".join(e.to_json_line() + "\n" for e in events)


def parse_log(text: str) -> list[Event]:
    events = []
    for line in text.splitlines():
        line = line.strip()
        if line:
            events.append(Event.from_json_line(line))
    return events
