"""Coding event logs into units of analysis and transition counts.

A unit spans the student behaviour from a starting state (the feedback
just received, a worked example, a return from a subtask, direct
instruction) to the next qualifying action (an improved or non-improved
attempt, opening a worked example, choosing a subtask, direct
instruction, or giving up). Consecutive units may share the boundary
event that closes one and opens the next.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .diagnosis import DiagnosisClass, TaskContext
from .session import Event, EventKind, SessionLogError, validate_log
from .tasks import TaskInstance, correct_answer


class StartCode(Enum):
    KR = "KR"
    ES = "ES"
    MES = "mES"
    WE = "WE"
    ST = "ST"
    DI = "DI"


class EndCode(Enum):
    IM = "IM"
    NIM = "nIM"
    WE = "WE"
    ST = "ST"
    DI = "DI"
    NCON = "nCON"


START_ORDER = (StartCode.KR, StartCode.ES, StartCode.MES,
               StartCode.WE, StartCode.ST, StartCode.DI)
END_ORDER = (EndCode.IM, EndCode.NIM, EndCode.WE,
             EndCode.ST, EndCode.DI, EndCode.NCON)


@dataclass(frozen=True)
class Unit:
    start: StartCode
    end: EndCode
    # first seq .. closing seq; when one event closes a unit and starts the
    # next (WE/ST/DI), both spans include that boundary seq
    event_span: tuple[int, int]
    mes_unknowable: bool = False


def improved(prev: Optional[float], new: float, instance: TaskInstance) -> bool:
    """No prior input counts as improvement; otherwise strictly closer wins."""
    if not math.isfinite(new):
        raise ValueError("new input must be a finite number")
    if prev is None:
        return True
    target = correct_answer(instance)
    return abs(new - target) < abs(prev - target)


def code_units(events: list[Event]) -> list[Unit]:
    """Deterministic segmentation of one session log into units."""
    validate_log(events)
    units: list[Unit] = []
    open_start: Optional[StartCode] = None
    open_first: Optional[int] = None
    open_flag = False
    prev_close = events[0].seq  # SessionStart owns the prefix boundary
    context = TaskContext.MAIN
    instances: dict[TaskContext, Optional[TaskInstance]] = {
        TaskContext.MAIN: None, TaskContext.SUBTASK: None}
    prev_inputs: dict[TaskContext, Optional[float]] = {
        TaskContext.MAIN: None, TaskContext.SUBTASK: None}
    pending_truth: Optional[dict] = None

    def open_unit(code: StartCode, first: int, flag: bool = False) -> None:
        nonlocal open_start, open_first, open_flag
        open_start = code
        open_first = first
        open_flag = flag

    def close_unit(code: EndCode, seq: int) -> None:
        nonlocal open_start, open_first, open_flag, prev_close
        units.append(Unit(open_start, code, (open_first, seq), open_flag))
        open_start = None
        open_first = None
        open_flag = False
        prev_close = seq

    for event in events:
        kind = event.kind
        p = event.payload
        if kind is EventKind.TASK_SHOWN:
            ctx = TaskContext(p["context"])
            try:
                instances[ctx] = TaskInstance.from_record(p)
            except Exception as exc:
                raise SessionLogError(f"bad TaskShown payload: {exc}") from exc
            prev_inputs[ctx] = None
        elif kind is EventKind.ANSWER_SUBMITTED:
            pending_truth = p.get("groundTruth")
            value = p["value"]
            if value is None:
                continue  # empty check: no improvement judgement possible
            instance = instances[context]
            if instance is None:
                raise SessionLogError("answer submitted before any task")
            if open_start is not None:
                code = EndCode.IM if improved(prev_inputs[context], value,
                                              instance) else EndCode.NIM
                close_unit(code, event.seq)
            prev_inputs[context] = value
        elif kind is EventKind.FEEDBACK_GIVEN:
            if open_start is not None:
                continue  # a null submission's marking extends the open unit
            outcome = DiagnosisClass(p["outcome"])
            if outcome is DiagnosisClass.BUGGY:
                truth = pending_truth
                if truth is None:
                    open_unit(StartCode.ES, prev_close + 1, flag=True)
                elif list(truth.get("chain", [])) != list(p["chain"]):
                    open_unit(StartCode.MES, prev_close + 1)
                else:
                    open_unit(StartCode.ES, prev_close + 1)
            else:
                open_unit(StartCode.KR, prev_close + 1)
        elif kind is EventKind.SUBTASK_ENTERED:
            if open_start is not None:
                close_unit(EndCode.ST, event.seq)
            context = TaskContext.SUBTASK
        elif kind is EventKind.RETURNED_TO_MAIN:
            # the boundary event ends one unit and starts the next
            shared = open_start is not None
            if shared:
                close_unit(EndCode.ST, event.seq)
            context = TaskContext.MAIN
            open_unit(StartCode.ST, event.seq if shared else prev_close + 1)
        elif kind is EventKind.WE_VIEWED:
            shared = open_start is not None
            if shared:
                close_unit(EndCode.WE, event.seq)
            open_unit(StartCode.WE, event.seq if shared else prev_close + 1)
        elif kind is EventKind.DI_VIEWED:
            shared = open_start is not None
            if shared:
                close_unit(EndCode.DI, event.seq)
            open_unit(StartCode.DI, event.seq if shared else prev_close + 1)
        elif kind is EventKind.CANNOT_CONTINUE:
            if open_start is not None:
                close_unit(EndCode.NCON, event.seq)
        # SessionStart, NewParamsDrawn, SessionEnd: no unit boundary
    return units  # a trailing open unit is dropped


@dataclass
class TransitionMatrix:
    counts: dict[StartCode, dict[EndCode, int]]

    @staticmethod
    def empty() -> "TransitionMatrix":
        return TransitionMatrix(
            {s: {e: 0 for e in END_ORDER} for s in START_ORDER})

    def add(self, unit: Unit) -> None:
        self.counts[unit.start][unit.end] += 1

    def row_total(self, start: StartCode) -> int:
        return sum(self.counts[start].values())

    def col_total(self, end: EndCode) -> int:
        return sum(self.counts[s][end] for s in START_ORDER)

    @property
    def grand_total(self) -> int:
        return sum(self.row_total(s) for s in START_ORDER)

    def render(self) -> str:
        width = 6
        header = "Start\\End".ljust(10) + "".join(
            e.value.rjust(width) for e in END_ORDER) + "Total".rjust(width + 1)
        lines = [header]
        for s in START_ORDER:
            line = s.value.ljust(10) + "".join(
                str(self.counts[s][e]).rjust(width) for e in END_ORDER)
            lines.append(line + str(self.row_total(s)).rjust(width + 1))
        total_line = "Total".ljust(10) + "".join(
            str(self.col_total(e)).rjust(width) for e in END_ORDER)
        lines.append(total_line + str(self.grand_total).rjust(width + 1))
        return "\n".join(lines)


def transition_matrix(units: list[Unit]) -> TransitionMatrix:
    matrix = TransitionMatrix.empty()
    for unit in units:
        matrix.add(unit)
    return matrix
