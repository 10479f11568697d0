"""Final-answer diagnosis by matching against enumerated traces.

The engine never sees intermediate work: it reconstructs the most likely
rule chain from the submitted number alone, then routes detectable errors
to the subtask that trains the faulty step.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from . import tasks
from .rules import (
    ROUNDINGS,
    RULES_BY_ID,
    Stage,
    Trace,
    WHOLE_TASK_COMBOS,
    catalog,
    correct_chain,
    eval_trace,
    render_high_feedback,
)
from .tasks import TaskInstance, TaskKind

# absolute tolerance around every trace value; half an ulp at two decimals
MATCH_TOLERANCE = 0.005


class DiagnosisClass(Enum):
    CORRECT = "Correct"
    BUGGY = "Buggy"
    UNDETECTABLE = "Undetectable"
    NO_INPUT = "NoInput"


class TaskContext(Enum):
    MAIN = "main"
    SUBTASK = "subtask"


class FeedbackType(Enum):
    KR = "KR"
    TA = "TA"
    ES = "ES"
    WE = "WE"
    DI = "DI"


class Specificity(Enum):
    LOW = "Low"
    HIGH = "High"


@dataclass(frozen=True)
class Diagnosis:
    outcome: DiagnosisClass
    chain: tuple[str, ...] = ()
    rounding: Optional[int] = None
    matched_value: Optional[float] = None

    def __post_init__(self):
        if (self.outcome is DiagnosisClass.BUGGY) != bool(self.chain):
            raise ValueError("chain must be non-empty exactly for Buggy diagnoses")

    def as_dict(self) -> dict:
        return {
            "outcome": self.outcome.value,
            "chain": list(self.chain),
            "rounding": self.rounding,
            "matchedValue": self.matched_value,
        }


@dataclass(frozen=True)
class FeedbackMessage:
    type: FeedbackType
    specificity: Specificity
    text: str

    def as_dict(self) -> dict:
        return {"type": self.type.value, "specificity": self.specificity.value,
                "text": self.text}


def enumerate_traces(instance: TaskInstance) -> tuple[Trace, ...]:
    """Every legal trace for the instance, evaluated, deduplicated.

    Main/simpler kinds combine each rate rule with each extrapolation rule
    across all truncation depths, plus the whole-task shortcuts. Given-rate
    and compute-rate kinds have single-stage traces with no truncation
    variants (the rate is given exactly / is itself the answer).
    """
    kind = instance.kind
    rules = catalog(kind)
    rate_rules = [r for r in rules if r.stage is Stage.RATE]
    ext_rules = [r for r in rules if r.stage is Stage.EXTRAPOLATE]
    whole_rules = [r for r in rules if r.stage is Stage.WHOLE_TASK]
    combos: list[tuple[tuple[str, ...], Optional[int]]] = []
    if kind.is_main or kind.is_simpler:
        for rr in rate_rules:
            for er in ext_rules:
                for rounding in ROUNDINGS:
                    combos.append(((rr.id, er.id), rounding))
        for wr in whole_rules:
            combos.append(((wr.id,), None))
    elif kind.is_given_rate:
        combos.extend(((er.id,), None) for er in ext_rules)
    else:
        combos.extend(((rr.id,), None) for rr in rate_rules)
    seen = set()
    out = []
    for chain, rounding in combos:
        key = (chain, rounding)
        if key in seen:
            continue
        seen.add(key)
        value = eval_trace(instance, Trace(chain, rounding))
        out.append(Trace(chain, rounding, value))
    return tuple(out)


def matches(submitted: float, value: float) -> bool:
    """True when the submission is the trace value or a rounding of it."""
    if abs(submitted - value) <= MATCH_TOLERANCE:
        return True
    return any(submitted == round(value, k) for k in range(4))


# tie-break order for truncation depth: no truncation first, then the
# least-perturbed variants (deeper truncation is closer to the raw rate)
_ROUNDING_RANK = {None: 0, 3: 1, 2: 2, 1: 3}


def diagnose(instance: TaskInstance, submitted: Optional[float]) -> Diagnosis:
    """Classify a submitted final answer for the instance."""
    if submitted is None:
        return Diagnosis(DiagnosisClass.NO_INPUT)
    submitted = float(submitted)
    if not math.isfinite(submitted):
        raise ValueError("submitted answer must be a finite number")
    correct = correct_chain(instance.kind)
    matched = [t for t in enumerate_traces(instance) if matches(submitted, t.value)]
    for t in matched:
        if t.rules == correct:
            return Diagnosis(DiagnosisClass.CORRECT, matched_value=t.value)
    if matched:
        def rank(t: Trace):
            n_buggy = sum(RULES_BY_ID[rid].buggy for rid in t.rules)
            return (n_buggy, _ROUNDING_RANK[t.rounding], t.rules)

        best = min(matched, key=rank)
        return Diagnosis(DiagnosisClass.BUGGY, best.rules, best.rounding, best.value)
    return Diagnosis(DiagnosisClass.UNDETECTABLE)


def route_subtask(diag: Diagnosis, kind: TaskKind) -> Optional[TaskKind]:
    """Subtask kind an error routes to; None when there is nothing to train.

    Only main-kind diagnoses route: subtasks do not nest.
    """
    if not kind.is_main:
        raise ValueError(f"routing applies to main kinds, not {kind.value}")
    topic = kind.topic
    if diag.outcome in (DiagnosisClass.NO_INPUT, DiagnosisClass.UNDETECTABLE):
        return tasks.simpler_kind(topic)
    if diag.outcome is DiagnosisClass.CORRECT:
        return None
    if diag.chain in WHOLE_TASK_COMBOS:
        return WHOLE_TASK_COMBOS[diag.chain]
    chain_rules = [RULES_BY_ID[rid] for rid in diag.chain]
    for r in chain_rules:
        if r.stage is Stage.WHOLE_TASK:
            return r.route_to
    for r in chain_rules:
        if r.stage is Stage.RATE and r.buggy:
            return r.route_to
    for r in chain_rules:
        if r.buggy:
            return r.route_to
    raise ValueError("buggy diagnosis without a buggy rule")  # unreachable


_KR_TEXT = {
    DiagnosisClass.CORRECT: "That is correct. Well done!",
    DiagnosisClass.BUGGY: "That is not correct.",
    DiagnosisClass.UNDETECTABLE: "That is not correct.",
    DiagnosisClass.NO_INPUT: "No answer was entered.",
}


def feedback_for(diag: Diagnosis, context: TaskContext,
                 instance: TaskInstance) -> list[FeedbackMessage]:
    """Messages shown for a diagnosis: KR always, ES for detected errors
    (low specificity in the main task, high in subtasks), plus a try-again
    affordance whenever the answer was not correct."""
    out = [FeedbackMessage(FeedbackType.KR, Specificity.LOW, _KR_TEXT[diag.outcome])]
    if diag.outcome is DiagnosisClass.BUGGY:
        rule = next(RULES_BY_ID[rid] for rid in diag.chain if RULES_BY_ID[rid].buggy)
        if context is TaskContext.MAIN:
            out.append(FeedbackMessage(FeedbackType.ES, Specificity.LOW,
                                       rule.feedback_low))
        else:
            out.append(FeedbackMessage(FeedbackType.ES, Specificity.HIGH,
                                       render_high_feedback(rule, instance)))
    if diag.outcome is not DiagnosisClass.CORRECT:
        out.append(FeedbackMessage(FeedbackType.TA, Specificity.LOW,
                                   "You can try the task again."))
    return out
