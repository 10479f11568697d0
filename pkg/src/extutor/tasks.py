"""Task kinds, parameter sets, and correct-answer arithmetic.

A task shows a small x/y table and asks for the value hidden behind a
question mark. Main kinds have three x-columns and extrapolate past the
last given point; the three subtask kinds either simplify the table
(consecutive x), give the rate, or ask only for the rate.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

COORD_MIN = 10
COORD_MAX = 99
SLOPE_GIVEN_MIN = 2
SLOPE_GIVEN_MAX = 12
FACTOR_GIVEN_MIN = 0.850
FACTOR_GIVEN_MAX = 1.250
# admissible derived values for the exponential main/simpler kinds
FACTOR_MIN, FACTOR_MAX = 0.5, 2.0
ANSWER_MIN, ANSWER_MAX = 1.0, 500.0


class Topic(Enum):
    LINEAR = "linear"
    EXPONENTIAL = "exponential"


class TaskKind(Enum):
    LINEAR_MAIN = "LinearMain"
    LINEAR_SIMPLER = "LinearSimpler"
    LINEAR_GIVEN_SLOPE = "LinearGivenSlope"
    LINEAR_COMPUTE_SLOPE = "LinearComputeSlope"
    EXP_MAIN = "ExpMain"
    EXP_SIMPLER = "ExpSimpler"
    EXP_GIVEN_FACTOR = "ExpGivenFactor"
    EXP_COMPUTE_FACTOR = "ExpComputeFactor"

    @property
    def topic(self) -> Topic:
        if self in (TaskKind.LINEAR_MAIN, TaskKind.LINEAR_SIMPLER,
                    TaskKind.LINEAR_GIVEN_SLOPE, TaskKind.LINEAR_COMPUTE_SLOPE):
            return Topic.LINEAR
        return Topic.EXPONENTIAL

    @property
    def is_main(self) -> bool:
        return self in (TaskKind.LINEAR_MAIN, TaskKind.EXP_MAIN)

    @property
    def is_simpler(self) -> bool:
        return self in (TaskKind.LINEAR_SIMPLER, TaskKind.EXP_SIMPLER)

    @property
    def is_given_rate(self) -> bool:
        return self in (TaskKind.LINEAR_GIVEN_SLOPE, TaskKind.EXP_GIVEN_FACTOR)

    @property
    def is_compute_rate(self) -> bool:
        return self in (TaskKind.LINEAR_COMPUTE_SLOPE, TaskKind.EXP_COMPUTE_FACTOR)

    @property
    def column_count(self) -> int:
        return 3 if (self.is_main or self.is_simpler) else 2


def main_kind(topic: Topic) -> TaskKind:
    return TaskKind.LINEAR_MAIN if topic is Topic.LINEAR else TaskKind.EXP_MAIN


def simpler_kind(topic: Topic) -> TaskKind:
    return TaskKind.LINEAR_SIMPLER if topic is Topic.LINEAR else TaskKind.EXP_SIMPLER


def given_rate_kind(topic: Topic) -> TaskKind:
    return TaskKind.LINEAR_GIVEN_SLOPE if topic is Topic.LINEAR else TaskKind.EXP_GIVEN_FACTOR


def compute_rate_kind(topic: Topic) -> TaskKind:
    return TaskKind.LINEAR_COMPUTE_SLOPE if topic is Topic.LINEAR else TaskKind.EXP_COMPUTE_FACTOR


def topic_kinds(topic: Topic) -> tuple[TaskKind, ...]:
    return (main_kind(topic), simpler_kind(topic),
            given_rate_kind(topic), compute_rate_kind(topic))


class ConstraintViolation(ValueError):
    """A ParamSet breaks one or more named parameter constraints."""

    def __init__(self, kind: "TaskKind", names: list[str]):
        self.kind = kind
        self.names = names
        super().__init__(f"{kind.value}: constraint violation: {', '.join(names)}")


@dataclass(frozen=True)
class ParamSet:
    """Integer table coordinates plus the given rate where applicable.

    x holds 3 values for main/simpler kinds and 2 otherwise; y holds the
    known cells only (2 for main/simpler/compute-rate, 1 for given-rate).
    """

    x: tuple[int, ...]
    y: tuple[int, ...]
    given_rate: Optional[float] = None

    def as_dict(self) -> dict:
        return {"x": list(self.x), "y": list(self.y), "givenRate": self.given_rate}

    @staticmethod
    def from_dict(data: dict) -> "ParamSet":
        return ParamSet(x=tuple(data["x"]), y=tuple(data["y"]),
                        given_rate=data.get("givenRate"))


@dataclass(frozen=True)
class Constraint:
    name: str
    description: str
    check: Callable[[ParamSet], bool]


def _in_coord_range(values: tuple[int, ...]) -> bool:
    return all(isinstance(v, int) and not isinstance(v, bool)
               and COORD_MIN <= v <= COORD_MAX for v in values)


def _is_integral(value: float) -> bool:
    return abs(value - round(value)) < 1e-9


def _three_decimals(value: float) -> bool:
    return abs(value * 1000 - round(value * 1000)) < 1e-6


def _true_rate(kind: TaskKind, p: ParamSet) -> float:
    """Slope or single-step growth factor implied by the first two points."""
    dx = p.x[1] - p.x[0]
    if kind.topic is Topic.LINEAR:
        return (p.y[1] - p.y[0]) / dx
    return (p.y[1] / p.y[0]) ** (1.0 / dx)


def parameter_constraints(kind: TaskKind) -> tuple[Constraint, ...]:
    """Machine-checkable constraint set for the kind, in a fixed order."""
    ncols = kind.column_count
    ny = 1 if kind.is_given_rate else 2
    out: list[Constraint] = [
        Constraint("x-count", f"exactly {ncols} x-coordinates",
                   lambda p, n=ncols: len(p.x) == n),
        Constraint("y-count", f"exactly {ny} given y-values",
                   lambda p, n=ny: len(p.y) == n),
        Constraint("coord-range",
                   f"all coordinates are integers in [{COORD_MIN}, {COORD_MAX}]",
                   lambda p: _in_coord_range(p.x) and _in_coord_range(p.y)),
        Constraint("x-increasing", "x-coordinates strictly increase",
                   lambda p: all(a < b for a, b in zip(p.x, p.x[1:]))),
    ]
    if kind.is_simpler:
        out.append(Constraint("x-consecutive", "x2 = x1 + 1 (consecutive x-coordinates)",
                              lambda p: len(p.x) >= 2 and p.x[1] == p.x[0] + 1))
    if ny == 2:
        out.append(Constraint("y-distinct", "y1 and y2 differ",
                              lambda p: len(p.y) == 2 and p.y[0] != p.y[1]))
    if kind.topic is Topic.EXPONENTIAL:
        out.append(Constraint("y-positive", "y1, y2 > 0",
                              lambda p: all(v > 0 for v in p.y)))
    if kind.is_given_rate:
        if kind.topic is Topic.LINEAR:
            out.append(Constraint(
                "slope-given",
                f"given slope is an integer in [{SLOPE_GIVEN_MIN}, {SLOPE_GIVEN_MAX}]",
                lambda p: p.given_rate is not None and _is_integral(p.given_rate)
                and SLOPE_GIVEN_MIN <= p.given_rate <= SLOPE_GIVEN_MAX))
        else:
            out.append(Constraint(
                "factor-given",
                f"given factor has 3 decimals in [{FACTOR_GIVEN_MIN}, {FACTOR_GIVEN_MAX}]",
                lambda p: p.given_rate is not None and _three_decimals(p.given_rate)
                and FACTOR_GIVEN_MIN <= p.given_rate <= FACTOR_GIVEN_MAX))
    else:
        out.append(Constraint("rate-absent", "no given rate for this kind",
                              lambda p: p.given_rate is None))
    if kind in (TaskKind.EXP_MAIN, TaskKind.EXP_SIMPLER):
        def factor_ok(p: ParamSet) -> bool:
            try:
                return FACTOR_MIN <= _true_rate(kind, p) <= FACTOR_MAX
            except (ZeroDivisionError, ValueError, IndexError):
                return False

        def answer_ok(p: ParamSet) -> bool:
            try:
                g = _true_rate(kind, p)
                answer = p.y[1] * g ** (p.x[2] - p.x[1])
                return ANSWER_MIN <= answer <= ANSWER_MAX
            except (ZeroDivisionError, ValueError, IndexError, OverflowError):
                return False

        out.append(Constraint("factor-range",
                              f"true growth factor within [{FACTOR_MIN}, {FACTOR_MAX}]",
                              factor_ok))
        out.append(Constraint("answer-range",
                              f"correct answer within [{ANSWER_MIN}, {ANSWER_MAX}]",
                              answer_ok))
    return tuple(out)


def violated_constraints(kind: TaskKind, params: ParamSet) -> list[str]:
    names = []
    for c in parameter_constraints(kind):
        try:
            ok = c.check(params)
        except Exception:
            ok = False
        if not ok:
            names.append(c.name)
    return names


@dataclass(frozen=True)
class TaskInstance:
    """A renderable task: kind, parameters, prompt text, and table rows."""

    kind: TaskKind
    params: ParamSet
    question: str
    table: tuple[tuple[str, ...], tuple[str, ...]]
    unknown: str  # which cell the "?" stands for: "y3", "y2", or "rate"

    def to_record(self) -> dict:
        """Stable serialization used by the service and the event log."""
        return {
            "kind": self.kind.value,
            "x": list(self.params.x),
            "y": list(self.params.y),
            "givenRate": self.params.given_rate,
            "question": self.question,
        }

    @staticmethod
    def from_record(record: dict) -> "TaskInstance":
        params = ParamSet(x=tuple(record["x"]), y=tuple(record["y"]),
                          given_rate=record.get("givenRate"))
        return instantiate(TaskKind(record["kind"]), params)

    def to_json(self) -> str:
        return json.dumps(self.to_record())


def _fmt_rate(kind: TaskKind, rate: float) -> str:
    if kind.topic is Topic.LINEAR:
        return str(int(round(rate)))
    return f"{rate:.3f}"


_PROMPTS = {
    TaskKind.LINEAR_MAIN:
        "Given the table:\n{table}\n"
        "Use linear extrapolation to compute the value of the question mark.",
    TaskKind.LINEAR_SIMPLER:
        "Given the table:\n{table}\n"
        "Use linear extrapolation to compute the value of the question mark. "
        "To do so, first compute the change of y in a single step of x.",
    TaskKind.LINEAR_GIVEN_SLOPE:
        "Given that the slope (rate of change) is equal to {rate} for the "
        "following table:\n{table}\n"
        "Use linear extrapolation to compute the value of the question mark.",
    TaskKind.LINEAR_COMPUTE_SLOPE:
        "Given the table:\n{table}\n"
        "Compute the slope (the average rate of change of y per step of x).",
    TaskKind.EXP_MAIN:
        "Given the table:\n{table}\n"
        "Use exponential extrapolation to compute the value of the question mark.",
    TaskKind.EXP_SIMPLER:
        "Given the table:\n{table}\n"
        "Use exponential extrapolation to compute the value of the question mark. "
        "To do so, first compute the growth factor for a single step of x.",
    TaskKind.EXP_GIVEN_FACTOR:
        "Given that the growth factor is equal to {rate} for the following "
        "table:\n{table}\n"
        "Use exponential extrapolation to compute the value of the question mark.",
    TaskKind.EXP_COMPUTE_FACTOR:
        "Given the table:\n{table}\n"
        "Compute the growth factor for a single step of x.",
}


def instantiate(kind: TaskKind, params: ParamSet) -> TaskInstance:
    """Validate params against the kind's constraints and render the task."""
    bad = violated_constraints(kind, params)
    if bad:
        raise ConstraintViolation(kind, bad)
    x_row = tuple(str(v) for v in params.x)
    if kind.is_compute_rate:
        y_row = tuple(str(v) for v in params.y)
        unknown = "rate"
    else:
        y_row = tuple([str(v) for v in params.y] + ["?"])
        unknown = "y3" if kind.column_count == 3 else "y2"
    table_text = "x | " + " | ".join(x_row) + "\ny | " + " | ".join(y_row)
    rate_text = _fmt_rate(kind, params.given_rate) if params.given_rate is not None else ""
    question = _PROMPTS[kind].format(table=table_text, rate=rate_text)
    return TaskInstance(kind=kind, params=params, question=question,
                        table=(x_row, y_row), unknown=unknown)


def rate_points(instance: TaskInstance):
    """The two points that define the rate, or None when the rate is given."""
    if instance.kind.is_given_rate:
        return None
    p = instance.params
    return ((p.x[0], p.y[0]), (p.x[1], p.y[1]))


def ext_frame(instance: TaskInstance):
    """(x_first, x_anchor, y_anchor, x_target) for the extrapolation step.

    The anchor is the last given point; the target is the x of the "?" cell.
    None for compute-rate kinds, which stop at the rate.
    """
    if instance.kind.is_compute_rate:
        return None
    p = instance.params
    if instance.kind.column_count == 3:
        return (p.x[0], p.x[1], p.y[1], p.x[2])
    return (p.x[0], p.x[0], p.y[0], p.x[1])


def correct_rate(instance: TaskInstance) -> float:
    """The rate a correct student works with (given or computed)."""
    if instance.kind.is_given_rate:
        return float(instance.params.given_rate)
    return _true_rate(instance.kind, instance.params)


def correct_answer(instance: TaskInstance) -> float:
    """Full-precision correct value of the "?" cell (or of the rate)."""
    kind = instance.kind
    if kind.is_compute_rate:
        return correct_rate(instance)
    rate = correct_rate(instance)
    _, xa, ya, xt = ext_frame(instance)
    if kind.topic is Topic.LINEAR:
        return ya + rate * (xt - xa)
    return ya * rate ** (xt - xa)


def _fmt_value(value: float, decimals: int = 2) -> str:
    if abs(value - round(value)) < 1e-9:
        return str(int(round(value)))
    return f"{value:.{decimals}f}"


@dataclass(frozen=True)
class WorkedSolution:
    steps: tuple[str, ...]
    answer: float

    def as_dict(self) -> dict:
        return {"steps": list(self.steps), "answer": self.answer}


def worked_solution(instance: TaskInstance) -> WorkedSolution:
    """Fully worked correct solution; values computed in full precision and
    shown to 2 decimals."""
    kind = instance.kind
    p = instance.params
    steps: list[str] = []
    answer = correct_answer(instance)
    if kind.is_given_rate:
        rate = float(p.given_rate)
        _, xa, ya, xt = ext_frame(instance)
        if kind.topic is Topic.LINEAR:
            steps.append(f"The slope is given: {_fmt_rate(kind, rate)}.")
            steps.append(
                f"Extrapolate from the last given point: "
                f"? = {ya} + {_fmt_rate(kind, rate)} x ({xt} - {xa}) = {_fmt_value(answer)}.")
        else:
            steps.append(f"The growth factor is given: {_fmt_rate(kind, rate)}.")
            steps.append(
                f"Apply the factor once per step of x: "
                f"? = {ya} x {_fmt_rate(kind, rate)} ^ ({xt} - {xa}) = {_fmt_value(answer)}.")
        return WorkedSolution(tuple(steps), answer)
    (xp, yp), (xa, ya) = rate_points(instance)
    rate = correct_rate(instance)
    if kind.topic is Topic.LINEAR:
        steps.append(
            f"Compute the slope: ({ya} - {yp}) / ({xa} - {xp}) = {_fmt_value(rate)}.")
    else:
        steps.append(
            f"Compute the growth factor for one step of x: "
            f"({ya} / {yp}) ^ (1 / ({xa} - {xp})) = {_fmt_value(rate)}.")
    if kind.is_compute_rate:
        return WorkedSolution(tuple(steps), answer)
    _, xa2, ya2, xt = ext_frame(instance)
    if kind.topic is Topic.LINEAR:
        steps.append(
            f"Extrapolate from the last given point: "
            f"? = {ya2} + {_fmt_value(rate)} x ({xt} - {xa2}) = {_fmt_value(answer)}.")
    else:
        steps.append(
            f"Apply the factor once per step of x: "
            f"? = {ya2} x {_fmt_value(rate)} ^ ({xt} - {xa2}) = {_fmt_value(answer)}.")
    return WorkedSolution(tuple(steps), answer)
