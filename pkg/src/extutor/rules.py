"""Correct and buggy solution-step rules, and trace evaluation.

A trace is the ordered list of rules a student may have applied, plus an
optional truncation of the intermediate rate. Evaluating a trace yields
the final answer that behaviour produces, which is what diagnosis matches
submitted answers against.

Rate truncation models copying the first d decimals from a calculator
display, so it cuts toward zero rather than rounding half up.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

from .tasks import (
    TaskInstance,
    TaskKind,
    Topic,
    correct_answer,
    correct_rate,
    ext_frame,
    rate_points,
)


class Stage(Enum):
    RATE = "RateStep"
    EXTRAPOLATE = "ExtrapolateStep"
    WHOLE_TASK = "WholeTask"


# rate truncation depths enumerated for traces that compute a rate
ROUNDINGS: tuple[Optional[int], ...] = (None, 1, 2, 3)


class TraceError(ValueError):
    """Trace is malformed for the instance's kind."""


@dataclass(frozen=True)
class StepRule:
    id: str
    topic: Topic
    stage: Stage
    buggy: bool
    formula: str
    apply: Callable[..., float]
    feedback_low: str = ""
    feedback_high: str = ""
    route_to: Optional[TaskKind] = None


@dataclass(frozen=True)
class Trace:
    """Ordered rule ids, optional rate truncation depth, final value."""

    rules: tuple[str, ...]
    rounding: Optional[int] = None
    value: Optional[float] = None


def truncate_rate(rate: float, decimals: Optional[int]) -> float:
    """Cut the rate to the given number of decimals, toward zero.

    The tiny relative nudge keeps values whose decimal expansion is exact
    (e.g. 1.13 stored as 1.1299...) from dropping a digit; true rates in
    the integer parameter space are never that close to a boundary.
    """
    if decimals is None:
        return rate
    scale = 10 ** decimals
    scaled = abs(rate) * scale * (1.0 + 1e-12)
    return math.copysign(math.floor(scaled) / scale, rate)


# ---------------------------------------------------------------------------
# catalog

_LINEAR_RULES = (
    StepRule(
        id="C-SLOPE", topic=Topic.LINEAR, stage=Stage.RATE, buggy=False,
        formula="s = (y2 - y1) / (x2 - x1)",
        apply=lambda pts: (pts[1][1] - pts[0][1]) / (pts[1][0] - pts[0][0]),
    ),
    StepRule(
        id="B-INV-SLOPE", topic=Topic.LINEAR, stage=Stage.RATE, buggy=True,
        formula="s = (x2 - x1) / (y2 - y1)",
        apply=lambda pts: (pts[1][0] - pts[0][0]) / (pts[1][1] - pts[0][1]),
        feedback_low=(
            "It seems you computed the slope by dividing the increase of x "
            "by the variation of y. Is this right?"),
        feedback_high=(
            "It seems you divided ({xa} - {xp}) / ({ya} - {yp}) = {buggy} to "
            "get the slope. The slope is the change of y divided by the "
            "change of x: ({ya} - {yp}) / ({xa} - {xp}) = {correct}."),
        route_to=TaskKind.LINEAR_COMPUTE_SLOPE,
    ),
    StepRule(
        id="C-EXT", topic=Topic.LINEAR, stage=Stage.EXTRAPOLATE, buggy=False,
        formula="? = y2 + s * (x3 - x2)",
        apply=lambda frame, r: frame[2] + r * (frame[3] - frame[1]),
    ),
    StepRule(
        id="B-NOANCHOR", topic=Topic.LINEAR, stage=Stage.EXTRAPOLATE, buggy=True,
        formula="? = y2 + s * x3",
        apply=lambda frame, r: frame[2] + r * frame[3],
        feedback_low=(
            "It seems you multiplied the slope by the x-value itself instead "
            "of by the number of steps from the last given point. Is this "
            "right?"),
        feedback_high=(
            "It seems you computed {ya} + {rate} x {xt} = {buggy}. The slope "
            "covers only the distance from the last given point: "
            "{ya} + {rate} x ({xt} - {xa}) = {correct}."),
        route_to=TaskKind.LINEAR_GIVEN_SLOPE,
    ),
    StepRule(
        id="B-WRONGGAP", topic=Topic.LINEAR, stage=Stage.EXTRAPOLATE, buggy=True,
        formula="? = y2 + s * (x3 - x1)",
        apply=lambda frame, r: frame[2] + r * (frame[3] - frame[0]),
        feedback_low=(
            "It seems you measured the step in x from the first given point "
            "instead of from the last one. Is this right?"),
        feedback_high=(
            "It seems you computed {ya} + {rate} x ({xt} - {xp}) = {buggy}. "
            "The last given point is at x = {xa}, so the remaining distance "
            "is {xt} - {xa}: {ya} + {rate} x ({xt} - {xa}) = {correct}."),
        route_to=TaskKind.LINEAR_GIVEN_SLOPE,
    ),
    StepRule(
        id="B-ADD", topic=Topic.LINEAR, stage=Stage.WHOLE_TASK, buggy=True,
        formula="? = y2 + (y2 - y1)",
        apply=lambda pts, frame: frame[2] + (frame[2] - pts[0][1]),
        feedback_low=(
            "It seems you added the previous increase of y to the last "
            "y-value without using the x-values. Is this right?"),
        feedback_high=(
            "It seems you computed {ya} + ({ya} - {yp}) = {buggy}. The change "
            "of y per step of x is the slope {rate}, and the question mark is "
            "{step} steps beyond x = {xa}: {ya} + {rate} x {step} = {correct}."),
        route_to=TaskKind.LINEAR_SIMPLER,
    ),
    StepRule(
        id="B-PROP", topic=Topic.LINEAR, stage=Stage.WHOLE_TASK, buggy=True,
        formula="? = y2 * (x3 / x2)",
        apply=lambda pts, frame: frame[2] * (frame[3] / frame[1]),
        feedback_low=(
            "It seems you scaled the last y-value by the ratio of the "
            "x-values, as if y were proportional to x. Is this right?"),
        feedback_high=(
            "It seems you computed {ya} x {xt} / {xa} = {buggy}. The table is "
            "not proportional: y changes by the slope {rate} for every step "
            "of x, so ? = {ya} + {rate} x {step} = {correct}."),
        route_to=TaskKind.LINEAR_SIMPLER,
    ),
)

_EXP_RULES = (
    StepRule(
        id="C-FACTOR", topic=Topic.EXPONENTIAL, stage=Stage.RATE, buggy=False,
        formula="g = (y2 / y1) ^ (1 / (x2 - x1))",
        apply=lambda pts: (pts[1][1] / pts[0][1]) ** (1.0 / (pts[1][0] - pts[0][0])),
    ),
    StepRule(
        id="B-NOROOT", topic=Topic.EXPONENTIAL, stage=Stage.RATE, buggy=True,
        formula="g = y2 / y1",
        apply=lambda pts: pts[1][1] / pts[0][1],
        feedback_low=(
            "It seems you divided the two y-values without taking a root, "
            "although they lie more than one step of x apart. Is this right?"),
        feedback_high=(
            "It seems you computed {ya} / {yp} = {buggy} for the growth "
            "factor. That division covers {dxr} steps of x at once; the "
            "factor for a single step is ({ya} / {yp}) ^ (1 / {dxr}) = "
            "{correct}."),
        route_to=TaskKind.EXP_COMPUTE_FACTOR,
    ),
    StepRule(
        id="B-INVFACTOR", topic=Topic.EXPONENTIAL, stage=Stage.RATE, buggy=True,
        formula="g = (y1 / y2) ^ (1 / (x2 - x1))",
        apply=lambda pts: (pts[0][1] / pts[1][1]) ** (1.0 / (pts[1][0] - pts[0][0])),
        feedback_low=(
            "It seems you divided the earlier y-value by the later one when "
            "computing the growth factor. Is this right?"),
        feedback_high=(
            "It seems you computed ({yp} / {ya}) ^ (1 / {dxr}) = {buggy}. The "
            "growth factor divides the later y-value by the earlier one: "
            "({ya} / {yp}) ^ (1 / {dxr}) = {correct}."),
        route_to=TaskKind.EXP_COMPUTE_FACTOR,
    ),
    StepRule(
        id="C-EXPEXT", topic=Topic.EXPONENTIAL, stage=Stage.EXTRAPOLATE, buggy=False,
        formula="? = y2 * g ^ (x3 - x2)",
        apply=lambda frame, r: frame[2] * r ** (frame[3] - frame[1]),
    ),
    StepRule(
        id="B-SINGLE", topic=Topic.EXPONENTIAL, stage=Stage.EXTRAPOLATE, buggy=True,
        formula="? = y2 * g",
        apply=lambda frame, r: frame[2] * r,
        feedback_low=(
            "It seems you applied the growth factor only once, although the "
            "question mark is more than one step of x away. Is this right?"),
        feedback_high=(
            "It seems you computed {ya} x {rate} = {buggy}. The question mark "
            "lies {step} steps of x beyond {xa}, so the factor applies {step} "
            "times: {ya} x {rate} ^ {step} = {correct}."),
        route_to=TaskKind.EXP_GIVEN_FACTOR,
    ),
    StepRule(
        id="B-ADDFACTOR", topic=Topic.EXPONENTIAL, stage=Stage.EXTRAPOLATE, buggy=True,
        formula="? = y2 + g * (x3 - x2)",
        apply=lambda frame, r: frame[2] + r * (frame[3] - frame[1]),
        feedback_low=(
            "It seems you used the growth factor like a slope and added a "
            "multiple of it. With exponential growth every step multiplies y "
            "by the factor. Is this right?"),
        feedback_high=(
            "It seems you computed {ya} + {rate} x {step} = {buggy}. Each "
            "step of x multiplies y by the factor: {ya} x {rate} ^ {step} = "
            "{correct}."),
        route_to=TaskKind.EXP_GIVEN_FACTOR,
    ),
)

RULES_BY_ID: dict[str, StepRule] = {r.id: r for r in _LINEAR_RULES + _EXP_RULES}

# buggy rule combinations that betray a misunderstanding of the whole task
# and therefore route to the simpler subtask
WHOLE_TASK_COMBOS: dict[tuple[str, ...], TaskKind] = {
    ("B-NOROOT", "B-SINGLE"): TaskKind.EXP_SIMPLER,
}

# kind-specific exclusions: rules whose computation collapses onto the
# correct one for that table shape (separation would be 0 for every ParamSet)
_EXCLUDED: dict[TaskKind, frozenset[str]] = {
    # with two columns the "gap from the first point" is the correct gap
    TaskKind.LINEAR_GIVEN_SLOPE: frozenset({"B-WRONGGAP"}),
    # with consecutive x-columns y2/y1 already is the single-step factor
    TaskKind.EXP_SIMPLER: frozenset({"B-NOROOT"}),
}


def _topic_rules(topic: Topic) -> tuple[StepRule, ...]:
    return _LINEAR_RULES if topic is Topic.LINEAR else _EXP_RULES


def catalog(kind: TaskKind) -> tuple[StepRule, ...]:
    """The step rules that apply to a task kind."""
    excluded = _EXCLUDED.get(kind, frozenset())
    rules = [r for r in _topic_rules(kind.topic) if r.id not in excluded]
    if kind.is_main or kind.is_simpler:
        return tuple(rules)
    if kind.is_given_rate:
        return tuple(r for r in rules if r.stage is Stage.EXTRAPOLATE)
    return tuple(r for r in rules if r.stage is Stage.RATE)


def correct_chain(kind: TaskKind) -> tuple[str, ...]:
    """Rule ids of the fully correct trace for the kind."""
    rules = catalog(kind)
    return tuple(r.id for r in rules if not r.buggy)


def eval_trace(instance: TaskInstance, trace: Trace) -> float:
    """Final answer produced by applying the trace's rules to the instance."""
    kind = instance.kind
    allowed = {r.id for r in catalog(kind)}
    try:
        rules = [RULES_BY_ID[rid] for rid in trace.rules]
    except KeyError as exc:
        raise TraceError(f"unknown rule id {exc.args[0]!r}") from None
    for r in rules:
        if r.id not in allowed:
            raise TraceError(f"rule {r.id} does not apply to {kind.value}")
    if trace.rounding not in ROUNDINGS:
        raise TraceError(f"invalid rounding {trace.rounding!r}")

    stages = tuple(r.stage for r in rules)
    if stages == (Stage.WHOLE_TASK,):
        if trace.rounding is not None:
            raise TraceError("rounding applies only to traces with a rate step")
        return rules[0].apply(rate_points(instance), ext_frame(instance))
    if stages == (Stage.RATE, Stage.EXTRAPOLATE):
        if not (kind.is_main or kind.is_simpler):
            raise TraceError(f"{kind.value} traces cover a single stage")
        rate = truncate_rate(rules[0].apply(rate_points(instance)), trace.rounding)
        return rules[1].apply(ext_frame(instance), rate)
    if stages == (Stage.RATE,):
        if not kind.is_compute_rate:
            raise TraceError(f"{kind.value} traces must include the extrapolation step")
        if trace.rounding is not None:
            raise TraceError("the rate is the final answer here; no rounding variant")
        return rules[0].apply(rate_points(instance))
    if stages == (Stage.EXTRAPOLATE,):
        if not kind.is_given_rate:
            raise TraceError(f"{kind.value} traces must include the rate step")
        if trace.rounding is not None:
            raise TraceError("the rate is given exactly; no rounding variant")
        return rules[0].apply(ext_frame(instance), float(instance.params.given_rate))
    raise TraceError(f"malformed rule chain {trace.rules!r}")


def _fmt(value: float) -> str:
    """Short display form: integers bare, exact 3-decimal values kept, else 2."""
    if abs(value - round(value)) < 1e-9:
        return str(int(round(value)))
    if abs(value * 1000 - round(value * 1000)) < 1e-9:
        return f"{value:.3f}".rstrip("0")
    return f"{value:.2f}"


def feedback_context(rule: StepRule, instance: TaskInstance) -> dict:
    """Numbers the high-specificity template for this rule interpolates."""
    ctx: dict[str, object] = {}
    pts = rate_points(instance)
    frame = ext_frame(instance)
    if pts is not None:
        (xp, yp), (xa_r, ya_r) = pts
        ctx.update(xp=xp, yp=yp, dxr=xa_r - xp)
        if rule.stage is Stage.RATE:
            ctx.update(xa=xa_r, ya=ya_r)
    if frame is not None and rule.stage is not Stage.RATE:
        fxp, xa, ya, xt = frame
        ctx.update(xp=fxp, xa=xa, ya=ya, xt=xt, step=xt - xa)
        ctx.setdefault("yp", instance.params.y[0])
    rate = correct_rate(instance)
    ctx["rate"] = _fmt(rate)
    if rule.stage is Stage.RATE:
        ctx["buggy"] = _fmt(rule.apply(pts))
        ctx["correct"] = _fmt(rate)
    elif rule.stage is Stage.EXTRAPOLATE:
        ctx["buggy"] = _fmt(rule.apply(frame, rate))
        ctx["correct"] = _fmt(correct_answer(instance))
    else:
        ctx["buggy"] = _fmt(rule.apply(pts, frame))
        ctx["correct"] = _fmt(correct_answer(instance))
    return ctx


def render_high_feedback(rule: StepRule, instance: TaskInstance) -> str:
    return rule.feedback_high.format(**feedback_context(rule, instance))


def catalog_document() -> list[dict]:
    """Structured export of every rule, so feedback copy can be reviewed or
    overridden without touching code."""
    return [
        {
            "id": r.id,
            "topic": r.topic.value,
            "stage": r.stage.value,
            "buggy": r.buggy,
            "formula": r.formula,
            "feedbackLow": r.feedback_low,
            "feedbackHigh": r.feedback_high,
            "routeTo": r.route_to.value if r.route_to else None,
        }
        for r in _LINEAR_RULES + _EXP_RULES
    ]


def apply_feedback_overrides(overrides: dict[str, dict]) -> None:
    """Replace feedback templates at runtime, keyed by rule id.

    Each value may carry feedbackLow and/or feedbackHigh strings. Formulas
    and routing are fixed; only the wording is editable.
    """
    global _LINEAR_RULES, _EXP_RULES
    from dataclasses import replace

    for rule_id in overrides:
        if rule_id not in RULES_BY_ID:
            raise KeyError(f"unknown rule id {rule_id!r}")

    def patch(rules: tuple[StepRule, ...]) -> tuple[StepRule, ...]:
        out = []
        for r in rules:
            o = overrides.get(r.id)
            if o:
                r = replace(r,
                            feedback_low=o.get("feedbackLow", r.feedback_low),
                            feedback_high=o.get("feedbackHigh", r.feedback_high))
            out.append(r)
        return tuple(out)

    _LINEAR_RULES = patch(_LINEAR_RULES)
    _EXP_RULES = patch(_EXP_RULES)
    # update in place: other modules hold references to this dict
    RULES_BY_ID.update({r.id: r for r in _LINEAR_RULES + _EXP_RULES})
