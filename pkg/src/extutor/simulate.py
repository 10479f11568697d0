"""Synthetic students that drive tutoring sessions.

A profile fixes per-rule bug propensities, a rate rounding habit and a
policy over follow-up actions keyed by the last feedback outcome. The
driver masks policy choices against the legal action set of the live
session, so generated logs always replay cleanly.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from typing import Optional

from .diagnosis import DiagnosisClass, TaskContext
from .paramgen import ParamBank
from .rules import Stage, Trace, catalog, eval_trace
from .session import Event, SessionState
from .tasks import TaskInstance, TaskKind, Topic

# follow-up moves a policy can weight
MOVES = ("try_again", "subtask", "worked_example", "instruction",
         "stuck", "return", "end")
ROUNDING_KEYS = {"none": None, "1": 1, "2": 2, "3": 3}


def _normalise(weights: dict[str, float]) -> dict[str, float]:
    total = sum(weights.values())
    if total <= 0:
        raise ValueError("policy weights must sum to a positive number")
    return {k: v / total for k, v in weights.items()}


@dataclass(frozen=True)
class StudentProfile:
    """Behavioural parameters for one synthetic student."""
    name: str = "student"
    bug_propensity: dict[str, float] = field(default_factory=dict)
    rounding: dict[str, float] = field(
        default_factory=lambda: {"none": 1.0})
    policy: dict[str, dict[str, float]] = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self) -> None:
        for rule_id, p in self.bug_propensity.items():
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"propensity for {rule_id} outside [0, 1]")
        for key in self.rounding:
            if key not in ROUNDING_KEYS:
                raise ValueError(f"unknown rounding key {key!r}")
        for outcome, weights in self.policy.items():
            DiagnosisClass(outcome)
            for move in weights:
                if move not in MOVES:
                    raise ValueError(f"unknown policy move {move!r}")

    def policy_for(self, outcome: DiagnosisClass) -> dict[str, float]:
        if outcome.value in self.policy:
            return dict(self.policy[outcome.value])
        if outcome is DiagnosisClass.CORRECT:
            return {"end": 1.0}
        return {"try_again": 1.0}

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "bugPropensity": dict(self.bug_propensity),
            "rounding": dict(self.rounding),
            "policy": {k: dict(v) for k, v in self.policy.items()},
            "seed": self.seed,
        }

    @staticmethod
    def from_dict(data: dict) -> "StudentProfile":
        return StudentProfile(
            name=data.get("name", "student"),
            bug_propensity=dict(data.get("bugPropensity", {})),
            rounding=dict(data.get("rounding", {"none": 1.0})),
            policy={k: dict(v) for k, v in data.get("policy", {}).items()},
            seed=int(data.get("seed", 0)),
        )

    @staticmethod
    def from_json(text: str) -> "StudentProfile":
        return StudentProfile.from_dict(json.loads(text))


def sample_attempt(profile: StudentProfile, instance: TaskInstance,
                   rng: random.Random) -> tuple[float, Trace]:
    """Pick a computation trace by propensity and evaluate it."""
    rules = catalog(instance.kind)
    whole = [r for r in rules if r.stage is Stage.WHOLE_TASK]
    rate = [r for r in rules if r.stage is Stage.RATE]
    ext = [r for r in rules if r.stage is Stage.EXTRAPOLATE]

    chosen_whole = None
    for rule in whole:
        if rule.buggy and rng.random() < profile.bug_propensity.get(rule.id, 0.0):
            chosen_whole = rule
            break
    if chosen_whole is not None:
        trace = Trace(rules=(chosen_whole.id,))
        return eval_trace(instance, trace), trace

    def pick(stage_rules):
        correct = next(r for r in stage_rules if not r.buggy)
        for rule in stage_rules:
            if rule.buggy and rng.random() < profile.bug_propensity.get(rule.id, 0.0):
                return rule
        return correct

    chain = []
    if rate:
        chain.append(pick(rate).id)
    if ext:
        chain.append(pick(ext).id)
    rounding = None
    if len(chain) == 2:  # rate feeds the extrapolation, habit applies
        keys = sorted(profile.rounding)
        weights = [profile.rounding[k] for k in keys]
        rounding = ROUNDING_KEYS[rng.choices(keys, weights=weights)[0]]
    trace = Trace(rules=tuple(chain), rounding=rounding)
    return eval_trace(instance, trace), trace


def _ground_truth(trace: Trace) -> dict:
    return {"chain": list(trace.rules), "rounding": trace.rounding}


def _legal_moves(state: SessionState) -> dict[str, bool]:
    actions = state.actions()
    return {
        "try_again": actions.can_submit,
        "subtask": actions.can_subtask,
        "worked_example": actions.can_view_we,
        "instruction": actions.can_view_di,
        "stuck": actions.can_submit,
        "return": actions.can_return_to_main,
        "end": True,
    }


def run_session(profile: StudentProfile, topic: Topic,
                banks: dict[TaskKind, ParamBank], session_id: str,
                student_rng: random.Random, draw_seed: int,
                max_steps: int = 40) -> SessionState:
    """Drive one session to completion under the profile's policy."""
    state = SessionState.start(topic, banks, session_id=session_id,
                               seed=draw_seed)

    def attempt() -> DiagnosisClass:
        value, trace = sample_attempt(profile, state.current_instance(),
                                      student_rng)
        state.submit(value, ground_truth=_ground_truth(trace))
        diag = (state.last_subtask_diagnosis
                if state.current_context is TaskContext.SUBTASK
                else state.last_main_diagnosis)
        return diag.outcome

    outcome = attempt()
    for _ in range(max_steps):
        if state.ended:
            break
        weights = profile.policy_for(outcome)
        legal = _legal_moves(state)
        weights = {m: w for m, w in weights.items() if legal.get(m) and w > 0}
        if not weights:
            if state.main_solved or not legal["try_again"]:
                state.close()
                break
            weights = {"try_again": 1.0}
        weights = _normalise(weights)
        keys = sorted(weights)
        move = student_rng.choices(keys, [weights[k] for k in keys])[0]
        if move == "end":
            state.close()
            break
        if move == "try_again":
            outcome = attempt()
        elif move == "subtask":
            state.choose_subtask()
            outcome = attempt()
        elif move == "worked_example":
            state.view_worked_example()
            if state.actions().can_submit:
                outcome = attempt()
        elif move == "instruction":
            state.view_instruction()
            if state.actions().can_submit:
                outcome = attempt()
        elif move == "stuck":
            state.declare_stuck()
            if state.actions().can_submit:
                outcome = attempt()
        elif move == "return":
            state.return_to_main()
            outcome = attempt()
    if not state.ended:
        state.close()
    return state


def simulate(profile: StudentProfile, topic: Topic,
             banks: dict[TaskKind, ParamBank], n: int,
             seed: Optional[int] = None,
             max_steps: int = 40) -> list[list[Event]]:
    """Generate n complete session logs for one profile."""
    master = random.Random(profile.seed if seed is None else seed)
    logs: list[list[Event]] = []
    for i in range(n):
        draw_seed = master.getrandbits(32)
        student_rng = random.Random(master.getrandbits(32))
        state = run_session(profile, topic, banks,
                            session_id=f"{profile.name}-{i:04d}",
                            student_rng=student_rng, draw_seed=draw_seed,
                            max_steps=max_steps)
        logs.append(state.log)
    return logs
