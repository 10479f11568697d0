"""Parameter-bank tuning for unambiguous final-answer diagnosis.

A ParamSet is usable only when every pair of distinct rule chains
produces clearly separated final values; otherwise one submitted number
could betray two different errors. Banks are built by seeded rejection
sampling so the accepted entries are reproducible.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path

from .diagnosis import MATCH_TOLERANCE, enumerate_traces, matches
from .tasks import (
    COORD_MAX,
    COORD_MIN,
    FACTOR_GIVEN_MAX,
    FACTOR_GIVEN_MIN,
    ParamSet,
    SLOPE_GIVEN_MAX,
    SLOPE_GIVEN_MIN,
    TaskInstance,
    TaskKind,
    instantiate,
    violated_constraints,
)

DEFAULT_COUNT = 50
DEFAULT_DELTA = 0.5
DEFAULT_BUDGET = 1_000_000


class TuningBudgetExceeded(RuntimeError):
    def __init__(self, kind: TaskKind, delta: float, budget: int, accepted: int):
        super().__init__(
            f"{kind.value}: only {accepted} ParamSets reached separation "
            f">= {delta} within {budget} draws")


@dataclass(frozen=True)
class ParamBank:
    kind: TaskKind
    entries: tuple[ParamSet, ...]
    seed: int
    delta: float
    separation: float  # minimum achieved inter-class gap across entries
    attempts: int = 0

    @property
    def acceptance_rate(self) -> float:
        return len(self.entries) / self.attempts if self.attempts else 0.0

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "seed": self.seed,
            "delta": self.delta,
            "separation": self.separation,
            "attempts": self.attempts,
            "entries": [e.as_dict() for e in self.entries],
        }

    @staticmethod
    def from_dict(data: dict) -> "ParamBank":
        return ParamBank(
            kind=TaskKind(data["kind"]),
            entries=tuple(ParamSet.from_dict(e) for e in data["entries"]),
            seed=data["seed"],
            delta=data["delta"],
            separation=data["separation"],
            attempts=data.get("attempts", 0),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @staticmethod
    def load(path: str | Path) -> "ParamBank":
        bank = ParamBank.from_dict(json.loads(Path(path).read_text()))
        for entry in bank.entries:
            bad = violated_constraints(bank.kind, entry)
            if bad:
                raise ValueError(f"{path}: invalid entry {entry}: {', '.join(bad)}")
        return bank


def separation(instance: TaskInstance) -> float:
    """Minimum |v_a - v_b| over trace pairs from different rule chains.

    Truncation variants of one chain count as a single diagnosis class, so
    gaps inside a chain do not matter; gaps between chains do.
    """
    by_chain: dict[tuple[str, ...], list[float]] = {}
    for t in enumerate_traces(instance):
        by_chain.setdefault(t.rules, []).append(t.value)
    chains = list(by_chain)
    best = float("inf")
    for i, a in enumerate(chains):
        for b in chains[i + 1:]:
            for va in by_chain[a]:
                for vb in by_chain[b]:
                    gap = abs(va - vb)
                    if gap < best:
                        best = gap
    return best


def _claimable_across_chains(instance: TaskInstance) -> bool:
    """True when one chain's exact value would also match a different
    chain under the final-answer rounding allowance.

    Raw separation cannot rule this out: 14.0 and 14.5 sit a full 0.5
    apart, yet a submission of 14.0 equals round(14.5, 0) and so would be
    claimed by the 14.5 chain too.
    """
    by_chain: dict[tuple[str, ...], list[float]] = {}
    for t in enumerate_traces(instance):
        by_chain.setdefault(t.rules, []).append(t.value)
    chains = list(by_chain)
    for i, a in enumerate(chains):
        for b in chains[i + 1:]:
            for va in by_chain[a]:
                for vb in by_chain[b]:
                    if matches(va, vb) or matches(vb, va):
                        return True
    return False


def _random_params(kind: TaskKind, rng: random.Random) -> ParamSet:
    """Draw a candidate ParamSet; structural constraints hold by
    construction, derived ones (factor/answer range) are left to rejection."""
    coords = range(COORD_MIN, COORD_MAX + 1)
    if kind.is_simpler:
        x1 = rng.randint(COORD_MIN, COORD_MAX - 2)
        x3 = rng.randint(x1 + 2, COORD_MAX)
        xs = (x1, x1 + 1, x3)
    elif kind.column_count == 3:
        xs = tuple(sorted(rng.sample(coords, 3)))
    else:
        xs = tuple(sorted(rng.sample(coords, 2)))
    if kind.is_given_rate:
        ys = (rng.randint(COORD_MIN, COORD_MAX),)
        if kind is TaskKind.LINEAR_GIVEN_SLOPE:
            rate = float(rng.randint(SLOPE_GIVEN_MIN, SLOPE_GIVEN_MAX))
        else:
            rate = rng.randint(round(FACTOR_GIVEN_MIN * 1000),
                               round(FACTOR_GIVEN_MAX * 1000)) / 1000.0
        return ParamSet(x=xs, y=ys, given_rate=rate)
    ys = tuple(rng.sample(coords, 2))
    return ParamSet(x=xs, y=ys)


def tune(kind: TaskKind, count: int = DEFAULT_COUNT, seed: int = 0,
         delta: float = DEFAULT_DELTA, budget: int = DEFAULT_BUDGET) -> ParamBank:
    """Rejection-sample `count` ParamSets whose separation reaches delta."""
    if delta <= 2 * MATCH_TOLERANCE:
        raise ValueError(
            f"delta must exceed twice the match tolerance ({2 * MATCH_TOLERANCE})")
    rng = random.Random(seed)
    entries: list[ParamSet] = []
    seps: list[float] = []
    attempts = 0
    while len(entries) < count:
        if attempts >= budget:
            raise TuningBudgetExceeded(kind, delta, budget, len(entries))
        attempts += 1
        params = _random_params(kind, rng)
        if violated_constraints(kind, params):
            continue
        if params in entries:
            continue
        inst = instantiate(kind, params)
        sep = separation(inst)
        if sep >= delta and not _claimable_across_chains(inst):
            entries.append(params)
            seps.append(sep)
    return ParamBank(kind=kind, entries=tuple(entries), seed=seed, delta=delta,
                     separation=min(seps), attempts=attempts)


def draw(bank: ParamBank, rng: random.Random,
         exclude: ParamSet | None = None) -> ParamSet:
    """Uniform random entry, never equal to `exclude` unless the bank has a
    single entry."""
    if not bank.entries:
        raise ValueError(f"{bank.kind.value}: empty bank")
    if len(bank.entries) == 1:
        return bank.entries[0]
    while True:
        choice = rng.choice(bank.entries)
        if choice != exclude:
            return choice


BANK_FILENAMES = {kind: f"{kind.value}.json" for kind in TaskKind}


def save_bank_dir(banks: dict[TaskKind, ParamBank], directory: str | Path) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for kind, bank in banks.items():
        bank.save(directory / BANK_FILENAMES[kind])


def load_bank_dir(directory: str | Path,
                  kinds: tuple[TaskKind, ...] = tuple(TaskKind)) -> dict[TaskKind, ParamBank]:
    """Load one bank file per requested kind; missing or mislabeled files fail."""
    directory = Path(directory)
    banks: dict[TaskKind, ParamBank] = {}
    for kind in kinds:
        path = directory / BANK_FILENAMES[kind]
        if not path.exists():
            raise FileNotFoundError(f"missing parameter bank for {kind.value}: {path}")
        bank = ParamBank.load(path)
        if bank.kind is not kind:
            raise ValueError(f"{path}: bank kind {bank.kind.value} does not match filename")
        banks[kind] = bank
    return banks
