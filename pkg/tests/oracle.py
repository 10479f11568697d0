"""Independent re-computation of trace values, used as a test oracle.

Formulas are written out longhand per rule id, truncation goes through
the decimal module, and the routing table is restated from scratch, so
nothing here shares code with the package internals under test.
"""
from __future__ import annotations

import math
from decimal import ROUND_DOWN, Decimal
from typing import Optional

LINEAR_RATE = ("C-SLOPE", "B-INV-SLOPE")
LINEAR_EXT = ("C-EXT", "B-NOANCHOR", "B-WRONGGAP")
LINEAR_WHOLE = ("B-ADD", "B-PROP")
EXP_RATE = ("C-FACTOR", "B-NOROOT", "B-INVFACTOR")
EXP_EXT = ("C-EXPEXT", "B-SINGLE", "B-ADDFACTOR")
ROUNDINGS = (None, 1, 2, 3)

MAIN_KINDS = ("LinearMain", "ExpMain")
TWO_STAGE_KINDS = ("LinearMain", "LinearSimpler", "ExpMain", "ExpSimpler")

CORRECT_CHAINS = {
    "LinearMain": ("C-SLOPE", "C-EXT"),
    "LinearSimpler": ("C-SLOPE", "C-EXT"),
    "LinearGivenSlope": ("C-EXT",),
    "LinearComputeSlope": ("C-SLOPE",),
    "ExpMain": ("C-FACTOR", "C-EXPEXT"),
    "ExpSimpler": ("C-FACTOR", "C-EXPEXT"),
    "ExpGivenFactor": ("C-EXPEXT",),
    "ExpComputeFactor": ("C-FACTOR",),
}

EXPECTED_TRACE_COUNTS = {
    "LinearMain": 26,       # 2 rate x 3 ext x 4 roundings + 2 whole-task
    "LinearSimpler": 26,
    "LinearGivenSlope": 2,  # B-WRONGGAP degenerates to C-EXT on two columns
    "LinearComputeSlope": 2,
    "ExpMain": 36,          # 3 rate x 3 ext x 4 roundings
    "ExpSimpler": 24,       # B-NOROOT degenerates to C-FACTOR here
    "ExpGivenFactor": 3,
    "ExpComputeFactor": 3,
}


def truncate(value: float, decimals: Optional[int]) -> float:
    """Keep the first `decimals` decimal digits, toward zero."""
    if decimals is None:
        return value
    quantum = Decimal(1).scaleb(-decimals)
    return float(Decimal(repr(value)).quantize(quantum, rounding=ROUND_DOWN))


def rate_value(rule: str, x1: int, y1: int, x2: int, y2: int) -> float:
    if rule == "C-SLOPE":
        return (y2 - y1) / (x2 - x1)
    if rule == "B-INV-SLOPE":
        return (x2 - x1) / (y2 - y1)
    if rule == "C-FACTOR":
        return (y2 / y1) ** (1.0 / (x2 - x1))
    if rule == "B-NOROOT":
        return y2 / y1
    if rule == "B-INVFACTOR":
        return (y1 / y2) ** (1.0 / (x2 - x1))
    raise KeyError(rule)


def ext_value(rule: str, x_first: int, x_anchor: int, y_anchor: float,
              x_target: int, r: float) -> float:
    if rule == "C-EXT":
        return y_anchor + r * (x_target - x_anchor)
    if rule == "B-NOANCHOR":
        return y_anchor + r * x_target
    if rule == "B-WRONGGAP":
        return y_anchor + r * (x_target - x_first)
    if rule == "C-EXPEXT":
        return y_anchor * r ** (x_target - x_anchor)
    if rule == "B-SINGLE":
        return y_anchor * r
    if rule == "B-ADDFACTOR":
        return y_anchor + r * (x_target - x_anchor)
    raise KeyError(rule)


def whole_value(rule: str, x: tuple, y: tuple) -> float:
    if rule == "B-ADD":
        return y[1] + (y[1] - y[0])
    if rule == "B-PROP":
        return y[1] * (x[2] / x[1])
    raise KeyError(rule)


def enumerate_values(kind: str, x: tuple, y: tuple,
                     given_rate: Optional[float] = None
                     ) -> dict[tuple[tuple[str, ...], Optional[int]], float]:
    """(chain, rounding) -> final value, for every trace of the kind."""
    out: dict[tuple[tuple[str, ...], Optional[int]], float] = {}
    linear = kind.startswith("Linear")
    if kind in TWO_STAGE_KINDS:
        rates = LINEAR_RATE if linear else EXP_RATE
        exts = LINEAR_EXT if linear else EXP_EXT
        if kind == "ExpSimpler":
            rates = tuple(r for r in rates if r != "B-NOROOT")
        for rr in rates:
            raw = rate_value(rr, x[0], y[0], x[1], y[1])
            for er in exts:
                for d in ROUNDINGS:
                    out[((rr, er), d)] = ext_value(
                        er, x[0], x[1], y[1], x[2], truncate(raw, d))
        if linear:
            for wr in LINEAR_WHOLE:
                out[((wr,), None)] = whole_value(wr, x, y)
    elif kind == "LinearGivenSlope":
        for er in ("C-EXT", "B-NOANCHOR"):
            out[((er,), None)] = ext_value(er, x[0], x[0], y[0], x[1],
                                           given_rate)
    elif kind == "ExpGivenFactor":
        for er in EXP_EXT:
            out[((er,), None)] = ext_value(er, x[0], x[0], y[0], x[1],
                                           given_rate)
    elif kind == "LinearComputeSlope":
        for rr in LINEAR_RATE:
            out[((rr,), None)] = rate_value(rr, x[0], y[0], x[1], y[1])
    elif kind == "ExpComputeFactor":
        for rr in EXP_RATE:
            out[((rr,), None)] = rate_value(rr, x[0], y[0], x[1], y[1])
    else:
        raise KeyError(kind)
    return out


def correct_value(kind: str, x: tuple, y: tuple,
                  given_rate: Optional[float] = None) -> float:
    return enumerate_values(kind, x, y, given_rate)[
        (CORRECT_CHAINS[kind], None)]


def separation_of(kind: str, x: tuple, y: tuple,
                  given_rate: Optional[float] = None) -> float:
    """Minimum gap between values of different chains (brute force)."""
    by_chain: dict[tuple[str, ...], list[float]] = {}
    for (chain, _), value in enumerate_values(kind, x, y, given_rate).items():
        by_chain.setdefault(chain, []).append(value)
    chains = list(by_chain)
    best = math.inf
    for i in range(len(chains)):
        for j in range(i + 1, len(chains)):
            for a in by_chain[chains[i]]:
                for b in by_chain[chains[j]]:
                    best = min(best, abs(a - b))
    return best


def expected_route(chain: tuple[str, ...], main_kind: str) -> Optional[str]:
    """Routing restated independently: whole-task rules and the no-root
    plus single-step pair go to Simpler; buggy rate to ComputeRate; buggy
    extrapolation alone to GivenRate."""
    assert main_kind in MAIN_KINDS
    linear = main_kind == "LinearMain"
    if chain in (("B-ADD",), ("B-PROP",)):
        return "LinearSimpler"
    if chain == ("B-NOROOT", "B-SINGLE"):
        return "ExpSimpler"
    rate_buggy = any(c in ("B-INV-SLOPE", "B-NOROOT", "B-INVFACTOR")
                     for c in chain)
    ext_buggy = any(c in ("B-NOANCHOR", "B-WRONGGAP", "B-SINGLE",
                          "B-ADDFACTOR") for c in chain)
    if rate_buggy:
        return "LinearComputeSlope" if linear else "ExpComputeFactor"
    if ext_buggy:
        return "LinearGivenSlope" if linear else "ExpGivenFactor"
    return None


def is_buggy_chain(chain: tuple[str, ...], kind: str) -> bool:
    return chain != CORRECT_CHAINS[kind]
