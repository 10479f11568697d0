"""Final-answer classification, tie-breaking, routing and feedback choice.

The tie-break cases were found by exhaustive search over the integer
parameter space and their expected outcomes frozen here; each one is a
genuine collision (two traces within the match tolerance)."""
import math
import random

import pytest

import oracle
from extutor.diagnosis import (Diagnosis, DiagnosisClass, FeedbackType,
                               MATCH_TOLERANCE, Specificity, TaskContext,
                               diagnose, enumerate_traces, feedback_for,
                               matches, route_subtask)
from extutor.rules import RULES_BY_ID, Trace, correct_chain, eval_trace
from extutor.tasks import ParamSet, TaskKind, instantiate
from test_tasks import _random_valid, make


class TestEnumeration:
    PUBLISHED = {
        TaskKind.LINEAR_MAIN: ((23, 85, 97), (15, 41), None),
        TaskKind.LINEAR_SIMPLER: ((54, 55, 93), (64, 57), None),
        TaskKind.LINEAR_GIVEN_SLOPE: ((30, 87), (91,), 8),
        TaskKind.LINEAR_COMPUTE_SLOPE: ((35, 62), (47, 68), None),
        TaskKind.EXP_MAIN: ((77, 80, 85), (58, 55), None),
        TaskKind.EXP_SIMPLER: ((50, 51, 54), (66, 41), None),
        TaskKind.EXP_GIVEN_FACTOR: ((45, 52), (36,), 1.059),
        TaskKind.EXP_COMPUTE_FACTOR: ((28, 40), (72, 34), None),
    }

    def test_trace_counts_per_kind(self):
        for kind, (x, y, rate) in self.PUBLISHED.items():
            inst = make(kind, x, y, rate=rate)
            traces = enumerate_traces(inst)
            assert len(traces) == oracle.EXPECTED_TRACE_COUNTS[kind.value], kind

    def test_trace_set_matches_oracle_exactly(self):
        rng = random.Random(53)
        for _ in range(60):
            kind = rng.choice(list(TaskKind))
            params = _random_valid(kind, rng)
            inst = instantiate(kind, params)
            got = {(t.rules, t.rounding): t.value for t in enumerate_traces(inst)}
            want = oracle.enumerate_values(kind.value, params.x, params.y,
                                           params.given_rate)
            assert set(got) == set(want)
            for key, value in want.items():
                assert got[key] == pytest.approx(value, rel=1e-9, abs=1e-9)

    def test_values_consistent_with_eval_trace(self):
        inst = make(TaskKind.EXP_MAIN, (77, 80, 85), (58, 55))
        for t in enumerate_traces(inst):
            assert t.value == eval_trace(inst, Trace(t.rules, t.rounding))

    def test_compute_rate_kinds_have_no_rounding_variants(self):
        for kind in (TaskKind.LINEAR_COMPUTE_SLOPE, TaskKind.EXP_COMPUTE_FACTOR,
                     TaskKind.LINEAR_GIVEN_SLOPE, TaskKind.EXP_GIVEN_FACTOR):
            x, y, rate = self.PUBLISHED[kind]
            inst = make(kind, x, y, rate=rate)
            assert all(t.rounding is None for t in enumerate_traces(inst))


class TestMatchPredicate:
    def test_tolerance_is_inclusive(self):
        # 0.005 from zero reproduces the tolerance constant bit for bit
        assert matches(0.005, 0.0)
        assert matches(-0.005, 0.0)
        assert not matches(0.006, 0.0)
        # exactly representable offsets on either side of the boundary
        assert matches(2.00390625, 2.0)       # 2 + 1/256
        assert not matches(2.005859375, 2.0)  # 2 + 3/512

    def test_rounded_submissions_match(self):
        v = 50.34084672602433
        assert matches(50.0, v)      # round to integer
        assert matches(50.3, v)      # 1 decimal
        assert matches(50.34, v)     # 2 decimals
        assert matches(50.341, v)    # 3 decimals
        assert not matches(50.35, v)
        assert not matches(51.0, v)

    def test_rounding_must_be_exact(self):
        v = 117.52631578947368
        assert matches(118.0, v)       # round(v, 0)
        assert not matches(117.0, v)   # truncation is not rounding
        assert matches(117.5263, v)    # within tolerance anyway

    def test_banker_rounding_edge(self):
        # python rounds 0.5 to even; the predicate follows suit
        assert matches(round(2.675, 2), 2.675)


class TestDiagnoseBasics:
    def test_no_input(self):
        inst = make(TaskKind.LINEAR_MAIN, (23, 85, 97), (15, 41))
        diag = diagnose(inst, None)
        assert diag.outcome is DiagnosisClass.NO_INPUT
        assert diag.chain == ()
        assert diag.matched_value is None

    def test_undetectable(self):
        inst = make(TaskKind.LINEAR_MAIN, (23, 85, 97), (15, 41))
        diag = diagnose(inst, 123456.789)
        assert diag.outcome is DiagnosisClass.UNDETECTABLE
        assert diag.chain == ()

    def test_non_finite_rejected(self):
        inst = make(TaskKind.LINEAR_MAIN, (23, 85, 97), (15, 41))
        with pytest.raises(ValueError):
            diagnose(inst, math.nan)
        with pytest.raises(ValueError):
            diagnose(inst, math.inf)

    def test_exact_correct_value(self):
        inst = make(TaskKind.LINEAR_MAIN, (23, 85, 97), (15, 41))
        diag = diagnose(inst, 46.032258064516128)
        assert diag.outcome is DiagnosisClass.CORRECT

    def test_chain_invariant_enforced(self):
        with pytest.raises(ValueError):
            Diagnosis(DiagnosisClass.CORRECT, chain=("B-ADD",))
        with pytest.raises(ValueError):
            Diagnosis(DiagnosisClass.BUGGY)


class TestGoldenDiagnoses:
    def test_truncated_inverse_slope_submission(self):
        inst = make(TaskKind.LINEAR_MAIN, (47, 85, 99), (45, 98))
        diag = diagnose(inst, 107.94)
        assert diag.outcome is DiagnosisClass.BUGGY
        assert diag.chain == ("B-INV-SLOPE", "C-EXT")
        assert diag.rounding == 2
        assert diag.matched_value == pytest.approx(107.94)

    def test_additive_whole_task_submission(self):
        inst = make(TaskKind.LINEAR_MAIN, (23, 85, 97), (15, 41))
        diag = diagnose(inst, 67)
        assert diag.outcome is DiagnosisClass.BUGGY
        assert diag.chain == ("B-ADD",)
        assert diag.rounding is None
        assert route_subtask(diag, inst.kind) is TaskKind.LINEAR_SIMPLER

    def test_no_root_single_step_submissions(self):
        inst = make(TaskKind.EXP_MAIN, (77, 80, 85), (58, 55))
        for submitted in (52.155, 52.16):
            diag = diagnose(inst, submitted)
            assert diag.outcome is DiagnosisClass.BUGGY
            assert diag.chain == ("B-NOROOT", "B-SINGLE")
            assert route_subtask(diag, inst.kind) is TaskKind.EXP_SIMPLER


class TestTieBreaks:
    """Frozen collision cases: several traces match; the reported chain
    follows (correct first, fewest buggy rules, truncation rank, name)."""

    def test_correct_beats_buggy_overlap(self):
        # rounded correct answer 53.0 also sits within tolerance of a
        # wrong-gap trace; the correct reading wins
        inst = make(TaskKind.LINEAR_MAIN, (12, 19, 35), (60, 58))
        diag = diagnose(inst, 53.0)
        assert diag.outcome is DiagnosisClass.CORRECT
        assert diag.matched_value == pytest.approx(53.42857142857143)

    def test_correct_beats_buggy_overlap_second_case(self):
        inst = make(TaskKind.LINEAR_MAIN, (68, 93, 97), (13, 12))
        diag = diagnose(inst, 12.0)
        assert diag.outcome is DiagnosisClass.CORRECT
        assert diag.matched_value == pytest.approx(11.84)

    def test_fewest_buggy_rules_wins(self):
        # slope is exactly 1, so the inverted slope collides with the
        # correct one and both anchor-skipping chains give 148
        inst = make(TaskKind.LINEAR_MAIN, (24, 72, 76), (24, 72))
        diag = diagnose(inst, 148.0)
        assert diag.outcome is DiagnosisClass.BUGGY
        assert diag.chain == ("C-SLOPE", "B-NOANCHOR")
        assert diag.rounding is None

    def test_truncation_rank_prefers_deepest(self):
        # submitted value matches the 2- and 3-decimal variants but not the
        # untruncated trace; 3 decimals outranks 2
        inst = make(TaskKind.LINEAR_MAIN, (15, 42, 70), (91, 17))
        diag = diagnose(inst, -174.8)
        assert diag.chain == ("C-SLOPE", "B-NOANCHOR")
        assert diag.rounding == 3

    def test_truncation_rank_second_case(self):
        inst = make(TaskKind.LINEAR_MAIN, (27, 74, 95), (18, 97))
        diag = diagnose(inst, 211.24)
        assert diag.chain == ("C-SLOPE", "B-WRONGGAP")
        assert diag.rounding == 3

    def test_untruncated_outranks_all_truncations(self):
        # integer slope: every truncation variant has the identical value,
        # and the untruncated reading is reported
        inst = make(TaskKind.LINEAR_MAIN, (41, 73, 81), (25, 41))
        diag = diagnose(inst, 57.0)
        assert diag.rounding is None

    def test_lexicographic_on_full_tie(self):
        # additive and proportional whole-task values coincide at 102
        inst = make(TaskKind.LINEAR_MAIN, (55, 62, 93), (34, 68))
        diag = diagnose(inst, 102.0)
        assert diag.chain == ("B-ADD",)

    def test_lexicographic_single_vs_two_step(self):
        # B-ADD (102... here 57) ties with the inverted-slope chain; the
        # lexicographically smaller chain is reported
        inst = make(TaskKind.LINEAR_MAIN, (41, 73, 81), (25, 41))
        diag = diagnose(inst, 57.0)
        assert diag.chain == ("B-ADD",)

    def test_lexicographic_two_two_step_chains(self):
        inst = make(TaskKind.LINEAR_MAIN, (20, 26, 28), (36, 39))
        diag = diagnose(inst, 43.0)
        assert diag.chain == ("B-INV-SLOPE", "C-EXT")


class TestRecoveryOnSeparatedBanks:
    def test_every_buggy_trace_recovers_its_class(self, tuned_banks):
        rng = random.Random(59)
        for kind in (TaskKind.LINEAR_MAIN, TaskKind.EXP_MAIN):
            bank = tuned_banks[kind]
            for params in rng.sample(list(bank.entries), 10):
                inst = instantiate(kind, params)
                for t in enumerate_traces(inst):
                    diag = diagnose(inst, t.value)
                    if t.rules == correct_chain(kind):
                        assert diag.outcome is DiagnosisClass.CORRECT
                    else:
                        assert diag.outcome is DiagnosisClass.BUGGY
                        assert diag.chain == t.rules, (params, t)


class TestRouting:
    def test_full_table_against_oracle(self):
        for kind in (TaskKind.LINEAR_MAIN, TaskKind.EXP_MAIN):
            inst = make(kind, *TestEnumeration.PUBLISHED[kind][:2])
            for t in enumerate_traces(inst):
                if t.rules == correct_chain(kind):
                    continue
                diag = Diagnosis(DiagnosisClass.BUGGY, t.rules, t.rounding,
                                 t.value)
                got = route_subtask(diag, kind)
                want = oracle.expected_route(t.rules, kind.value)
                assert got.value == want, t.rules

    def test_correct_routes_nowhere(self):
        diag = Diagnosis(DiagnosisClass.CORRECT)
        assert route_subtask(diag, TaskKind.LINEAR_MAIN) is None

    def test_no_input_routes_to_simpler(self):
        diag = Diagnosis(DiagnosisClass.NO_INPUT)
        assert route_subtask(diag, TaskKind.LINEAR_MAIN) is TaskKind.LINEAR_SIMPLER
        assert route_subtask(diag, TaskKind.EXP_MAIN) is TaskKind.EXP_SIMPLER

    def test_undetectable_routes_to_simpler(self):
        diag = Diagnosis(DiagnosisClass.UNDETECTABLE)
        assert route_subtask(diag, TaskKind.EXP_MAIN) is TaskKind.EXP_SIMPLER

    def test_whole_task_combo_routes_to_simpler(self):
        diag = Diagnosis(DiagnosisClass.BUGGY, ("B-NOROOT", "B-SINGLE"))
        assert route_subtask(diag, TaskKind.EXP_MAIN) is TaskKind.EXP_SIMPLER

    def test_buggy_rate_outranks_buggy_extrapolation(self):
        diag = Diagnosis(DiagnosisClass.BUGGY, ("B-INV-SLOPE", "B-WRONGGAP"))
        assert (route_subtask(diag, TaskKind.LINEAR_MAIN)
                is TaskKind.LINEAR_COMPUTE_SLOPE)

    def test_non_main_kinds_rejected(self):
        diag = Diagnosis(DiagnosisClass.BUGGY, ("B-INV-SLOPE", "C-EXT"))
        for kind in TaskKind:
            if kind.is_main:
                continue
            with pytest.raises(ValueError):
                route_subtask(diag, kind)


class TestFeedbackComposition:
    def _types(self, messages):
        return [m.type for m in messages]

    def test_correct_gets_knowledge_of_result_only(self):
        inst = make(TaskKind.LINEAR_MAIN, (23, 85, 97), (15, 41))
        msgs = feedback_for(Diagnosis(DiagnosisClass.CORRECT),
                            TaskContext.MAIN, inst)
        assert self._types(msgs) == [FeedbackType.KR]
        assert "correct" in msgs[0].text.lower()

    def test_buggy_main_gets_low_specificity(self):
        inst = make(TaskKind.LINEAR_MAIN, (47, 85, 99), (45, 98))
        diag = Diagnosis(DiagnosisClass.BUGGY, ("B-INV-SLOPE", "C-EXT"), 2,
                         107.94)
        msgs = feedback_for(diag, TaskContext.MAIN, inst)
        assert self._types(msgs) == [FeedbackType.KR, FeedbackType.ES,
                                     FeedbackType.TA]
        es = msgs[1]
        assert es.specificity is Specificity.LOW
        assert "dividing the increase of x" in es.text
        assert es.text == RULES_BY_ID["B-INV-SLOPE"].feedback_low

    def test_buggy_subtask_gets_high_specificity(self):
        inst = make(TaskKind.LINEAR_COMPUTE_SLOPE, (23, 85), (15, 41))
        diag = Diagnosis(DiagnosisClass.BUGGY, ("B-INV-SLOPE",))
        msgs = feedback_for(diag, TaskContext.SUBTASK, inst)
        es = next(m for m in msgs if m.type is FeedbackType.ES)
        assert es.specificity is Specificity.HIGH
        # instance numbers are interpolated: 62/26 = 2.38..., 26/62 = 0.42
        assert "2.38" in es.text
        assert "0.42" in es.text

    def test_undetectable_gets_no_error_message(self):
        inst = make(TaskKind.LINEAR_MAIN, (23, 85, 97), (15, 41))
        msgs = feedback_for(Diagnosis(DiagnosisClass.UNDETECTABLE),
                            TaskContext.MAIN, inst)
        assert self._types(msgs) == [FeedbackType.KR, FeedbackType.TA]

    def test_no_input_message(self):
        inst = make(TaskKind.LINEAR_MAIN, (23, 85, 97), (15, 41))
        msgs = feedback_for(Diagnosis(DiagnosisClass.NO_INPUT),
                            TaskContext.MAIN, inst)
        assert self._types(msgs) == [FeedbackType.KR, FeedbackType.TA]
        assert "no answer" in msgs[0].text.lower()

    def test_first_buggy_rule_drives_error_message(self):
        inst = make(TaskKind.EXP_MAIN, (77, 80, 85), (58, 55))
        diag = Diagnosis(DiagnosisClass.BUGGY, ("B-NOROOT", "B-SINGLE"))
        msgs = feedback_for(diag, TaskContext.MAIN, inst)
        es = next(m for m in msgs if m.type is FeedbackType.ES)
        assert es.text == RULES_BY_ID["B-NOROOT"].feedback_low

    def test_as_dict_shapes(self):
        diag = Diagnosis(DiagnosisClass.BUGGY, ("B-ADD",), None, 67.0)
        assert diag.as_dict() == {"outcome": "Buggy", "chain": ["B-ADD"],
                                  "rounding": None, "matchedValue": 67.0}
        inst = make(TaskKind.LINEAR_MAIN, (23, 85, 97), (15, 41))
        msg = feedback_for(diag, TaskContext.MAIN, inst)[0]
        d = msg.as_dict()
        assert set(d) == {"type", "specificity", "text"}
