"""Proof-outline validity conditions and their conclusions."""

from dataclasses import replace

import pytest

from persist_check import outline as outlines
from persist_check.assertions import TRUE, CrashInvariant, PersistView, ThreadView, view_eq
from persist_check.errors import ConfigurationError
from persist_check.explorer import ExploreOptions
from persist_check.litmus import parse_assertion
from persist_check.outline import (
    ProofOutline,
    Status,
    Universe,
    check_outline,
    describe,
    hoare_holds,
)
from persist_check.semantics import Flush, FlushOpt, Lit, Store, step_thread
from persist_check.wellformed import GenBounds, gen_state


def _check(lit, **kwargs):
    return check_outline(lit.program, lit.outline, lit.spec, **kwargs)


class TestTriples:
    def test_flush_persists_what_the_thread_sees(self, spec_xy):
        states = [gen_state(spec_xy, GenBounds(seed=seed)) for seed in range(200)]
        pre = view_eq(ThreadView("x", 1), 1)
        post = view_eq(PersistView("x"), 1)
        verdict = hoare_holds(pre, 1, Flush("x"), post, None, Universe.generated(states))
        assert verdict.status is Status.PASS

    def test_flushopt_alone_falsified(self, init_xy):
        [stored] = step_thread(init_xy, 1, Store("x", Lit(1)))
        pre = view_eq(ThreadView("x", 1), 1)
        post = view_eq(PersistView("x"), 1)
        verdict = hoare_holds(pre, 1, FlushOpt("x"), post, None, Universe.generated([stored]))
        assert verdict.status is Status.FAIL
        assert verdict.obligations == 1
        assert verdict.counterexample.state == stored

    def test_false_precondition_is_vacuous(self, init_xy):
        verdict = hoare_holds(
            parse_assertion("false"), 1, FlushOpt("x"), parse_assertion("false"), None,
            Universe.generated([init_xy]),
        )
        assert verdict.status is Status.PASS
        assert verdict.obligations == 0


class TestCheckOutline:
    def test_message_passing_outline(self, corpus):
        report = _check(corpus("mp_proof"))
        assert report.status is Status.PASS
        assert report.universe == "reachable"
        assert set(report.conditions) == {
            outlines.INITIALISATION,
            outlines.FINALISATION,
            outlines.LOCAL_CORRECTNESS,
            outlines.STABILITY,
            outlines.PERSISTENCE,
        }
        assert set(report.theorem) == {
            outlines.REACHABLE_ANNOTATIONS,
            outlines.FINAL_STATES,
            outlines.CRASH_STATES,
        }

    def test_program_points_is_weaker(self, corpus):
        assert _check(corpus("mp_proof"), program_points=True).passed

    def test_broken_annotation_reports_label(self, corpus):
        lit = corpus("fl_proof")
        ann = dict(lit.outline.ann)
        ann[(1, "3")] = parse_assertion("[x]_1 = {1} /\\ [y]_P = {0}")
        lit.outline = replace(lit.outline, ann=ann)
        report = _check(lit)
        verdict = report.conditions[outlines.LOCAL_CORRECTNESS]
        assert verdict.status is Status.FAIL
        assert verdict.counterexample.tid == 1
        assert verdict.counterexample.label == "3"
        assert "label 3" in describe(verdict.counterexample, lit.outline)
        assert report.status is Status.FAIL

    def test_unstable_annotation(self, corpus):
        lit = corpus("mp_proof")
        ann = dict(lit.outline.ann)
        ann[(2, "init")] = parse_assertion("[x]_2 = {0}")
        lit.outline = replace(lit.outline, ann=ann)
        verdict = _check(lit).conditions[outlines.STABILITY]
        assert verdict.status is Status.FAIL
        assert verdict.counterexample.interferer == (2, "init")

    def test_persistence_witness(self, corpus):
        report = _check(corpus("mp_fl"))
        assert report.passed
        assert report.witness == 1

    def test_set_reading_of_persistence_misses_nvm_combinations(self, corpus):
        lit = corpus("litmus_c")
        trivial = ProofOutline(TRUE, {}, lit.invariant, TRUE)
        report = check_outline(lit.program, trivial, lit.spec)
        assert report.passed
        assert report.theorem[outlines.CRASH_STATES].status is Status.FAIL
        assert report.status is Status.FAIL

    def test_persistence_fails_without_witness(self, corpus):
        lit = corpus("litmus_a")
        inv = CrashInvariant(view_eq(PersistView("x"), 0))
        report = check_outline(lit.program, ProofOutline(TRUE, {}, inv, TRUE), lit.spec)
        verdict = report.conditions[outlines.PERSISTENCE]
        assert verdict.status is Status.FAIL
        assert verdict.witnesses == []
        assert report.witness is None

    def test_bounded_exploration_downgrades_passes(self, corpus):
        lit = corpus("cas_spin")
        inv = CrashInvariant(parse_assertion("[x]_P <= {0, 1, 2}"))
        outline = ProofOutline(TRUE, {}, inv, TRUE)
        report = check_outline(lit.program, outline, lit.spec, ExploreOptions(max_steps=4))
        assert report.bounded
        assert report.status is Status.BOUNDED
        assert not report.passed

    def test_generated_universe(self, corpus):
        lit = corpus("fl_proof")
        report = _check(lit, universe_kind="generated", trials=50, seed=3)
        assert report.universe == "generated"
        assert report.states <= 51
        again = _check(lit, universe_kind="generated", trials=50, seed=3)
        assert again.status is report.status

    def test_unknown_universe(self, corpus):
        with pytest.raises(ConfigurationError):
            _check(corpus("fl_proof"), universe_kind="everything")

    def test_annotation_for_unknown_label(self, corpus):
        lit = corpus("fl_proof")
        lit.outline.ann[(1, "99")] = TRUE
        with pytest.raises(ConfigurationError):
            _check(lit)
