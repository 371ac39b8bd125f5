"""Reachability, outcomes and crash-invariant checking."""

import pytest

from persist_check import config
from persist_check.assertions import CrashInvariant, PersistView, view_sub
from persist_check.errors import ConfigurationError
from persist_check.explorer import (
    ExploreOptions,
    check_crash_invariant,
    crash_reachable_nvms,
    default_options,
    explore,
    final_states,
    outcomes,
)
from persist_check.wellformed import initial_state


def _as_dicts(results):
    return {tuple(sorted(r.items())) for r in results}


class TestExplore:
    def test_sequential_program(self, reach):
        graph = reach("litmus_a")
        assert len(graph.states) == 3
        assert len(graph.edges) == 2
        assert not graph.truncated
        assert len(final_states(graph)) == 1

    def test_initial_state_first(self, corpus, reach):
        lit = corpus("sb")
        graph = reach(lit)
        assert graph.initial == initial_state(lit.spec, lit.program)

    def test_trace_reaches_state(self, reach):
        graph = reach("sb")
        last = len(graph.states) - 1
        trace = graph.trace(last)
        assert trace[0] == (None, graph.initial)
        assert trace[-1][1] == graph.states[last]
        assert all(tid in (1, 2) for tid, _ in trace[1:])

    def test_cyclic_program_needs_bound(self, corpus):
        lit = corpus("cas_spin")
        with pytest.raises(ConfigurationError):
            explore(lit.program, initial_state(lit.spec, lit.program))

    def test_default_bound_for_cyclic_program(self, corpus):
        lit = corpus("cas_spin")
        assert default_options(lit.program).max_steps == config.DEFAULT_MAX_STEPS
        assert default_options(corpus("sb").program).max_steps is None

    def test_small_bound_truncates(self, reach):
        graph = reach("cas_spin", max_steps=3)
        assert graph.truncated
        assert all(depth <= 3 for depth in graph.depth)

    def test_bounded_spin_lock_terminates(self, reach):
        graph = reach("cas_spin")
        assert not graph.truncated
        assert final_states(graph)


class TestOutcomes:
    def test_store_buffering(self, reach):
        results = _as_dicts(outcomes(reach("sb"), ["a", "b"]))
        assert results == {
            (("a", 0), ("b", 0)),
            (("a", 0), ("b", 1)),
            (("a", 1), ("b", 0)),
            (("a", 1), ("b", 1)),
        }

    def test_message_passing(self, reach):
        results = _as_dicts(outcomes(reach("mp"), ["a", "b"]))
        assert (("a", 7), ("b", 0)) not in results
        assert (("a", 7), ("b", 42)) in results
        assert (("a", 0), ("b", 0)) in results

    def test_projection_is_deduplicated(self, reach):
        assert sorted(r["a"] for r in outcomes(reach("sb"), ["a"])) == [0, 1]

    def test_undeclared_register(self, reach):
        with pytest.raises(ConfigurationError):
            outcomes(reach("sb"), ["zz"])


class TestCrash:
    def test_unflushed_stores_persist_in_any_combination(self, reach):
        nvms = crash_reachable_nvms(reach("litmus_a"))
        projected = {(dict(n)["x"], dict(n)["y"]) for n in nvms}
        assert projected == {(0, 0), (1, 0), (0, 1), (1, 1)}

    def test_oracle_agrees(self, reach):
        graph = reach("litmus_e")
        assert set(crash_reachable_nvms(graph, oracle=True)) == set(crash_reachable_nvms(graph))

    def test_flush_orders_persists(self, corpus, reach):
        lit = corpus("litmus_b")
        verdict = check_crash_invariant(reach(lit), lit.invariant)
        assert verdict
        assert verdict.state is None

    def test_flushopt_alone_does_not(self, corpus, reach):
        lit = corpus("litmus_c")
        graph = reach(lit)
        verdict = check_crash_invariant(graph, lit.invariant)
        assert not verdict
        assert dict(verdict.nvm)["x"] == 0 and dict(verdict.nvm)["y"] == 1
        assert verdict.trace[-1][1] == verdict.state == graph.states[verdict.state_index]

    def test_verdict_records_truncation(self, reach):
        inv = CrashInvariant(view_sub(PersistView("x"), 0, 1, 2))
        graph = reach("cas_spin", max_steps=3)
        assert check_crash_invariant(graph, inv).truncated


def test_strict_cas_read_keeps_outcomes(reach):
    relaxed = _as_dicts(outcomes(reach("cas_spin"), ["a", "b"]))
    strict = _as_dicts(outcomes(reach("cas_spin", strict_cas_read=True), ["a", "b"]))
    assert relaxed == strict == {(("a", 1), ("b", 1))}


def test_options_are_frozen():
    opts = ExploreOptions(max_steps=5)
    with pytest.raises(AttributeError):
        opts.max_steps = 6
