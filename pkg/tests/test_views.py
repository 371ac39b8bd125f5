"""Timestamp sets and derived predicates."""

import pytest

from persist_check import views
from persist_check.semantics import Flush, Lit, Store, step_thread


@pytest.fixture
def stored(init_xy):
    [state] = step_thread(init_xy, 1, Store("x", Lit(1)))
    return state


@pytest.fixture
def two_writes(stored):
    """x := 1 at timestamp 2, then y := 1 at timestamp 3, both by thread 1."""
    [state] = step_thread(stored, 1, Store("y", Lit(1)))
    return state


def test_initial_views_are_the_initial_messages(init_xy):
    assert views.obs_ts(init_xy, 1, "x") == {0}
    assert views.persist_ts(init_xy, "y") == {1}
    assert views.async_ts(init_xy, 2, "x") == {0}
    assert views.last_reader(init_xy, "x", 2)


def test_vals_projects_values(stored):
    assert views.vals(stored.mem, [0, 2]) == {0, 1}


def test_observable_writes(stored):
    assert views.obs_ts(stored, 1, "x") == {2}
    assert views.obs_ts(stored, 2, "x") == {0, 2}


def test_persist_view_includes_unpersisted_writes(stored):
    assert views.persist_ts(stored, "x") == {0, 2}
    [flushed] = step_thread(stored, 1, Flush("x"))
    assert views.persist_ts(flushed, "x") == {2}


def test_last_reader(stored):
    assert views.last_reader(stored, "x", 1)
    assert not views.last_reader(stored, "x", 2)


def test_last_mfence_and_flush(stored):
    assert views.last_mfence(stored, "x", 1)
    assert not views.last_mfence(stored, "x", 2)
    assert views.last_flush(stored, "x", 1)
    assert not views.last_flush(stored, "x", 2)


def test_last_flush_after_persist(stored):
    [flushed] = step_thread(stored, 1, Flush("x"))
    assert views.last_flush(flushed, "x", 2)


def test_conditional_view_of_the_flag(two_writes):
    assert views.cond_view_ts(two_writes, 2, "y", 1) == {3}
    assert views.cond_obs_view(two_writes, 2, "y", 1, "x") == {1}


def test_conditional_view_of_the_stale_flag(two_writes):
    assert views.cond_view_ts(two_writes, 2, "y", 0) == {0}
    assert views.cond_obs_view(two_writes, 2, "y", 0, "x") == {0, 1}


def test_conditional_view_of_unseen_value_is_empty(two_writes):
    assert views.cond_obs_view(two_writes, 2, "y", 9, "x") == frozenset()


def test_last_val_and_write_count(two_writes):
    assert views.last_val(two_writes, "x", 1)
    assert not views.last_val(two_writes, "x", 0)
    assert views.write_count(two_writes, "y", 1) == 1
    assert views.write_count(two_writes, "y", 0) == 1
    assert views.write_count(two_writes, "y", 2) == 0
