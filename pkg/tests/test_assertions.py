"""Assertion evaluation, crash invariants and printing."""

import pytest

from persist_check.assertions import (
    TRUE,
    And,
    AsyncView,
    AuxAtom,
    CondView,
    CountAtom,
    CrashInvariant,
    Implies,
    LastRead,
    LastVal,
    Not,
    Or,
    PersistView,
    SetOp,
    ThreadView,
    ViewAtom,
    conj,
    disj,
    evaluate,
    format_set,
    holds_after_crash,
    possible_nvms,
    reg_eq,
    symbols,
    to_text,
    undeclared,
    view_eq,
    view_sub,
)
from persist_check.errors import ConfigurationError, EvaluationError
from persist_check.semantics import FlushOpt, Lit, Load, Store, step_thread


@pytest.fixture
def stored(init_xy):
    [state] = step_thread(init_xy, 1, Store("x", Lit(1)))
    return state


class TestEvaluate:
    def test_set_operators(self, stored):
        view = ThreadView("x", 2)
        assert evaluate(view_eq(view, 0, 1), stored)
        assert evaluate(view_sub(view, 0, 1, 2), stored)
        assert not evaluate(view_sub(view, 1), stored)
        assert evaluate(ViewAtom(view, SetOp.CONTAINS, frozenset({1})), stored)
        assert evaluate(ViewAtom(view, SetOp.EXCLUDES, frozenset({5})), stored)
        assert not evaluate(ViewAtom(view, SetOp.EXCLUDES, frozenset({0})), stored)

    def test_connectives(self, stored):
        yes, no = view_eq(ThreadView("x", 1), 1), view_eq(ThreadView("x", 1), 0)
        assert evaluate(Or(no, yes), stored)
        assert not evaluate(And(yes, no), stored)
        assert evaluate(Implies(no, no), stored)
        assert evaluate(Not(no), stored)
        assert evaluate(conj(), stored)
        assert not evaluate(disj(), stored)

    def test_atoms(self, stored):
        assert evaluate(LastRead("x", 1), stored)
        assert evaluate(LastVal("x", 1), stored)
        assert evaluate(CountAtom("x", 1, ">=", 1), stored)
        assert evaluate(CountAtom("y", 1, "=", 0), stored)

    def test_register_atoms(self, stored):
        fresh = step_thread(stored, 2, Load("b", "x"))[1]
        assert evaluate(reg_eq("b", 1), fresh)
        assert evaluate(reg_eq("a", 0), fresh)

    def test_async_and_conditional_views(self, stored):
        [opt] = step_thread(stored, 1, FlushOpt("x"))
        assert evaluate(view_eq(AsyncView("x", 1), 1), opt)
        assert evaluate(view_eq(PersistView("x"), 0, 1), opt)
        assert evaluate(view_eq(CondView("x", 1, "y", 2), 0), opt)

    def test_nvm_overrides_persistent_views(self, stored):
        atom = view_eq(PersistView("x"), 1)
        assert not evaluate(atom, stored)
        assert evaluate(atom, stored, {"x": 1, "y": 0})

    def test_undeclared_location(self, stored):
        with pytest.raises(EvaluationError):
            evaluate(view_eq(ThreadView("q", 1), 0), stored)

    def test_unbound_register_and_aux(self, stored):
        with pytest.raises(EvaluationError):
            evaluate(reg_eq("zz", 0), stored)
        with pytest.raises(EvaluationError):
            evaluate(AuxAtom("ahat", "=", frozenset({0})), stored)


class TestSymbols:
    def test_collects_every_kind(self):
        a = conj(view_eq(CondView("y", 1, "x", 2), 1), reg_eq("a", 0), LastRead("z", 1))
        found = symbols(a)
        assert found.locations == {"x", "y", "z"}
        assert found.tids == {1, 2}
        assert found.registers == {"a"}

    def test_undeclared(self):
        a = And(view_eq(ThreadView("q", 3), 0), reg_eq("r", 1))
        problems = undeclared(a, ["x"], [1], ["a"], [])
        assert problems == ["location q", "thread 3", "register r"]


class TestCrash:
    def test_invariant_rejects_volatile_atoms(self):
        with pytest.raises(ConfigurationError):
            CrashInvariant(view_eq(ThreadView("x", 1), 0))

    def test_invariant_accepts_persistent_atoms(self):
        CrashInvariant(Implies(view_eq(PersistView("y"), 1), view_sub(PersistView("x"), 1)))
        CrashInvariant(TRUE)

    def test_nvms_are_the_product_of_persistent_views(self, stored):
        assert possible_nvms(stored) == [(("x", 0), ("y", 0)), (("x", 1), ("y", 0))]

    def test_oracle_matches_product(self, stored):
        assert set(possible_nvms(stored, oracle=True)) == set(possible_nvms(stored))

    def test_holds_after_crash_reports_failing_nvm(self, stored):
        check = holds_after_crash(CrashInvariant(view_eq(PersistView("x"), 0)), stored)
        assert not check
        assert check.nvm == (("x", 1), ("y", 0))


class TestPrinting:
    def test_format_set(self):
        assert format_set([1, 0]) == "{0,1}"

    def test_precedence(self):
        p, q, r = (view_eq(PersistView(loc), 1) for loc in "xyz")
        assert to_text(Implies(p, Or(q, r))) == "[x]_P = {1} => [y]_P = {1} \\/ [z]_P = {1}"
        assert to_text(And(Or(p, q), r)) == "([x]_P = {1} \\/ [y]_P = {1}) /\\ [z]_P = {1}"

    def test_atoms(self):
        assert to_text(reg_eq("a", 1)) == "reg a = 1"
        assert to_text(view_eq(CondView("y", 1, "x", 2), 1)) == "<y=1>[x]_2 = {1}"
        member = ViewAtom(AsyncView("x", 1), SetOp.CONTAINS, frozenset({1}))
        assert to_text(member) == "1 in [x]_A_1"
