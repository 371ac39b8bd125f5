"""Litmus-file parsing, diagnostics and printing."""

import pytest

from persist_check import utils
from persist_check.assertions import TRUE, CrashInvariant, PersistView, RegAtom, view_eq
from persist_check.errors import LitmusParseError
from persist_check.litmus import (
    format_litmus,
    load_litmus,
    parse_assertion,
    parse_litmus,
    parse_statement,
)
from persist_check.semantics import (
    Arith,
    Cas,
    Compare,
    Ghost,
    IfGoto,
    Lit,
    Load,
    Plain,
    Store,
    Var,
)

SB = """\
# store buffering
locations x y
thread 1:
  init: store x 1 ; goto 2
  2: load a y ; goto fin
thread 2:
  init: store y 1 ; goto 2
  2: load b x ; goto fin
outcome: reg a = 0 /\\ reg b = 0
expect: reachable
"""


class TestParse:
    def test_program(self):
        lit = parse_litmus(SB, "sb")
        assert lit.program.locations == ("x", "y")
        assert lit.program.tids == (1, 2)
        assert lit.program.code[(1, "init")] == Plain(Store("x", Lit(1)), "2")
        assert lit.program.code[(2, "2")] == Plain(Load("b", "x"), "fin")
        assert lit.spec.registers == {1: ("a",), 2: ("b",)}
        assert lit.expect is True
        assert lit.invariant is None and lit.outline is None

    def test_init_values(self):
        lit = parse_litmus("locations x y\ninit x=3 y=4\nthread 1:\n  init: skip ; goto fin\n")
        assert lit.spec.init_values == {"x": 3, "y": 4}

    def test_greek_initial_label(self):
        lit = parse_litmus("locations x\nthread 1:\n  ι: flush x ; goto fin\n")
        assert (1, "init") in lit.program.code

    def test_statements(self):
        assert parse_statement("3: cas a x 0 (b + 1) ; goto 4") == (
            "3",
            Plain(Cas("a", "x", Lit(0), Arith("+", Var("b"), Lit(1))), "4"),
        )
        assert parse_statement("2: if (a != 0) goto 3 else goto fin") == (
            "2",
            IfGoto(Compare("!=", Var("a"), Lit(0)), "3", "fin"),
        )
        label, ghost = parse_statement("init: store x 1 ; goto 2 ; aux ahat := bhat + 1")
        assert label == "init"
        assert ghost == Ghost(Store("x", Lit(1)), "2", "ahat", Arith("+", Var("bhat"), Lit(1)))

    def test_forall_expands_to_conjunction(self):
        expanded = parse_assertion("forall o in {x, y} : [o]_P = {0}")
        assert expanded == parse_assertion("[x]_P = {0} /\\ [y]_P = {0}")

    def test_implication_is_right_associative(self):
        a = parse_assertion("reg a = 1 => reg b = 1 => reg c = 1")
        assert a == parse_assertion("reg a = 1 => (reg b = 1 => reg c = 1)")

    def test_register_set(self):
        assert parse_assertion("reg a in {0, 1}") == RegAtom("a", "in", frozenset({0, 1}))

    def test_outline_continuation_lines(self, corpus):
        lit = corpus("epoch")
        assert (2, "2") in lit.outline.ann
        assert lit.outline.ann[(2, "2")] == parse_assertion(
            "([x]_2 = {1} \\/ ([x]_2 = {1, 2} /\\ count x 2 = 1 /\\ lastr x 1 /\\ [x]_1 = {2}))"
            " /\\ [y]_P = {0} /\\ [z]_P = {0}"
        )

    def test_outline_without_invariant_is_trivially_persistent(self, corpus):
        lit = corpus("mp_proof")
        assert lit.invariant is None
        assert lit.outline.inv == CrashInvariant(TRUE)

    def test_crash_invariant(self, corpus):
        lit = corpus("litmus_b")
        expected = parse_assertion("[y]_P = {1} => [x]_P = {1}")
        assert lit.invariant.assertion == expected
        assert lit.invariant.assertion.right == view_eq(PersistView("x"), 1)


class TestErrors:
    @pytest.mark.parametrize(
        "text, line",
        [
            ("locations x\nthread 1:\n  init: jump x ; goto fin\n", 3),
            ("locations x\nthread 1:\n  init: skip ; goto fin\n  init: skip ; goto fin\n", 4),
            ("locations x\nthread 1:\n  init: skip ; goto fin\nexpect: maybe\n", 4),
            ("locations x\nthread 1:\n  init: skip ; goto fin\ncrash-invariant: [q]_P = {0}\n", 4),
            ("locations x\nthread 1:\n  init: skip ; goto fin\ncrash-invariant: [x]_1 = {0}\n", 4),
            ("locations x\nthread 1:\n  init: skip ; goto fin\nbanana\n", 4),
            ("locations x\nthread 1:\n  init: skip $ goto fin\n", 3),
        ],
    )
    def test_reports_line(self, text, line):
        with pytest.raises(LitmusParseError) as info:
            parse_litmus(text)
        assert info.value.line == line
        assert str(info.value).startswith(f"line {line}")

    def test_missing_locations(self):
        with pytest.raises(LitmusParseError, match="Missing locations"):
            parse_litmus("thread 1:\n  init: skip ; goto fin\n")

    def test_dangling_label(self):
        with pytest.raises(LitmusParseError, match="unknown label"):
            parse_litmus("locations x\nthread 1:\n  init: skip ; goto 5\n")

    def test_outline_for_unknown_label(self):
        text = "locations x\nthread 1:\n  init: skip ; goto fin\noutline:\n  1 7: true\n"
        with pytest.raises(LitmusParseError):
            parse_litmus(text)

    def test_column(self):
        with pytest.raises(LitmusParseError) as info:
            parse_litmus("locations x\nthread 1:\n  init: skip $ goto fin\n")
        assert info.value.column == 14


@pytest.mark.parametrize("path", utils.corpus_files(), ids=lambda p: p.stem)
def test_printed_corpus_parses_back(path):
    lit = load_litmus(path)
    assert parse_litmus(format_litmus(lit)) == lit
