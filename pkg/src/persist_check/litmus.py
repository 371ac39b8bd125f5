"""
Litmus file format: parser and pretty printer.

A litmus file is line oriented:

    locations x y z
    init x=0 y=0
    thread 1:
      init: store x 1 ; goto 2
      2: if (a = 1) goto 3 else goto fin
      3: store y 1 ; goto fin ; aux ahat := ahat + 1
    outcome: reg a = 1 /\\ reg b = 0
    expect: unreachable
    crash-invariant: [y]_P = {1} => [x]_P = {1}
    outline:
      in: reg a = 0
      1 init: [x]_1 = {0}
      fin: true

Outline entries may continue on following lines. `#` starts a comment and the
label glyph `ι` is accepted for `init`.
"""

import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from persist_check import config
from persist_check.assertions import (
    COUNT_OPS,
    FALSE,
    TRUE,
    And,
    Assertion,
    AsyncView,
    AuxAtom,
    CondView,
    CountAtom,
    CrashInvariant,
    Implies,
    LastFlush,
    LastMFence,
    LastRead,
    LastVal,
    Not,
    Or,
    PersistView,
    RegAtom,
    SetOp,
    ThreadView,
    ViewAtom,
    conj,
    to_text,
    undeclared,
)
from persist_check.errors import ConfigurationError, LitmusParseError
from persist_check.outline import ProofOutline
from persist_check.semantics import (
    Arith,
    Assign,
    AtomicStatement,
    BoolBin,
    BoolConst,
    BoolExpr,
    BoolNot,
    Cas,
    Compare,
    Expr,
    Flush,
    FlushOpt,
    Ghost,
    IfGoto,
    LabelledStatement,
    Lit,
    Load,
    MFence,
    Plain,
    Program,
    SFence,
    Skip,
    Store,
    Var,
)
from persist_check.wellformed import InitSpec

logger = logging.getLogger(__name__)


@dataclass
class LitmusFile:
    """Everything one litmus file declares."""

    program: Program
    spec: InitSpec
    invariant: Optional[CrashInvariant] = None
    outline: Optional[ProofOutline] = None
    outcome: Optional[Assertion] = None
    expect: Optional[bool] = None  # True: outcome reachable
    name: str = field(default="", compare=False)


# =============================================================================
# TOKENS
# =============================================================================

_TOKEN_RE = re.compile(
    r"""
    (?P<CONDVIEW><\s*\w+\s*=\s*\w+\s*>\s*\[\s*\w+\s*\]_\w+)
  | (?P<VIEW>\[\s*\w+\s*\]_(?:A_\w+|\w+))
  | (?P<INT>\d+\b)
  | (?P<NAME>[A-Za-z_]\w*)
  | (?P<OP>:=|=>|/\\|\\/|<=|>=|!=|[=<>~(){},:;+\-])
  | (?P<WS>\s+)
  | (?P<MISMATCH>.)
    """,
    re.VERBOSE,
)
_VIEW_PARTS = re.compile(r"\[\s*(\w+)\s*\]_(A_\w+|\w+)")
_CONDVIEW_PARTS = re.compile(r"<\s*(\w+)\s*=\s*(\w+)\s*>\s*\[\s*(\w+)\s*\]_(\w+)")

_SECTION_RE = re.compile(
    r"^(?:(?P<locations>locations)\b(?P<locs>.*)"
    r"|(?P<init>init)\s+(?P<values>\w+\s*=.*)"
    r"|thread\s+(?P<thread>\d+)\s*:\s*$"
    r"|(?P<key>outcome|expect|crash-invariant|outline)\s*:(?P<rest>.*))$"
)
_ENTRY_RE = re.compile(r"^(?:(?P<tid>\d+)\s+(?P<label>\w+)|(?P<special>in|fin))\s*:(?P<body>.*)$")


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    column: int


def tokenize(text: str, line: Optional[int] = None, offset: int = 0) -> List[Token]:
    """Split one logical line into tokens; columns are 1-based."""
    tokens = []
    for match in _TOKEN_RE.finditer(text):
        kind = match.lastgroup
        column = match.start() + 1 + offset
        if kind == "WS":
            continue
        if kind == "MISMATCH":
            raise LitmusParseError(f"Unexpected character {match.group()!r}", line, column)
        tokens.append(Token(kind, match.group(), column))
    return tokens


# =============================================================================
# PARSER
# =============================================================================


class _Parser:
    """Recursive-descent parser over the tokens of one logical line."""

    def __init__(
        self, tokens: List[Token], line: Optional[int], env: Optional[Dict[str, str]] = None
    ):
        self.tokens = tokens
        self.pos = 0
        self.line = line
        self.env = env or {}

    # ----- token helpers -----

    def error(self, message: str) -> LitmusParseError:
        column = self.tokens[self.pos].column if self.pos < len(self.tokens) else None
        return LitmusParseError(message, self.line, column)

    def peek(self, offset: int = 0) -> Optional[Token]:
        i = self.pos + offset
        return self.tokens[i] if i < len(self.tokens) else None

    def at(self, *texts: str) -> bool:
        token = self.peek()
        return token is not None and token.text in texts

    def next(self) -> Token:
        token = self.peek()
        if token is None:
            raise self.error("Unexpected end of line")
        self.pos += 1
        return token

    def expect(self, text: str) -> Token:
        token = self.peek()
        if token is None or token.text != text:
            raise self.error(f"Expected {text!r}")
        return self.next()

    def done(self) -> None:
        if self.peek() is not None:
            raise self.error(f"Unexpected {self.peek().text!r}")

    def subst(self, text: str) -> str:
        return self.env.get(text, text)

    def word(self, what: str) -> str:
        token = self.next()
        if token.kind not in ("NAME", "INT"):
            self.pos -= 1
            raise self.error(f"Expected {what}")
        return self.subst(token.text)

    def name(self, what: str) -> str:
        text = self.word(what)
        if not re.fullmatch(r"[A-Za-z_]\w*", text):
            self.pos -= 1
            raise self.error(f"Expected {what}, got {text!r}")
        return text

    def number(self, what: str = "number") -> int:
        text = self.word(what)
        if not text.isdigit():
            self.pos -= 1
            raise self.error(f"Expected {what}, got {text!r}")
        return int(text)

    def to_int(self, text: str, what: str) -> int:
        text = self.subst(text)
        if not text.isdigit():
            raise self.error(f"Expected {what}, got {text!r}")
        return int(text)

    def label(self) -> str:
        text = self.word("label")
        return config.INIT_LABEL if text in config.INIT_LABEL_ALIASES else text

    # ----- expressions -----

    def expr(self) -> Expr:
        left = self.term()
        while self.at("+", "-"):
            op = self.next().text
            left = Arith(op, left, self.term())
        return left

    def term(self) -> Expr:
        if self.at("("):
            self.next()
            inner = self.expr()
            self.expect(")")
            return inner
        token = self.peek()
        if token is None:
            raise self.error("Expected expression")
        if token.kind == "INT":
            self.next()
            return Lit(int(token.text))
        if token.kind == "NAME":
            text = self.subst(self.next().text)
            return Lit(int(text)) if text.isdigit() else Var(text)
        raise self.error("Expected expression")

    def bool_expr(self) -> BoolExpr:
        left = self.bool_and()
        while self.at("or"):
            self.next()
            left = BoolBin("or", left, self.bool_and())
        return left

    def bool_and(self) -> BoolExpr:
        left = self.bool_unary()
        while self.at("and"):
            self.next()
            left = BoolBin("and", left, self.bool_unary())
        return left

    def bool_unary(self) -> BoolExpr:
        if self.at("not"):
            self.next()
            return BoolNot(self.bool_unary())
        if self.at("true", "false"):
            return BoolConst(self.next().text == "true")
        if self.at("("):
            saved = self.pos
            self.next()
            try:
                inner = self.bool_expr()
                self.expect(")")
                return inner
            except LitmusParseError:
                self.pos = saved
        left = self.expr()
        if not self.at("=", "!=", "<"):
            raise self.error("Expected comparison operator")
        op = self.next().text
        return Compare(op, left, self.expr())

    # ----- statements -----

    def statement(self) -> AtomicStatement:
        keyword = self.name("statement")
        if keyword == "skip":
            return Skip()
        if keyword == "assign":
            return Assign(self.name("register"), self.expr())
        if keyword == "load":
            return Load(self.name("register"), self.name("location"))
        if keyword == "store":
            return Store(self.name("location"), self.expr())
        if keyword == "cas":
            reg, loc = self.name("register"), self.name("location")
            return Cas(reg, loc, self.expr(), self.expr())
        if keyword == "sfence":
            return SFence()
        if keyword == "mfence":
            return MFence()
        if keyword == "flush":
            return Flush(self.name("location"))
        if keyword == "flushopt":
            return FlushOpt(self.name("location"))
        self.pos -= 1
        raise self.error(f"Unknown statement {keyword!r}")

    def labelled(self) -> Tuple[str, LabelledStatement]:
        label = self.label()
        self.expect(":")
        if self.at("if"):
            self.next()
            cond = self.bool_expr()
            self.expect("goto")
            then_label = self.label()
            self.expect("else")
            self.expect("goto")
            result: LabelledStatement = IfGoto(cond, then_label, self.label())
        else:
            stmt = self.statement()
            self.expect(";")
            self.expect("goto")
            nxt = self.label()
            if self.at(";"):
                self.next()
                self.expect("aux")
                aux_var = self.name("aux variable")
                self.expect(":=")
                result = Ghost(stmt, nxt, aux_var, self.expr())
            else:
                result = Plain(stmt, nxt)
        self.done()
        return label, result

    # ----- assertions -----

    def assertion(self) -> Assertion:
        left = self.disjunction()
        if self.at("=>"):
            self.next()
            return Implies(left, self.assertion())
        return left

    def disjunction(self) -> Assertion:
        left = self.conjunction()
        while self.at("\\/"):
            self.next()
            left = Or(left, self.conjunction())
        return left

    def conjunction(self) -> Assertion:
        left = self.unary()
        while self.at("/\\"):
            self.next()
            left = And(left, self.unary())
        return left

    def unary(self) -> Assertion:
        if self.at("~"):
            self.next()
            return Not(self.unary())
        if self.at("("):
            self.next()
            inner = self.assertion()
            self.expect(")")
            return inner
        if self.at("forall"):
            return self.forall()
        return self.atom()

    def forall(self) -> Assertion:
        self.expect("forall")
        var = self.next().text
        self.expect("in")
        items = self.word_set()
        self.expect(":")
        start = self.pos
        parts = []
        end = start
        for item in items:
            inner = _Parser(self.tokens, self.line, {**self.env, var: item})
            inner.pos = start
            parts.append(inner.unary())
            end = inner.pos
        if not items:
            self.unary()
            return TRUE
        self.pos = end
        return conj(*parts)

    def word_set(self) -> List[str]:
        self.expect("{")
        items = []
        while not self.at("}"):
            items.append(self.word("set element"))
            if not self.at("}"):
                self.expect(",")
        self.expect("}")
        return items

    def value_set(self) -> frozenset:
        return frozenset(self.to_int(item, "value") for item in self.word_set())

    def tid(self, text: str) -> int:
        return self.to_int(text, "thread id")

    def view(self) -> Union[ThreadView, PersistView, AsyncView, CondView]:
        token = self.next()
        if token.kind == "CONDVIEW":
            loc, value, other, tid = _CONDVIEW_PARTS.fullmatch(token.text).groups()
            return CondView(
                self.subst(loc), self.to_int(value, "value"), self.subst(other), self.tid(tid)
            )
        if token.kind != "VIEW":
            self.pos -= 1
            raise self.error("Expected a view")
        loc, which = _VIEW_PARTS.fullmatch(token.text).groups()
        loc = self.subst(loc)
        if which.startswith("A_"):
            return AsyncView(loc, self.tid(which[2:]))
        which = self.subst(which)
        if which == "P":
            return PersistView(loc)
        return ThreadView(loc, self.tid(which))

    def atom(self) -> Assertion:
        token = self.peek()
        if token is None:
            raise self.error("Expected assertion")
        if token.kind in ("VIEW", "CONDVIEW"):
            view = self.view()
            if self.at("="):
                self.next()
                return ViewAtom(view, SetOp.EQ, self.value_set())
            if self.at("<="):
                self.next()
                return ViewAtom(view, SetOp.SUBSET, self.value_set())
            raise self.error("Expected '=' or '<=' after view")
        if token.text in ("true", "false"):
            self.next()
            return TRUE if token.text == "true" else FALSE

        keyword = self.word("assertion")
        if keyword.isdigit() and self.at("in", "notin"):
            op = SetOp.CONTAINS if self.next().text == "in" else SetOp.EXCLUDES
            return ViewAtom(self.view(), op, frozenset({int(keyword)}))
        if keyword in ("lastr", "lastflush", "lastmfence"):
            loc = self.name("location")
            tid = self.tid(self.word("thread id"))
            cls = {"lastr": LastRead, "lastflush": LastFlush, "lastmfence": LastMFence}[keyword]
            return cls(loc, tid)
        if keyword == "lastval":
            return LastVal(self.name("location"), self.number("value"))
        if keyword == "count":
            loc, value = self.name("location"), self.number("value")
            op = self.next().text
            if op not in COUNT_OPS:
                self.pos -= 1
                raise self.error(f"Unknown count comparison {op!r}")
            return CountAtom(loc, value, op, self.number("count"))
        if keyword in ("reg", "aux"):
            name = self.name("register" if keyword == "reg" else "aux variable")
            op = self.next().text
            if op == "in":
                values = self.value_set()
            elif op in ("=", "!="):
                values = frozenset({self.number("value")})
            else:
                self.pos -= 1
                raise self.error(f"Unknown comparison {op!r}")
            return RegAtom(name, op, values) if keyword == "reg" else AuxAtom(name, op, values)
        self.pos -= 1
        raise self.error(f"Unknown assertion {keyword!r}")


def parse_assertion(text: str, line: Optional[int] = None, offset: int = 0) -> Assertion:
    parser = _Parser(tokenize(text, line, offset), line)
    result = parser.assertion()
    parser.done()
    return result


def parse_statement(text: str, line: Optional[int] = None) -> Tuple[str, LabelledStatement]:
    return _Parser(tokenize(text, line), line).labelled()


# =============================================================================
# FILES
# =============================================================================


@dataclass
class _Pending:
    """An assertion whose parsing waits until all declarations are known."""

    text: str
    line: int
    offset: int


def _strip_comment(line: str) -> str:
    return line.split("#", 1)[0].rstrip()


def parse_litmus(text: str, name: str = "<string>") -> LitmusFile:
    """
    Parse a litmus file.

    Args:
        text: File contents
        name: Name used in log messages

    Returns:
        LitmusFile with the program, declarations and optional sections

    Raises:
        LitmusParseError: On syntax errors, duplicate labels or threads, and
            references to undeclared symbols
    """
    locations: Optional[Tuple[str, ...]] = None
    init_values: Dict[str, int] = {}
    tids: List[int] = []
    code: Dict[Tuple[int, str], LabelledStatement] = {}
    code_lines: Dict[Tuple[int, str], int] = {}
    pending: Dict[str, _Pending] = {}
    entries: List[Tuple[Tuple[str, Optional[int], Optional[str]], _Pending]] = []
    expect: Optional[bool] = None
    block: Optional[Union[int, str]] = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        for alias in config.INIT_LABEL_ALIASES:
            if alias != config.INIT_LABEL:
                line = line.replace(alias, config.INIT_LABEL)
        stripped = line.strip()
        if not stripped:
            continue
        offset = len(line) - len(line.lstrip())
        section = _SECTION_RE.match(stripped)

        if section and section.group("locations"):
            locs = tuple(re.split(r"[\s,]+", section.group("locs").strip()))
            if locations is not None:
                raise LitmusParseError("Duplicate locations section", lineno, offset + 1)
            if locs == ("",):
                raise LitmusParseError("No locations declared", lineno, offset + 1)
            locations = locs
            block = None
        elif section and section.group("init"):
            for pair in re.split(r"[\s,]+(?=\w+\s*=)", section.group("values").strip()):
                match = re.fullmatch(r"(\w+)\s*=\s*(\d+)", pair.strip())
                if not match:
                    raise LitmusParseError(f"Bad initial value {pair!r}", lineno, offset + 1)
                init_values[match.group(1)] = int(match.group(2))
            block = None
        elif section and section.group("thread"):
            tid = int(section.group("thread"))
            if tid in tids:
                raise LitmusParseError(f"Duplicate thread {tid}", lineno, offset + 1)
            tids.append(tid)
            block = tid
        elif section and section.group("key"):
            key, rest = section.group("key"), section.group("rest")
            rest_offset = offset + section.start("rest")
            block = None
            if key == "outline":
                if rest.strip():
                    raise LitmusParseError("Outline entries start on the next line", lineno)
                block = "outline"
            elif key == "expect":
                word = rest.strip()
                if word not in ("reachable", "unreachable"):
                    raise LitmusParseError(
                        "expect must be 'reachable' or 'unreachable'", lineno, rest_offset + 1
                    )
                expect = word == "reachable"
            else:
                if key in pending:
                    raise LitmusParseError(f"Duplicate {key} section", lineno, offset + 1)
                pending[key] = _Pending(rest, lineno, rest_offset)
        elif isinstance(block, int):
            label, ls = _Parser(tokenize(line, lineno), lineno).labelled()
            if (block, label) in code:
                raise LitmusParseError(
                    f"Duplicate label {label} in thread {block}", lineno, offset + 1
                )
            code[(block, label)] = ls
            code_lines[(block, label)] = lineno
        elif block == "outline":
            entry = _ENTRY_RE.match(stripped)
            if entry:
                body_offset = offset + entry.start("body")
                if entry.group("special"):
                    key = (entry.group("special"), None, None)
                else:
                    label = entry.group("label")
                    if label in config.INIT_LABEL_ALIASES:
                        label = config.INIT_LABEL
                    key = ("ann", int(entry.group("tid")), label)
                if any(existing == key for existing, _ in entries):
                    raise LitmusParseError(f"Duplicate outline entry {stripped}", lineno)
                entries.append((key, _Pending(entry.group("body"), lineno, body_offset)))
            elif entries:
                entries[-1][1].text += " " + stripped
            else:
                raise LitmusParseError("Expected an outline entry", lineno, offset + 1)
        else:
            raise LitmusParseError(f"Unexpected line {stripped!r}", lineno, offset + 1)

    if locations is None:
        raise LitmusParseError("Missing locations section")
    if not tids:
        raise LitmusParseError("No threads declared")

    program = Program(locations, tuple(tids), code)
    try:
        program.validate()
        spec = InitSpec.for_program(program, init_values)
        if set(init_values) - set(locations):
            raise ConfigurationError(
                f"Initial value for undeclared location: {sorted(set(init_values) - set(locations))}"
            )
    except ConfigurationError as e:
        raise LitmusParseError(str(e)) from e

    registers = [r for t in program.tids for r in program.registers(t)]
    aux = program.aux_vars()

    def closed(item: _Pending, what: str) -> Assertion:
        assertion = parse_assertion(item.text, item.line, item.offset)
        problems = undeclared(assertion, locations, program.tids, registers, aux)
        if problems:
            raise LitmusParseError(f"Undeclared {problems[0]} in {what}", item.line)
        return assertion

    invariant = None
    if "crash-invariant" in pending:
        item = pending["crash-invariant"]
        try:
            invariant = CrashInvariant(closed(item, "crash invariant"))
        except ConfigurationError as e:
            raise LitmusParseError(str(e), item.line) from e

    outcome = closed(pending["outcome"], "outcome") if "outcome" in pending else None

    outline = None
    if entries:
        in_assert, fin_assert = TRUE, TRUE
        ann: Dict[Tuple[int, str], Assertion] = {}
        for (kind, tid, label), item in entries:
            if kind == "ann" and (tid not in program.tids or label not in program.labels(tid)):
                raise LitmusParseError(
                    f"Outline entry for unknown label {label} of thread {tid}", item.line
                )
            assertion = closed(item, "outline")
            if kind == "in":
                in_assert = assertion
            elif kind == "fin":
                fin_assert = assertion
            else:
                ann[(tid, label)] = assertion
        outline = ProofOutline(in_assert, ann, invariant or CrashInvariant(TRUE), fin_assert)

    logger.debug(f"Parsed {name}: {len(code)} statements in {len(tids)} threads")
    return LitmusFile(program, spec, invariant, outline, outcome, expect, name)


def load_litmus(path: Union[str, Path]) -> LitmusFile:
    """Read and parse a litmus file from disk."""
    path = Path(path)
    return parse_litmus(path.read_text(encoding="utf-8"), path.stem)


# =============================================================================
# PRETTY PRINTING
# =============================================================================


def format_expr(e: Expr) -> str:
    if isinstance(e, Lit):
        return str(e.value)
    if isinstance(e, Var):
        return e.name
    right = format_expr(e.right)
    if isinstance(e.right, Arith):
        right = f"({right})"
    return f"{format_expr(e.left)} {e.op} {right}"


def format_bool(b: BoolExpr) -> str:
    if isinstance(b, BoolConst):
        return "true" if b.value else "false"
    if isinstance(b, Compare):
        return f"{format_expr(b.left)} {b.op} {format_expr(b.right)}"
    if isinstance(b, BoolNot):
        return f"not ({format_bool(b.operand)})"
    return f"({format_bool(b.left)}) {b.op} ({format_bool(b.right)})"


def format_statement(stmt: AtomicStatement) -> str:
    if isinstance(stmt, Skip):
        return "skip"
    if isinstance(stmt, Assign):
        return f"assign {stmt.reg} {format_expr(stmt.expr)}"
    if isinstance(stmt, Load):
        return f"load {stmt.reg} {stmt.loc}"
    if isinstance(stmt, Store):
        return f"store {stmt.loc} {format_expr(stmt.expr)}"
    if isinstance(stmt, Cas):
        return (
            f"cas {stmt.reg} {stmt.loc} ({format_expr(stmt.expected)}) ({format_expr(stmt.new)})"
        )
    if isinstance(stmt, SFence):
        return "sfence"
    if isinstance(stmt, MFence):
        return "mfence"
    if isinstance(stmt, Flush):
        return f"flush {stmt.loc}"
    return f"flushopt {stmt.loc}"


def format_labelled(label: str, ls: LabelledStatement) -> str:
    if isinstance(ls, IfGoto):
        return f"{label}: if ({format_bool(ls.cond)}) goto {ls.then_label} else goto {ls.else_label}"
    text = f"{label}: {format_statement(ls.stmt)} ; goto {ls.next}"
    if isinstance(ls, Ghost):
        text += f" ; aux {ls.aux_var} := {format_expr(ls.aux_expr)}"
    return text


def format_litmus(lit: LitmusFile) -> str:
    """Litmus text that parses back to an equal LitmusFile."""
    program = lit.program
    lines = [f"locations {' '.join(program.locations)}"]
    if lit.spec.init_values:
        lines.append("init " + " ".join(f"{k}={v}" for k, v in lit.spec.init_values.items()))
    for tid in program.tids:
        lines.append(f"thread {tid}:")
        for (t, label), ls in program.code.items():
            if t == tid:
                lines.append("  " + format_labelled(label, ls))
    if lit.outcome is not None:
        lines.append(f"outcome: {to_text(lit.outcome)}")
    if lit.expect is not None:
        lines.append(f"expect: {'reachable' if lit.expect else 'unreachable'}")
    if lit.invariant is not None:
        lines.append(f"crash-invariant: {to_text(lit.invariant.assertion)}")
    if lit.outline is not None:
        outline = lit.outline
        lines.append("outline:")
        lines.append(f"  in: {to_text(outline.in_assert)}")
        for (tid, label), assertion in outline.ann.items():
            lines.append(f"  {tid} {label}: {to_text(assertion)}")
        lines.append(f"  fin: {to_text(outline.fin_assert)}")
    return "\n".join(lines) + "\n"
