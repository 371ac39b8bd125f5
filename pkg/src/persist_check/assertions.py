"""
Assertion language: AST, evaluation, crash invariants and post-crash memories.

WHAT IT DOES:
    1. Represents view-based assertions as immutable AST nodes
    2. Evaluates assertions over machine states (delegating atoms to views)
    3. Restricts crash invariants to persistent-view atoms
    4. Enumerates the non-volatile memories a crash may leave behind
    5. Prints assertions back to litmus syntax
"""

import itertools
import logging
import operator
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Set, Tuple, Union

from persist_check import views
from persist_check.errors import ConfigurationError, EvaluationError
from persist_check.semantics import MachineState

logger = logging.getLogger(__name__)

# A post-crash memory: (location, value) pairs in declaration order
NvmMap = Tuple[Tuple[str, int], ...]

# =============================================================================
# VIEW EXPRESSIONS
# =============================================================================


@dataclass(frozen=True)
class ThreadView:
    loc: str
    tid: int


@dataclass(frozen=True)
class PersistView:
    loc: str


@dataclass(frozen=True)
class AsyncView:
    loc: str
    tid: int


@dataclass(frozen=True)
class CondView:
    """<loc=value>[other]_tid"""

    loc: str
    value: int
    other: str
    tid: int


ViewExpr = Union[ThreadView, PersistView, AsyncView, CondView]

# =============================================================================
# ATOMS AND CONNECTIVES
# =============================================================================


class SetOp(str, Enum):
    EQ = "="
    SUBSET = "<="
    CONTAINS = "in"
    EXCLUDES = "notin"


@dataclass(frozen=True)
class ViewAtom:
    """Compares a view with a literal set; CONTAINS/EXCLUDES carry a single value."""

    view: ViewExpr
    op: SetOp
    values: FrozenSet[int]


@dataclass(frozen=True)
class LastRead:
    loc: str
    tid: int


@dataclass(frozen=True)
class LastFlush:
    loc: str
    tid: int


@dataclass(frozen=True)
class LastMFence:
    loc: str
    tid: int


@dataclass(frozen=True)
class LastVal:
    loc: str
    value: int


@dataclass(frozen=True)
class CountAtom:
    loc: str
    value: int
    op: str
    n: int


@dataclass(frozen=True)
class RegAtom:
    """reg = v, reg != v, or reg in {..}."""

    reg: str
    op: str
    values: FrozenSet[int]


@dataclass(frozen=True)
class AuxAtom:
    name: str
    op: str
    values: FrozenSet[int]


@dataclass(frozen=True)
class Const:
    value: bool


@dataclass(frozen=True)
class Not:
    operand: "Assertion"


@dataclass(frozen=True)
class And:
    left: "Assertion"
    right: "Assertion"


@dataclass(frozen=True)
class Or:
    left: "Assertion"
    right: "Assertion"


@dataclass(frozen=True)
class Implies:
    left: "Assertion"
    right: "Assertion"


Assertion = Union[
    ViewAtom,
    LastRead,
    LastFlush,
    LastMFence,
    LastVal,
    CountAtom,
    RegAtom,
    AuxAtom,
    Const,
    Not,
    And,
    Or,
    Implies,
]

TRUE = Const(True)
FALSE = Const(False)

COUNT_OPS: Dict[str, Callable[[int, int], bool]] = {
    "=": operator.eq,
    "!=": operator.ne,
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
}

VALUE_OPS = ("=", "!=", "in")


def conj(*parts: Assertion) -> Assertion:
    """Left-nested conjunction; TRUE for no parts."""
    if not parts:
        return TRUE
    result = parts[0]
    for part in parts[1:]:
        result = And(result, part)
    return result


def disj(*parts: Assertion) -> Assertion:
    if not parts:
        return FALSE
    result = parts[0]
    for part in parts[1:]:
        result = Or(result, part)
    return result


def view_eq(view: ViewExpr, *values: int) -> ViewAtom:
    return ViewAtom(view, SetOp.EQ, frozenset(values))


def view_sub(view: ViewExpr, *values: int) -> ViewAtom:
    return ViewAtom(view, SetOp.SUBSET, frozenset(values))


def reg_eq(reg: str, value: int) -> RegAtom:
    return RegAtom(reg, "=", frozenset({value}))


# =============================================================================
# EVALUATION
# =============================================================================


def view_values(
    view: ViewExpr, state: MachineState, nvm: Optional[Dict[str, int]] = None
) -> FrozenSet[int]:
    """Value set denoted by a view expression; persistent views follow `nvm` when given."""
    if isinstance(view, ThreadView):
        return views.thread_view(state, view.tid, view.loc)
    if isinstance(view, PersistView):
        if nvm is not None:
            if view.loc not in nvm:
                raise EvaluationError(f"Undeclared location: {view.loc}")
            return frozenset({nvm[view.loc]})
        return views.pview(state, view.loc)
    if isinstance(view, AsyncView):
        return views.aview(state, view.tid, view.loc)
    if isinstance(view, CondView):
        return views.cond_obs_view(state, view.tid, view.loc, view.value, view.other)
    raise EvaluationError(f"Not a view expression: {view!r}")


def _compare_value(value: int, op: str, values: FrozenSet[int]) -> bool:
    if op == "=":
        return values == {value}
    if op == "!=":
        return value not in values
    if op == "in":
        return value in values
    raise EvaluationError(f"Unknown value comparison: {op}")


def evaluate(
    assertion: Assertion, state: MachineState, nvm: Optional[Dict[str, int]] = None
) -> bool:
    """
    Evaluate an assertion over a machine state.

    Args:
        assertion: Assertion to evaluate
        state: Well-formed machine state
        nvm: If given, every [loc]_P atom denotes the singleton {nvm[loc]}

    Returns:
        Truth value of the assertion

    Raises:
        EvaluationError: If the assertion names an undeclared symbol
    """
    a = assertion
    try:
        if isinstance(a, Const):
            return a.value
        if isinstance(a, Not):
            return not evaluate(a.operand, state, nvm)
        if isinstance(a, And):
            return evaluate(a.left, state, nvm) and evaluate(a.right, state, nvm)
        if isinstance(a, Or):
            return evaluate(a.left, state, nvm) or evaluate(a.right, state, nvm)
        if isinstance(a, Implies):
            return (not evaluate(a.left, state, nvm)) or evaluate(a.right, state, nvm)
        if isinstance(a, ViewAtom):
            current = view_values(a.view, state, nvm)
            if a.op is SetOp.EQ:
                return current == a.values
            if a.op is SetOp.SUBSET:
                return current <= a.values
            if a.op is SetOp.CONTAINS:
                return a.values <= current
            return not (a.values & current)
        if isinstance(a, LastRead):
            return views.last_reader(state, a.loc, a.tid)
        if isinstance(a, LastFlush):
            return views.last_flush(state, a.loc, a.tid)
        if isinstance(a, LastMFence):
            return views.last_mfence(state, a.loc, a.tid)
        if isinstance(a, LastVal):
            return views.last_val(state, a.loc, a.value)
        if isinstance(a, CountAtom):
            state.mem.index(a.loc)
            return COUNT_OPS[a.op](views.write_count(state, a.loc, a.value), a.n)
        if isinstance(a, RegAtom):
            return _compare_value(state.register(a.reg), a.op, a.values)
        if isinstance(a, AuxAtom):
            aux = state.aux_map()
            if a.name not in aux:
                raise EvaluationError(f"Unbound aux variable: {a.name}")
            return _compare_value(aux[a.name], a.op, a.values)
    except ConfigurationError as e:
        raise EvaluationError(str(e)) from e
    raise EvaluationError(f"Not an assertion: {a!r}")


# =============================================================================
# SYMBOLS AND CLOSURE
# =============================================================================


@dataclass
class Symbols:
    """Symbols an assertion mentions."""

    locations: Set[str] = field(default_factory=set)
    tids: Set[int] = field(default_factory=set)
    registers: Set[str] = field(default_factory=set)
    aux: Set[str] = field(default_factory=set)


def symbols(assertion: Assertion, into: Optional[Symbols] = None) -> Symbols:
    acc = into if into is not None else Symbols()
    a = assertion
    if isinstance(a, Not):
        symbols(a.operand, acc)
    elif isinstance(a, (And, Or, Implies)):
        symbols(a.left, acc)
        symbols(a.right, acc)
    elif isinstance(a, ViewAtom):
        v = a.view
        acc.locations.add(v.loc)
        if isinstance(v, CondView):
            acc.locations.add(v.other)
        if not isinstance(v, PersistView):
            acc.tids.add(v.tid)
    elif isinstance(a, (LastRead, LastFlush, LastMFence)):
        acc.locations.add(a.loc)
        acc.tids.add(a.tid)
    elif isinstance(a, (LastVal, CountAtom)):
        acc.locations.add(a.loc)
    elif isinstance(a, RegAtom):
        acc.registers.add(a.reg)
    elif isinstance(a, AuxAtom):
        acc.aux.add(a.name)
    return acc


def undeclared(
    assertion: Assertion,
    locations: Iterable[str],
    tids: Iterable[int],
    registers: Iterable[str],
    aux: Iterable[str],
) -> List[str]:
    """Descriptions of every symbol in `assertion` outside the given declarations."""
    found = symbols(assertion)
    problems = [f"location {loc}" for loc in sorted(found.locations - set(locations))]
    problems += [f"thread {tid}" for tid in sorted(found.tids - set(tids))]
    problems += [f"register {reg}" for reg in sorted(found.registers - set(registers))]
    problems += [f"aux variable {name}" for name in sorted(found.aux - set(aux))]
    return problems


# =============================================================================
# CRASH INVARIANTS AND NVM ENUMERATION
# =============================================================================


def _only_persistent(a: Assertion) -> bool:
    if isinstance(a, Const):
        return True
    if isinstance(a, Not):
        return _only_persistent(a.operand)
    if isinstance(a, (And, Or, Implies)):
        return _only_persistent(a.left) and _only_persistent(a.right)
    return isinstance(a, ViewAtom) and isinstance(a.view, PersistView)


@dataclass(frozen=True)
class CrashInvariant:
    """An assertion over persistent views only."""

    assertion: Assertion

    def __post_init__(self) -> None:
        if not _only_persistent(self.assertion):
            raise ConfigurationError(
                f"Crash invariant may only use [loc]_P atoms: {to_text(self.assertion)}"
            )


@dataclass(frozen=True)
class CrashCheck:
    """Verdict of holds_after_crash; truthy iff every possible NVM passes."""

    holds: bool
    nvm: Optional[NvmMap] = None

    def __bool__(self) -> bool:
        return self.holds


def possible_nvms(state: MachineState, oracle: bool = False) -> List[NvmMap]:
    """
    Non-volatile memories a crash in `state` may leave behind.

    The default enumerates the product of the persistent views. With `oracle`,
    every map over values present in memory is tested directly for a persisted
    witness write per location.
    """
    mem = state.mem
    if not oracle:
        choices = [sorted(views.pview(state, loc)) for loc in mem.locs]
        return [tuple(zip(mem.locs, combo)) for combo in itertools.product(*choices)]

    candidates = [
        sorted({msg.val for msg in mem.msgs if msg.loc == loc}) for loc in mem.locs
    ]
    result = []
    for combo in itertools.product(*candidates):
        if all(
            _has_persisted_witness(state, loc, value) for loc, value in zip(mem.locs, combo)
        ):
            result.append(tuple(zip(mem.locs, combo)))
    return result


def _has_persisted_witness(state: MachineState, loc: str, value: int) -> bool:
    mem = state.mem
    top = state.maxper(loc)
    return any(
        mem[t].loc == loc and mem[t].val == value and mem.noloc(top, t, loc)
        for t in range(len(mem))
    )


def holds_after_crash(invariant: CrashInvariant, state: MachineState) -> CrashCheck:
    """Check the invariant against every possible NVM; report the first failing one."""
    for nvm in possible_nvms(state):
        if not evaluate(invariant.assertion, state, dict(nvm)):
            return CrashCheck(False, nvm)
    return CrashCheck(True)


# =============================================================================
# PRINTING
# =============================================================================

_PRECEDENCE = {Implies: 1, Or: 2, And: 3, Not: 4}


def _prec(a: Assertion) -> int:
    return _PRECEDENCE.get(type(a), 5)


def format_set(values: Iterable[int]) -> str:
    return "{" + ",".join(str(v) for v in sorted(values)) + "}"


def view_text(view: ViewExpr) -> str:
    if isinstance(view, ThreadView):
        return f"[{view.loc}]_{view.tid}"
    if isinstance(view, PersistView):
        return f"[{view.loc}]_P"
    if isinstance(view, AsyncView):
        return f"[{view.loc}]_A_{view.tid}"
    return f"<{view.loc}={view.value}>[{view.other}]_{view.tid}"


def _value_text(prefix: str, name: str, op: str, values: FrozenSet[int]) -> str:
    if op == "in":
        return f"{prefix} {name} in {format_set(values)}"
    (value,) = values
    return f"{prefix} {name} {op} {value}"


def to_text(assertion: Assertion) -> str:
    """Litmus syntax for an assertion; parsing the text yields an equal AST."""
    a = assertion
    if isinstance(a, Const):
        return "true" if a.value else "false"
    if isinstance(a, Not):
        inner = to_text(a.operand)
        return f"~({inner})" if _prec(a.operand) < 4 else f"~{inner}"
    if isinstance(a, (And, Or, Implies)):
        p = _prec(a)
        symbol = {And: "/\\", Or: "\\/", Implies: "=>"}[type(a)]
        right_assoc = isinstance(a, Implies)
        left, right = to_text(a.left), to_text(a.right)
        if _prec(a.left) < p or (right_assoc and _prec(a.left) == p):
            left = f"({left})"
        if _prec(a.right) < p or (not right_assoc and _prec(a.right) == p):
            right = f"({right})"
        return f"{left} {symbol} {right}"
    if isinstance(a, ViewAtom):
        if a.op in (SetOp.CONTAINS, SetOp.EXCLUDES):
            (value,) = a.values
            return f"{value} {a.op.value} {view_text(a.view)}"
        return f"{view_text(a.view)} {a.op.value} {format_set(a.values)}"
    if isinstance(a, LastRead):
        return f"lastr {a.loc} {a.tid}"
    if isinstance(a, LastFlush):
        return f"lastflush {a.loc} {a.tid}"
    if isinstance(a, LastMFence):
        return f"lastmfence {a.loc} {a.tid}"
    if isinstance(a, LastVal):
        return f"lastval {a.loc} {a.value}"
    if isinstance(a, CountAtom):
        return f"count {a.loc} {a.value} {a.op} {a.n}"
    if isinstance(a, RegAtom):
        return _value_text("reg", a.reg, a.op, a.values)
    if isinstance(a, AuxAtom):
        return _value_text("aux", a.name, a.op, a.values)
    raise EvaluationError(f"Not an assertion: {a!r}")
