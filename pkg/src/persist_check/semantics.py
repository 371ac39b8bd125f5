"""
Machine model and transition rules of the view-based persistent x86 semantics.

WHAT IT DOES:
    1. Defines messages, memory, thread states and machine states
    2. Defines the expression, statement and labelled-statement languages
    3. Computes every successor of an atomic statement (step_atomic)
    4. Lifts atomic steps to labelled program steps (step_program, successors)
    5. Removes ghost updates from programs (strip_aux)

DESIGN PRINCIPLES:
    - States are frozen dataclasses; a step never mutates its input
    - Successor lists are ordered and duplicate-free so exploration is reproducible
    - Per-location views are tuples indexed by the location's declaration position
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Mapping, Optional, Tuple, TypeVar, Union

from persist_check import config
from persist_check.errors import ConfigurationError, EvaluationError

logger = logging.getLogger(__name__)

T = TypeVar("T")

# =============================================================================
# MEMORY
# =============================================================================


@dataclass(frozen=True)
class Message:
    """A write of value `val` to location `loc`."""

    loc: str
    val: int


@dataclass(frozen=True)
class Memory:
    """Append-only history of messages; a timestamp is an index into `msgs`."""

    locs: Tuple[str, ...]
    msgs: Tuple[Message, ...]

    def __len__(self) -> int:
        return len(self.msgs)

    def __getitem__(self, t: int) -> Message:
        return self.msgs[t]

    def index(self, loc: str) -> int:
        """Declaration position of `loc`."""
        try:
            return self.locs.index(loc)
        except ValueError:
            raise ConfigurationError(f"Undeclared location: {loc}") from None

    def append(self, msg: Message) -> "Memory":
        return Memory(self.locs, self.msgs + (msg,))

    def last_ts(self, loc: str) -> int:
        """Timestamp of the latest write to `loc`."""
        for t in range(len(self.msgs) - 1, -1, -1):
            if self.msgs[t].loc == loc:
                return t
        raise ConfigurationError(f"No message for location: {loc}")

    def noloc(self, upper: int, lower: int, loc: str) -> bool:
        """True iff no write to `loc` has a timestamp in (lower, upper]."""
        return all(self.msgs[t].loc != loc for t in range(lower + 1, upper + 1))


# =============================================================================
# THREAD AND MACHINE STATES
# =============================================================================


@dataclass(frozen=True)
class ThreadState:
    """Views of one thread plus its registers.

    coh, vp_async and vp_commit are indexed by location declaration position.
    """

    coh: Tuple[int, ...]
    vr_new: int
    vp_ready: int
    vp_async: Tuple[int, ...]
    vp_commit: Tuple[int, ...]
    regs: Tuple[Tuple[str, int], ...] = ()

    @property
    def maxcoh(self) -> int:
        return max(self.coh)

    def reg_map(self) -> Dict[str, int]:
        return dict(self.regs)

    def with_reg(self, name: str, value: int) -> "ThreadState":
        regs = dict(self.regs)
        regs[name] = value
        return replace(self, regs=tuple(sorted(regs.items())))


@dataclass(frozen=True)
class MachineState:
    """Program counters, thread states, shared memory and auxiliary store."""

    tids: Tuple[int, ...]
    pc: Tuple[str, ...]
    threads: Tuple[ThreadState, ...]
    mem: Memory
    aux: Tuple[Tuple[str, int], ...] = ()

    def position(self, tid: int) -> int:
        try:
            return self.tids.index(tid)
        except ValueError:
            raise ConfigurationError(f"Undeclared thread: {tid}") from None

    def thread(self, tid: int) -> ThreadState:
        return self.threads[self.position(tid)]

    def pc_of(self, tid: int) -> str:
        return self.pc[self.position(tid)]

    @property
    def is_final(self) -> bool:
        return all(label == config.FIN_LABEL for label in self.pc)

    def maxper(self, loc: str) -> int:
        """Join over all threads of the committed persist view of `loc`."""
        i = self.mem.index(loc)
        return max(ts.vp_commit[i] for ts in self.threads)

    def aux_map(self) -> Dict[str, int]:
        return dict(self.aux)

    def register(self, name: str) -> int:
        """Value of register `name`, looked up in its owning thread."""
        for ts in self.threads:
            for reg, value in ts.regs:
                if reg == name:
                    return value
        raise EvaluationError(f"Unbound register: {name}")

    def with_thread(self, tid: int, ts: ThreadState, mem: Memory) -> "MachineState":
        i = self.position(tid)
        threads = self.threads[:i] + (ts,) + self.threads[i + 1 :]
        return replace(self, threads=threads, mem=mem)

    def with_pc(self, tid: int, label: str) -> "MachineState":
        i = self.position(tid)
        return replace(self, pc=self.pc[:i] + (label,) + self.pc[i + 1 :])

    def with_aux(self, name: str, value: int) -> "MachineState":
        aux = dict(self.aux)
        aux[name] = value
        return replace(self, aux=tuple(sorted(aux.items())))


# =============================================================================
# EXPRESSIONS
# =============================================================================


@dataclass(frozen=True)
class Lit:
    value: int


@dataclass(frozen=True)
class Var:
    """A register, or an auxiliary variable inside a ghost update."""

    name: str


@dataclass(frozen=True)
class Arith:
    op: str  # "+" or "-"
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Compare:
    op: str  # "=", "!=" or "<"
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class BoolConst:
    value: bool


@dataclass(frozen=True)
class BoolNot:
    operand: "BoolExpr"


@dataclass(frozen=True)
class BoolBin:
    op: str  # "and" or "or"
    left: "BoolExpr"
    right: "BoolExpr"


Expr = Union[Lit, Var, Arith]
BoolExpr = Union[Compare, BoolConst, BoolNot, BoolBin]


def eval_expr(env: Mapping[str, int], e: Union[Expr, BoolExpr]) -> int:
    """
    Evaluate an expression over natural numbers.

    Subtraction saturates at 0. Boolean expressions evaluate to 1 or 0.

    Args:
        env: Register (or auxiliary) values
        e: Expression to evaluate

    Returns:
        The expression's value

    Raises:
        EvaluationError: If a variable is not bound in env
    """
    if isinstance(e, Lit):
        return e.value
    if isinstance(e, Var):
        if e.name not in env:
            raise EvaluationError(f"Unbound register: {e.name}")
        return env[e.name]
    if isinstance(e, Arith):
        left, right = eval_expr(env, e.left), eval_expr(env, e.right)
        if e.op == "+":
            return left + right
        if e.op == "-":
            return max(0, left - right)
        raise EvaluationError(f"Unknown arithmetic operator: {e.op}")
    if isinstance(e, Compare):
        left, right = eval_expr(env, e.left), eval_expr(env, e.right)
        if e.op == "=":
            return int(left == right)
        if e.op == "!=":
            return int(left != right)
        if e.op == "<":
            return int(left < right)
        raise EvaluationError(f"Unknown comparison operator: {e.op}")
    if isinstance(e, BoolConst):
        return int(e.value)
    if isinstance(e, BoolNot):
        return 1 - eval_expr(env, e.operand)
    if isinstance(e, BoolBin):
        left = eval_expr(env, e.left)
        if e.op == "and":
            return int(bool(left) and bool(eval_expr(env, e.right)))
        if e.op == "or":
            return int(bool(left) or bool(eval_expr(env, e.right)))
        raise EvaluationError(f"Unknown boolean operator: {e.op}")
    raise EvaluationError(f"Not an expression: {e!r}")


def eval_cond(env: Mapping[str, int], b: BoolExpr) -> bool:
    return eval_expr(env, b) != 0


def expr_vars(e: Union[Expr, BoolExpr]) -> List[str]:
    """Variable names referenced by an expression, in order of appearance."""
    if isinstance(e, Var):
        return [e.name]
    if isinstance(e, (Arith, Compare, BoolBin)):
        return expr_vars(e.left) + expr_vars(e.right)
    if isinstance(e, BoolNot):
        return expr_vars(e.operand)
    return []


# =============================================================================
# STATEMENTS
# =============================================================================


@dataclass(frozen=True)
class Skip:
    pass


@dataclass(frozen=True)
class Assign:
    reg: str
    expr: Expr


@dataclass(frozen=True)
class Load:
    reg: str
    loc: str


@dataclass(frozen=True)
class Store:
    loc: str
    expr: Expr


@dataclass(frozen=True)
class Cas:
    reg: str
    loc: str
    expected: Expr
    new: Expr


@dataclass(frozen=True)
class SFence:
    pass


@dataclass(frozen=True)
class MFence:
    pass


@dataclass(frozen=True)
class Flush:
    loc: str


@dataclass(frozen=True)
class FlushOpt:
    loc: str


AtomicStatement = Union[Skip, Assign, Load, Store, Cas, SFence, MFence, Flush, FlushOpt]


@dataclass(frozen=True)
class Plain:
    stmt: AtomicStatement
    next: str


@dataclass(frozen=True)
class IfGoto:
    cond: BoolExpr
    then_label: str
    else_label: str


@dataclass(frozen=True)
class Ghost:
    """An atomic statement executed together with the update aux_var := aux_expr."""

    stmt: AtomicStatement
    next: str
    aux_var: str
    aux_expr: Expr


LabelledStatement = Union[Plain, IfGoto, Ghost]


def statement_loc(stmt: AtomicStatement) -> Optional[str]:
    return getattr(stmt, "loc", None)


def statement_registers(stmt: AtomicStatement) -> List[str]:
    """Registers written or read by an atomic statement."""
    if isinstance(stmt, Assign):
        return [stmt.reg] + expr_vars(stmt.expr)
    if isinstance(stmt, Load):
        return [stmt.reg]
    if isinstance(stmt, Store):
        return expr_vars(stmt.expr)
    if isinstance(stmt, Cas):
        return [stmt.reg] + expr_vars(stmt.expected) + expr_vars(stmt.new)
    return []


# =============================================================================
# PROGRAMS
# =============================================================================


def _unique(items: Iterable[T]) -> List[T]:
    seen = set()
    result = []
    for item in items:
        if item not in seen:
            seen.add(item)
            result.append(item)
    return result


@dataclass
class Program:
    """
    A concurrent program: labelled statements per (thread, label).

    `code` preserves the order in which labels were declared, which fixes the
    order labels are listed in reports and pretty-printed files.
    """

    locations: Tuple[str, ...]
    tids: Tuple[int, ...]
    code: Dict[Tuple[int, str], LabelledStatement] = field(default_factory=dict)

    def labels(self, tid: int) -> List[str]:
        """All labels of `tid` with code, followed by the final label."""
        return [label for (t, label) in self.code if t == tid] + [config.FIN_LABEL]

    def statement(self, tid: int, label: str) -> LabelledStatement:
        try:
            return self.code[(tid, label)]
        except KeyError:
            raise ConfigurationError(f"No code for thread {tid} at label {label}") from None

    def registers(self, tid: int) -> List[str]:
        names: List[str] = []
        for (t, _), ls in self.code.items():
            if t != tid:
                continue
            if isinstance(ls, IfGoto):
                names.extend(expr_vars(ls.cond))
            else:
                names.extend(statement_registers(ls.stmt))
        return _unique(names)

    def aux_vars(self) -> List[str]:
        names: List[str] = []
        for ls in self.code.values():
            if isinstance(ls, Ghost):
                names.append(ls.aux_var)
                names.extend(expr_vars(ls.aux_expr))
        return _unique(names)

    def register_owner(self) -> Dict[str, int]:
        return {reg: tid for tid in self.tids for reg in self.registers(tid)}

    def successor_labels(self, tid: int, label: str) -> List[str]:
        ls = self.code.get((tid, label))
        if ls is None:
            return []
        if isinstance(ls, IfGoto):
            return [ls.then_label, ls.else_label]
        return [ls.next]

    def is_cyclic(self, tid: Optional[int] = None) -> bool:
        """True iff the label graph of `tid` (or of any thread) has a cycle."""
        tids = self.tids if tid is None else (tid,)
        for t in tids:
            state: Dict[str, int] = {}  # 1 = on stack, 2 = done

            def visit(label: str) -> bool:
                state[label] = 1
                for nxt in self.successor_labels(t, label):
                    mark = state.get(nxt)
                    if mark == 1 or (mark is None and visit(nxt)):
                        return True
                state[label] = 2
                return False

            if visit(config.INIT_LABEL):
                return True
        return False

    def validate(self) -> None:
        """
        Check the program's static well-formedness.

        Raises:
            ConfigurationError: On missing initial code, code at the final label,
                dangling labels, undeclared locations or shared registers
        """
        if len(set(self.locations)) != len(self.locations):
            raise ConfigurationError(f"Duplicate location in {list(self.locations)}")
        for tid in self.tids:
            if (tid, config.INIT_LABEL) not in self.code:
                raise ConfigurationError(f"Thread {tid} has no code at {config.INIT_LABEL}")
        for (tid, label), ls in self.code.items():
            if tid not in self.tids:
                raise ConfigurationError(f"Code for undeclared thread {tid}")
            if label == config.FIN_LABEL:
                raise ConfigurationError(f"Thread {tid} has code at {config.FIN_LABEL}")
            for nxt in self.successor_labels(tid, label):
                if nxt != config.FIN_LABEL and (tid, nxt) not in self.code:
                    raise ConfigurationError(f"Thread {tid} jumps to unknown label {nxt}")
            if not isinstance(ls, IfGoto):
                loc = statement_loc(ls.stmt)
                if loc is not None and loc not in self.locations:
                    raise ConfigurationError(f"Undeclared location: {loc}")
        owners: Dict[str, int] = {}
        for tid in self.tids:
            for reg in self.registers(tid):
                if reg in owners:
                    raise ConfigurationError(
                        f"Register {reg} used by threads {owners[reg]} and {tid}"
                    )
                owners[reg] = tid
        clash = set(owners) & set(self.aux_vars())
        if clash:
            raise ConfigurationError(f"Names used as register and aux: {sorted(clash)}")


# =============================================================================
# TRANSITIONS
# =============================================================================


def _raise(views: Tuple[int, ...], i: int, t: int) -> Tuple[int, ...]:
    """Join timestamp t into position i."""
    if views[i] >= t:
        return views
    return views[:i] + (t,) + views[i + 1 :]


def _read_from(ts: ThreadState, i: int, t: int) -> ThreadState:
    """View update of an external read of timestamp t at location position i."""
    return replace(
        ts,
        coh=ts.coh[:i] + (t,) + ts.coh[i + 1 :],
        vr_new=max(ts.vr_new, t),
        vp_ready=max(ts.vp_ready, t),
    )


def step_atomic(
    ts: ThreadState,
    mem: Memory,
    stmt: AtomicStatement,
    strict_cas_read: bool = False,
) -> List[Tuple[ThreadState, Memory]]:
    """
    All successors of executing `stmt` in thread state `ts` over memory `mem`.

    Args:
        ts: State of the executing thread
        mem: Shared memory
        stmt: Atomic statement to execute
        strict_cas_read: Require failed CAS reads to be observable, as loads are

    Returns:
        Ordered, duplicate-free list of (thread state, memory) successors

    Raises:
        ConfigurationError: If the statement names an undeclared location
    """
    if isinstance(stmt, Skip):
        return [(ts, mem)]

    if isinstance(stmt, Assign):
        return [(ts.with_reg(stmt.reg, eval_expr(ts.reg_map(), stmt.expr)), mem)]

    if isinstance(stmt, Store):
        i = mem.index(stmt.loc)
        value = eval_expr(ts.reg_map(), stmt.expr)
        new_ts = replace(ts, coh=ts.coh[:i] + (len(mem),) + ts.coh[i + 1 :])
        return [(new_ts, mem.append(Message(stmt.loc, value)))]

    if isinstance(stmt, Load):
        i = mem.index(stmt.loc)
        coh = ts.coh[i]
        result = []
        if mem.noloc(ts.vr_new, coh, stmt.loc):
            result.append((ts.with_reg(stmt.reg, mem[coh].val), mem))
        for t in range(coh + 1, len(mem)):
            if mem[t].loc == stmt.loc and mem.noloc(ts.vr_new, t, stmt.loc):
                result.append((_read_from(ts, i, t).with_reg(stmt.reg, mem[t].val), mem))
        return _unique(result)

    if isinstance(stmt, Cas):
        return _step_cas(ts, mem, stmt, strict_cas_read)

    if isinstance(stmt, SFence):
        commit = tuple(max(c, a) for c, a in zip(ts.vp_commit, ts.vp_async))
        return [(replace(ts, vp_ready=max(ts.vp_ready, ts.maxcoh), vp_commit=commit), mem)]

    if isinstance(stmt, MFence):
        top = ts.maxcoh
        return [(replace(ts, vr_new=max(ts.vr_new, top), vp_ready=max(ts.vp_ready, top)), mem)]

    if isinstance(stmt, Flush):
        i = mem.index(stmt.loc)
        top = ts.maxcoh
        new_ts = replace(
            ts,
            vp_async=_raise(ts.vp_async, i, top),
            vp_commit=_raise(ts.vp_commit, i, top),
        )
        return [(new_ts, mem)]

    if isinstance(stmt, FlushOpt):
        i = mem.index(stmt.loc)
        bound = max(ts.coh[i], ts.vp_ready)
        return [(replace(ts, vp_async=_raise(ts.vp_async, i, bound)), mem)]

    raise ConfigurationError(f"Unknown statement: {stmt!r}")


def _step_cas(
    ts: ThreadState, mem: Memory, stmt: Cas, strict: bool
) -> List[Tuple[ThreadState, Memory]]:
    i = mem.index(stmt.loc)
    regs = ts.reg_map()
    expected = eval_expr(regs, stmt.expected)
    new_value = eval_expr(regs, stmt.new)
    last = mem.last_ts(stmt.loc)
    result = []

    if mem[last].val == expected:
        t = len(mem)
        new_ts = replace(
            ts,
            coh=ts.coh[:i] + (t,) + ts.coh[i + 1 :],
            vr_new=max(ts.vr_new, t),
            vp_ready=max(ts.vp_ready, t),
        ).with_reg(stmt.reg, 1)
        result.append((new_ts, mem.append(Message(stmt.loc, new_value))))

    def can_fail_on(t: int) -> bool:
        # A later write to the location exists iff t is not the last one
        if t == last and mem[t].val == expected:
            return False
        return not strict or mem.noloc(ts.vr_new, t, stmt.loc)

    coh = ts.coh[i]
    if can_fail_on(coh):
        result.append((ts.with_reg(stmt.reg, 0), mem))
    for t in range(coh + 1, len(mem)):
        if mem[t].loc == stmt.loc and can_fail_on(t):
            result.append((_read_from(ts, i, t).with_reg(stmt.reg, 0), mem))
    return _unique(result)


def step_thread(
    state: MachineState,
    tid: int,
    stmt: AtomicStatement,
    aux_update: Optional[Tuple[str, Expr]] = None,
    strict_cas_read: bool = False,
) -> List[MachineState]:
    """
    Execute `stmt` on behalf of `tid` without moving its program counter.

    When `aux_update` is given, the auxiliary assignment is evaluated in the
    pre-state store and applied in the same step.
    """
    aux_value = None
    if aux_update is not None:
        aux_value = eval_expr(state.aux_map(), aux_update[1])
    result = []
    for ts, mem in step_atomic(state.thread(tid), state.mem, stmt, strict_cas_read):
        nxt = state.with_thread(tid, ts, mem)
        if aux_update is not None:
            nxt = nxt.with_aux(aux_update[0], aux_value)
        result.append(nxt)
    return result


def step_program(
    state: MachineState, program: Program, tid: int, strict_cas_read: bool = False
) -> List[MachineState]:
    """
    Successors of `state` when thread `tid` executes its current labelled statement.

    Returns an empty list when the thread has reached the final label.
    """
    label = state.pc_of(tid)
    if label == config.FIN_LABEL:
        return []
    ls = program.statement(tid, label)

    if isinstance(ls, IfGoto):
        taken = eval_cond(state.thread(tid).reg_map(), ls.cond)
        return [state.with_pc(tid, ls.then_label if taken else ls.else_label)]

    if isinstance(ls, Ghost):
        stepped = step_thread(state, tid, ls.stmt, (ls.aux_var, ls.aux_expr), strict_cas_read)
    else:
        stepped = step_thread(state, tid, ls.stmt, None, strict_cas_read)
    return [s.with_pc(tid, ls.next) for s in stepped]


def successors(
    state: MachineState, program: Program, strict_cas_read: bool = False
) -> List[Tuple[int, MachineState]]:
    """All (thread, successor) pairs over threads that have not terminated."""
    result = []
    for tid in state.tids:
        for nxt in step_program(state, program, tid, strict_cas_read):
            result.append((tid, nxt))
    return result


def strip_aux(program: Program) -> Program:
    """Replace every ghost statement by its plain counterpart."""
    code: Dict[Tuple[int, str], LabelledStatement] = {}
    for key, ls in program.code.items():
        code[key] = Plain(ls.stmt, ls.next) if isinstance(ls, Ghost) else ls
    stripped = sum(1 for ls in program.code.values() if isinstance(ls, Ghost))
    logger.debug(f"Stripped {stripped} ghost update(s)")
    return Program(program.locations, program.tids, code)
