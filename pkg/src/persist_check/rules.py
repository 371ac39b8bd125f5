"""
Executable catalogue of proof rules and stable assertions.

Every rule is a Hoare-triple template over a small set of parameters (threads,
locations, values, registers). Set variables such as S, counts n and register
values k are read off the pre-state before the precondition is evaluated.
test_rule instantiates a template over the full parameter grid on a batch of
generated well-formed states and reports the first instantiation whose
postcondition fails on some successor.
"""

import itertools
import logging
from dataclasses import dataclass, replace
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple

from tqdm import tqdm

from persist_check import config, views
from persist_check.assertions import (
    TRUE,
    And,
    Assertion,
    AsyncView,
    CondView,
    CountAtom,
    Implies,
    LastFlush,
    LastMFence,
    LastRead,
    LastVal,
    Or,
    PersistView,
    RegAtom,
    SetOp,
    ThreadView,
    ViewAtom,
    conj,
    evaluate,
    reg_eq,
)
from persist_check.semantics import (
    AtomicStatement,
    Cas,
    Flush,
    FlushOpt,
    Lit,
    Load,
    MachineState,
    MFence,
    SFence,
    Store,
    step_thread,
)
from persist_check.wellformed import GenBounds, InitSpec, gen_state

logger = logging.getLogger(__name__)

Binding = Dict[str, Any]
Template = Callable[[Binding], Assertion]
Skolem = Callable[[MachineState, Binding], Optional[Binding]]
Constraint = Callable[[Binding], bool]

TABLE_ATOMIC = "atomic"
TABLE_STABLE = "stable"
TABLE_CAS = "cas"
TABLE_CAS_STABLE = "cas-stable"
TABLE_MFENCE = "mfence"
TABLE_MFENCE_STABLE = "mfence-stable"


def register_name(tid: int, k: int) -> str:
    return f"r{tid}_{k}"


def rule_spec() -> InitSpec:
    """Declarations of the states the rules are tested on."""
    return InitSpec(
        locations=config.RULE_LOCATIONS,
        tids=config.RULE_THREADS,
        registers={
            t: tuple(register_name(t, k) for k in range(config.RULE_REGISTERS_PER_THREAD))
            for t in config.RULE_THREADS
        },
    )


def _domains(spec: InitSpec) -> Dict[str, Tuple[Any, ...]]:
    registers = tuple(r for t in spec.tids for r in spec.registers.get(t, ()))
    values = config.RULE_VALUES
    return {
        "t": tuple(spec.tids),
        "t2": tuple(spec.tids),
        "x": tuple(spec.locations),
        "y": tuple(spec.locations),
        "v": values,
        "v2": values,
        "u": values,
        "e1": values,
        "e2": values,
        "b": registers,
    }


# =============================================================================
# RULE TEMPLATES
# =============================================================================


def _always(binding: Binding) -> bool:
    return True


def _no_skolem(state: MachineState, binding: Binding) -> Optional[Binding]:
    return {}


@dataclass(frozen=True)
class RuleSpec:
    """
    A proof rule {pre} stmt {post} executed by thread t.

    `params` lists the grid parameters; `skolems` lists alternative ways of
    reading set variables from the pre-state, each tested separately.
    """

    name: str
    table: str
    text: str
    statement: Callable[[Binding], AtomicStatement]
    pre: Template
    post: Template
    params: Tuple[str, ...]
    constraint: Constraint = _always
    skolems: Tuple[Skolem, ...] = (_no_skolem,)


@dataclass
class Falsification:
    state: MachineState
    binding: Binding
    successor: MachineState


@dataclass
class RuleVerdict:
    name: str
    tried: int = 0
    states: int = 0
    falsified: Optional[Falsification] = None

    @property
    def passed(self) -> bool:
        return self.falsified is None


def _thread(loc_key: str, tid_key: str) -> Callable[[Binding], ThreadView]:
    return lambda b: ThreadView(b[loc_key], b[tid_key])


def _eq(view, values) -> ViewAtom:
    return ViewAtom(view, SetOp.EQ, frozenset(values))


def _sub(view, values) -> ViewAtom:
    return ViewAtom(view, SetOp.SUBSET, frozenset(values))


def _one(view, value: int, op: SetOp) -> ViewAtom:
    return ViewAtom(view, op, frozenset({value}))


def _count(loc: str, value: int, n: int) -> CountAtom:
    return CountAtom(loc, value, "=", n)


def _distinct(*keys: str) -> Constraint:
    first, second = keys
    return lambda b: b[first] != b[second]


def _set_of(fn: Callable[[MachineState, Binding], Any]) -> Skolem:
    return lambda s, b: {"S": fn(s, b)}


def _thread_set(loc: str, tid: str) -> Skolem:
    return _set_of(lambda s, b: views.thread_view(s, b[tid], b[loc]))


def _async_set(loc: str, tid: str) -> Skolem:
    return _set_of(lambda s, b: views.aview(s, b[tid], b[loc]))


def _persist_set(loc: str) -> Skolem:
    return _set_of(lambda s, b: views.pview(s, b[loc]))


def _count_of(loc: str, value: str) -> Skolem:
    return lambda s, b: {"n": views.write_count(s, b[loc], b[value])}


def _register_value(s: MachineState, b: Binding) -> Binding:
    return {"k": s.register(b["b"])}


def _singleton(loc: str, tid: str) -> Skolem:
    def bind(s: MachineState, b: Binding) -> Optional[Binding]:
        seen = views.thread_view(s, b[tid], b[loc])
        if len(seen) != 1:
            return None
        (value,) = seen
        return {"v": value}

    return bind


def _load(b: Binding) -> AtomicStatement:
    return Load(b["a"], b["x"])


def _store(b: Binding) -> AtomicStatement:
    return Store(b["x"], Lit(b["v"]))


def _flush(b: Binding) -> AtomicStatement:
    return Flush(b["x"])


def _flushopt(b: Binding) -> AtomicStatement:
    return FlushOpt(b["x"])


def _sfence(b: Binding) -> AtomicStatement:
    return SFence()


def _mfence(b: Binding) -> AtomicStatement:
    return MFence()


def _cas(b: Binding) -> AtomicStatement:
    return Cas(b["a"], b["x"], Lit(b["e1"]), Lit(b["e2"]))


def _rule(
    name: str,
    table: str,
    text: str,
    statement: Callable[[Binding], AtomicStatement],
    pre: Template,
    post: Template,
    params: str,
    constraint: Constraint = _always,
    skolems: Sequence[Skolem] = (_no_skolem,),
) -> RuleSpec:
    return RuleSpec(
        name, table, text, statement, pre, post, tuple(params.split()), constraint, tuple(skolems)
    )


def _stable(
    name: str,
    table: str,
    text: str,
    statement: Callable[[Binding], AtomicStatement],
    assertion: Template,
    params: str,
    constraint: Constraint = _always,
    skolems: Sequence[Skolem] = (_no_skolem,),
) -> RuleSpec:
    return _rule(name, table, text, statement, assertion, assertion, params, constraint, skolems)


def _atomic_rules() -> List[RuleSpec]:
    V = _thread
    A = TABLE_ATOMIC
    return [
        _rule(
            "LP1", A, "{[x]_t = S} load a x {a in S /\\ [x]_t <= S}",
            _load,
            lambda b: _eq(V("x", "t")(b), b["S"]),
            lambda b: And(RegAtom(b["a"], "in", b["S"]), _sub(V("x", "t")(b), b["S"])),
            "t x",
            skolems=[_thread_set("x", "t")],
        ),
        _rule(
            "LP2", A, "{u in [x]_t => <x=u>[y]_t = S} load a x {a = u => [y]_t <= S}",
            _load,
            lambda b: Implies(
                _one(V("x", "t")(b), b["u"], SetOp.CONTAINS),
                _eq(CondView(b["x"], b["u"], b["y"], b["t"]), b["S"]),
            ),
            lambda b: Implies(reg_eq(b["a"], b["u"]), _sub(V("y", "t")(b), b["S"])),
            "t x y u",
            skolems=[_set_of(lambda s, b: views.cond_obs_view(s, b["t"], b["x"], b["u"], b["y"]))],
        ),
        _rule(
            "LP3", A, "{count x u = 1 /\\ lastr x t' /\\ [x]_t' = {u}} load a x "
            "{a = u => [x]_t = {u}}",
            _load,
            lambda b: conj(
                _count(b["x"], b["u"], 1),
                LastRead(b["x"], b["t2"]),
                _eq(V("x", "t2")(b), {b["u"]}),
            ),
            lambda b: Implies(reg_eq(b["a"], b["u"]), _eq(V("x", "t")(b), {b["u"]})),
            "t t2 x u",
        ),
        _rule(
            "SP1", A, "{true} store x v {[x]_t = {v}}",
            _store,
            lambda b: TRUE,
            lambda b: _eq(V("x", "t")(b), {b["v"]}),
            "t x v",
        ),
        _rule(
            "SP2", A, "{[x]_t' = S} store x v {[x]_t' = S + {v}}, t != t'",
            _store,
            lambda b: _eq(V("x", "t2")(b), b["S"]),
            lambda b: _eq(V("x", "t2")(b), b["S"] | {b["v"]}),
            "t t2 x v",
            _distinct("t", "t2"),
            [_thread_set("x", "t2")],
        ),
        _rule(
            "SP3", A, "{[x]_A_t' = S} store x v {[x]_A_t' = S + {v}}",
            _store,
            lambda b: _eq(AsyncView(b["x"], b["t2"]), b["S"]),
            lambda b: _eq(AsyncView(b["x"], b["t2"]), b["S"] | {b["v"]}),
            "t t2 x v",
            skolems=[_async_set("x", "t2")],
        ),
        _rule(
            "SP4", A, "{[x]_P = S} store x v {[x]_P = S + {v}}",
            _store,
            lambda b: _eq(PersistView(b["x"]), b["S"]),
            lambda b: _eq(PersistView(b["x"]), b["S"] | {b["v"]}),
            "t x v",
            skolems=[_persist_set("x")],
        ),
        _rule(
            "SP5", A, "{[y]_t = S /\\ v notin [x]_t'} store x v {<x=v>[y]_t' <= S}, "
            "t != t', x != y",
            _store,
            lambda b: And(
                _eq(V("y", "t")(b), b["S"]), _one(V("x", "t2")(b), b["v"], SetOp.EXCLUDES)
            ),
            lambda b: _sub(CondView(b["x"], b["v"], b["y"], b["t2"]), b["S"]),
            "t t2 x y v",
            lambda b: b["t"] != b["t2"] and b["x"] != b["y"],
            [_thread_set("y", "t")],
        ),
        _rule(
            "SP6", A, "{true} store x v {lastr x t /\\ lastflush x t}",
            _store,
            lambda b: TRUE,
            lambda b: And(LastRead(b["x"], b["t"]), LastFlush(b["x"], b["t"])),
            "t x v",
        ),
        _rule(
            "SP7", A, "{count x v = n} store x v {count x v = n + 1}",
            _store,
            lambda b: _count(b["x"], b["v"], b["n"]),
            lambda b: _count(b["x"], b["v"], b["n"] + 1),
            "t x v",
            skolems=[_count_of("x", "v")],
        ),
        _rule(
            "FP1", A, "{[x]_t = S} flush x {[x]_P <= S /\\ [x]_A_t <= S}",
            _flush,
            lambda b: _eq(V("x", "t")(b), b["S"]),
            lambda b: And(_sub(PersistView(b["x"]), b["S"]), _sub(AsyncView(b["x"], b["t"]), b["S"])),
            "t x",
            skolems=[_thread_set("x", "t")],
        ),
        _rule(
            "FP2", A, "{[x]_P = S} flush x {[x]_P <= S}",
            _flush,
            lambda b: _eq(PersistView(b["x"]), b["S"]),
            lambda b: _sub(PersistView(b["x"]), b["S"]),
            "t x",
            skolems=[_persist_set("x")],
        ),
        _rule(
            "FP3", A, "{lastr x t' /\\ [x]_t' = {u} /\\ lastflush x t} flush x {[x]_P = {u}}",
            _flush,
            lambda b: conj(
                LastRead(b["x"], b["t2"]),
                _eq(V("x", "t2")(b), {b["u"]}),
                LastFlush(b["x"], b["t"]),
            ),
            lambda b: _eq(PersistView(b["x"]), {b["u"]}),
            "t t2 x u",
        ),
        _rule(
            "OP", A, "{[x]_t = S \\/ [x]_A_t = S} flushopt x {[x]_A_t <= S}",
            _flushopt,
            lambda b: Or(_eq(V("x", "t")(b), b["S"]), _eq(AsyncView(b["x"], b["t"]), b["S"])),
            lambda b: _sub(AsyncView(b["x"], b["t"]), b["S"]),
            "t x",
            skolems=[_thread_set("x", "t"), _async_set("x", "t")],
        ),
        _rule(
            "SFP", A, "{[x]_A_t = S \\/ [x]_P = S} sfence {[x]_P <= S}",
            _sfence,
            lambda b: Or(_eq(AsyncView(b["x"], b["t"]), b["S"]), _eq(PersistView(b["x"]), b["S"])),
            lambda b: _sub(PersistView(b["x"]), b["S"]),
            "t x",
            skolems=[_async_set("x", "t"), _persist_set("x")],
        ),
    ]


def _view_rule(
    name: str, table: str, statement, params: str, view: Callable[[Binding], Any],
    skolem: Skolem, text: str, constraint: Constraint = _always,
) -> RuleSpec:
    return _stable(
        name, table, text, statement,
        lambda b: _eq(view(b), b["S"]),
        params, constraint, [skolem],
    )


def _count_rule(name: str, table: str, statement, params: str, text: str,
                value: str = "v", constraint: Constraint = _always) -> RuleSpec:
    return _stable(
        name, table, text, statement,
        lambda b: _count(b["y"], b[value], b["n"]),
        params, constraint, [_count_of("y", value)],
    )


def _stable_rules() -> List[RuleSpec]:
    S = TABLE_STABLE
    ty = _thread("y", "t2")
    tx = _thread("x", "t2")
    x_ne_y = _distinct("x", "y")
    return [
        _view_rule("LS1", S, _load, "t t2 x y", ty, _thread_set("y", "t2"),
                   "load a x: [y]_t' = S, t != t'", _distinct("t", "t2")),
        _view_rule("LS2", S, _load, "t x y", lambda b: PersistView(b["y"]), _persist_set("y"),
                   "load a x: [y]_P = S"),
        _view_rule("LS3", S, _load, "t t2 x y", lambda b: AsyncView(b["y"], b["t2"]),
                   _async_set("y", "t2"), "load a x: [y]_A_t' = S"),
        _stable("LS4", S, "load a x: reg b = k, b != a", _load,
                lambda b: reg_eq(b["b"], b["k"]), "t x b", _distinct("a", "b"),
                [_register_value]),
        _stable("LS5", S, "load a x: lastr y t'", _load,
                lambda b: LastRead(b["y"], b["t2"]), "t t2 x y"),
        _view_rule("FS1", S, _flush, "t t2 x y", ty, _thread_set("y", "t2"),
                   "flush x: [y]_t' = S"),
        _view_rule("FS2", S, _flush, "t x y", lambda b: PersistView(b["y"]), _persist_set("y"),
                   "flush x: [y]_P = S, x != y", x_ne_y),
        _stable("FS3", S, "flush x: lastr y t'", _flush,
                lambda b: LastRead(b["y"], b["t2"]), "t t2 x y"),
        _stable("FS4", S, "flush x: lastflush y t'", _flush,
                lambda b: LastFlush(b["y"], b["t2"]), "t t2 x y"),
        _count_rule("FS5", S, _flush, "t x y v", "flush x: count y v = n"),
        _view_rule("SFS1", S, _sfence, "t t2 x", tx, _thread_set("x", "t2"),
                   "sfence: [x]_t' = S"),
        _stable("SFS2", S, "sfence: count x v = n", _sfence,
                lambda b: _count(b["x"], b["v"], b["n"]), "t x v",
                skolems=[_count_of("x", "v")]),
        _view_rule("WS1", S, _store, "t t2 x y v", ty, _thread_set("y", "t2"),
                   "store x v: [y]_t' = S, x != y", x_ne_y),
        _view_rule("WS2", S, _store, "t x y v", lambda b: PersistView(b["y"]),
                   _persist_set("y"), "store x v: [y]_P = S, x != y", x_ne_y),
        _view_rule("WS3", S, _store, "t t2 x y v", lambda b: AsyncView(b["y"], b["t2"]),
                   _async_set("y", "t2"), "store x v: [y]_A_t' = S, x != y", x_ne_y),
        _stable("WS4", S, "store x v: reg b = k", _store,
                lambda b: reg_eq(b["b"], b["k"]), "t x v b", skolems=[_register_value]),
        _stable("WS5", S, "store x v: lastr y t', x != y", _store,
                lambda b: LastRead(b["y"], b["t2"]), "t t2 x y v", x_ne_y),
        _stable("WS6", S, "store x v: lastflush y t', x != y", _store,
                lambda b: LastFlush(b["y"], b["t2"]), "t t2 x y v", x_ne_y),
        _count_rule("WS7", S, _store, "t x y v v2", "store x v: count y v' = n, x != y or v != v'",
                    "v2", lambda b: b["x"] != b["y"] or b["v"] != b["v2"]),
        _view_rule("OS1", S, _flushopt, "t t2 x y", ty, _thread_set("y", "t2"),
                   "flushopt x: [y]_t' = S"),
        _view_rule("OS2", S, _flushopt, "t x y", lambda b: PersistView(b["y"]),
                   _persist_set("y"), "flushopt x: [y]_P = S"),
        _count_rule("OS3", S, _flushopt, "t x y v", "flushopt x: count y v = n"),
    ]


def _cas_rules() -> List[RuleSpec]:
    C = TABLE_CAS
    CS = TABLE_CAS_STABLE
    x_ne_y = _distinct("x", "y")
    return [
        _rule(
            "CP1", C, "{true} cas a x e1 e2 {(a = 1 /\\ lastval x e2) \\/ a = 0}",
            _cas,
            lambda b: TRUE,
            lambda b: Or(And(reg_eq(b["a"], 1), LastVal(b["x"], b["e2"])), reg_eq(b["a"], 0)),
            "t x e1 e2",
        ),
        _rule(
            "CP2", C, "{[y]_t' = S} cas a x e1 e2 {[y]_t' <= S}, x != y",
            _cas,
            lambda b: _eq(ThreadView(b["y"], b["t2"]), b["S"]),
            lambda b: _sub(ThreadView(b["y"], b["t2"]), b["S"]),
            "t t2 x y e1 e2",
            x_ne_y,
            [_thread_set("y", "t2")],
        ),
        _rule(
            "CP3", C, "{lastval x v} cas a x e1 e2 {lastval x e2 \\/ lastval x v}",
            _cas,
            lambda b: LastVal(b["x"], b["v"]),
            lambda b: Or(LastVal(b["x"], b["e2"]), LastVal(b["x"], b["v"])),
            "t x v e1 e2",
        ),
        _rule(
            "CP4", C, "{lastr y t' /\\ [y]_t' = {v}} cas a x e1 e2 "
            "{(a = 1 /\\ [y]_t = {v}) \\/ a = 0}, x != y",
            _cas,
            lambda b: And(LastRead(b["y"], b["t2"]), _eq(ThreadView(b["y"], b["t2"]), {b["v"]})),
            lambda b: Or(
                And(reg_eq(b["a"], 1), _eq(ThreadView(b["y"], b["t"]), {b["v"]})),
                reg_eq(b["a"], 0),
            ),
            "t t2 x y e1 e2",
            x_ne_y,
            [_singleton("y", "t2")],
        ),
        _rule(
            "CP5", C, "{lastval x v} cas a x e1 e2 {a = 0}, v != e1",
            _cas,
            lambda b: LastVal(b["x"], b["v"]),
            lambda b: reg_eq(b["a"], 0),
            "t x v e1 e2",
            _distinct("v", "e1"),
        ),
        _rule(
            "SP8", C, "{true} store x v {lastval x v}",
            _store,
            lambda b: TRUE,
            lambda b: LastVal(b["x"], b["v"]),
            "t x v",
        ),
        _stable("LS6", CS, "load a x: lastval y v", _load,
                lambda b: LastVal(b["y"], b["v"]), "t x y v"),
        _stable("FS6", CS, "flush x: lastval y v", _flush,
                lambda b: LastVal(b["y"], b["v"]), "t x y v"),
        _stable("WS8", CS, "store x v: lastval y v', x != y", _store,
                lambda b: LastVal(b["y"], b["v2"]), "t x y v v2", x_ne_y),
        _stable("CS1", CS, "cas a x e1 e2: v notin [y]_t', x != y", _cas,
                lambda b: _one(ThreadView(b["y"], b["t2"]), b["v"], SetOp.EXCLUDES),
                "t t2 x y v e1 e2", x_ne_y),
        _stable("CS2", CS, "cas a x e1 e2: lastval x v, v != e1", _cas,
                lambda b: LastVal(b["x"], b["v"]), "t x v e1 e2", _distinct("v", "e1")),
        _view_rule("CS3", CS, _cas, "t x y e1 e2", lambda b: PersistView(b["y"]),
                   _persist_set("y"), "cas a x e1 e2: [y]_P = S, x != y", x_ne_y),
        _stable("CS4", CS, "cas a x e1 e2: lastr y t', x != y", _cas,
                lambda b: LastRead(b["y"], b["t2"]), "t t2 x y e1 e2", x_ne_y),
    ]


def _mfence_rules() -> List[RuleSpec]:
    M = TABLE_MFENCE
    MS = TABLE_MFENCE_STABLE
    return [
        _rule(
            "SP9", M, "{true} store x v {lastmfence x t}",
            _store,
            lambda b: TRUE,
            lambda b: LastMFence(b["x"], b["t"]),
            "t x v",
        ),
        _rule(
            "MFP1", M, "{lastr x t' /\\ lastmfence x t /\\ [x]_t' = {u}} mfence {[x]_t = {u}}",
            _mfence,
            lambda b: conj(
                LastRead(b["x"], b["t2"]),
                LastMFence(b["x"], b["t"]),
                _eq(ThreadView(b["x"], b["t2"]), {b["u"]}),
            ),
            lambda b: _eq(ThreadView(b["x"], b["t"]), {b["u"]}),
            "t t2 x u",
        ),
        _rule(
            "MFP2", M, "{[x]_t = S} mfence {[x]_t <= S}",
            _mfence,
            lambda b: _eq(ThreadView(b["x"], b["t"]), b["S"]),
            lambda b: _sub(ThreadView(b["x"], b["t"]), b["S"]),
            "t x",
            skolems=[_thread_set("x", "t")],
        ),
        _stable("LS7", MS, "load a x: lastmfence y t'", _load,
                lambda b: LastMFence(b["y"], b["t2"]), "t t2 x y"),
        _stable("WS9", MS, "store x v: lastmfence y t', x != y or t = t'", _store,
                lambda b: LastMFence(b["y"], b["t2"]), "t t2 x y v",
                lambda b: b["x"] != b["y"] or b["t"] == b["t2"]),
        _view_rule("MFS1", MS, _mfence, "t x", lambda b: PersistView(b["x"]),
                   _persist_set("x"), "mfence: [x]_P = S"),
        _stable("MFS2", MS, "mfence: lastr x t'", _mfence,
                lambda b: LastRead(b["x"], b["t2"]), "t t2 x"),
        _stable("MFS3", MS, "mfence: lastmfence x t', t != t'", _mfence,
                lambda b: LastMFence(b["x"], b["t2"]), "t t2 x", _distinct("t", "t2")),
        _stable("MFS4", MS, "mfence: count x v = n", _mfence,
                lambda b: _count(b["x"], b["v"], b["n"]), "t x v",
                skolems=[_count_of("x", "v")]),
    ]


def catalogue() -> List[RuleSpec]:
    """Every proof rule and stable assertion, one entry per table row."""
    return _atomic_rules() + _stable_rules() + _cas_rules() + _mfence_rules()


def find_rule(name: str, rules: Optional[Iterable[RuleSpec]] = None) -> RuleSpec:
    for rule in rules if rules is not None else catalogue() + mutations():
        if rule.name == name:
            return rule
    raise KeyError(name)


# =============================================================================
# MUTATIONS
# =============================================================================


def mutations() -> List[RuleSpec]:
    """
    Deliberately unsound variants of catalogue rules.

    Each drops a side constraint or strengthens a postcondition; the harness
    must falsify every one of them.
    """
    rules = {rule.name: rule for rule in catalogue()}
    lp1, sp2, sp5 = rules["LP1"], rules["SP2"], rules["SP5"]
    fp2, ws1, ws9 = rules["FP2"], rules["WS1"], rules["WS9"]
    fs2, cp5, ls1 = rules["FS2"], rules["CP5"], rules["LS1"]
    sfp = rules["SFP"]
    return [
        replace(
            lp1, name="LP1-eq", text="{[x]_t = S} load a x {a in S /\\ [x]_t = S}",
            post=lambda b: And(
                RegAtom(b["a"], "in", b["S"]), _eq(ThreadView(b["x"], b["t"]), b["S"])
            ),
        ),
        replace(sp2, name="SP2-same-thread", text=sp2.text + " without t != t'",
                constraint=_always),
        replace(sp5, name="SP5-same-location", text=sp5.text + " without x != y",
                constraint=_distinct("t", "t2")),
        replace(
            fp2, name="FP2-eq", text="{[x]_P = S} flush x {[x]_P = S}",
            post=lambda b: _eq(PersistView(b["x"]), b["S"]),
        ),
        replace(
            sfp, name="SFP-eq", text="{[x]_A_t = S \\/ [x]_P = S} sfence {[x]_P = S}",
            post=lambda b: _eq(PersistView(b["x"]), b["S"]),
        ),
        replace(ws1, name="WS1-same-location", text=ws1.text + " without x != y",
                constraint=_always),
        replace(ws9, name="WS9-unconstrained", text=ws9.text + " without constraint",
                constraint=_always),
        replace(fs2, name="FS2-same-location", text=fs2.text + " without x != y",
                constraint=_always),
        replace(cp5, name="CP5-expected-value", text=cp5.text + " without v != e1",
                constraint=_always),
        replace(ls1, name="LS1-same-thread", text=ls1.text + " without t != t'",
                constraint=_always),
    ]


# =============================================================================
# FALSIFICATION TESTING
# =============================================================================


def instantiations(rule: RuleSpec, spec: InitSpec) -> List[Binding]:
    """All grid bindings of the rule's parameters satisfying its constraint."""
    domains = _domains(spec)
    result = []
    for combo in itertools.product(*(domains[p] for p in rule.params)):
        binding: Binding = dict(zip(rule.params, combo))
        binding["a"] = register_name(binding["t"], 0)
        if rule.constraint(binding):
            result.append(binding)
    return result


def generate_states(spec: InitSpec, bounds: GenBounds, trials: int) -> List[MachineState]:
    """`trials` generated states (seeds bounds.seed onwards), duplicates removed."""
    states = [gen_state(spec, replace(bounds, seed=bounds.seed + k)) for k in range(trials)]
    return list(dict.fromkeys(states))


def test_rule(
    rule: RuleSpec,
    spec: Optional[InitSpec] = None,
    bounds: Optional[GenBounds] = None,
    trials: int = config.DEFAULT_TRIALS,
    states: Optional[Sequence[MachineState]] = None,
) -> RuleVerdict:
    """
    Falsification-test one rule.

    Args:
        rule: Rule to test
        spec: Declarations of the generated states (defaults to rule_spec())
        bounds: Generator bounds
        trials: Number of generated states
        states: Pre-generated states; skips generation when given

    Returns:
        RuleVerdict with the first falsifying (state, binding, successor), if any
    """
    spec = spec or rule_spec()
    if states is None:
        states = generate_states(spec, bounds or GenBounds(), trials)
    grid = instantiations(rule, spec)
    verdict = RuleVerdict(rule.name, states=len(states))

    for state in states:
        steps: Dict[Tuple[int, AtomicStatement], List[MachineState]] = {}
        for inst in grid:
            for skolem in rule.skolems:
                bound = skolem(state, inst)
                if bound is None:
                    continue
                binding = {**inst, **bound}
                if not evaluate(rule.pre(binding), state):
                    continue
                verdict.tried += 1
                key = (binding["t"], rule.statement(binding))
                if key not in steps:
                    steps[key] = step_thread(state, key[0], key[1])
                post = rule.post(binding)
                for nxt in steps[key]:
                    if not evaluate(post, nxt):
                        verdict.falsified = Falsification(state, binding, nxt)
                        logger.warning(f"Rule {rule.name} falsified with {describe(binding)}")
                        return verdict

    logger.debug(f"Rule {rule.name}: {verdict.tried} instantiations passed")
    return verdict


def test_rules(
    rules: Sequence[RuleSpec],
    spec: Optional[InitSpec] = None,
    bounds: Optional[GenBounds] = None,
    trials: int = config.DEFAULT_TRIALS,
    show_progress: bool = False,
) -> List[RuleVerdict]:
    """Test every rule against one shared batch of generated states."""
    spec = spec or rule_spec()
    bounds = bounds or GenBounds()
    states = generate_states(spec, bounds, trials)

    logger.info("=" * config.SUMMARY_WIDTH)
    logger.info(f"Testing {len(rules)} rules on {len(states)} generated states")
    logger.info("=" * config.SUMMARY_WIDTH)

    verdicts = []
    for rule in tqdm(rules, desc="Testing rules", unit="rule", disable=not show_progress):
        verdicts.append(test_rule(rule, spec, bounds, trials, states))

    failed = [v.name for v in verdicts if not v.passed]
    logger.info(f"{len(verdicts) - len(failed)} passed, {len(failed)} falsified")
    return verdicts


def describe(binding: Binding) -> str:
    """Binding as `name=value` pairs, sets in braces."""
    parts = []
    for key in sorted(binding):
        value = binding[key]
        if isinstance(value, (set, frozenset)):
            value = "{" + ",".join(str(v) for v in sorted(value)) + "}"
        parts.append(f"{key}={value}")
    return " ".join(parts)

