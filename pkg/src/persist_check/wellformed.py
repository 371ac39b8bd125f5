"""
Initial states, the well-formedness predicate, and a random state generator.

The generator drives the rule-property harness: it produces states by running
random stores and view-advancing statements from the initial state, keeping
only well-formed results.
"""

import logging
import random
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Set, Tuple

from persist_check import config, views
from persist_check.errors import ConfigurationError
from persist_check.semantics import (
    AtomicStatement,
    Flush,
    FlushOpt,
    Lit,
    Load,
    MachineState,
    Memory,
    Message,
    MFence,
    Program,
    SFence,
    Store,
    ThreadState,
    step_thread,
)

logger = logging.getLogger(__name__)

# Clause names reported by is_well_formed
INIT_MESSAGES = "init-messages"
BOUNDS = "bounds"
BELOW_MAXCOH = "below-maxcoh"
BELOW_MAXPER = "below-maxper"
READ_BELOW_READY = "read-below-ready"
COH_LOCATION = "coh-location"
NONEMPTY_VIEWS = "nonempty-views"


@dataclass
class InitSpec:
    """Declarations from which the initial state is built."""

    locations: Tuple[str, ...]
    tids: Tuple[int, ...]
    init_values: Dict[str, int] = field(default_factory=dict)
    registers: Dict[int, Tuple[str, ...]] = field(default_factory=dict)
    aux_vars: Tuple[str, ...] = ()

    @classmethod
    def for_program(
        cls, program: Program, init_values: Optional[Dict[str, int]] = None
    ) -> "InitSpec":
        return cls(
            locations=tuple(program.locations),
            tids=tuple(program.tids),
            init_values=dict(init_values or {}),
            registers={tid: tuple(program.registers(tid)) for tid in program.tids},
            aux_vars=tuple(program.aux_vars()),
        )


@dataclass(frozen=True)
class GenBounds:
    max_extra_writes: int = config.GEN_MAX_EXTRA_WRITES
    max_value: int = config.GEN_MAX_VALUE
    seed: int = config.DEFAULT_SEED
    max_advances_per_write: int = config.GEN_MAX_ADVANCES_PER_WRITE


@dataclass
class WellFormedness:
    """Verdict of is_well_formed; truthy iff no clause is violated."""

    violations: List[Tuple[str, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def clauses(self) -> Set[str]:
        return {clause for clause, _ in self.violations}

    def __bool__(self) -> bool:
        return self.ok


def initial_state(spec: InitSpec, program: Optional[Program] = None) -> MachineState:
    """
    Build the initial machine state.

    Memory holds one message per location in declaration order; every view of
    every thread points at those messages; registers and aux variables are zero.

    Args:
        spec: Locations, threads, initial values, registers and aux variables
        program: If given, its threads must match the spec's threads

    Returns:
        The initial MachineState

    Raises:
        ConfigurationError: On duplicate or missing locations or threads
    """
    locs = tuple(spec.locations)
    if not locs:
        raise ConfigurationError("At least one location is required")
    if len(set(locs)) != len(locs):
        raise ConfigurationError(f"Duplicate location in {list(locs)}")
    if not spec.tids:
        raise ConfigurationError("At least one thread is required")
    if program is not None and tuple(program.tids) != tuple(spec.tids):
        raise ConfigurationError(
            f"Threads {list(spec.tids)} do not match program threads {list(program.tids)}"
        )
    unknown = set(spec.init_values) - set(locs)
    if unknown:
        raise ConfigurationError(f"Initial value for undeclared location: {sorted(unknown)}")

    mem = Memory(locs, tuple(Message(loc, spec.init_values.get(loc, 0)) for loc in locs))
    init_ts = tuple(range(len(locs)))
    threads = tuple(
        ThreadState(
            coh=init_ts,
            vr_new=0,
            vp_ready=0,
            vp_async=init_ts,
            vp_commit=init_ts,
            regs=tuple(sorted((reg, 0) for reg in spec.registers.get(tid, ()))),
        )
        for tid in spec.tids
    )
    return MachineState(
        tids=tuple(spec.tids),
        pc=tuple(config.INIT_LABEL for _ in spec.tids),
        threads=threads,
        mem=mem,
        aux=tuple(sorted((name, 0) for name in spec.aux_vars)),
    )


def is_well_formed(state: MachineState) -> WellFormedness:
    """Check every well-formedness clause and report each violation by clause name."""
    result = WellFormedness()
    mem = state.mem
    n = len(mem.locs)

    def fail(clause: str, detail: str) -> None:
        result.violations.append((clause, detail))

    if len(mem) < n or any(mem[i].loc != mem.locs[i] for i in range(n)):
        fail(INIT_MESSAGES, "memory does not start with one message per location")
        return result

    size = len(mem)
    for tid, ts in zip(state.tids, state.threads):
        stamps = [ts.vr_new, ts.vp_ready, *ts.coh, *ts.vp_async, *ts.vp_commit]
        if (
            len(ts.coh) != n
            or len(ts.vp_async) != n
            or len(ts.vp_commit) != n
            or any(t < 0 or t >= size for t in stamps)
        ):
            fail(BOUNDS, f"thread {tid} has a view outside memory")
            continue
        if ts.vr_new > ts.maxcoh:
            fail(BELOW_MAXCOH, f"thread {tid}: vrNew={ts.vr_new} > maxcoh={ts.maxcoh}")
        if ts.vr_new > ts.vp_ready:
            fail(READ_BELOW_READY, f"thread {tid}: vrNew={ts.vr_new} > vpReady={ts.vp_ready}")
        for i, loc in enumerate(mem.locs):
            if mem[ts.coh[i]].loc != loc:
                fail(COH_LOCATION, f"thread {tid}: coh({loc})={ts.coh[i]} is not a {loc} write")

    if result.clauses & {BOUNDS, COH_LOCATION}:
        return result

    for loc in mem.locs:
        i = mem.index(loc)
        top = state.maxper(loc)
        for tid, ts in zip(state.tids, state.threads):
            if ts.vp_commit[i] > top:
                fail(BELOW_MAXPER, f"thread {tid}: vpCommit({loc}) > maxper({loc})")
            if not views.obs_ts(state, tid, loc):
                fail(NONEMPTY_VIEWS, f"thread {tid}: no observable write to {loc}")
            if not views.async_ts(state, tid, loc):
                fail(NONEMPTY_VIEWS, f"thread {tid}: empty asynchronous view of {loc}")
        if not views.persist_ts(state, loc):
            fail(NONEMPTY_VIEWS, f"empty persistent view of {loc}")
    return result


def _random_advance(
    rng: random.Random, spec: InitSpec, tid: int
) -> AtomicStatement:
    loc = rng.choice(spec.locations)
    regs = spec.registers.get(tid, ())
    choices = ["flush", "flushopt", "sfence", "mfence"]
    if regs:
        choices += ["load", "load"]
    kind = rng.choice(choices)
    if kind == "load":
        return Load(rng.choice(regs), loc)
    if kind == "flush":
        return Flush(loc)
    if kind == "flushopt":
        return FlushOpt(loc)
    if kind == "sfence":
        return SFence()
    return MFence()


def gen_state(spec: InitSpec, bounds: GenBounds) -> MachineState:
    """
    Generate a random well-formed state, deterministically in `bounds.seed`.

    Starts from the initial state and interleaves up to `max_extra_writes` random
    stores with random view-advancing statements, each executed by a random thread.
    """
    rng = random.Random(bounds.seed)
    state = initial_state(spec)
    writes = rng.randint(0, bounds.max_extra_writes)
    if writes == 0:
        return state

    steps = ["write"] * writes + ["advance"] * rng.randint(
        0, writes * bounds.max_advances_per_write
    )
    rng.shuffle(steps)
    for kind in steps:
        tid = rng.choice(spec.tids)
        if kind == "write":
            stmt: AtomicStatement = Store(
                rng.choice(spec.locations), Lit(rng.randint(0, bounds.max_value))
            )
        else:
            stmt = _random_advance(rng, spec, tid)
        candidates = step_thread(state, tid, stmt)
        if not candidates:
            continue
        candidate = rng.choice(candidates)
        verdict = is_well_formed(candidate)
        if verdict:
            state = candidate
        else:
            logger.warning(f"Discarded ill-formed candidate: {verdict.violations}")
    return state
