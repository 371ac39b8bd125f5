"""
Semantic checker for Owicki-Gries proof outlines.

A proof outline is valid when five conditions hold: Initialisation,
Finalisation, LocalCorrectness, Stability and Persistence. Hoare triples and
implications are checked pointwise over a finite universe of states: either
every reachable state of the program or a batch of generated well-formed
states. The checker also tests the conclusions a valid outline guarantees
directly on the reachable states, as a self-check.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

from persist_check import config
from persist_check.assertions import (
    TRUE,
    Assertion,
    CrashInvariant,
    And,
    evaluate,
    holds_after_crash,
    to_text,
)
from persist_check.errors import ConfigurationError
from persist_check.explorer import ExploreOptions, ReachGraph, default_options, explore
from persist_check.semantics import (
    AtomicStatement,
    Expr,
    Ghost,
    IfGoto,
    MachineState,
    Program,
    eval_cond,
    step_thread,
)
from persist_check.wellformed import GenBounds, InitSpec, gen_state, initial_state

logger = logging.getLogger(__name__)

INITIALISATION = "Initialisation"
FINALISATION = "Finalisation"
LOCAL_CORRECTNESS = "LocalCorrectness"
STABILITY = "Stability"
PERSISTENCE = "Persistence"

REACHABLE_ANNOTATIONS = "ReachableAnnotations"
FINAL_STATES = "FinalStates"
CRASH_STATES = "CrashStates"


class Status(str, Enum):
    PASS = "pass"
    FAIL = "fail"
    BOUNDED = "bounded"


@dataclass
class ProofOutline:
    in_assert: Assertion
    ann: Dict[Tuple[int, str], Assertion]
    inv: CrashInvariant
    fin_assert: Assertion

    def annotation(self, tid: int, label: str) -> Assertion:
        """Annotation at (tid, label); labels without one are annotated true."""
        return self.ann.get((tid, label), TRUE)

    def validate(self, program: Program) -> None:
        for tid, label in self.ann:
            if tid not in program.tids or label not in program.labels(tid):
                raise ConfigurationError(f"Annotation for unknown label {label} of thread {tid}")


@dataclass
class Universe:
    """Finite set of states standing in for 'all states'."""

    kind: str
    states: List[MachineState]
    graph: Optional[ReachGraph] = None

    @classmethod
    def reachable(cls, graph: ReachGraph) -> "Universe":
        return cls("reachable", list(graph.states), graph)

    @classmethod
    def generated(cls, states: Sequence[MachineState]) -> "Universe":
        unique = list(dict.fromkeys(states))
        return cls("generated", unique)

    @property
    def bounded(self) -> bool:
        return self.graph is not None and self.graph.truncated


@dataclass
class Counterexample:
    state: MachineState
    tid: Optional[int] = None
    label: Optional[str] = None
    successor: Optional[MachineState] = None
    interferer: Optional[Tuple[int, str]] = None
    detail: str = ""


@dataclass
class Verdict:
    name: str
    status: Status
    obligations: int = 0
    counterexample: Optional[Counterexample] = None
    witnesses: List[int] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.status is not Status.FAIL


@dataclass
class ValidityReport:
    universe: str
    conditions: Dict[str, Verdict] = field(default_factory=dict)
    theorem: Dict[str, Verdict] = field(default_factory=dict)
    bounded: bool = False
    states: int = 0

    @property
    def status(self) -> Status:
        verdicts = list(self.conditions.values()) + list(self.theorem.values())
        if any(v.status is Status.FAIL for v in verdicts):
            return Status.FAIL
        if any(v.status is Status.BOUNDED for v in verdicts):
            return Status.BOUNDED
        return Status.PASS

    @property
    def passed(self) -> bool:
        return all(v.status is Status.PASS for v in self.conditions.values())

    @property
    def witness(self) -> Optional[int]:
        verdict = self.conditions.get(PERSISTENCE)
        if verdict is None or not verdict.witnesses:
            return None
        return verdict.witnesses[0]


def _verdict(name: str, obligations: int, cex: Optional[Counterexample]) -> Verdict:
    status = Status.PASS if cex is None else Status.FAIL
    return Verdict(name, status, obligations, cex)


def _triple(
    pre: Assertion,
    tid: int,
    stmt: AtomicStatement,
    post: Assertion,
    aux_update: Optional[Tuple[str, Expr]],
    states: Sequence[MachineState],
    strict_cas_read: bool,
) -> Tuple[int, Optional[Counterexample]]:
    checked = 0
    for state in states:
        if not evaluate(pre, state):
            continue
        checked += 1
        for nxt in step_thread(state, tid, stmt, aux_update, strict_cas_read):
            if not evaluate(post, nxt):
                return checked, Counterexample(state, tid, successor=nxt)
    return checked, None


def hoare_holds(
    pre: Assertion,
    tid: int,
    stmt: AtomicStatement,
    post: Assertion,
    aux_update: Optional[Tuple[str, Expr]],
    universe: Universe,
    strict_cas_read: bool = False,
) -> Verdict:
    """
    Check {pre} stmt {post} for thread `tid` on every universe state satisfying pre.

    A ghost update, when given, is applied in the same step before post is evaluated.
    """
    checked, cex = _triple(pre, tid, stmt, post, aux_update, universe.states, strict_cas_read)
    return _verdict("Triple", checked, cex)


def _aux_update(ls) -> Optional[Tuple[str, Expr]]:
    return (ls.aux_var, ls.aux_expr) if isinstance(ls, Ghost) else None


def _at(states: Sequence[MachineState], points: Dict[int, str]) -> List[MachineState]:
    return [s for s in states if all(s.pc_of(tid) == label for tid, label in points.items())]


def check_initialisation(
    program: Program, outline: ProofOutline, universe: Universe
) -> Verdict:
    """Every universe state satisfying the precondition satisfies every initial annotation."""
    checked = 0
    for state in universe.states:
        if not evaluate(outline.in_assert, state):
            continue
        checked += 1
        for tid in program.tids:
            if not evaluate(outline.annotation(tid, config.INIT_LABEL), state):
                return _verdict(
                    INITIALISATION, checked, Counterexample(state, tid, config.INIT_LABEL)
                )
    return _verdict(INITIALISATION, checked, None)


def check_finalisation(program: Program, outline: ProofOutline, universe: Universe) -> Verdict:
    """Final states satisfying every final annotation satisfy the postcondition."""
    checked = 0
    for state in universe.states:
        if not state.is_final:
            continue
        if not all(evaluate(outline.annotation(t, config.FIN_LABEL), state) for t in program.tids):
            continue
        checked += 1
        if not evaluate(outline.fin_assert, state):
            return _verdict(FINALISATION, checked, Counterexample(state, detail="postcondition"))
    return _verdict(FINALISATION, checked, None)


def check_local_correctness(
    program: Program,
    outline: ProofOutline,
    universe: Universe,
    strict_cas_read: bool = False,
    program_points: bool = False,
) -> Verdict:
    """Each statement takes its annotation to the annotation of every successor label."""
    total = 0
    for (tid, label), ls in program.code.items():
        pre = outline.annotation(tid, label)
        states = _at(universe.states, {tid: label}) if program_points else universe.states

        if isinstance(ls, IfGoto):
            for state in states:
                if not evaluate(pre, state):
                    continue
                total += 1
                taken = eval_cond(state.thread(tid).reg_map(), ls.cond)
                target = ls.then_label if taken else ls.else_label
                if not evaluate(outline.annotation(tid, target), state):
                    return _verdict(
                        LOCAL_CORRECTNESS,
                        total,
                        Counterexample(state, tid, label, detail=f"branch to {target}"),
                    )
            continue

        post = outline.annotation(tid, ls.next)
        checked, cex = _triple(
            pre, tid, ls.stmt, post, _aux_update(ls), states, strict_cas_read
        )
        total += checked
        if cex is not None:
            cex.label = label
            return _verdict(LOCAL_CORRECTNESS, total, cex)
    return _verdict(LOCAL_CORRECTNESS, total, None)


def check_stability(
    program: Program,
    outline: ProofOutline,
    universe: Universe,
    strict_cas_read: bool = False,
    program_points: bool = False,
) -> Verdict:
    """Every annotation of one thread survives every statement of every other thread."""
    total = 0
    for (tid, label), ls in program.code.items():
        if isinstance(ls, IfGoto):
            continue
        own = outline.annotation(tid, label)
        for other in program.tids:
            if other == tid:
                continue
            for other_label in program.labels(other):
                kept = outline.annotation(other, other_label)
                if kept == TRUE:
                    continue
                states = universe.states
                if program_points:
                    states = _at(states, {tid: label, other: other_label})
                checked, cex = _triple(
                    And(kept, own), tid, ls.stmt, kept, _aux_update(ls), states, strict_cas_read
                )
                total += checked
                if cex is not None:
                    cex.label = label
                    cex.interferer = (other, other_label)
                    return _verdict(STABILITY, total, cex)
    return _verdict(STABILITY, total, None)


def check_persistence(program: Program, outline: ProofOutline, universe: Universe) -> Verdict:
    """Some thread's annotations all imply the crash invariant (read over persistent views)."""
    witnesses = []
    first_cex: Optional[Counterexample] = None
    checked = 0
    for tid in program.tids:
        cex = None
        for label in program.labels(tid):
            annotation = outline.annotation(tid, label)
            for state in universe.states:
                if not evaluate(annotation, state):
                    continue
                checked += 1
                if not evaluate(outline.inv.assertion, state):
                    cex = Counterexample(state, tid, label, detail="crash invariant")
                    break
            if cex is not None:
                break
        if cex is None:
            witnesses.append(tid)
        elif first_cex is None:
            first_cex = cex

    if witnesses:
        return Verdict(PERSISTENCE, Status.PASS, checked, None, witnesses)
    return Verdict(PERSISTENCE, Status.FAIL, checked, first_cex)


# =============================================================================
# CONCLUSIONS OF A VALID OUTLINE
# =============================================================================


def check_reachable_annotations(
    program: Program, outline: ProofOutline, graph: ReachGraph
) -> Verdict:
    """Every reachable state satisfies each thread's annotation at its program counter."""
    for state in graph.states:
        for tid in program.tids:
            label = state.pc_of(tid)
            if not evaluate(outline.annotation(tid, label), state):
                return _verdict(
                    REACHABLE_ANNOTATIONS, len(graph.states), Counterexample(state, tid, label)
                )
    return _verdict(REACHABLE_ANNOTATIONS, len(graph.states), None)


def check_final_states(outline: ProofOutline, graph: ReachGraph) -> Verdict:
    finals = [s for s in graph.states if s.is_final]
    for state in finals:
        if not evaluate(outline.fin_assert, state):
            return _verdict(FINAL_STATES, len(finals), Counterexample(state, detail="postcondition"))
    return _verdict(FINAL_STATES, len(finals), None)


def check_crash_states(outline: ProofOutline, graph: ReachGraph) -> Verdict:
    for state in graph.states:
        check = holds_after_crash(outline.inv, state)
        if not check:
            return _verdict(
                CRASH_STATES,
                len(graph.states),
                Counterexample(state, detail=f"nvm {dict(check.nvm)}"),
            )
    return _verdict(CRASH_STATES, len(graph.states), None)


def generated_universe(
    spec: InitSpec, trials: int, seed: int, initial: Optional[MachineState] = None
) -> Universe:
    states = [initial] if initial is not None else [initial_state(spec)]
    states += [gen_state(spec, GenBounds(seed=seed + k)) for k in range(trials)]
    return Universe.generated(states)


def check_outline(
    program: Program,
    outline: ProofOutline,
    spec: InitSpec,
    opts: Optional[ExploreOptions] = None,
    universe_kind: str = "reachable",
    trials: int = config.DEFAULT_TRIALS,
    seed: int = config.DEFAULT_SEED,
    program_points: bool = False,
) -> ValidityReport:
    """
    Check all five validity conditions and the conclusions of a valid outline.

    Args:
        program: Program the outline annotates
        outline: The proof outline
        spec: Initial-state declarations
        opts: Exploration options
        universe_kind: "reachable" or "generated"
        trials: Number of generated states (generated universe only)
        seed: Generator seed (generated universe only)
        program_points: Check triples only where the stepping threads sit at the label

    Returns:
        ValidityReport; verdicts are downgraded to "bounded" when exploration was cut
    """
    outline.validate(program)
    opts = default_options(program, opts)
    initial = initial_state(spec, program)
    graph = explore(program, initial, opts)

    if universe_kind == "reachable":
        universe = Universe.reachable(graph)
    elif universe_kind == "generated":
        universe = generated_universe(spec, trials, seed, initial)
    else:
        raise ConfigurationError(f"Unknown universe: {universe_kind}")

    logger.info("=" * config.SUMMARY_WIDTH)
    logger.info(f"Checking outline over {len(universe.states)} {universe.kind} states")
    logger.info("=" * config.SUMMARY_WIDTH)

    strict = opts.strict_cas_read
    report = ValidityReport(universe.kind, bounded=graph.truncated, states=len(universe.states))
    report.conditions[INITIALISATION] = check_initialisation(program, outline, universe)
    report.conditions[FINALISATION] = check_finalisation(program, outline, universe)
    report.conditions[LOCAL_CORRECTNESS] = check_local_correctness(
        program, outline, universe, strict, program_points
    )
    report.conditions[STABILITY] = check_stability(
        program, outline, universe, strict, program_points
    )
    report.conditions[PERSISTENCE] = check_persistence(program, outline, universe)

    report.theorem[REACHABLE_ANNOTATIONS] = check_reachable_annotations(program, outline, graph)
    report.theorem[FINAL_STATES] = check_final_states(outline, graph)
    report.theorem[CRASH_STATES] = check_crash_states(outline, graph)

    for verdict in list(report.conditions.values()) + list(report.theorem.values()):
        if verdict.status is Status.FAIL:
            logger.warning(f"{verdict.name} failed")
        elif graph.truncated:
            verdict.status = Status.BOUNDED

    logger.info(f"Outline verdict: {report.status.value}")
    return report


def describe(cex: Counterexample, outline: ProofOutline) -> str:
    """One-line description of a counterexample for reports."""
    parts = []
    if cex.tid is not None:
        parts.append(f"thread {cex.tid}")
    if cex.label is not None:
        parts.append(f"label {cex.label}")
        if cex.tid is not None:
            parts.append(f"annotation {to_text(outline.annotation(cex.tid, cex.label))}")
    if cex.interferer is not None:
        parts.append(f"interfering with thread {cex.interferer[0]} at {cex.interferer[1]}")
    if cex.detail:
        parts.append(cex.detail)
    return ", ".join(parts)
