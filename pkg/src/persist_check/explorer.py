"""
Exhaustive interleaving exploration and crash-reachability analysis.

WHAT IT DOES:
    1. Builds the graph of states reachable from an initial state (breadth first)
    2. Deduplicates states by full structural equality
    3. Cuts paths longer than an optional step bound and flags the graph truncated
    4. Extracts final states, register outcomes and crash-reachable NVMs
    5. Checks a crash invariant at every reachable state
"""

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from tqdm import tqdm

from persist_check import config
from persist_check.assertions import CrashInvariant, NvmMap, holds_after_crash, possible_nvms
from persist_check.errors import ConfigurationError
from persist_check.semantics import MachineState, Program, successors

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExploreOptions:
    """
    Args:
        max_steps: Longest path (in transitions) to expand; required for cyclic programs
        strict_cas_read: Require failed CAS reads to be observable
        show_progress: Display a progress bar on stderr
    """

    max_steps: Optional[int] = None
    strict_cas_read: bool = False
    show_progress: bool = False


@dataclass
class ReachGraph:
    """Reachable states in discovery order; index 0 is the initial state."""

    states: List[MachineState] = field(default_factory=list)
    index: Dict[MachineState, int] = field(default_factory=dict)
    edges: List[Tuple[int, int, int]] = field(default_factory=list)
    parents: Dict[int, Tuple[int, int]] = field(default_factory=dict)
    depth: List[int] = field(default_factory=list)
    truncated: bool = False

    @property
    def initial(self) -> MachineState:
        return self.states[0]

    def add(self, state: MachineState, depth: int) -> Tuple[int, bool]:
        """Insert `state` if new; returns its index and whether it was new."""
        known = self.index.get(state)
        if known is not None:
            return known, False
        self.index[state] = len(self.states)
        self.states.append(state)
        self.depth.append(depth)
        return len(self.states) - 1, True

    def trace(self, i: int) -> List[Tuple[Optional[int], MachineState]]:
        """Shortest path to state i as (stepping thread, state) pairs; None marks the start."""
        path: List[Tuple[Optional[int], MachineState]] = []
        while i in self.parents:
            parent, tid = self.parents[i]
            path.append((tid, self.states[i]))
            i = parent
        path.append((None, self.states[i]))
        return list(reversed(path))


def explore(
    program: Program, initial: MachineState, opts: Optional[ExploreOptions] = None
) -> ReachGraph:
    """
    Breadth-first closure of `initial` under the program's transitions.

    Args:
        program: Program to run
        initial: Well-formed starting state
        opts: Step bound and CAS read mode

    Returns:
        The reachable-state graph

    Raises:
        ConfigurationError: If the program is cyclic and no step bound is given
    """
    opts = opts or ExploreOptions()
    if opts.max_steps is None and program.is_cyclic():
        raise ConfigurationError("Program has a loop; a step bound (--max-steps) is required")

    graph = ReachGraph()
    graph.add(initial, 0)
    frontier = deque([0])

    with tqdm(desc="Exploring", unit="state", disable=not opts.show_progress) as progress:
        while frontier:
            i = frontier.popleft()
            state = graph.states[i]
            progress.update(1)
            if opts.max_steps is not None and graph.depth[i] >= opts.max_steps:
                if not state.is_final:
                    graph.truncated = True
                continue
            for tid, nxt in successors(state, program, opts.strict_cas_read):
                j, is_new = graph.add(nxt, graph.depth[i] + 1)
                graph.edges.append((i, tid, j))
                if is_new:
                    graph.parents[j] = (i, tid)
                    frontier.append(j)

    logger.info(f"Explored {len(graph.states)} states, {len(graph.edges)} transitions")
    if graph.truncated:
        logger.warning(f"Exploration truncated at {opts.max_steps} steps")
    return graph


def final_states(graph: ReachGraph) -> List[MachineState]:
    """States in which every thread has reached the final label."""
    return [s for s in graph.states if s.is_final]


def outcomes(graph: ReachGraph, regs: Sequence[str]) -> List[Dict[str, int]]:
    """
    Distinct valuations of `regs` over the final states.

    Raises:
        ConfigurationError: If a register is not declared by any thread
    """
    declared = {name for ts in graph.initial.threads for name, _ in ts.regs}
    missing = [r for r in regs if r not in declared]
    if missing:
        raise ConfigurationError(f"Undeclared register(s): {missing}")

    seen = set()
    result = []
    for state in final_states(graph):
        key = tuple(state.register(r) for r in regs)
        if key not in seen:
            seen.add(key)
            result.append(dict(zip(regs, key)))
    return result


def crash_reachable_nvms(graph: ReachGraph, oracle: bool = False) -> List[NvmMap]:
    """Every NVM a crash at any reachable state may leave behind."""
    seen = set()
    result = []
    for state in graph.states:
        for nvm in possible_nvms(state, oracle):
            if nvm not in seen:
                seen.add(nvm)
                result.append(nvm)
    return result


@dataclass
class InvariantVerdict:
    """Outcome of check_crash_invariant; truthy iff the invariant holds everywhere."""

    holds: bool
    state_index: Optional[int] = None
    state: Optional[MachineState] = None
    nvm: Optional[NvmMap] = None
    trace: List[Tuple[Optional[int], MachineState]] = field(default_factory=list)
    truncated: bool = False

    def __bool__(self) -> bool:
        return self.holds


def check_crash_invariant(graph: ReachGraph, invariant: CrashInvariant) -> InvariantVerdict:
    """Check the invariant against every NVM of every state; report the first failure."""
    for i, state in enumerate(graph.states):
        check = holds_after_crash(invariant, state)
        if not check:
            logger.warning(f"Crash invariant fails at state {i} with NVM {dict(check.nvm)}")
            return InvariantVerdict(
                holds=False,
                state_index=i,
                state=state,
                nvm=check.nvm,
                trace=graph.trace(i),
                truncated=graph.truncated,
            )
    return InvariantVerdict(holds=True, truncated=graph.truncated)


def default_options(program: Program, opts: Optional[ExploreOptions] = None) -> ExploreOptions:
    """Fill in the default step bound for cyclic programs."""
    opts = opts or ExploreOptions()
    if opts.max_steps is None and program.is_cyclic():
        return ExploreOptions(config.DEFAULT_MAX_STEPS, opts.strict_cas_read, opts.show_progress)
    return opts
