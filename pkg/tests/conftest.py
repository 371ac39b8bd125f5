"""Shared fixtures: bundled litmus files, small declarations and explored graphs."""

from typing import Callable

import pytest

from persist_check import utils
from persist_check.explorer import ExploreOptions, ReachGraph, default_options, explore
from persist_check.litmus import LitmusFile, load_litmus
from persist_check.semantics import MachineState
from persist_check.wellformed import InitSpec, initial_state


@pytest.fixture
def corpus() -> Callable[[str], LitmusFile]:
    """Loader for bundled corpus files by name."""

    def load(name: str) -> LitmusFile:
        return load_litmus(utils.corpus_path(name))

    return load


@pytest.fixture
def reach(corpus) -> Callable[..., ReachGraph]:
    """Explore a corpus file (by name) or a LitmusFile from its initial state."""

    def run(lit, **options) -> ReachGraph:
        if isinstance(lit, str):
            lit = corpus(lit)
        opts = default_options(lit.program, ExploreOptions(**options))
        return explore(lit.program, initial_state(lit.spec, lit.program), opts)

    return run


@pytest.fixture
def spec_xy() -> InitSpec:
    """Two locations, two threads, one register each."""
    return InitSpec(locations=("x", "y"), tids=(1, 2), registers={1: ("a",), 2: ("b",)})


@pytest.fixture
def init_xy(spec_xy) -> MachineState:
    return initial_state(spec_xy)
