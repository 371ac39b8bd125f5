"""Falsification testing of the proof-rule catalogue."""

import pytest

from persist_check import config, rules
from persist_check.assertions import evaluate
from persist_check.wellformed import GenBounds

CATALOGUE = rules.catalogue()
MUTATIONS = rules.mutations()

MUTATION_NAMES = [
    "LP1-eq",
    "SP2-same-thread",
    "SP5-same-location",
    "FP2-eq",
    "SFP-eq",
    "WS1-same-location",
    "WS9-unconstrained",
    "FS2-same-location",
    "CP5-expected-value",
    "LS1-same-thread",
]


@pytest.fixture(scope="module")
def states():
    return rules.generate_states(rules.rule_spec(), GenBounds(), config.DEFAULT_TRIALS)


def test_catalogue_names_are_unique():
    names = [rule.name for rule in CATALOGUE]
    assert len(names) == len(set(names)) == 59


def test_catalogue_covers_every_table():
    tables = {rule.table for rule in CATALOGUE}
    assert tables == {
        rules.TABLE_ATOMIC,
        rules.TABLE_STABLE,
        rules.TABLE_CAS,
        rules.TABLE_CAS_STABLE,
        rules.TABLE_MFENCE,
        rules.TABLE_MFENCE_STABLE,
    }


def test_mutation_names():
    assert [rule.name for rule in MUTATIONS] == MUTATION_NAMES


def test_find_rule():
    assert rules.find_rule("FP2").name == "FP2"
    assert rules.find_rule("LP1-eq").name == "LP1-eq"
    with pytest.raises(KeyError):
        rules.find_rule("NOPE")


def test_instantiations_respect_constraints():
    sp2 = rules.find_rule("SP2")
    grid = rules.instantiations(sp2, rules.rule_spec())
    assert grid
    assert all(b["t"] != b["t2"] for b in grid)
    assert all(b["a"] == rules.register_name(b["t"], 0) for b in grid)


def test_mutation_widens_grid():
    spec = rules.rule_spec()
    sound = rules.instantiations(rules.find_rule("SP2"), spec)
    mutated = rules.instantiations(rules.find_rule("SP2-same-thread"), spec)
    assert len(mutated) > len(sound)


def test_generated_states_are_deduplicated():
    states = rules.generate_states(rules.rule_spec(), GenBounds(), 50)
    assert len(states) == len(set(states))


def test_describe():
    assert rules.describe({"x": "y", "S": frozenset({2, 0})}) == "S={0,2} x=y"


@pytest.mark.slow
@pytest.mark.parametrize("rule", CATALOGUE, ids=lambda r: r.name)
def test_rule_survives(rule, states):
    verdict = rules.test_rule(rule, states=states)
    assert verdict.passed, rules.describe(verdict.falsified.binding)
    assert verdict.states == len(states)


@pytest.mark.parametrize("rule", MUTATIONS, ids=lambda r: r.name)
def test_mutation_falsified(rule):
    verdict = rules.test_rule(rule, trials=config.DEFAULT_TRIALS)
    assert not verdict.passed
    found = verdict.falsified
    assert verdict.tried >= 1
    assert evaluate(rule.pre(found.binding), found.state)
    assert not evaluate(rule.post(found.binding), found.successor)


def test_rules_share_one_batch():
    chosen = [rules.find_rule("FP2"), rules.find_rule("FP2-eq")]
    verdicts = rules.test_rules(chosen, trials=300)
    assert [v.name for v in verdicts] == ["FP2", "FP2-eq"]
    assert verdicts[0].passed and not verdicts[1].passed
    assert verdicts[0].states == verdicts[1].states
