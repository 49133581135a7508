"""Structural guarantees of the built-in task families.

Behavioral claims (search beats greedy, composition speeds things up) live
in the acceptance suite; these tests pin the properties the families were
designed around, so a careless edit to a weight table fails fast here.
"""

import pytest

from rtlsearch.baselines import beam_decode, best_functional_result, greedy_decode
from rtlsearch.evaluation import evaluate_terminal
from rtlsearch.tokens import render
from rtlsearch.toycircuit import reusable_fragment
from rtlsearch.toyfamilies import (
    TOY_COMPOSITION_THRESHOLD,
    composed_pair,
    greedy_trap_task,
    oracle_tasks,
    redundant_logic_task,
    reference_sweep_task,
)

SEEDS = range(5)


def _start_ranking(task):
    """Token texts at the opening position, most probable first."""
    from rtlsearch.tokens import initial_state

    state = initial_state(task.vocab, task.prompt_text, (), task.t_max)
    dist = task.model.next_distribution(state, len(task.vocab.tokens))
    return [t.text for t, _ in dist.candidates]


# --- oracle family ---------------------------------------------------------


def test_oracle_tasks_stay_enumerable():
    tasks = oracle_tasks()
    assert len(tasks) == 5
    for task in tasks:
        assert len(task.vocab.tokens) <= 8
        assert task.t_max <= 6
        # Preset baseline keeps rewards independent of discovery order.
        assert task.oracle_params is not None
        assert task.oracle_params.baseline is not None


def test_oracle_task_names_unique():
    names = [t.name for t in oracle_tasks()]
    assert len(set(names)) == len(names)


def test_oracle_tasks_are_reproducible():
    first = {t.name: t for t in oracle_tasks()}
    second = {t.name: t for t in oracle_tasks()}
    for name, task in first.items():
        again = second[name]
        assert task.prompt_text == again.prompt_text
        assert task.model.rules == again.model.rules


# --- greedy trap family ----------------------------------------------------


@pytest.mark.parametrize("seed", SEEDS)
def test_trap_greedy_chain_is_compilable_but_wrong(seed):
    task = greedy_trap_task(seed)
    state = greedy_decode(task.prompt_text, task.model, task.vocab, task.t_max)
    outcome = evaluate_terminal(state, task.evaluator())
    assert outcome.compilable
    assert not outcome.functional


@pytest.mark.parametrize("seed", SEEDS)
def test_trap_hides_a_functional_design(seed):
    # The second-ranked opening token leads to a functional circuit.
    task = greedy_trap_task(seed)
    ranking = _start_ranking(task)
    right = ranking[1]
    code = task.prompt_text + right + "out x;\nendmodule"
    outcome = task.evaluator().evaluate(code)
    assert outcome.functional, code


def test_trap_seeds_differ():
    gates = set()
    for seed in SEEDS:
        ranking = _start_ranking(greedy_trap_task(seed))
        gates.add((ranking[0], ranking[1]))
    assert len(gates) == len(list(SEEDS))


# --- redundant logic family ------------------------------------------------


@pytest.mark.parametrize("seed", SEEDS)
def test_redundant_greedy_lands_on_bloat(seed):
    task = redundant_logic_task(seed)
    state = greedy_decode(task.prompt_text, task.model, task.vocab, task.t_max)
    outcome = evaluate_terminal(state, task.evaluator())
    assert outcome.functional
    assert outcome.area * outcome.delay >= 12


def _direct_token(task):
    """The single-statement design: drives x straight from both inputs."""
    return next(
        t for t in task.vocab.tokens if t.text.startswith("x = ") and "(a, b)" in t.text
    )


@pytest.mark.parametrize("seed", SEEDS)
def test_redundant_lean_design_exists_in_vocab(seed):
    task = redundant_logic_task(seed)
    code = task.prompt_text + _direct_token(task).text + "out x;\nendmodule"
    outcome = task.evaluator().evaluate(code)
    assert outcome.functional
    assert outcome.area * outcome.delay <= 3


def test_redundant_seeds_change_the_gate():
    texts = {_direct_token(redundant_logic_task(s)).text for s in SEEDS}
    assert len(texts) == len(list(SEEDS))


# --- sweep reference task --------------------------------------------------


def test_sweep_reference_probe_branch_shape():
    task = reference_sweep_task()
    ranking = _start_ranking(task)
    assert ranking[0] == "w = XOR(a, b);\n"  # safe chain opens
    assert ranking[1] == "p = AND(a, b);\n"  # probe second
    evaluator = task.evaluator()
    # Both high-prior probe continuations are compile errors.
    for cont in ("q = OR(z, a);\n", "r = NOT(u);\n"):
        code = task.prompt_text + "p = AND(a, b);\n" + cont + "out x;\nendmodule"
        assert not evaluator.evaluate(code).compilable, code
    # The buried continuation is the lean functional design.
    lean = task.prompt_text + "p = AND(a, b);\n" + "x = XOR(a, b);\n" + "out x;\nendmodule"
    outcome = evaluator.evaluate(lean)
    assert outcome.functional
    safe = (
        task.prompt_text
        + "w = XOR(a, b);\nv = NOT(w);\nx = NOT(v);\n"
        + "out x;\nendmodule"
    )
    safe_outcome = evaluator.evaluate(safe)
    assert safe_outcome.functional
    assert safe_outcome.area * safe_outcome.delay > outcome.area * outcome.delay


# --- composed family -------------------------------------------------------


@pytest.mark.parametrize("seed", SEEDS)
def test_composed_pair_contract(seed):
    small, large = composed_pair(seed)
    assert small.reusable
    assert not large.reusable
    assert small.width < TOY_COMPOSITION_THRESHOLD <= large.width
    assert large.depends_on == (small.key,)


@pytest.mark.parametrize("seed", SEEDS)
def test_composed_greedy_chain_needs_the_fragment(seed):
    small, large = composed_pair(seed)
    chain = greedy_decode(large.prompt_text, large.model, large.vocab, large.t_max)
    # The favorite chain opens on the stored block's output wire, so on its
    # own it references an undefined name and cannot compile.
    assert not large.evaluator().evaluate(render(chain)).compilable

    # With the small task's best code prepended, the same chain works.
    beams = beam_decode(small.prompt_text, small.model, small.vocab, 5, small.t_max)
    best = best_functional_result(beams, small.evaluator())
    assert best is not None
    best_state, _ = best
    fragment = reusable_fragment(render(best_state))
    composed = fragment + render(chain)
    assert large.evaluator().evaluate(composed).functional, composed


def test_composed_wire_names_vary_with_seed():
    wires = set()
    for seed in SEEDS:
        _, large = composed_pair(seed)
        ranking = _start_ranking(large)
        wires.add(ranking[0])
    assert len(wires) == len(list(SEEDS))
