"""Netlist toy language: parser, metrics, and evaluation semantics.

The property tests build random gate networks, render them to netlist text,
and check the package's verdicts against a small reference evaluator written
independently here (recursive expression evaluation instead of topological
tabulation).
"""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rtlsearch.rewards import RewardParams, compute_reward, set_baseline
from rtlsearch.toycircuit import (
    DEFAULT_GATE_COSTS,
    GATE_ARITY,
    ToyCircuitTask,
    ToyParseError,
    circuit_area,
    circuit_delay,
    parse_toy_netlist,
    reusable_fragment,
    simulate,
    toy_evaluate,
    truth_table,
)

XOR2 = ToyCircuitTask(2, truth_table(lambda b: b[0] ^ b[1], 2))


def _gate_fn(kind, args):
    a = args[0]
    b = args[1] if len(args) > 1 else None
    return {
        "NOT": lambda: 1 - a,
        "AND": lambda: a & b,
        "OR": lambda: a | b,
        "XOR": lambda: a ^ b,
        "NAND": lambda: 1 - (a & b),
        "NOR": lambda: 1 - (a | b),
    }[kind]()


def test_parse_simple_netlist():
    circuit = parse_toy_netlist("inputs a b;\nx = AND(a, b);\nout x;\nendmodule")
    assert circuit.inputs == ("a", "b")
    assert circuit.output == "x"
    assert simulate(circuit, (1, 1)) == 1
    assert simulate(circuit, (1, 0)) == 0


def test_truth_table_orientation():
    # Rows follow binary order of the input vector, first input most
    # significant: f(a, b) = a tabulates as 0,0,1,1.
    assert truth_table(lambda b: b[0], 2) == (0, 0, 1, 1)
    assert truth_table(lambda b: b[1], 2) == (0, 1, 0, 1)
    task = ToyCircuitTask(2, (0, 0, 1, 1))
    outcome = toy_evaluate("inputs a b;\nx = OR(a, a);\nout x;\nendmodule", task)
    assert outcome.functional


def test_parse_errors():
    for bad in [
        "x = AND(a, b);\nout x;\nendmodule",  # inputs never declared
        "inputs a b;\nx = AND(a, c);\nout x;\nendmodule",  # c undefined
        "inputs a b;\nx = AND(a, b);\nx = OR(a, b);\nout x;\nendmodule",  # redefined
        "inputs a b;\nx = NOT(a, b);\nout x;\nendmodule",  # arity
        "inputs a b;\nout x;\nendmodule",  # out before definition
        "inputs a b;\nx = AND(a, b);\nendmodule",  # no out
        "inputs a b;\nx = FOO(a, b);\nout x;\nendmodule",  # unknown gate
    ]:
        with pytest.raises(ToyParseError):
            parse_toy_netlist(bad)


def test_inputs_redeclaration_is_idempotent():
    circuit = parse_toy_netlist(
        "inputs a b;\ng = XOR(a, b);\ninputs a b c;\nh = XOR(g, c);\nout h;\nendmodule"
    )
    assert circuit.inputs == ("a", "b", "c")


def test_area_counts_dead_gates():
    code = "inputs a b;\nx = AND(a, b);\nj = XOR(a, b);\nout x;\nendmodule"
    circuit = parse_toy_netlist(code)
    assert circuit_area(circuit, DEFAULT_GATE_COSTS) == 2 + 3
    # Delay only follows the output cone, so the dead XOR does not count.
    assert circuit_delay(circuit) == 1


def test_delay_is_output_cone_depth():
    code = (
        "inputs a b;\nw = XOR(a, b);\nv = NOT(w);\nx = NOT(v);\n"
        "j = AND(a, b);\nout x;\nendmodule"
    )
    circuit = parse_toy_netlist(code)
    assert circuit_delay(circuit) == 3


def test_evaluate_verdicts():
    good = "inputs a b;\nx = XOR(a, b);\nout x;\nendmodule"
    wrong = "inputs a b;\nx = OR(a, b);\nout x;\nendmodule"
    broken = "inputs a b;\nx = XOR(a, q);\nout x;\nendmodule"
    assert toy_evaluate(good, XOR2).functional
    out_wrong = toy_evaluate(wrong, XOR2)
    assert out_wrong.compilable and not out_wrong.functional
    out_broken = toy_evaluate(broken, XOR2)
    assert not out_broken.compilable


def test_evaluate_input_count_mismatch_is_non_functional():
    code = "inputs a b c;\nx = XOR(a, b);\nout x;\nendmodule"
    outcome = toy_evaluate(code, XOR2)
    assert outcome.compilable and not outcome.functional


def test_reward_chain_on_toy_outcomes():
    params = set_baseline(
        RewardParams(), toy_evaluate("inputs a b;\nx = XOR(a, b);\nout x;\nendmodule", XOR2)
    )
    better = toy_evaluate(
        "inputs a b;\nx = XOR(a, b);\nout x;\nendmodule", XOR2
    )
    assert compute_reward(better, params) == pytest.approx(0.5)


def test_reusable_fragment_strips_out_and_endmodule():
    code = "inputs a b;\ng = XOR(a, b);\nout g;\nendmodule"
    assert reusable_fragment(code) == "inputs a b;\ng = XOR(a, b);\n"


names = st.sampled_from(["t0", "t1", "t2", "t3", "t4", "t5"])
kinds = st.sampled_from(sorted(GATE_ARITY))


@st.composite
def random_netlists(draw):
    """A well-formed netlist over 2-3 inputs with 1-6 gates, plus its meaning."""
    n_inputs = draw(st.integers(2, 3))
    inputs = ["a", "b", "c"][:n_inputs]
    n_gates = draw(st.integers(1, 6))
    defined = list(inputs)
    exprs: dict[str, tuple] = {}
    lines = ["inputs " + " ".join(inputs) + ";"]
    for i in range(n_gates):
        kind = draw(kinds)
        args = [draw(st.sampled_from(defined)) for _ in range(GATE_ARITY[kind])]
        name = f"t{i}"
        exprs[name] = (kind, tuple(args))
        defined.append(name)
        lines.append(f"{name} = {kind}({', '.join(args)});")
    out = draw(st.sampled_from(defined[n_inputs:]))
    lines.append(f"out {out};")
    lines.append("endmodule")
    return "\n".join(lines), inputs, exprs, out


def _reference_eval(exprs, out, env):
    def value(name):
        if name in env:
            return env[name]
        kind, args = exprs[name]
        return _gate_fn(kind, [value(a) for a in args])

    return value(out)


@settings(max_examples=150)
@given(random_netlists())
def test_simulation_matches_reference(sample):
    code, inputs, exprs, out = sample
    circuit = parse_toy_netlist(code)
    n = len(inputs)
    for row in range(2**n):
        bits = tuple((row >> (n - 1 - j)) & 1 for j in range(n))
        env = dict(zip(inputs, bits))
        assert simulate(circuit, bits) == _reference_eval(exprs, out, env)


@settings(max_examples=150)
@given(random_netlists())
def test_functional_iff_truth_table_matches(sample):
    code, inputs, exprs, out = sample
    n = len(inputs)
    table = []
    for row in range(2**n):
        bits = tuple((row >> (n - 1 - j)) & 1 for j in range(n))
        table.append(_reference_eval(exprs, out, dict(zip(inputs, bits))))
    task = ToyCircuitTask(n, tuple(table))
    outcome = toy_evaluate(code, task)
    assert outcome.functional
    # Flip one table entry: must become non-functional but stay compilable.
    flipped = list(table)
    flipped[0] ^= 1
    outcome2 = toy_evaluate(code, ToyCircuitTask(n, tuple(flipped)))
    assert outcome2.compilable and not outcome2.functional


@settings(max_examples=100)
@given(random_netlists())
def test_area_is_sum_of_gate_costs(sample):
    code, _, exprs, _ = sample
    circuit = parse_toy_netlist(code)
    expected = sum(DEFAULT_GATE_COSTS[kind] for kind, _ in exprs.values())
    assert circuit_area(circuit, DEFAULT_GATE_COSTS) == expected
