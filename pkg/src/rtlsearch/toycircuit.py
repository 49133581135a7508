"""Toy combinational-circuit tasks and their evaluator.

A stand-in for a real HDL tool pipeline: a tiny netlist language is parsed
(compile stage), simulated exhaustively against a target truth table
(functional stage), and costed (synthesis stage: area is the summed gate
cost, delay is the gate depth of the output cone).

Netlist grammar, statements separated by ``;`` and whitespace-insensitive:

    inputs a b c;          declare inputs (several statements allowed;
                           re-declaring a known input is a no-op)
    w = GATE(x, y);        GATE in {NOT, AND, OR, XOR, NAND, NOR}; NOT is unary
    out w;                 designate the single output
    endmodule              optional trailing keyword, ignored semantically

Identifiers match [a-z][a-z0-9]*; every name must be defined before use and
each wire is assigned at most once, so circuits are acyclic by construction.
Gates outside the output cone still count toward area: written-but-unused
logic is exactly the redundancy the search is meant to squeeze out.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .rewards import EvaluationOutcome, functional_outcome

GATE_ARITY = {"NOT": 1, "AND": 2, "OR": 2, "XOR": 2, "NAND": 2, "NOR": 2}

DEFAULT_GATE_COSTS = {"NOT": 1, "AND": 2, "OR": 2, "XOR": 3, "NAND": 2, "NOR": 2}

_IDENT = r"[a-z][a-z0-9]*"
_IDENT_RE = re.compile(rf"^{_IDENT}$")
_GATE_RE = re.compile(
    rf"^({_IDENT})\s*=\s*([A-Z]+)\s*\(\s*({_IDENT})\s*(?:,\s*({_IDENT})\s*)?\)$"
)


class ToyParseError(ValueError):
    """Raised when a toy netlist does not parse; maps to a non-compilable verdict."""


@dataclass(frozen=True)
class Gate:
    name: str
    kind: str
    args: tuple[str, ...]


@dataclass(frozen=True)
class ParsedCircuit:
    inputs: tuple[str, ...]
    gates: tuple[Gate, ...]
    output: str


@dataclass(frozen=True)
class ToyCircuitTask:
    """Target behavior plus the cost model used to score implementations.

    ``target_truth_table`` has one output bit per input assignment; row ``i``
    assigns the j-th declared input the bit ``(i >> (n-1-j)) & 1``, i.e. the
    first declared input is the most significant bit of the row index.
    """

    input_count: int
    target_truth_table: tuple[int, ...]
    gate_costs: dict[str, int] = field(default_factory=lambda: dict(DEFAULT_GATE_COSTS))

    def __post_init__(self) -> None:
        if not 1 <= self.input_count <= 6:
            raise ValueError(f"input_count must be in 1..6, got {self.input_count}")
        if len(self.target_truth_table) != 2**self.input_count:
            raise ValueError(
                f"truth table needs {2 ** self.input_count} rows, "
                f"got {len(self.target_truth_table)}"
            )
        if any(bit not in (0, 1) for bit in self.target_truth_table):
            raise ValueError("truth table entries must be 0 or 1")


def truth_table(fn, input_count: int) -> tuple[int, ...]:
    """Tabulate ``fn(bits) -> 0/1`` over all assignments, MSB-first row order."""
    rows = []
    for i in range(2**input_count):
        bits = tuple((i >> (input_count - 1 - j)) & 1 for j in range(input_count))
        rows.append(1 if fn(bits) else 0)
    return tuple(rows)


def parse_toy_netlist(code_text: str) -> ParsedCircuit:
    chunks = code_text.split(";")
    final = chunks[-1].strip()
    if final not in ("", "endmodule"):
        raise ToyParseError(f"trailing text after last statement: {final!r}")

    inputs: list[str] = []
    defined: set[str] = set()
    gates: list[Gate] = []
    output: str | None = None

    for chunk in chunks[:-1]:
        stmt = chunk.strip()
        if not stmt:
            raise ToyParseError("empty statement")
        words = stmt.split()
        if words[0] == "inputs":
            if len(words) < 2:
                raise ToyParseError("inputs statement declares no names")
            for name in words[1:]:
                if not _IDENT_RE.match(name):
                    raise ToyParseError(f"bad input identifier {name!r}")
                if name in inputs:
                    continue  # idempotent re-declaration
                if name in defined:
                    raise ToyParseError(f"input {name!r} collides with a wire")
                inputs.append(name)
                defined.add(name)
            continue
        if words[0] == "out":
            if output is not None:
                raise ToyParseError("multiple out statements")
            if len(words) != 2 or not _IDENT_RE.match(words[1]):
                raise ToyParseError(f"bad out statement {stmt!r}")
            if words[1] not in defined:
                raise ToyParseError(f"output {words[1]!r} used before definition")
            output = words[1]
            continue
        m = _GATE_RE.match(stmt)
        if not m:
            raise ToyParseError(f"bad statement {stmt!r}")
        name, kind, a, b = m.group(1), m.group(2), m.group(3), m.group(4)
        if kind not in GATE_ARITY:
            raise ToyParseError(f"unknown gate {kind!r}")
        args = (a,) if b is None else (a, b)
        if len(args) != GATE_ARITY[kind]:
            raise ToyParseError(f"{kind} takes {GATE_ARITY[kind]} argument(s): {stmt!r}")
        if name in defined:
            raise ToyParseError(f"wire {name!r} assigned twice")
        for arg in args:
            if arg not in defined:
                raise ToyParseError(f"wire {arg!r} used before definition")
        gates.append(Gate(name=name, kind=kind, args=args))
        defined.add(name)

    if not inputs:
        raise ToyParseError("no inputs declared")
    if output is None:
        raise ToyParseError("no out statement")
    return ParsedCircuit(inputs=tuple(inputs), gates=tuple(gates), output=output)


_GATE_FN = {
    "NOT": lambda a: 1 - a,
    "AND": lambda a, b: a & b,
    "OR": lambda a, b: a | b,
    "XOR": lambda a, b: a ^ b,
    "NAND": lambda a, b: 1 - (a & b),
    "NOR": lambda a, b: 1 - (a | b),
}


def simulate(circuit: ParsedCircuit, input_bits: tuple[int, ...]) -> int:
    """Evaluate the output for one input assignment (declaration order)."""
    values: dict[str, int] = dict(zip(circuit.inputs, input_bits))
    for gate in circuit.gates:
        values[gate.name] = _GATE_FN[gate.kind](*(values[a] for a in gate.args))
    return values[circuit.output]


def circuit_area(circuit: ParsedCircuit, gate_costs: dict[str, int]) -> float:
    return float(sum(gate_costs[g.kind] for g in circuit.gates))


def circuit_delay(circuit: ParsedCircuit) -> float:
    """Unit-delay gate depth of the output cone; inputs sit at level 0."""
    levels: dict[str, int] = {name: 0 for name in circuit.inputs}
    for gate in circuit.gates:
        levels[gate.name] = 1 + max(levels[a] for a in gate.args)
    return float(levels[circuit.output])


def toy_evaluate(code_text: str, task: ToyCircuitTask) -> EvaluationOutcome:
    """Run the three-stage toy pipeline on one piece of code.

    Parse failure is a compile failure. A circuit that parses but declares a
    different number of inputs than the task cannot match the testbench and
    is scored non-functional.
    """
    try:
        circuit = parse_toy_netlist(code_text)
    except ToyParseError as exc:
        return EvaluationOutcome(
            compilable=False, functional=False, artifacts=(f"parse error: {exc}",)
        )
    if len(circuit.inputs) != task.input_count:
        return EvaluationOutcome(compilable=True, functional=False)
    n = task.input_count
    for i in range(2**n):
        bits = tuple((i >> (n - 1 - j)) & 1 for j in range(n))
        if simulate(circuit, bits) != task.target_truth_table[i]:
            return EvaluationOutcome(compilable=True, functional=False)
    return functional_outcome(
        area=circuit_area(circuit, task.gate_costs), delay=circuit_delay(circuit)
    )


class ToyCircuitEvaluator:
    """Evaluator-protocol wrapper binding ``toy_evaluate`` to one task."""

    def __init__(self, task: ToyCircuitTask):
        self.task = task

    def evaluate(self, code_text: str) -> EvaluationOutcome:
        return toy_evaluate(code_text, self.task)


_OUT_STMT_RE = re.compile(rf"\bout\s+{_IDENT}\s*;")
_ENDMODULE_RE = re.compile(r"\s*\bendmodule\b\s*$")


def reusable_fragment(code_text: str) -> str:
    """Strip the ``out`` statement and trailing ``endmodule`` from a solution.

    What remains (input declarations plus gate definitions) can be prepended
    verbatim to a larger task's prompt, making its wires available to the
    generated continuation.
    """
    fragment = _OUT_STMT_RE.sub("", code_text)
    fragment = _ENDMODULE_RE.sub("", fragment)
    fragment = fragment.rstrip()
    return fragment + "\n" if fragment else ""
