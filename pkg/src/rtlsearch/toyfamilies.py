"""Authored toy task families for experiments and verification.

Each family is a deliberately small search problem over statement-level
tokens (one netlist statement per token), built so that a specific
phenomenon shows up at desk scale:

  oracle_tasks          small enough to enumerate every reachable terminal,
                        so search results can be checked against brute force
  greedy_trap_task      the unfiltered argmax chain ends at a wrong circuit;
                        only lookahead finds the functional one
  redundant_logic_task  the likely paths are functional but bloated with
                        buffer chains and dead gates; the lean solution has
                        a much lower area-delay product and so little prior
                        probability that width-5 beam search prunes it
  composed_pair         a small task whose solution fragment, injected into
                        the large task's prompt, makes a high-probability
                        one-statement completion valid that is otherwise a
                        use-before-definition compile error

Seeded constructors jitter probabilities and rename wires so "5 seeds"
means five genuinely distinct instances, while keeping the orderings the
family's story depends on.
"""

from __future__ import annotations

from dataclasses import dataclass
from random import Random
from typing import Optional

from .composition import ModuleKey
from .models import ToyGrammarModel
from .rewards import Baseline, RewardParams
from .tokens import make_vocabulary
from .toycircuit import ToyCircuitEvaluator, ToyCircuitTask, truth_table

START = "<s>"


@dataclass(frozen=True)
class ToyTask:
    """A self-contained toy search problem."""

    name: str
    kind: str
    width: int  # toy analog of bit width: the input count
    prompt_text: str
    model: ToyGrammarModel
    circuit: ToyCircuitTask
    t_max: int
    oracle_params: Optional[RewardParams] = None  # preset baseline for oracle checks
    reusable: bool = False
    depends_on: tuple[ModuleKey, ...] = ()

    @property
    def vocab(self):
        return self.model.vocab

    def evaluator(self) -> ToyCircuitEvaluator:
        return ToyCircuitEvaluator(self.circuit)

    @property
    def key(self) -> ModuleKey:
        return (self.kind, self.width)


def _model(tokens: list[str], rules: dict[str, dict[str, float]]) -> ToyGrammarModel:
    vocab = make_vocabulary(tokens)
    keyed = {(ctx,): dict(weighted) for ctx, weighted in rules.items()}
    return ToyGrammarModel(
        vocab=vocab, rules=keyed, context_len=1, start_context=(START,)
    )


def _jitter(
    rules: dict[str, dict[str, float]], rng: Random, scale: float = 0.015
) -> dict[str, dict[str, float]]:
    """Perturb rule weights without reordering any branch preferences."""
    out: dict[str, dict[str, float]] = {}
    for ctx, weighted in rules.items():
        if len(weighted) == 1:
            out[ctx] = dict(weighted)
            continue
        gaps = sorted(weighted.values())
        min_gap = min(
            (b - a for a, b in zip(gaps, gaps[1:]) if b > a), default=scale * 4
        )
        eps = min(scale, min_gap / 4)
        out[ctx] = {t: w + rng.uniform(-eps, eps) for t, w in weighted.items()}
    return out


# ---------------------------------------------------------------------------
# Enumerable oracle tasks


def oracle_tasks() -> list[ToyTask]:
    tasks = []

    # Target XOR with a wrong-gate decoy and a dead-gate detour.
    xor_d = "x = XOR(a, b);\n"
    or_d = "x = OR(a, b);\n"
    junk = "y = AND(a, b);\n"
    out_x = "out x;\n"
    out_y = "out y;\n"
    end = "endmodule"
    cmt = "// note\n"
    tasks.append(
        ToyTask(
            name="oracle-xor",
            kind="oracle",
            width=2,
            prompt_text="inputs a b;\n",
            model=_model(
                [xor_d, or_d, junk, out_x, out_y, end, cmt],
                {
                    START: {xor_d: 0.35, or_d: 0.3, junk: 0.2, cmt: 0.15},
                    xor_d: {out_x: 0.5, junk: 0.3, cmt: 0.2},
                    or_d: {out_x: 1.0},
                    junk: {xor_d: 0.6, out_y: 0.4},
                    out_x: {end: 1.0},
                    out_y: {end: 1.0},
                    cmt: {xor_d: 0.5, or_d: 0.5},
                },
            ),
            circuit=ToyCircuitTask(2, truth_table(lambda b: b[0] ^ b[1], 2)),
            t_max=6,
            oracle_params=RewardParams(baseline=Baseline(3.0, 1.0)),
        )
    )

    # Target AND among three single-gate decoys.
    and_d = "x = AND(a, b);\n"
    nand_d = "x = NAND(a, b);\n"
    xor_d2 = "x = XOR(a, b);\n"
    tasks.append(
        ToyTask(
            name="oracle-and",
            kind="oracle",
            width=2,
            prompt_text="inputs a b;\n",
            model=_model(
                [and_d, nand_d, xor_d2, out_x, end, cmt],
                {
                    START: {nand_d: 0.4, and_d: 0.3, xor_d2: 0.2, cmt: 0.1},
                    and_d: {out_x: 1.0},
                    nand_d: {out_x: 1.0},
                    xor_d2: {out_x: 1.0},
                    out_x: {end: 1.0},
                    cmt: {and_d: 1.0},
                },
            ),
            circuit=ToyCircuitTask(2, truth_table(lambda b: b[0] & b[1], 2)),
            t_max=5,
            oracle_params=RewardParams(baseline=Baseline(2.0, 1.0)),
        )
    )

    # Target NAND: a one-gate solution competes with a functional but
    # costlier two-gate chain, so the optimum is about ADP, not success.
    y_and = "y = AND(a, b);\n"
    x_noty = "x = NOT(y);\n"
    tasks.append(
        ToyTask(
            name="oracle-nand",
            kind="oracle",
            width=2,
            prompt_text="inputs a b;\n",
            model=_model(
                [nand_d, y_and, x_noty, out_x, end, cmt],
                {
                    START: {y_and: 0.55, nand_d: 0.25, cmt: 0.2},
                    y_and: {x_noty: 0.8, out_x: 0.2},
                    x_noty: {out_x: 1.0},
                    nand_d: {out_x: 1.0},
                    out_x: {end: 1.0},
                    cmt: {nand_d: 0.5, y_and: 0.5},
                },
            ),
            circuit=ToyCircuitTask(2, truth_table(lambda b: 1 - (b[0] & b[1]), 2)),
            t_max=6,
            oracle_params=RewardParams(baseline=Baseline(2.0, 1.0)),
        )
    )

    # Target OR with a comment-heavy opening.
    or_good = "x = OR(a, b);\n"
    nor_d = "x = NOR(a, b);\n"
    cmt2 = "/* sketch */\n"
    tasks.append(
        ToyTask(
            name="oracle-or",
            kind="oracle",
            width=2,
            prompt_text="inputs a b;\n",
            model=_model(
                [or_good, nor_d, xor_d2, out_x, end, cmt, cmt2],
                {
                    START: {cmt: 0.3, cmt2: 0.25, nor_d: 0.2, or_good: 0.15, xor_d2: 0.1},
                    or_good: {out_x: 1.0},
                    nor_d: {out_x: 1.0},
                    xor_d2: {out_x: 1.0},
                    out_x: {end: 1.0},
                    cmt: {or_good: 0.6, nor_d: 0.4},
                    cmt2: {or_good: 1.0},
                },
            ),
            circuit=ToyCircuitTask(2, truth_table(lambda b: b[0] | b[1], 2)),
            t_max=5,
            oracle_params=RewardParams(baseline=Baseline(2.0, 1.0)),
        )
    )

    # Target XNOR: needs the two-gate chain, single gates are all wrong.
    y_xor = "y = XOR(a, b);\n"
    x_noty = "x = NOT(y);\n"
    tasks.append(
        ToyTask(
            name="oracle-xnor",
            kind="oracle",
            width=2,
            prompt_text="inputs a b;\n",
            model=_model(
                [y_xor, x_noty, or_d, out_x, out_y, end],
                {
                    START: {or_d: 0.45, y_xor: 0.35, out_x: 0.2},
                    y_xor: {x_noty: 0.55, out_y: 0.45},
                    x_noty: {out_x: 1.0},
                    or_d: {out_x: 1.0},
                    out_x: {end: 1.0},
                    out_y: {end: 1.0},
                },
            ),
            circuit=ToyCircuitTask(2, truth_table(lambda b: 1 - (b[0] ^ b[1]), 2)),
            t_max=6,
            oracle_params=RewardParams(baseline=Baseline(4.0, 2.0)),
        )
    )
    return tasks


# ---------------------------------------------------------------------------
# Greedy-trap family: the argmax chain commits to the wrong gate.

_TRAP_GATES = [
    ("OR", "XOR", lambda b: b[0] ^ b[1]),
    ("AND", "NAND", lambda b: 1 - (b[0] & b[1])),
    ("OR", "NOR", lambda b: 1 - (b[0] | b[1])),
    ("XOR", "OR", lambda b: b[0] | b[1]),
    ("NAND", "AND", lambda b: b[0] & b[1]),
]


def greedy_trap_task(seed: int) -> ToyTask:
    rng = Random(1000 + seed)
    wrong_gate, right_gate, fn = _TRAP_GATES[seed % len(_TRAP_GATES)]
    junk_gate = ("AND", "OR", "XOR")[seed % 3]
    wrong = f"x = {wrong_gate}(a, b);\n"
    right = f"x = {right_gate}(a, b);\n"
    junk = f"j = {junk_gate}(a, b);\n"
    out_x = "out x;\n"
    end = "endmodule"
    cmt = "// draft\n"
    rules = {
        START: {wrong: 0.6, right: 0.3, cmt: 0.1},
        wrong: {out_x: 0.8, junk: 0.2},
        right: {out_x: 0.8, junk: 0.2},
        junk: {out_x: 1.0},
        out_x: {end: 1.0},
        cmt: {wrong: 0.5, right: 0.5},
    }
    return ToyTask(
        name=f"trap-{right_gate.lower()}-{seed}",
        kind="trap",
        width=2,
        prompt_text="inputs a b;\n",
        model=_model([wrong, right, junk, out_x, end, cmt], _jitter(rules, rng)),
        circuit=ToyCircuitTask(2, truth_table(fn, 2)),
        t_max=6,
    )


# ---------------------------------------------------------------------------
# Redundant-logic family: likely paths are functional but carry buffer
# chains and dead gates; the lean implementation hides at low probability.

_REDUNDANT_GATES = [
    ("XOR", lambda b: b[0] ^ b[1]),
    ("AND", lambda b: b[0] & b[1]),
    ("OR", lambda b: b[0] | b[1]),
    ("NAND", lambda b: 1 - (b[0] & b[1])),
    ("NOR", lambda b: 1 - (b[0] | b[1])),
]


def redundant_logic_task(seed: int) -> ToyTask:
    rng = Random(2000 + seed)
    gate, fn = _REDUNDANT_GATES[seed % len(_REDUNDANT_GATES)]
    junk_a_gate = ("AND", "OR")[seed % 2]
    junk_b_gate = ("XOR", "NAND")[seed % 2]
    buf = f"w = {gate}(a, b);\n"
    v_not = "v = NOT(w);\n"
    x_not = "x = NOT(v);\n"
    direct = f"x = {gate}(a, b);\n"
    junk_a = f"j = {junk_a_gate}(a, b);\n"
    junk_b = f"k = {junk_b_gate}(a, b);\n"
    out_x = "out x;\n"
    end = "endmodule"
    cmt = "// tidy up\n"
    rules = {
        START: {buf: 0.42, junk_a: 0.22, cmt: 0.16, junk_b: 0.16, direct: 0.04},
        buf: {v_not: 0.85, junk_a: 0.15},
        v_not: {x_not: 0.9, junk_b: 0.1},
        x_not: {out_x: 1.0},
        direct: {out_x: 0.8, junk_a: 0.2},
        junk_a: {buf: 0.6, junk_b: 0.25, direct: 0.15},
        junk_b: {buf: 0.6, junk_a: 0.25, direct: 0.15},
        out_x: {end: 1.0},
        cmt: {buf: 0.7, direct: 0.3},
    }
    return ToyTask(
        name=f"redundant-{gate.lower()}-{seed}",
        kind="redundant",
        width=2,
        prompt_text="inputs a b;\n",
        model=_model(
            [buf, v_not, x_not, direct, junk_a, junk_b, out_x, end, cmt],
            _jitter(rules, rng),
        ),
        circuit=ToyCircuitTask(2, truth_table(fn, 2)),
        t_max=7,
    )


def reference_sweep_task() -> ToyTask:
    """The fixed task the functionality-bonus sweep runs on.

    A safe high-prior chain reaches a bloated functional circuit, and a
    probe branch hides one lean design behind two compile-error siblings.
    The bigger the functionality bonus, the wider the gap between the safe
    chain's reward and the probe branch's early failures, so the search
    re-generates the first functional design for longer stretches before
    (or instead of) digging out the lean one. That makes the longest run of
    identical-ADP functional iterations grow with the bonus.
    """
    safe_w = "w = XOR(a, b);\n"
    safe_v = "v = NOT(w);\n"
    safe_x = "x = NOT(v);\n"
    probe = "p = AND(a, b);\n"
    bad_q = "q = OR(z, a);\n"  # z is never defined
    bad_r = "r = NOT(u);\n"  # u is never defined
    lean = "x = XOR(a, b);\n"
    out_x = "out x;\n"
    end = "endmodule"
    return ToyTask(
        name="sweep-reference",
        kind="sweep",
        width=2,
        prompt_text="inputs a b;\n",
        model=_model(
            [safe_w, safe_v, safe_x, probe, bad_q, bad_r, lean, out_x, end],
            {
                START: {safe_w: 0.55, probe: 0.45},
                safe_w: {safe_v: 1.0},
                safe_v: {safe_x: 1.0},
                safe_x: {out_x: 1.0},
                probe: {bad_q: 0.4, bad_r: 0.35, lean: 0.25},
                bad_q: {out_x: 1.0},
                bad_r: {out_x: 1.0},
                lean: {out_x: 1.0},
                out_x: {end: 1.0},
            },
        ),
        circuit=ToyCircuitTask(2, truth_table(lambda b: b[0] ^ b[1], 2)),
        t_max=7,
    )


# ---------------------------------------------------------------------------
# Composed family: a stored small-module fragment makes the cheap completion
# of the large task valid.

_COMPOSED_WIRES = ["g", "m", "s", "r", "q"]


def composed_pair(seed: int) -> tuple[ToyTask, ToyTask]:
    """(small task, large task) for the modular-reuse workflow.

    The large task's width sits at the composition threshold used by the toy
    suite, so its prompt gets the stored small-task fragment injected. The
    highest-prior opening token references the small module's output wire:
    with the fragment in the prompt that completes the circuit in one
    statement, without it the same token is a use-before-definition error.
    """
    rng = Random(3000 + seed)
    wire = _COMPOSED_WIRES[seed % len(_COMPOSED_WIRES)]
    junk_gate = ("AND", "OR", "NAND")[seed % 3]

    g_xor = f"{wire} = XOR(a, b);\n"
    g_or = f"{wire} = OR(a, b);\n"
    out_g = f"out {wire};\n"
    end = "endmodule"
    cmt_s = "// half parity\n"
    small = ToyTask(
        name=f"xorblock-{seed}",
        # Seed-specific kind: each pair keeps its own library slot, since
        # the stored fragment's wire name differs per seed.
        kind=f"xorblock{seed}",
        width=2,
        prompt_text="inputs a b;\n",
        model=_model(
            [g_xor, g_or, out_g, end, cmt_s],
            _jitter(
                {
                    START: {g_xor: 0.55, g_or: 0.3, cmt_s: 0.15},
                    g_xor: {out_g: 1.0},
                    g_or: {out_g: 1.0},
                    out_g: {end: 1.0},
                    cmt_s: {g_xor: 0.6, g_or: 0.4},
                },
                rng,
            ),
        ),
        circuit=ToyCircuitTask(2, truth_table(lambda b: b[0] ^ b[1], 2)),
        t_max=5,
        reusable=True,
    )

    use = f"h = XOR({wire}, c);\n"
    rederive = g_xor
    wrong = f"h = OR({wire}, c);\n"
    junk = f"j = {junk_gate}(a, b);\n"
    out_h = "out h;\n"
    cmt_l = "// full parity\n"
    large = ToyTask(
        name=f"parity-{seed}",
        kind=f"parity{seed}",
        width=3,
        prompt_text="inputs a b c;\n",
        model=_model(
            [use, rederive, wrong, junk, out_h, cmt_l, end],
            _jitter(
                {
                    START: {use: 0.40, wrong: 0.20, junk: 0.15, cmt_l: 0.15, rederive: 0.10},
                    use: {out_h: 0.7, junk: 0.3},
                    wrong: {out_h: 0.9, junk: 0.1},
                    rederive: {use: 0.5, wrong: 0.3, junk: 0.2},
                    junk: {use: 0.4, rederive: 0.4, wrong: 0.2},
                    cmt_l: {use: 0.6, rederive: 0.4},
                    out_h: {end: 1.0},
                },
                rng,
            ),
        ),
        circuit=ToyCircuitTask(3, truth_table(lambda b: b[0] ^ b[1] ^ b[2], 3)),
        t_max=8,
        depends_on=((small.kind, small.width),),
    )
    return small, large


TOY_COMPOSITION_THRESHOLD = 3  # toy analog of the large-module bit-width cutoff
