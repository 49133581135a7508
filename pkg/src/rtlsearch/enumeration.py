"""Exhaustive enumeration over the pruned action space.

A brute-force alternative to the tree search, usable only on toy-sized
problems: from every non-terminal state, recurse into each comment-filtered
top-k candidate. The reachable terminal set is exactly the set of leaves
the search tree could ever contain, which makes this the reference answer
for "did the search find the optimum".
"""

from __future__ import annotations

from dataclasses import dataclass

from .evaluation import EvaluationCache, Evaluator, evaluate_terminal
from .models import PolicyModel, filtered_distribution
from .rewards import EvaluationOutcome, RewardParams, compute_reward
from .tokens import SequenceState, Token, Vocabulary, initial_state, is_terminal, transition


def enumerate_terminals(
    prompt_text: str,
    model: PolicyModel,
    vocab: Vocabulary,
    k: int,
    t_max: int,
    prompt_tokens: tuple[Token, ...] = (),
    max_terminals: int = 100_000,
) -> list[SequenceState]:
    """All terminal states reachable through filtered top-k actions, DFS order."""
    terminals: list[SequenceState] = []

    def visit(state: SequenceState) -> None:
        if is_terminal(state):
            terminals.append(state)
            if len(terminals) > max_terminals:
                raise RuntimeError(f"more than {max_terminals} terminal sequences")
            return
        dist = filtered_distribution(model.next_distribution(state, k), vocab)
        for token, _ in dist.candidates:
            visit(transition(state, token))

    visit(initial_state(vocab, prompt_text, prompt_tokens, t_max))
    return terminals


@dataclass(frozen=True)
class OracleResult:
    best_reward: float
    best_state: SequenceState
    best_outcome: EvaluationOutcome
    terminal_count: int


def oracle_best(
    prompt_text: str,
    model: PolicyModel,
    evaluator: Evaluator,
    vocab: Vocabulary,
    k: int,
    t_max: int,
    params: RewardParams,
    prompt_tokens: tuple[Token, ...] = (),
) -> OracleResult:
    """Evaluate every reachable terminal and return the reward maximum.

    ``params`` must carry a preset baseline when any terminal is functional,
    so that rewards do not depend on enumeration order and the result is
    directly comparable with a search run using the same baseline.
    """
    terminals = enumerate_terminals(
        prompt_text, model, vocab, k, t_max, prompt_tokens=prompt_tokens
    )
    cache = EvaluationCache()
    best: tuple[float, SequenceState, EvaluationOutcome] | None = None
    for state in terminals:
        outcome = evaluate_terminal(state, evaluator, cache)
        reward = compute_reward(outcome, params)
        if best is None or reward > best[0]:
            best = (reward, state, outcome)
    if best is None:
        raise RuntimeError("no terminal sequences reachable")
    return OracleResult(
        best_reward=best[0],
        best_state=best[1],
        best_outcome=best[2],
        terminal_count=len(terminals),
    )
