"""Greedy and beam-search decoding baselines.

These are the probability-only decoders the tree search is compared
against: no comment filtering, no reward feedback, no lookahead beyond
beam width. Log probabilities are summed without length normalization;
terminal markers and the length budget bound sequence length anyway.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .evaluation import EvaluationCache, Evaluator, evaluate_terminal
from .models import PolicyModel
from .rewards import EvaluationOutcome
from .tokens import SequenceState, Token, Vocabulary, initial_state, is_terminal, transition


@dataclass(frozen=True)
class BeamEntry:
    state: SequenceState
    log_prob: float

    def sequence_ids(self) -> tuple[int, ...]:
        return tuple(t.id for t in self.state.generated)


@dataclass
class Beam:
    """Up to ``width`` entries sorted by log probability descending."""

    entries: list[BeamEntry]
    width: int


def _beam_sort_key(entry: BeamEntry) -> tuple[float, tuple[int, ...]]:
    # Ties in cumulative log probability resolve lexicographically by token
    # ids, keeping the decoder fully deterministic.
    return (-entry.log_prob, entry.sequence_ids())


def greedy_decode(
    prompt_text: str,
    model: PolicyModel,
    vocab: Vocabulary,
    t_max: int,
    prompt_tokens: tuple[Token, ...] = (),
) -> SequenceState:
    """Repeatedly append the single most likely next token until terminal."""
    state = initial_state(vocab, prompt_text, prompt_tokens, t_max)
    while not is_terminal(state):
        dist = model.next_distribution(state, 1)
        if not dist.candidates:
            raise RuntimeError(f"model returned no candidates at step {state.step}")
        state = transition(state, dist.candidates[0][0])
    return state


def beam_decode(
    prompt_text: str,
    model: PolicyModel,
    vocab: Vocabulary,
    k: int,
    t_max: int,
    prompt_tokens: tuple[Token, ...] = (),
) -> list[SequenceState]:
    """Standard beam search by cumulative log probability.

    Each live beam expands with the model's top-k candidates; terminal
    entries freeze but keep competing for the k slots, so a finished
    sequence is only displaced by strictly more likely continuations
    elsewhere. Returns the up-to-k terminal sequences, most likely first.
    """
    if k < 1:
        raise ValueError("beam width must be >= 1")
    root = initial_state(vocab, prompt_text, prompt_tokens, t_max)
    if is_terminal(root):
        return [root]
    expand_k = min(k, len(vocab))
    live = [BeamEntry(root, 0.0)]
    frozen: list[BeamEntry] = []
    while live:
        candidates = list(frozen)
        for entry in live:
            dist = model.next_distribution(entry.state, expand_k)
            for token, prob in dist.candidates:
                candidates.append(
                    BeamEntry(
                        state=transition(entry.state, token),
                        log_prob=entry.log_prob + math.log(prob),
                    )
                )
        candidates.sort(key=_beam_sort_key)
        kept = candidates[:k]
        live = [e for e in kept if not is_terminal(e.state)]
        frozen = [e for e in kept if is_terminal(e.state)]
    return [e.state for e in sorted(frozen, key=_beam_sort_key)]


def best_functional_result(
    states: list[SequenceState],
    evaluator: Evaluator,
    cache: EvaluationCache | None = None,
) -> tuple[SequenceState, EvaluationOutcome] | None:
    """Evaluate decoded sequences and keep the functional one with lowest ADP.

    This is how a beam baseline reports its result: all surviving beams are
    judged, and the best functional one (by area-delay product) wins. Returns
    None when nothing functional came out.
    """
    best: tuple[SequenceState, EvaluationOutcome] | None = None
    for state in states:
        outcome = evaluate_terminal(state, evaluator, cache)
        if not outcome.functional:
            continue
        assert outcome.adp is not None
        if best is None or outcome.adp < best[1].adp:
            best = (state, outcome)
    return best
