"""Monte Carlo tree search over token sequences.

The tree's nodes are sequence states; each edge carries a visit count N, a
total reward M, and the model's prior probability P for that token. One
iteration runs four phases:

  selection       descend from the root by the PUCT rule below while the
                  chosen edge already has a child node
  expansion       create the child for the first unvisited chosen edge and
                  attach its comment-filtered top-k candidate edges
  rollout         complete the new child's sequence with filtered greedy
                  steps until it is terminal
  backpropagation evaluate the terminal sequence, then add the reward and
                  one visit to every node and edge on the selection path

Selection maximizes, over child edges a of node S:

    M(S,a)/N(S,a)  +  c_puct * P(S,a) * sqrt(1 + N(S)) / (1 + N(S,a))

with the average-reward term defined as 0 for unvisited edges and exact
ties broken by ascending token id, which makes the whole engine
deterministic. Comment-opening tokens are pruned from both selection
candidates and rollout choices, shrinking the search space without
touching functionality.

If selection lands on a terminal state already in the tree, its cached
evaluation is backpropagated again so visit/reward conservation stays
exact. The tracked result is the best terminal ever evaluated, not the
most-visited root child: the goal is a single best artifact.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from random import Random
from typing import Optional

from .evaluation import EvaluationSession, Evaluator
from .models import (
    DEFAULT_EXPANSION_K,
    DEFAULT_ROLLOUT_K,
    PolicyModel,
    filtered_distribution,
    greedy_next,
)
from .rewards import EvaluationOutcome, RewardParams
from .tokens import (
    SequenceState,
    Token,
    Vocabulary,
    initial_state,
    is_comment_opener,
    is_terminal,
    render,
    transition,
)

log = logging.getLogger(__name__)

# A run aborts after this many consecutive failed iterations; isolated
# failures are logged and skipped.
MAX_CONSECUTIVE_FAILURES = 3


@dataclass
class EdgeStats:
    visit_count: int = 0
    total_reward: float = 0.0
    prior: float = 0.0


@dataclass
class Edge:
    token: Token
    stats: EdgeStats
    child: Optional["SearchNode"] = None


@dataclass
class SearchNode:
    state: SequenceState
    node_visits: int = 0
    node_total_reward: float = 0.0
    children: dict[int, Edge] = field(default_factory=dict)
    expanded: bool = False


@dataclass(frozen=True)
class SearchConfig:
    c_puct: float = 1.0
    k: int = DEFAULT_EXPANSION_K
    rollout_k: int = DEFAULT_ROLLOUT_K
    iterations: int = 100
    t_max: int = 1024
    seed: int = 0
    reward_params: RewardParams = field(default_factory=RewardParams)
    renormalize_priors: bool = False
    early_stop_reward: Optional[float] = None
    stochastic_tie_break: bool = False

    def __post_init__(self) -> None:
        if self.c_puct <= 0:
            raise ValueError("c_puct must be positive")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.k < 1 or self.rollout_k < 1:
            raise ValueError("k and rollout_k must be >= 1")


@dataclass
class IterationRecord:
    iteration: int
    reward: float
    length: int
    compilable: bool
    functional: bool
    area: Optional[float]
    delay: Optional[float]
    wall_ms: int

    def to_json(self) -> dict:
        return {
            "iter": self.iteration,
            "reward": self.reward,
            "len": self.length,
            "compilable": self.compilable,
            "functional": self.functional,
            "area": self.area,
            "delay": self.delay,
            "wall_ms": self.wall_ms,
        }


@dataclass
class SearchResult:
    best_state: Optional[SequenceState]
    best_reward: float
    best_outcome: Optional[EvaluationOutcome]
    best_iteration: int
    iterations_run: int
    per_iteration_log: list[IterationRecord]
    iteration_rate_per_min: float
    first_functional_iteration: Optional[int]
    distinct_terminals: int
    comment_violations: int
    errors: list[tuple[int, str]]
    root: SearchNode
    session: EvaluationSession


def edge_score(node: SearchNode, edge: Edge, c_puct: float) -> float:
    stats = edge.stats
    if stats.visit_count > 0:
        avg = stats.total_reward / stats.visit_count
    else:
        avg = 0.0
    uct = stats.prior * math.sqrt(1.0 + node.node_visits) / (1.0 + stats.visit_count)
    return avg + c_puct * uct


def select_action(
    node: SearchNode, config: SearchConfig, rng: Optional[Random] = None
) -> Token:
    """Pick the child edge maximizing the selection score.

    Exact ties go to the lowest token id; with ``stochastic_tie_break`` a
    seeded generator picks among the tied edges instead.
    """
    if not node.expanded:
        raise RuntimeError("select_action on an unexpanded node (search logic bug)")
    if not node.children:
        raise RuntimeError("select_action on a node with no child edges")
    best_token: Optional[Token] = None
    best_score = -math.inf
    tied: list[Token] = []
    for token_id in sorted(node.children):
        edge = node.children[token_id]
        score = edge_score(node, edge, config.c_puct)
        if score > best_score:
            best_score = score
            best_token = edge.token
            tied = [edge.token]
        elif score == best_score:
            tied.append(edge.token)
    assert best_token is not None
    if config.stochastic_tie_break and rng is not None and len(tied) > 1:
        return tied[rng.randrange(len(tied))]
    return best_token


class _PruningAudit:
    """Counts tokens that slipped through comment pruning; must stay at zero."""

    def __init__(self, vocab: Vocabulary):
        self.vocab = vocab
        self.violations = 0

    def check(self, token: Token) -> None:
        if is_comment_opener(token, self.vocab):
            self.violations += 1
            log.error("comment token %r reached selection/rollout", token.text)


def expand(node: SearchNode, model: PolicyModel, vocab: Vocabulary, config: SearchConfig) -> None:
    """Attach comment-filtered top-k candidate edges with model priors."""
    dist = model.next_distribution(node.state, config.k)
    kept = filtered_distribution(dist, vocab, renormalize=config.renormalize_priors)
    node.children = {
        token.id: Edge(token=token, stats=EdgeStats(prior=prob))
        for token, prob in kept.candidates
    }
    node.expanded = True


def rollout(
    state: SequenceState,
    model: PolicyModel,
    vocab: Vocabulary,
    config: SearchConfig,
    audit: Optional[_PruningAudit] = None,
) -> SequenceState:
    """Greedily complete a sequence with the filtered most-likely token."""
    while not is_terminal(state):
        token = greedy_next(model, state, vocab, config.rollout_k)
        if audit is not None:
            audit.check(token)
        state = transition(state, token)
    return state


@dataclass
class IterationOutcome:
    reward: float
    terminal_state: SequenceState
    outcome: EvaluationOutcome


def run_iteration(
    root: SearchNode,
    model: PolicyModel,
    session: EvaluationSession,
    vocab: Vocabulary,
    config: SearchConfig,
    rng: Optional[Random] = None,
    audit: Optional[_PruningAudit] = None,
) -> IterationOutcome:
    """One full selection/expansion/rollout/backpropagation cycle.

    On any model or evaluator exception the structural change of this
    iteration (at most one created child) is rolled back, leaving all
    statistics untouched.
    """
    if is_terminal(root.state):
        raise ValueError("run_iteration on a terminal root")
    path: list[SearchNode] = [root]
    edges: list[Edge] = []
    created_on: Optional[Edge] = None
    try:
        node = root
        while True:
            if is_terminal(node.state):
                scored = session.score(node.state)
                break
            if not node.expanded:
                expand(node, model, vocab, config)
            if not node.children:
                # Every candidate token was a comment opener: a dead end that
                # is not terminal. Fall back to completing from here.
                terminal = rollout(node.state, model, vocab, config, audit)
                scored = session.score(terminal)
                break
            token = select_action(node, config, rng)
            if audit is not None:
                audit.check(token)
            edge = node.children[token.id]
            edges.append(edge)
            if edge.child is None:
                child_state = transition(node.state, token)
                child = SearchNode(state=child_state)
                if not is_terminal(child_state):
                    expand(child, model, vocab, config)
                edge.child = child
                created_on = edge
                path.append(child)
                terminal = rollout(child_state, model, vocab, config, audit)
                scored = session.score(terminal)
                break
            node = edge.child
            path.append(node)
    except Exception:
        if created_on is not None:
            created_on.child = None
        raise

    for visited in path:
        visited.node_visits += 1
        visited.node_total_reward += scored.reward
    for edge in edges:
        edge.stats.visit_count += 1
        edge.stats.total_reward += scored.reward
    return IterationOutcome(
        reward=scored.reward, terminal_state=scored.state, outcome=scored.outcome
    )


def search(
    prompt_text: str,
    model: PolicyModel,
    evaluator: Evaluator,
    vocab: Vocabulary,
    config: SearchConfig,
    prompt_tokens: tuple[Token, ...] = (),
    session: Optional[EvaluationSession] = None,
    log_path: Optional[str | Path] = None,
) -> SearchResult:
    """Run the configured iteration budget and return the best terminal found.

    A fresh ``EvaluationSession`` (and therefore a fresh run baseline) is
    created unless one is passed in. ``log_path`` appends one JSON line per
    iteration. Early stopping triggers once ``early_stop_reward`` is reached,
    when configured.
    """
    root_state = initial_state(
        vocab, prompt_text=prompt_text, prompt_tokens=prompt_tokens, t_max=config.t_max
    )
    if is_terminal(root_state):
        raise ValueError("prompt is already terminal; nothing to search")
    if session is None:
        session = EvaluationSession(evaluator, config.reward_params)
    root = SearchNode(state=root_state)
    expand(root, model, vocab, config)
    rng = Random(config.seed)
    audit = _PruningAudit(vocab)

    records: list[IterationRecord] = []
    errors: list[tuple[int, str]] = []
    best_state: Optional[SequenceState] = None
    best_outcome: Optional[EvaluationOutcome] = None
    best_reward = -math.inf
    best_iteration = -1
    first_functional: Optional[int] = None
    seen_terminals: set[str] = set()
    consecutive_failures = 0
    log_fh = open(log_path, "a", encoding="utf-8") if log_path is not None else None
    started = time.perf_counter()
    iterations_run = 0
    try:
        for i in range(config.iterations):
            t0 = time.perf_counter()
            try:
                result = run_iteration(root, model, session, vocab, config, rng, audit)
            except Exception as exc:
                consecutive_failures += 1
                errors.append((i, str(exc)))
                log.warning("iteration %d failed: %s", i, exc)
                if consecutive_failures >= MAX_CONSECUTIVE_FAILURES:
                    raise RuntimeError(
                        f"aborting after {consecutive_failures} consecutive "
                        f"failed iterations (last: {exc})"
                    ) from exc
                continue
            consecutive_failures = 0
            iterations_run += 1
            seen_terminals.add(
                hashlib.sha256(render(result.terminal_state).encode("utf-8")).hexdigest()
            )
            wall_ms = int((time.perf_counter() - t0) * 1000)
            record = IterationRecord(
                iteration=i,
                reward=result.reward,
                length=result.terminal_state.step,
                compilable=result.outcome.compilable,
                functional=result.outcome.functional,
                area=result.outcome.area,
                delay=result.outcome.delay,
                wall_ms=wall_ms,
            )
            records.append(record)
            if log_fh is not None:
                log_fh.write(json.dumps(record.to_json()) + "\n")
            if result.outcome.functional and first_functional is None:
                first_functional = i
            if result.reward > best_reward:
                best_reward = result.reward
                best_state = result.terminal_state
                best_outcome = result.outcome
                best_iteration = i
            if (
                config.early_stop_reward is not None
                and best_reward >= config.early_stop_reward
            ):
                break
    finally:
        if log_fh is not None:
            log_fh.close()
    elapsed_min = (time.perf_counter() - started) / 60.0
    rate = iterations_run / elapsed_min if elapsed_min > 0 else float("inf")
    return SearchResult(
        best_state=best_state,
        best_reward=best_reward if best_state is not None else float("nan"),
        best_outcome=best_outcome,
        best_iteration=best_iteration,
        iterations_run=iterations_run,
        per_iteration_log=records,
        iteration_rate_per_min=rate,
        first_functional_iteration=first_functional,
        distinct_terminals=len(seen_terminals),
        comment_violations=audit.violations,
        errors=errors,
        root=root,
        session=session,
    )


def iter_nodes(root: SearchNode):
    """Yield every node in the tree, depth first."""
    stack = [root]
    while stack:
        node = stack.pop()
        yield node
        for edge in node.children.values():
            if edge.child is not None:
                stack.append(edge.child)
