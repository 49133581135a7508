"""Token models: the abstraction over "what comes next".

A policy model maps a sequence state to a top-k distribution over next
tokens. Two backends live here: a deterministic table-driven toy grammar
used by every test and toy experiment, and an HTTP client speaking the
top-k wire protocol for real model servers. Comment-token filtering and
the filtered greedy step shared by search rollouts also live here.

Filtering does not renormalize probabilities by default: the prior inside
the selection rule is meant to carry the model's absolute confidence.
Renormalization is available behind a flag for ablations.
"""

from __future__ import annotations

import hashlib
import json
import logging
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Protocol

import requests

from .tokens import SequenceState, Token, Vocabulary, is_comment_opener, make_vocabulary

log = logging.getLogger(__name__)

DEFAULT_EXPANSION_K = 5
DEFAULT_ROLLOUT_K = 3


@dataclass(frozen=True)
class ModelDistribution:
    """Top-k candidates sorted by probability descending, ties by ascending id."""

    candidates: tuple[tuple[Token, float], ...]
    k: int

    def __post_init__(self) -> None:
        if len(self.candidates) > self.k:
            raise ValueError(f"{len(self.candidates)} candidates exceed k={self.k}")
        for _, p in self.candidates:
            if not (0.0 < p <= 1.0):
                raise ValueError(f"probability {p} outside (0, 1]")
        for (ta, pa), (tb, pb) in zip(self.candidates, self.candidates[1:]):
            if ((-pa, ta.id)) > ((-pb, tb.id)):
                raise ValueError("candidates not sorted by (prob desc, id asc)")

    def __len__(self) -> int:
        return len(self.candidates)

    @property
    def tokens(self) -> tuple[Token, ...]:
        return tuple(t for t, _ in self.candidates)


def make_distribution(pairs: list[tuple[Token, float]], k: int) -> ModelDistribution:
    """Sort candidate pairs into canonical order and truncate to k."""
    ordered = sorted(pairs, key=lambda tp: (-tp[1], tp[0].id))
    return ModelDistribution(candidates=tuple(ordered[:k]), k=k)


class PolicyModel(Protocol):
    vocab: Vocabulary

    def next_distribution(self, state: SequenceState, k: int) -> ModelDistribution: ...


def next_distribution(model: PolicyModel, state: SequenceState, k: int) -> ModelDistribution:
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return model.next_distribution(state, k)


def filtered_distribution(
    dist: ModelDistribution, vocab: Vocabulary, renormalize: bool = False
) -> ModelDistribution:
    """Drop comment-opening candidates, preserving order.

    May return an empty distribution if every candidate was a comment token;
    callers decide what to do with that.
    """
    kept = [(t, p) for t, p in dist.candidates if not is_comment_opener(t, vocab)]
    if renormalize and kept:
        total = sum(p for _, p in kept)
        kept = [(t, p / total) for t, p in kept]
    return ModelDistribution(candidates=tuple(kept), k=dist.k)


def greedy_next(
    model: PolicyModel,
    state: SequenceState,
    vocab: Vocabulary,
    rollout_k: int = DEFAULT_ROLLOUT_K,
) -> Token:
    """The most likely non-comment next token.

    Widens the requested top-k (doubling from ``rollout_k``) until a
    non-comment candidate appears, so a comment-heavy head of the
    distribution is skipped rather than selected.
    """
    k = max(1, rollout_k)
    limit = len(vocab)
    while True:
        dist = model.next_distribution(state, min(k, limit))
        kept = filtered_distribution(dist, vocab)
        if kept.candidates:
            return kept.candidates[0][0]
        if k >= limit:
            raise RuntimeError(
                "every vocabulary candidate is a comment token; "
                "the model/vocabulary configuration is unusable"
            )
        k *= 2


@dataclass(frozen=True)
class ToyGrammarModel:
    """Deterministic weighted bigram-style grammar over a toy vocabulary.

    ``rules`` maps a context (the last ``context_len`` token texts, taken
    from ``start_context`` extended by the generated tokens) to weighted next
    tokens. Weights are normalized at load. A context with no rule falls
    back to a uniform distribution over ``fallback_texts`` (default: the
    terminal-marker tokens), which is logged because it usually means a toy
    task wandered off its authored grammar.
    """

    vocab: Vocabulary
    rules: dict[tuple[str, ...], dict[str, float]]
    context_len: int = 2
    start_context: tuple[str, ...] = ()
    fallback_texts: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.context_len < 1:
            raise ValueError("context_len must be >= 1")
        normalized: dict[tuple[str, ...], dict[str, float]] = {}
        for ctx, weighted in self.rules.items():
            if not weighted:
                raise ValueError(f"empty rule for context {ctx!r}")
            total = float(sum(weighted.values()))
            if total <= 0 or any(w <= 0 for w in weighted.values()):
                raise ValueError(f"rule weights must be positive for context {ctx!r}")
            normalized[tuple(ctx)] = {
                text: float(w) / total for text, w in weighted.items()
            }
            for text in weighted:
                self.vocab.by_text(text)  # raises KeyError on unknown token text
        object.__setattr__(self, "rules", normalized)
        fallback = self.fallback_texts
        if not fallback:
            fallback = tuple(
                t.text for t in self.vocab.tokens if t.text in self.vocab.terminal_markers
            )
        for text in fallback:
            self.vocab.by_text(text)
        object.__setattr__(self, "fallback_texts", fallback)

    def context_for(self, state: SequenceState) -> tuple[str, ...]:
        texts = list(self.start_context) + [t.text for t in state.generated]
        return tuple(texts[-self.context_len :])

    def next_distribution(self, state: SequenceState, k: int) -> ModelDistribution:
        ctx = self.context_for(state)
        weighted = self.rules.get(ctx)
        if weighted is None:
            if not self.fallback_texts:
                raise RuntimeError(
                    f"no rule for context {ctx!r} and no fallback tokens configured"
                )
            log.warning("toy grammar has no rule for context %r; using fallback", ctx)
            p = 1.0 / len(self.fallback_texts)
            pairs = [(self.vocab.by_text(t), p) for t in self.fallback_texts]
        else:
            pairs = [(self.vocab.by_text(t), p) for t, p in weighted.items()]
        return make_distribution(pairs, k)


def load_toy_model(path: str | Path) -> ToyGrammarModel:
    """Load a toy model definition file.

    Format: ``{"vocab": [...], "context_len": int, "rules": {"tok1 tok2":
    {"next": weight, ...}}, "start_context": [...]}`` plus optional
    ``terminal_markers``, ``comment_openers`` and ``fallback_tokens`` keys.
    Rule keys are whitespace-joined, so file-defined models need
    whitespace-free token texts; models built in code may key rules with
    arbitrary text tuples directly.
    """
    with open(path, encoding="utf-8") as fh:
        spec = json.load(fh)
    vocab = make_vocabulary(
        [str(t) for t in spec["vocab"]],
        terminal_markers=set(spec["terminal_markers"]) if "terminal_markers" in spec else None,
        comment_openers=set(spec["comment_openers"]) if "comment_openers" in spec else None,
    )
    rules = {
        tuple(key.split()): {str(t): float(w) for t, w in weighted.items()}
        for key, weighted in spec.get("rules", {}).items()
    }
    return ToyGrammarModel(
        vocab=vocab,
        rules=rules,
        context_len=int(spec.get("context_len", 2)),
        start_context=tuple(str(t) for t in spec.get("start_context", ())),
        fallback_texts=tuple(str(t) for t in spec.get("fallback_tokens", ())),
    )


class RemoteModelError(RuntimeError):
    """Transport or protocol failure talking to a model server."""

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message)
        self.step = step


@dataclass(frozen=True)
class RemoteModelConfig:
    endpoint_url: str
    top_k: int = DEFAULT_EXPANSION_K
    timeout: float = 30.0
    retry_count: int = 2

    def __post_init__(self) -> None:
        if self.top_k < 1:
            raise ValueError("top_k must be >= 1")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")


@dataclass
class RemoteModel:
    """HTTP client for the top-k wire protocol.

    Responses are cached in memory keyed by (prompt ids, generated ids, k)
    so repeated queries within a run are identical and cheap; an optional
    on-disk cache keyed by (endpoint, request hash) persists across runs.
    Token generation latency dominates everything else in real deployments,
    so the caches are the main performance lever.
    """

    config: RemoteModelConfig
    vocab: Vocabulary
    disk_cache_dir: Optional[Path] = None
    _cache: dict = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @classmethod
    def connect(
        cls, config: RemoteModelConfig, disk_cache_dir: str | Path | None = None
    ) -> "RemoteModel":
        """Fetch the server vocabulary and build a client around it."""
        vocab = fetch_remote_vocabulary(config)
        return cls(
            config=config,
            vocab=vocab,
            disk_cache_dir=Path(disk_cache_dir) if disk_cache_dir else None,
        )

    def next_distribution(self, state: SequenceState, k: int) -> ModelDistribution:
        key = (
            tuple(t.id for t in state.prompt_tokens),
            tuple(t.id for t in state.generated),
            k,
        )
        with self._lock:
            hit = self._cache.get(key)
        if hit is not None:
            return hit
        raw = self._fetch(key, state, k)
        pairs = [
            (Token(int(c["id"]), str(c["text"])), float(c["prob"]))
            for c in raw["candidates"]
        ]
        dist = make_distribution(pairs, k)
        with self._lock:
            self._cache[key] = dist
        return dist

    def _fetch(self, key, state: SequenceState, k: int) -> dict:
        body = {
            "prompt_token_ids": list(key[0]),
            "generated_token_ids": list(key[1]),
            "k": k,
        }
        disk_path = self._disk_path(body)
        if disk_path is not None and disk_path.exists():
            return json.loads(disk_path.read_text(encoding="utf-8"))
        url = self.config.endpoint_url.rstrip("/") + "/v1/topk"
        last_error: Exception | None = None
        for attempt in range(self.config.retry_count + 1):
            try:
                resp = requests.post(url, json=body, timeout=self.config.timeout)
                if resp.status_code != 200:
                    detail = _error_detail(resp)
                    raise RemoteModelError(
                        f"topk request failed with {resp.status_code}: {detail}",
                        step=state.step,
                    )
                raw = resp.json()
                if disk_path is not None:
                    disk_path.parent.mkdir(parents=True, exist_ok=True)
                    disk_path.write_text(json.dumps(raw), encoding="utf-8")
                return raw
            except RemoteModelError:
                raise
            except (requests.RequestException, ValueError) as exc:
                last_error = exc
                if attempt < self.config.retry_count:
                    time.sleep(0.1 * (attempt + 1))
        raise RemoteModelError(
            f"topk request failed after {self.config.retry_count + 1} attempts: {last_error}",
            step=state.step,
        )

    def _disk_path(self, body: dict) -> Optional[Path]:
        if self.disk_cache_dir is None:
            return None
        digest = hashlib.sha256(
            json.dumps([self.config.endpoint_url, body], sort_keys=True).encode()
        ).hexdigest()
        return self.disk_cache_dir / f"{digest}.json"


def _error_detail(resp: requests.Response) -> str:
    try:
        return str(resp.json().get("error", resp.text))
    except ValueError:
        return resp.text[:200]


def fetch_remote_vocabulary(config: RemoteModelConfig) -> Vocabulary:
    url = config.endpoint_url.rstrip("/") + "/v1/vocab"
    try:
        resp = requests.get(url, timeout=config.timeout)
    except requests.RequestException as exc:
        raise RemoteModelError(f"vocab request failed: {exc}") from exc
    if resp.status_code != 200:
        raise RemoteModelError(
            f"vocab request failed with {resp.status_code}: {_error_detail(resp)}"
        )
    payload = resp.json()
    texts_by_id = {int(t["id"]): str(t["text"]) for t in payload["tokens"]}
    texts = [texts_by_id[i] for i in sorted(texts_by_id)]
    return make_vocabulary(texts, terminal_markers=set(payload.get("eos_texts", [])))
