"""Tokens, vocabularies, and sequence states.

The search operates on sequences of subword-style tokens. A state is the
fixed prompt plus the tokens generated so far; generation ends when the
rendered text ends with a terminal marker (``endmodule`` by default) or
when the length budget is exhausted. Terminal detection works on rendered
text rather than token identity because real tokenizers may split or merge
the marker across tokens.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

DEFAULT_TERMINAL_MARKERS = frozenset({"endmodule"})
DEFAULT_COMMENT_OPENERS = frozenset({"//", "/*", "*/"})


@dataclass(frozen=True)
class Token:
    """A vocabulary entry: dense id plus surface text (may be multi-character)."""

    id: int
    text: str

    def __post_init__(self) -> None:
        if self.id < 0:
            raise ValueError(f"token id must be non-negative, got {self.id}")
        if not self.text:
            raise ValueError(f"token {self.id} has empty text")


@dataclass(frozen=True)
class Vocabulary:
    """An ordered token set with terminal and comment-opener configuration.

    Token ids must be dense 0..len-1. ``terminal_markers`` are strings whose
    appearance at the end of the rendered generated text ends a sequence.
    ``comment_openers`` are substrings that classify a token as
    comment-starting (and therefore prunable).
    """

    tokens: tuple[Token, ...]
    terminal_markers: frozenset[str] = DEFAULT_TERMINAL_MARKERS
    comment_openers: frozenset[str] = DEFAULT_COMMENT_OPENERS

    def __post_init__(self) -> None:
        for i, tok in enumerate(self.tokens):
            if tok.id != i:
                raise ValueError(
                    f"token ids must be dense 0..{len(self.tokens) - 1}; "
                    f"position {i} holds id {tok.id}"
                )

    def __len__(self) -> int:
        return len(self.tokens)

    def by_id(self, token_id: int) -> Token:
        return self.tokens[token_id]

    def by_text(self, text: str) -> Token:
        """Look up a token by its surface text. Texts must be unique for this."""
        return self._text_table()[text]

    def has_text(self, text: str) -> bool:
        return text in self._text_table()

    def _text_table(self) -> dict[str, Token]:
        # Built lazily: general tokenizer vocabularies may repeat texts, in
        # which case by-text lookup is simply unavailable.
        table = getattr(self, "_by_text", None)
        if table is None:
            table = {}
            for tok in self.tokens:
                if tok.text in table:
                    raise ValueError(
                        f"duplicate token text {tok.text!r}; by-text lookup is ambiguous"
                    )
                table[tok.text] = tok
            object.__setattr__(self, "_by_text", table)
        return table


def make_vocabulary(
    texts: list[str] | tuple[str, ...],
    terminal_markers: set[str] | frozenset[str] | None = None,
    comment_openers: set[str] | frozenset[str] | None = None,
) -> Vocabulary:
    """Build a vocabulary from an ordered list of token texts."""
    return Vocabulary(
        tokens=tuple(Token(i, t) for i, t in enumerate(texts)),
        terminal_markers=frozenset(terminal_markers)
        if terminal_markers is not None
        else DEFAULT_TERMINAL_MARKERS,
        comment_openers=frozenset(comment_openers)
        if comment_openers is not None
        else DEFAULT_COMMENT_OPENERS,
    )


def load_vocabulary(
    path: str | Path,
    terminal_markers: set[str] | None = None,
    comment_openers: set[str] | None = None,
) -> Vocabulary:
    """Load a vocabulary from a JSONL file of {"id": int, "text": str} rows.

    Rows may appear in any order; ids must be dense.
    """
    entries: dict[int, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            tid, text = int(row["id"]), str(row["text"])
            if tid in entries:
                raise ValueError(f"{path}:{lineno}: duplicate token id {tid}")
            entries[tid] = text
    texts = [entries[i] for i in sorted(entries)]
    if sorted(entries) != list(range(len(entries))):
        raise ValueError(f"{path}: token ids are not dense 0..{len(entries) - 1}")
    return make_vocabulary(texts, terminal_markers, comment_openers)


def is_comment_opener(token: Token, vocab: Vocabulary) -> bool:
    """True iff the token text contains any configured comment-opener substring.

    Substring containment catches merged subword tokens like ``//----``; the
    occasional false positive (e.g. ``*/`` inside a string literal) is an
    accepted conservative pruning trade-off.
    """
    return any(opener in token.text for opener in vocab.comment_openers)


@dataclass(frozen=True)
class SequenceState:
    """The prompt plus the tokens generated so far.

    ``prompt_text`` is the raw prompt string and is authoritative for
    rendering; ``prompt_tokens`` carries the tokenized form for model
    backends that consume token ids. Instances are immutable values.
    """

    prompt_tokens: tuple[Token, ...]
    prompt_text: str
    vocab: Vocabulary
    t_max: int = 1024
    generated: tuple[Token, ...] = field(default=())

    def __post_init__(self) -> None:
        if self.t_max < 1:
            raise ValueError("t_max must be at least 1")
        if len(self.generated) > self.t_max:
            raise ValueError(
                f"generated length {len(self.generated)} exceeds t_max {self.t_max}"
            )

    @property
    def step(self) -> int:
        return len(self.generated)

    def generated_text(self) -> str:
        return "".join(tok.text for tok in self.generated)


def initial_state(
    vocab: Vocabulary,
    prompt_text: str = "",
    prompt_tokens: tuple[Token, ...] = (),
    t_max: int = 1024,
) -> SequenceState:
    return SequenceState(
        prompt_tokens=prompt_tokens, prompt_text=prompt_text, vocab=vocab, t_max=t_max
    )


def _generated_tail(state: SequenceState, need_chars: int) -> str:
    # Collect token texts from the end until we have at least `need_chars`
    # non-whitespace characters, so the suffix check stays O(1)-ish per call.
    parts: list[str] = []
    seen = 0
    for tok in reversed(state.generated):
        parts.append(tok.text)
        seen += len(tok.text.strip())
        if seen >= need_chars:
            break
    return "".join(reversed(parts))


def is_terminal(state: SequenceState) -> bool:
    """True iff the generated text ends with a terminal marker or the budget is spent."""
    if state.step >= state.t_max:
        return True
    if not state.generated:
        return False
    markers = state.vocab.terminal_markers
    if not markers:
        return False
    longest = max(len(m) for m in markers)
    tail = _generated_tail(state, longest).rstrip()
    return any(tail.endswith(m) for m in markers)


def transition(state: SequenceState, action: Token) -> SequenceState:
    """Append one token, producing the successor state.

    Raises if called on a terminal state; that always indicates a search bug,
    not a recoverable condition.
    """
    if is_terminal(state):
        raise ValueError(
            f"transition from terminal state at step {state.step} (search logic bug)"
        )
    return SequenceState(
        prompt_tokens=state.prompt_tokens,
        prompt_text=state.prompt_text,
        vocab=state.vocab,
        t_max=state.t_max,
        generated=state.generated + (action,),
    )


def render(state: SequenceState) -> str:
    """The code handed to evaluators: raw prompt text plus generated token texts."""
    return state.prompt_text + state.generated_text()
