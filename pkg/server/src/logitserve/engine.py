"""Model loading and top-k ranking."""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass
from typing import Sequence

import torch
from transformers import AutoModelForCausalLM, AutoTokenizer

from .config import ServerConfig

logger = logging.getLogger(__name__)


class InvalidRequest(ValueError):
    """Request violates the protocol contract; maps to HTTP 400."""


@dataclass(frozen=True)
class Candidate:
    id: int
    text: str
    prob: float


def rank_topk(logits: torch.Tensor, k: int) -> list[int]:
    """Indices of the k largest logits, ties broken by ascending index.

    Stable sort keeps the original (ascending-index) order among equal
    logits, which is exactly the tie rule the protocol promises.
    """
    order = torch.argsort(logits, descending=True, stable=True)
    return order[:k].tolist()


class LogitEngine:
    """Wraps one causal LM and answers top-k queries deterministically.

    The model is loaded once, switched to eval mode, and never updated,
    so identical requests produce bit-identical responses for the life
    of the process.  A lock serializes forward passes; the HTTP layer
    may queue but never interleaves inference.
    """

    def __init__(self, config: ServerConfig) -> None:
        self.config = config
        self.tokenizer = AutoTokenizer.from_pretrained(config.model)
        self.model = AutoModelForCausalLM.from_pretrained(config.model)
        self.model.to(torch.device(config.device))
        self.model.eval()
        self._lock = threading.Lock()

        self.vocab_size = len(self.tokenizer)
        self._texts = [self.tokenizer.decode([i]) for i in range(self.vocab_size)]

        eos_texts: list[str] = []
        eos_id = self.tokenizer.eos_token_id
        if eos_id is not None and 0 <= eos_id < self.vocab_size:
            eos_texts.append(self._texts[eos_id])
        eos_token = self.tokenizer.eos_token
        if eos_token and eos_token not in eos_texts:
            eos_texts.append(eos_token)
        self.eos_texts = eos_texts

        # Empty-context queries ask for the unconditional next-token
        # distribution; causal LMs answer those from a BOS token.
        self._bos_id = self.tokenizer.bos_token_id
        if self._bos_id is None:
            self._bos_id = getattr(self.model.config, "bos_token_id", None)
        if self._bos_id is None:
            self._bos_id = self.tokenizer.eos_token_id

        model_limit = getattr(
            self.model.config,
            "n_positions",
            getattr(self.model.config, "max_position_embeddings", None),
        )
        self.max_context = config.max_context
        if model_limit is not None and model_limit < self.max_context:
            logger.warning(
                "max_context %d exceeds model position limit %d; clamping",
                self.max_context,
                model_limit,
            )
            self.max_context = int(model_limit)

    def vocab(self) -> list[tuple[int, str]]:
        """Every (id, text) pair the tokenizer defines, ascending id."""
        return list(enumerate(self._texts))

    def topk(
        self,
        prompt_token_ids: Sequence[int],
        generated_token_ids: Sequence[int],
        k: int,
    ) -> list[Candidate]:
        """Top-k next-token candidates after prompt + generated.

        Probabilities are softmax over the full vocabulary at
        temperature 1.0; k above the vocabulary size returns the whole
        vocabulary; an empty context is answered from the BOS token.
        Raises InvalidRequest for out-of-range ids, context overflow,
        or non-positive k.
        """
        if k < 1:
            raise InvalidRequest(f"k must be >= 1, got {k}")
        ids = list(prompt_token_ids) + list(generated_token_ids)
        for i in ids:
            if not 0 <= i < self.vocab_size:
                raise InvalidRequest(
                    f"token id {i} outside vocabulary [0, {self.vocab_size})"
                )
        if not ids:
            if self._bos_id is None:
                raise InvalidRequest(
                    "empty context and the checkpoint defines no BOS/EOS token"
                )
            ids = [self._bos_id]
        if len(ids) > self.max_context:
            raise InvalidRequest(
                f"context length {len(ids)} exceeds limit {self.max_context}"
            )

        with self._lock, torch.no_grad():
            input_ids = torch.tensor([ids], device=self.model.device)
            logits = self.model(input_ids=input_ids).logits[0, -1]
        # Some checkpoints pad the logit dimension past the tokenizer;
        # only tokenizer-known ids are servable.
        logits = logits[: self.vocab_size].detach().to("cpu")
        # float64 softmax keeps tiny tail probabilities away from 0.
        probs = torch.softmax(logits.double(), dim=-1)
        order = rank_topk(logits, min(k, self.vocab_size))
        return [Candidate(i, self._texts[i], float(probs[i])) for i in order]
