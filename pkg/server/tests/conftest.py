"""Shared fixtures: a tiny offline checkpoint and an engine over it.

The conformance story needs a real transformers checkpoint.  The
sandbox has no model-hub access, so by default we construct a small
randomly initialized GPT-2 with a word-level tokenizer and save it to
disk; it loads through the same AutoTokenizer/AutoModelForCausalLM
path as any published checkpoint.  Set LOGITSERVE_CHECKPOINT to an id
or path to run the same tests against a downloaded model instead.
"""

from __future__ import annotations

import os

os.environ.setdefault("HF_HUB_OFFLINE", "1")
os.environ.setdefault("TRANSFORMERS_VERBOSITY", "error")
os.environ.setdefault("HF_HUB_DISABLE_PROGRESS_BARS", "1")

import pytest
import torch
from tokenizers import Tokenizer
from tokenizers.models import WordLevel
from tokenizers.pre_tokenizers import Whitespace
from transformers import GPT2Config, GPT2LMHeadModel, PreTrainedTokenizerFast

from logitserve import LogitEngine, ServerConfig

WORDS = [
    "module", "endmodule", "input", "output", "wire", "assign", "always",
    "begin", "end", "top", "adder", "mux", "a", "b", "c", "x", "y", "s",
    "(", ")", ";", ",", "=", "&", "|", "^", "~", "+", "[", "]", ":", "0", "1",
]


def _build_checkpoint(path: str) -> None:
    vocab = {"<unk>": 0, "<eos>": 1}
    for word in WORDS:
        vocab[word] = len(vocab)
    tok = Tokenizer(WordLevel(vocab, unk_token="<unk>"))
    tok.pre_tokenizer = Whitespace()
    fast = PreTrainedTokenizerFast(
        tokenizer_object=tok, unk_token="<unk>", eos_token="<eos>"
    )
    fast.save_pretrained(path)

    torch.manual_seed(7)
    config = GPT2Config(
        vocab_size=len(fast),
        n_positions=64,
        n_embd=32,
        n_layer=2,
        n_head=2,
        bos_token_id=1,
        eos_token_id=1,
    )
    GPT2LMHeadModel(config).save_pretrained(path)


@pytest.fixture(scope="session")
def checkpoint(tmp_path_factory: pytest.TempPathFactory) -> str:
    override = os.environ.get("LOGITSERVE_CHECKPOINT")
    if override:
        return override
    path = tmp_path_factory.mktemp("ckpt")
    _build_checkpoint(str(path))
    return str(path)


@pytest.fixture(scope="session")
def engine(checkpoint: str) -> LogitEngine:
    return LogitEngine(ServerConfig(model=checkpoint, max_context=64))
