import math

import pytest
import torch
from hypothesis import given
from hypothesis import strategies as st

from logitserve import InvalidRequest, LogitEngine, ServerConfig, rank_topk


class TestRankTopk:
    def test_orders_by_logit_descending(self):
        logits = torch.tensor([0.1, 3.0, -2.0, 1.5])
        assert rank_topk(logits, 4) == [1, 3, 0, 2]

    def test_ties_broken_by_ascending_index(self):
        logits = torch.tensor([2.0, 5.0, 5.0, 1.0, 5.0])
        assert rank_topk(logits, 5) == [1, 2, 4, 0, 3]

    def test_k_truncates(self):
        logits = torch.tensor([2.0, 5.0, 5.0, 1.0])
        assert rank_topk(logits, 2) == [1, 2]

    @given(st.lists(st.integers(min_value=-5, max_value=5), min_size=1, max_size=30))
    def test_matches_sort_by_neg_logit_then_index(self, values):
        # Integer logits force plenty of ties.
        logits = torch.tensor([float(v) for v in values])
        expected = sorted(range(len(values)), key=lambda i: (-values[i], i))
        assert rank_topk(logits, len(values)) == expected


class TestConfig:
    def test_rejects_empty_model(self):
        with pytest.raises(ValueError, match="model"):
            ServerConfig(model="")

    def test_rejects_bad_context(self):
        with pytest.raises(ValueError, match="max_context"):
            ServerConfig(model="m", max_context=0)

    def test_rejects_bad_port(self):
        with pytest.raises(ValueError, match="port"):
            ServerConfig(model="m", port=70000)


class TestVocab:
    def test_count_matches_tokenizer(self, engine):
        assert len(engine.vocab()) == len(engine.tokenizer)

    def test_ids_ascending_and_texts_strings(self, engine):
        pairs = engine.vocab()
        assert [i for i, _ in pairs] == list(range(len(pairs)))
        assert all(isinstance(t, str) for _, t in pairs)

    def test_eos_texts_nonempty(self, engine):
        assert engine.eos_texts
        assert all(isinstance(t, str) and t for t in engine.eos_texts)


class TestTopk:
    def test_probs_descending_and_in_unit_interval(self, engine):
        cands = engine.topk([2, 3], [4], k=5)
        assert len(cands) == 5
        probs = [c.prob for c in cands]
        assert probs == sorted(probs, reverse=True)
        assert all(0.0 < p <= 1.0 for p in probs)

    def test_full_vocab_probs_sum_to_one(self, engine):
        cands = engine.topk([2], [], k=engine.vocab_size)
        assert math.isclose(sum(c.prob for c in cands), 1.0, rel_tol=1e-9)

    def test_k_above_vocab_returns_full_vocab(self, engine):
        cands = engine.topk([2], [], k=engine.vocab_size + 100)
        assert len(cands) == engine.vocab_size
        assert sorted(c.id for c in cands) == list(range(engine.vocab_size))

    def test_texts_match_vocab_table(self, engine):
        table = dict(engine.vocab())
        for c in engine.topk([2, 5], [], k=3):
            assert c.text == table[c.id]

    def test_deterministic_across_calls(self, engine):
        a = engine.topk([2, 3, 4], [5], k=7)
        b = engine.topk([2, 3, 4], [5], k=7)
        assert a == b

    def test_prompt_and_generated_concatenate(self, engine):
        # Splitting the same ids differently must not change the model input.
        joined = engine.topk([2, 3, 4, 5], [], k=4)
        split = engine.topk([2], [3, 4, 5], k=4)
        assert joined == split

    def test_rejects_out_of_range_id(self, engine):
        with pytest.raises(InvalidRequest, match="outside vocabulary"):
            engine.topk([2, engine.vocab_size], [], k=1)
        with pytest.raises(InvalidRequest, match="outside vocabulary"):
            engine.topk([2], [-1], k=1)

    def test_empty_context_answers_from_bos(self, engine):
        bos = engine._bos_id
        assert bos is not None
        assert engine.topk([], [], k=3) == engine.topk([bos], [], k=3)

    def test_rejects_context_overflow(self, engine):
        ids = [2] * (engine.max_context + 1)
        with pytest.raises(InvalidRequest, match="context length"):
            engine.topk(ids, [], k=1)

    def test_rejects_nonpositive_k(self, engine):
        with pytest.raises(InvalidRequest, match="k must be"):
            engine.topk([2], [], k=0)

    def test_clamps_to_model_position_limit(self, checkpoint):
        # Config asks for more context than the checkpoint supports.
        eng = LogitEngine(ServerConfig(model=checkpoint, max_context=100_000))
        assert eng.max_context == 64
