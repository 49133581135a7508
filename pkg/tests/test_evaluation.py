"""Evaluation cache, per-run session, and the external tool pipeline."""

import logging
import time

import pytest

from rtlsearch.evaluation import (
    EvaluationCache,
    EvaluationSession,
    ExternalToolEvaluator,
    evaluate_terminal,
)
from rtlsearch.rewards import Baseline, EvaluationOutcome, RewardParams, functional_outcome
from rtlsearch.tokens import initial_state, make_vocabulary, transition


def _terminal_state(text="x = AND(a, b);\n"):
    vocab = make_vocabulary([text, "endmodule"])
    state = initial_state(vocab, "inputs a b;\nout x;\n", (), 4)
    state = transition(state, vocab.by_id(0))
    return transition(state, vocab.by_id(1))


class _CountingEvaluator:
    def __init__(self, outcome):
        self.outcome = outcome
        self.calls = 0

    def evaluate(self, code_text):
        self.calls += 1
        return self.outcome


def test_cache_put_get_and_counters():
    cache = EvaluationCache()
    outcome = EvaluationOutcome(compilable=False, functional=False)
    assert cache.get("abc") is None
    cache.put("abc", outcome)
    assert cache.get("abc") is outcome
    assert cache.get("abc") is outcome
    assert (cache.hits, cache.misses, len(cache)) == (2, 1, 1)


def test_evaluate_terminal_uses_cache():
    state = _terminal_state()
    evaluator = _CountingEvaluator(functional_outcome(area=2.0, delay=1.0))
    cache = EvaluationCache()
    first = evaluate_terminal(state, evaluator, cache)
    second = evaluate_terminal(state, evaluator, cache)
    assert first is second
    assert evaluator.calls == 1


def test_evaluate_terminal_rejects_non_terminal():
    vocab = make_vocabulary(["a;\n", "endmodule"])
    state = initial_state(vocab, "p\n", (), 4)
    with pytest.raises(ValueError, match="non-terminal"):
        evaluate_terminal(state, _CountingEvaluator(None))


def test_session_pins_baseline_to_first_functional():
    session = EvaluationSession(evaluator=None)
    session.evaluator = _CountingEvaluator(functional_outcome(area=4.0, delay=2.0))
    scored = session.score(_terminal_state())
    # First functional sets the baseline from itself, so it scores alpha_b.
    assert scored.reward == 0.5
    assert session.params.baseline == Baseline(area=4.0, delay=2.0)
    # A later, worse design is judged against that pinned baseline.
    session.evaluator = _CountingEvaluator(functional_outcome(area=8.0, delay=2.0))
    worse = session.score(_terminal_state("x = OR(a, b);\n"))
    assert worse.reward == pytest.approx(0.5 + (1 - 16.0 / 8.0))


def test_session_respects_preset_baseline():
    params = RewardParams(baseline=Baseline(area=2.0, delay=1.0))
    session = EvaluationSession(
        evaluator=_CountingEvaluator(functional_outcome(area=4.0, delay=2.0)),
        params=params,
    )
    scored = session.score(_terminal_state())
    assert scored.reward == pytest.approx(0.5 + (1 - 8.0 / 2.0))
    assert session.params.baseline == Baseline(area=2.0, delay=1.0)


def test_session_failures_before_any_functional():
    session = EvaluationSession(
        evaluator=_CountingEvaluator(EvaluationOutcome(compilable=False, functional=False))
    )
    assert session.score(_terminal_state()).reward == -1.0
    assert session.params.baseline is None


def test_session_zero_cost_functional_cannot_seed_baseline(caplog):
    session = EvaluationSession(
        evaluator=_CountingEvaluator(functional_outcome(area=0.0, delay=0.0))
    )
    with caplog.at_level(logging.WARNING, logger="rtlsearch.evaluation"):
        scored = session.score(_terminal_state())
    assert session.params.baseline is None
    assert scored.reward == pytest.approx(1.5)
    assert any("baseline" in r.message for r in caplog.records)


# --- external tool pipeline ------------------------------------------------

METRICS_CMD = 'printf \'{{"area": 6.0, "delay": 2.0}}\' > "{work_dir}/metrics.json"'


def _evaluator(tmp_path, **overrides):
    defaults = dict(
        compile_cmd="true",
        functional_cmd="true",
        synth_cmd=METRICS_CMD,
        work_root=tmp_path,
        timeout_s=10.0,
    )
    defaults.update(overrides)
    return ExternalToolEvaluator(**defaults)


def test_external_all_stages_pass(tmp_path):
    evaluator = _evaluator(tmp_path)
    outcome = evaluator.evaluate("module m; endmodule\n")
    assert outcome == functional_outcome(
        area=6.0, delay=2.0, artifacts=outcome.artifacts
    )
    assert outcome.artifacts  # work dir plus one log per stage
    assert evaluator.warning_count == 0


def test_external_compile_failure_short_circuits(tmp_path):
    evaluator = _evaluator(
        tmp_path,
        compile_cmd="false",
        functional_cmd='touch "{work_dir}/functional_ran"',
    )
    outcome = evaluator.evaluate("bad\n")
    assert (outcome.compilable, outcome.functional) == (False, False)
    assert not list(tmp_path.glob("eval_*/functional_ran"))


def test_external_functional_failure(tmp_path):
    evaluator = _evaluator(tmp_path, functional_cmd="false")
    outcome = evaluator.evaluate("code\n")
    assert (outcome.compilable, outcome.functional) == (True, False)


def test_external_code_and_testbench_placeholders(tmp_path):
    evaluator = _evaluator(
        tmp_path,
        compile_cmd='grep -q zebra "{code_file}"',
        functional_cmd='test "{testbench}" = tb.v',
        testbench="tb.v",
    )
    assert evaluator.evaluate("a zebra appears\n").functional
    assert not evaluator.evaluate("nothing here\n").compilable


def test_external_synth_without_metrics_is_non_functional(tmp_path, caplog):
    evaluator = _evaluator(tmp_path, synth_cmd="true")
    with caplog.at_level(logging.WARNING, logger="rtlsearch.evaluation"):
        outcome = evaluator.evaluate("code\n")
    assert (outcome.compilable, outcome.functional) == (True, False)
    assert evaluator.warning_count == 1
    assert any("metrics.json" in r.message for r in caplog.records)


def test_external_malformed_metrics_is_non_functional(tmp_path):
    evaluator = _evaluator(
        tmp_path, synth_cmd='printf \'{{"area": "wide"}}\' > "{work_dir}/metrics.json"'
    )
    outcome = evaluator.evaluate("code\n")
    assert (outcome.compilable, outcome.functional) == (True, False)
    assert evaluator.warning_count == 1


def test_external_synth_failure_discards_metrics(tmp_path):
    # Exit code wins over a metrics file the failing tool left behind.
    evaluator = _evaluator(tmp_path, synth_cmd=METRICS_CMD + " && false")
    outcome = evaluator.evaluate("code\n")
    assert (outcome.compilable, outcome.functional) == (True, False)


def test_external_stage_timeout(tmp_path):
    evaluator = _evaluator(tmp_path, functional_cmd="sleep 2", timeout_s=0.2)
    started = time.monotonic()
    outcome = evaluator.evaluate("code\n")
    assert time.monotonic() - started < 1.5
    assert (outcome.compilable, outcome.functional) == (True, False)
    assert evaluator.warning_count == 1
    logs = list(tmp_path.glob("eval_*/functional.log"))
    assert len(logs) == 1 and "timed out" in logs[0].read_text()


def test_external_stage_logs_capture_output(tmp_path):
    evaluator = _evaluator(tmp_path, compile_cmd="echo hello-from-compile")
    evaluator.evaluate("code\n")
    logs = list(tmp_path.glob("eval_*/compile.log"))
    assert len(logs) == 1 and "hello-from-compile" in logs[0].read_text()


def test_external_cleanup_work_dirs(tmp_path):
    evaluator = _evaluator(tmp_path)
    evaluator.evaluate("one\n")
    evaluator.evaluate("two\n")
    assert len(list(tmp_path.glob("eval_*"))) == 2
    evaluator.cleanup_work_dirs()
    assert list(tmp_path.glob("eval_*")) == []
