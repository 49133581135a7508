"""Terminal-state evaluation: caching, per-run reward session, external tools.

Evaluators turn rendered code into an ``EvaluationOutcome``. The cache keys
outcomes by content hash so a sequence reached twice never re-runs tools.
``EvaluationSession`` scopes one search run: it owns the cache, the reward
parameters, and the run baseline, which is pinned to the first functional
outcome the session sees.

The external-tool evaluator shells out to user-supplied command templates
for the compile, functional, and synthesis stages so the engine stays
agnostic to particular tool versions; a stage failing (non-zero exit,
timeout, or crash) short-circuits the rest.
"""

from __future__ import annotations

import hashlib
import json
import logging
import shutil
import subprocess
import tempfile
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Protocol

from .rewards import (
    EvaluationOutcome,
    RewardParams,
    compute_reward,
    functional_outcome,
    set_baseline,
)
from .tokens import SequenceState, is_terminal, render

log = logging.getLogger(__name__)


class Evaluator(Protocol):
    def evaluate(self, code_text: str) -> EvaluationOutcome: ...


class EvaluationCache:
    """Thread-safe content-hash cache of evaluation outcomes."""

    def __init__(self) -> None:
        self._outcomes: dict[str, EvaluationOutcome] = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    @staticmethod
    def key_for(code_text: str) -> str:
        return hashlib.sha256(code_text.encode("utf-8")).hexdigest()

    def get(self, code_text: str) -> Optional[EvaluationOutcome]:
        with self._lock:
            outcome = self._outcomes.get(self.key_for(code_text))
            if outcome is not None:
                self.hits += 1
            return outcome

    def put(self, code_text: str, outcome: EvaluationOutcome) -> None:
        with self._lock:
            self._outcomes[self.key_for(code_text)] = outcome
            self.misses += 1

    def __len__(self) -> int:
        return len(self._outcomes)


def evaluate_terminal(
    state: SequenceState, evaluator: Evaluator, cache: Optional[EvaluationCache] = None
) -> EvaluationOutcome:
    """Render a terminal state and evaluate it, going through the cache."""
    if not is_terminal(state):
        raise ValueError("evaluate_terminal called on a non-terminal state")
    code = render(state)
    if cache is not None:
        hit = cache.get(code)
        if hit is not None:
            return hit
    outcome = evaluator.evaluate(code)
    if cache is not None:
        cache.put(code, outcome)
    return outcome


@dataclass
class ScoredTerminal:
    state: SequenceState
    outcome: EvaluationOutcome
    reward: float


class EvaluationSession:
    """One search run's evaluation context: cache, params, baseline.

    The first functional outcome scored by the session sets the run baseline
    unless the session was seeded with one (useful for cross-run ADP
    comparability and for tasks whose reward scale must not depend on
    discovery order).
    """

    def __init__(
        self,
        evaluator: Evaluator,
        params: RewardParams | None = None,
        cache: EvaluationCache | None = None,
    ):
        self.evaluator = evaluator
        self.params = params if params is not None else RewardParams()
        self.cache = cache if cache is not None else EvaluationCache()

    def score(self, state: SequenceState) -> ScoredTerminal:
        outcome = evaluate_terminal(state, self.evaluator, self.cache)
        if outcome.functional and self.params.baseline is None:
            if outcome.area and outcome.delay:
                self.params = set_baseline(self.params, outcome)
            else:
                # Zero-cost degenerate circuit: usable as a result but not as
                # a baseline divisor. Extremely rare; log and move on.
                log.warning("functional outcome with zero area/delay cannot seed baseline")
                return ScoredTerminal(state, outcome, self.params.alpha_b + 1.0)
        return ScoredTerminal(state, outcome, compute_reward(outcome, self.params))


@dataclass(frozen=True)
class ToolStage:
    name: str
    command: str  # template with {code_file}, {work_dir}, {testbench} placeholders


@dataclass
class ExternalToolEvaluator:
    """Three-stage shell pipeline: compile, functional check, synthesis.

    Stage exit code 0 means pass. The synthesis stage must write
    ``{work_dir}/metrics.json`` containing ``{"area": float, "delay": float}``.
    Each evaluation runs in a fresh working directory kept afterwards for
    diagnosis; stage stdout/stderr land in ``<stage>.log`` inside it. A
    timeout or crash counts as a failure of that stage and is additionally
    tallied in ``warning_count`` so runs with flaky tools are visible.
    """

    compile_cmd: str
    functional_cmd: str
    synth_cmd: str
    testbench: str = ""
    work_root: Optional[Path] = None
    timeout_s: float = 60.0
    code_filename: str = "code.v"
    warning_count: int = 0

    def evaluate(self, code_text: str) -> EvaluationOutcome:
        work_dir = Path(
            tempfile.mkdtemp(prefix="eval_", dir=self.work_root and str(self.work_root))
        )
        code_file = work_dir / self.code_filename
        code_file.write_text(code_text, encoding="utf-8")
        artifacts: list[str] = [str(work_dir)]

        ok = self._run_stage("compile", self.compile_cmd, code_file, work_dir, artifacts)
        if not ok:
            return EvaluationOutcome(
                compilable=False, functional=False, artifacts=tuple(artifacts)
            )
        ok = self._run_stage(
            "functional", self.functional_cmd, code_file, work_dir, artifacts
        )
        if not ok:
            return EvaluationOutcome(
                compilable=True, functional=False, artifacts=tuple(artifacts)
            )
        ok = self._run_stage("synth", self.synth_cmd, code_file, work_dir, artifacts)
        metrics = work_dir / "metrics.json"
        if not ok or not metrics.exists():
            if ok:
                self.warning_count += 1
                log.warning("synthesis passed but wrote no metrics.json in %s", work_dir)
            # Functionally correct but unsynthesizable: treat as the
            # functional-stage verdict so the search keeps the information
            # that the code behaves, without inventing an ADP.
            return EvaluationOutcome(
                compilable=True, functional=False, artifacts=tuple(artifacts)
            )
        try:
            data = json.loads(metrics.read_text(encoding="utf-8"))
            area, delay = float(data["area"]), float(data["delay"])
        except (ValueError, KeyError, TypeError) as exc:
            self.warning_count += 1
            log.warning("bad metrics.json in %s: %s", work_dir, exc)
            return EvaluationOutcome(
                compilable=True, functional=False, artifacts=tuple(artifacts)
            )
        return functional_outcome(area=area, delay=delay, artifacts=tuple(artifacts))

    def _run_stage(
        self, name: str, template: str, code_file: Path, work_dir: Path, artifacts: list[str]
    ) -> bool:
        cmd = template.format(
            code_file=str(code_file), work_dir=str(work_dir), testbench=self.testbench
        )
        log_file = work_dir / f"{name}.log"
        artifacts.append(str(log_file))
        try:
            proc = subprocess.run(
                cmd,
                shell=True,
                cwd=work_dir,
                capture_output=True,
                text=True,
                timeout=self.timeout_s,
            )
            log_file.write_text(proc.stdout + proc.stderr, encoding="utf-8")
            return proc.returncode == 0
        except subprocess.TimeoutExpired:
            self.warning_count += 1
            log_file.write_text(f"stage {name} timed out after {self.timeout_s}s\n")
            return False
        except OSError as exc:
            self.warning_count += 1
            log_file.write_text(f"stage {name} crashed: {exc}\n")
            return False

    def cleanup_work_dirs(self) -> None:
        """Remove evaluation directories under an explicit work root."""
        if self.work_root is not None and Path(self.work_root).exists():
            for child in Path(self.work_root).glob("eval_*"):
                shutil.rmtree(child, ignore_errors=True)
