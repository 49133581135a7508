"""Experiment batches: configuration, execution, metrics, persistence.

``run_experiment`` is the user-facing entry point. It runs each configured
task with each configured method (greedy decode, beam search, tree search),
stores reusable solutions in the module library, runs library-dependent
tasks both with and without prompt injection so their iteration rates and
time-to-functional can be compared, and writes:

    {out_dir}/report.json          machine-readable results
    {out_dir}/tables.md            success / ADP / rate comparison tables
    {out_dir}/logs/{task}.jsonl    one JSON line per tree-search iteration
    {out_dir}/best/{task}.txt      best generated code per task
    {out_dir}/library/             the module library (one JSON per entry)

Everything except wall-clock-derived numbers is deterministic for a given
config; ``strip_timing`` removes those so two reports can be compared.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Optional

from .baselines import beam_decode, best_functional_result, greedy_decode
from .composition import (
    CompositionPolicy,
    ModuleKey,
    ModuleLibrary,
    ModuleRecord,
    Provenance,
    compose_prompt,
    store_module,
)
from .evaluation import EvaluationCache, Evaluator, evaluate_terminal
from .mcts import IterationRecord, SearchConfig, SearchResult, search
from .models import PolicyModel, RemoteModel, RemoteModelConfig
from .rewards import RewardParams
from .tokens import Token, Vocabulary, render
from .toycircuit import reusable_fragment
from .toyfamilies import (
    TOY_COMPOSITION_THRESHOLD,
    ToyTask,
    composed_pair,
    greedy_trap_task,
    oracle_tasks,
    redundant_logic_task,
    reference_sweep_task,
)

log = logging.getLogger(__name__)

METHODS = ("greedy", "beam", "mcts")


def resolve_toy_task(spec: str) -> ToyTask:
    """Turn a task spec string like ``trap:2`` into a task instance.

    Families: ``oracle:<i>``, ``trap:<seed>``, ``redundant:<seed>``,
    ``xorblock:<seed>``, ``parity:<seed>`` (the last two are the linked
    small/large pair), and ``sweep``.
    """
    if spec == "sweep":
        return reference_sweep_task()
    family, _, arg = spec.partition(":")
    if not arg:
        raise ValueError(f"task spec {spec!r} needs a seed, e.g. 'trap:0'")
    n = int(arg)
    if family == "oracle":
        tasks = oracle_tasks()
        if not 0 <= n < len(tasks):
            raise ValueError(f"oracle index out of range: {n}")
        return tasks[n]
    if family == "trap":
        return greedy_trap_task(n)
    if family == "redundant":
        return redundant_logic_task(n)
    if family == "xorblock":
        return composed_pair(n)[0]
    if family == "parity":
        return composed_pair(n)[1]
    raise ValueError(f"unknown task family in {spec!r}")


@dataclass(frozen=True)
class ExternalTaskSpec:
    """A real-HDL task: prompt from a file, model over HTTP, tools via shell.

    ``prompt_token_ids`` is the prompt as the serving model's token ids.
    The server owns tokenization, so deployments produce these with the
    checkpoint's tokenizer; without them the model decodes from an empty
    context and only the rendered output carries the prompt text.
    """

    name: str
    kind: str
    bit_width: int
    prompt_file: str
    endpoint_url: str
    compile_cmd: str
    functional_cmd: str
    synth_cmd: str
    testbench: str = ""
    prompt_token_ids: tuple[int, ...] = ()
    depends_on: tuple[ModuleKey, ...] = ()
    reusable: bool = False
    # Generation budget per sequence. Keep prompt length + t_max within the
    # serving model's context window or long rollouts are rejected with 400.
    t_max: int = 1024

    def __post_init__(self) -> None:
        if self.t_max < 1:
            raise ValueError(f"t_max must be >= 1, got {self.t_max}")
        if not Path(self.prompt_file).exists():
            raise ValueError(f"prompt file not found: {self.prompt_file}")
        if self.testbench and not Path(self.testbench).exists():
            raise ValueError(f"testbench not found: {self.testbench}")
        # Config files arrive as JSON lists; normalize to the declared tuples.
        object.__setattr__(self, "prompt_token_ids", tuple(self.prompt_token_ids))
        object.__setattr__(
            self, "depends_on", tuple((k, int(w)) for k, w in self.depends_on)
        )


@dataclass(frozen=True)
class ExperimentConfig:
    out_dir: str
    tasks: tuple[str, ...] = ()
    external_tasks: tuple[ExternalTaskSpec, ...] = ()
    methods: tuple[str, ...] = METHODS
    iterations: int = 150
    c_puct: float = 1.0
    k: int = 5
    rollout_k: int = 3
    beam_width: int = 5
    seed: int = 0
    alpha_nc: float = -1.0
    alpha_nf: float = -0.1
    alpha_b: float = 0.5
    composition_threshold: int = TOY_COMPOSITION_THRESHOLD
    renormalize_priors: bool = False
    workers: int = 1
    library_dir: Optional[str] = None

    def __post_init__(self) -> None:
        if not self.tasks and not self.external_tasks:
            raise ValueError("config needs at least one task")
        if not self.methods:
            raise ValueError("config needs at least one method")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ValueError(f"unknown methods: {sorted(unknown)}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        for spec in self.tasks:
            resolve_toy_task(spec)  # fail fast on bad specs

    def reward_params(self) -> RewardParams:
        return RewardParams(
            alpha_nc=self.alpha_nc, alpha_nf=self.alpha_nf, alpha_b=self.alpha_b
        )

    def search_config(self, t_max: int, iterations: Optional[int] = None) -> SearchConfig:
        return SearchConfig(
            c_puct=self.c_puct,
            k=self.k,
            rollout_k=self.rollout_k,
            iterations=iterations if iterations is not None else self.iterations,
            t_max=t_max,
            seed=self.seed,
            reward_params=self.reward_params(),
            renormalize_priors=self.renormalize_priors,
        )


def default_toy_config(out_dir: str | Path) -> ExperimentConfig:
    return ExperimentConfig(
        out_dir=str(out_dir),
        tasks=("trap:0", "redundant:0", "xorblock:0", "parity:0"),
    )


_CONFIG_KEYS = {f.name for f in dataclasses.fields(ExperimentConfig)}


def build_config(
    file_values: Optional[dict] = None, overrides: Optional[dict] = None
) -> ExperimentConfig:
    """Merge config sources; explicit overrides beat file values beat defaults."""
    merged: dict = {}
    for source in (file_values or {}), (overrides or {}):
        for key, value in source.items():
            if value is None:
                continue
            if key not in _CONFIG_KEYS:
                raise ValueError(f"unknown config key: {key}")
            merged[key] = value
    for key in ("tasks", "methods"):
        if key in merged:
            merged[key] = tuple(merged[key])
    if "external_tasks" in merged:
        merged["external_tasks"] = tuple(
            spec if isinstance(spec, ExternalTaskSpec) else ExternalTaskSpec(**spec)
            for spec in merged["external_tasks"]
        )
    return ExperimentConfig(**merged)


def load_config_file(path: str | Path) -> dict:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError("config file must hold a JSON object")
    return data


@dataclass
class TaskRunRow:
    task: str
    method: str
    functional: bool
    best_adp: Optional[float]
    best_reward: Optional[float]
    first_functional_iteration: Optional[int]
    iteration_rate_per_min: Optional[float]
    artifacts: dict[str, str] = field(default_factory=dict)
    error: Optional[str] = None

    def to_json(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class CompositionComparison:
    task: str
    with_rate_per_min: float
    without_rate_per_min: float
    with_first_functional: Optional[int]
    without_first_functional: Optional[int]

    def to_json(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class RunReport:
    config: dict
    seed: int
    started_at: str
    rows: list[TaskRunRow]
    composition: list[CompositionComparison]

    def to_json(self) -> dict:
        return {
            "config": self.config,
            "seed": self.seed,
            "started_at": self.started_at,
            "rows": [r.to_json() for r in self.rows],
            "composition": [c.to_json() for c in self.composition],
        }

    def row(self, task: str, method: str) -> TaskRunRow:
        for r in self.rows:
            if r.task == task and r.method == method:
                return r
        raise KeyError((task, method))


_TIMING_KEYS = {"started_at", "iteration_rate_per_min", "with_rate_per_min", "without_rate_per_min"}


def strip_timing(data):
    """Drop wall-clock-derived values so reports can be compared for determinism."""
    if isinstance(data, dict):
        return {k: strip_timing(v) for k, v in data.items() if k not in _TIMING_KEYS}
    if isinstance(data, list):
        return [strip_timing(v) for v in data]
    return data


@dataclass
class _PreparedTask:
    """A task bound to its model, evaluator, and vocabulary."""

    name: str
    kind: str
    width: int
    base_prompt: str
    model: PolicyModel
    evaluator: Evaluator
    vocab: Vocabulary
    t_max: int
    reusable: bool
    depends_on: tuple[ModuleKey, ...]
    prompt_tokens: tuple[Token, ...] = ()

    @property
    def key(self) -> ModuleKey:
        return (self.kind, self.width)


def _prepare_toy(task: ToyTask) -> _PreparedTask:
    return _PreparedTask(
        name=task.name,
        kind=task.kind,
        width=task.width,
        base_prompt=task.prompt_text,
        model=task.model,
        evaluator=task.evaluator(),
        vocab=task.vocab,
        t_max=task.t_max,
        reusable=task.reusable,
        depends_on=task.depends_on,
    )


def _prepare_external(spec: ExternalTaskSpec, config: ExperimentConfig) -> _PreparedTask:
    from .evaluation import ExternalToolEvaluator

    remote_cfg = RemoteModelConfig(endpoint_url=spec.endpoint_url, top_k=config.k)
    model = RemoteModel.connect(remote_cfg)
    vocab = model.vocab
    evaluator = ExternalToolEvaluator(
        compile_cmd=spec.compile_cmd,
        functional_cmd=spec.functional_cmd,
        synth_cmd=spec.synth_cmd,
        testbench=spec.testbench,
    )
    prompt = Path(spec.prompt_file).read_text(encoding="utf-8")
    for i in spec.prompt_token_ids:
        if not 0 <= i < len(vocab):
            raise ValueError(
                f"prompt token id {i} outside server vocabulary [0, {len(vocab)})"
            )
    return _PreparedTask(
        name=spec.name,
        kind=spec.kind,
        width=spec.bit_width,
        base_prompt=prompt,
        model=model,
        evaluator=evaluator,
        vocab=vocab,
        t_max=spec.t_max,
        reusable=spec.reusable,
        depends_on=spec.depends_on,
        prompt_tokens=tuple(vocab.by_id(i) for i in spec.prompt_token_ids),
    )


def _run_mcts_row(
    prepared: _PreparedTask,
    prompt: str,
    config: ExperimentConfig,
    log_path: Optional[Path],
    iterations: Optional[int] = None,
) -> tuple[TaskRunRow, SearchResult]:
    result = search(
        prompt,
        prepared.model,
        prepared.evaluator,
        prepared.vocab,
        config.search_config(prepared.t_max, iterations),
        prompt_tokens=prepared.prompt_tokens,
        log_path=log_path,
    )
    functional = bool(result.best_outcome and result.best_outcome.functional)
    row = TaskRunRow(
        task=prepared.name,
        method="mcts",
        functional=functional,
        best_adp=result.best_outcome.adp if functional else None,
        best_reward=result.best_reward if result.best_state is not None else None,
        first_functional_iteration=result.first_functional_iteration,
        iteration_rate_per_min=result.iteration_rate_per_min,
    )
    return row, result


def _persist_best(out_dir: Path, prepared: _PreparedTask, result: SearchResult) -> Optional[Path]:
    if result.best_state is None:
        return None
    best_dir = out_dir / "best"
    best_dir.mkdir(parents=True, exist_ok=True)
    path = best_dir / f"{prepared.name}.txt"
    code = render(result.best_state)
    path.write_text(code, encoding="utf-8")
    # The persisted artifact must reproduce the reported verdict. Artifacts
    # are excluded: external tools use a fresh work dir per evaluation.
    check = prepared.evaluator.evaluate(path.read_text(encoding="utf-8"))
    reported = result.best_outcome
    verdict = (check.compilable, check.functional, check.area, check.delay)
    if verdict != (reported.compilable, reported.functional, reported.area, reported.delay):
        raise RuntimeError(f"persisted best code re-evaluates differently for {prepared.name}")
    return path


def _run_one_task(
    prepared: _PreparedTask,
    config: ExperimentConfig,
    library: ModuleLibrary,
    policy: CompositionPolicy,
    out_dir: Path,
) -> tuple[list[TaskRunRow], Optional[CompositionComparison]]:
    rows: list[TaskRunRow] = []
    comparison: Optional[CompositionComparison] = None
    prompt = compose_prompt(prepared.base_prompt, prepared.key, library, policy)
    cache = EvaluationCache()

    for method in config.methods:
        try:
            if method == "greedy":
                state = greedy_decode(
                    prompt,
                    prepared.model,
                    prepared.vocab,
                    prepared.t_max,
                    prompt_tokens=prepared.prompt_tokens,
                )
                outcome = evaluate_terminal(state, prepared.evaluator, cache)
                rows.append(
                    TaskRunRow(
                        task=prepared.name,
                        method="greedy",
                        functional=outcome.functional,
                        best_adp=outcome.adp if outcome.functional else None,
                        best_reward=None,
                        first_functional_iteration=None,
                        iteration_rate_per_min=None,
                    )
                )
            elif method == "beam":
                states = beam_decode(
                    prompt,
                    prepared.model,
                    prepared.vocab,
                    config.beam_width,
                    prepared.t_max,
                    prompt_tokens=prepared.prompt_tokens,
                )
                best = best_functional_result(states, prepared.evaluator, cache)
                rows.append(
                    TaskRunRow(
                        task=prepared.name,
                        method="beam",
                        functional=best is not None,
                        best_adp=best[1].adp if best else None,
                        best_reward=None,
                        first_functional_iteration=None,
                        iteration_rate_per_min=None,
                    )
                )
            elif method == "mcts":
                logs_dir = out_dir / "logs"
                logs_dir.mkdir(parents=True, exist_ok=True)
                log_path = logs_dir / f"{prepared.name}.jsonl"
                log_path.unlink(missing_ok=True)
                row, result = _run_mcts_row(prepared, prompt, config, log_path)
                row.artifacts["log"] = str(log_path)
                best_path = _persist_best(out_dir, prepared, result)
                if best_path is not None:
                    row.artifacts["best_code"] = str(best_path)
                rows.append(row)

                if row.functional and prepared.reusable:
                    fragment = reusable_fragment(render(result.best_state))
                    record = ModuleRecord(
                        name=prepared.name,
                        kind=prepared.kind,
                        bit_width=prepared.width,
                        code_text=fragment,
                        reward=result.best_reward,
                        outcome=result.best_outcome,
                        provenance=Provenance(
                            run_id=prepared.name, iteration=result.best_iteration
                        ),
                    )
                    store_module(library, record)

                if prepared.depends_on and prompt != prepared.base_prompt:
                    plain_row, plain_result = _run_mcts_row(
                        prepared, prepared.base_prompt, config, None
                    )
                    comparison = CompositionComparison(
                        task=prepared.name,
                        with_rate_per_min=result.iteration_rate_per_min,
                        without_rate_per_min=plain_result.iteration_rate_per_min,
                        with_first_functional=result.first_functional_iteration,
                        without_first_functional=plain_result.first_functional_iteration,
                    )
        except Exception as exc:  # a broken task must not sink the batch
            log.exception("task %s method %s failed", prepared.name, method)
            rows.append(
                TaskRunRow(
                    task=prepared.name,
                    method=method,
                    functional=False,
                    best_adp=None,
                    best_reward=None,
                    first_functional_iteration=None,
                    iteration_rate_per_min=None,
                    error=str(exc),
                )
            )
    return rows, comparison


def run_experiment(config: ExperimentConfig) -> RunReport:
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    library = ModuleLibrary(config.library_dir or out_dir / "library")

    prepared = [_prepare_toy(resolve_toy_task(spec)) for spec in config.tasks]
    prepared += [_prepare_external(spec, config) for spec in config.external_tasks]
    dependency_map = {p.key: p.depends_on for p in prepared if p.depends_on}
    policy = CompositionPolicy(
        large_threshold_bits=config.composition_threshold, dependency_map=dependency_map
    )

    report = RunReport(
        config=_config_snapshot(config),
        seed=config.seed,
        started_at=datetime.now().isoformat(timespec="seconds"),
        rows=[],
        composition=[],
    )

    # Small widths run before large ones so the library holds their modules
    # by the time a dependent prompt is composed.
    for width in sorted({p.width for p in prepared}):
        group = sorted((p for p in prepared if p.width == width), key=lambda p: p.name)
        if config.workers > 1 and len(group) > 1:
            with ThreadPoolExecutor(max_workers=config.workers) as pool:
                outputs = list(
                    pool.map(
                        lambda p: _run_one_task(p, config, library, policy, out_dir), group
                    )
                )
        else:
            outputs = [_run_one_task(p, config, library, policy, out_dir) for p in group]
        for rows, comparison in outputs:
            report.rows.extend(rows)
            if comparison is not None:
                report.composition.append(comparison)

    report.rows.sort(key=lambda r: (r.task, METHODS.index(r.method)))
    report.composition.sort(key=lambda c: c.task)
    _write_report(out_dir, report)
    return report


def _config_snapshot(config: ExperimentConfig) -> dict:
    snap = dataclasses.asdict(config)
    snap["external_tasks"] = [dataclasses.asdict(s) for s in config.external_tasks]
    return snap


def _write_report(out_dir: Path, report: RunReport) -> None:
    (out_dir / "report.json").write_text(
        json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    (out_dir / "tables.md").write_text(render_tables(report), encoding="utf-8")


def _fmt(value, digits: int = 1) -> str:
    if value is None:
        return "-"
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        return f"{value:.{digits}f}"
    return str(value)


def improvement_percent(base: Optional[float], ours: Optional[float]) -> Optional[float]:
    if base is None or ours is None or base <= 0:
        return None
    return 100.0 * (base - ours) / base


def render_tables(report: RunReport) -> str:
    methods = [m for m in METHODS if any(r.method == m for r in report.rows)]
    tasks = sorted({r.task for r in report.rows})
    by = {(r.task, r.method): r for r in report.rows}

    lines = ["# Results", "", "## Functional success", ""]
    lines.append("| task | " + " | ".join(methods) + " |")
    lines.append("|" + "---|" * (len(methods) + 1))
    for task in tasks:
        cells = [_fmt(by[(task, m)].functional) if (task, m) in by else "-" for m in methods]
        lines.append(f"| {task} | " + " | ".join(cells) + " |")

    lines += ["", "## Best area-delay product", ""]
    header = ["task"] + methods
    if "mcts" in methods:
        header += [f"improvement vs {m} (%)" for m in methods if m != "mcts"]
    lines.append("| " + " | ".join(header) + " |")
    lines.append("|" + "---|" * len(header))
    for task in tasks:
        adps = {m: by[(task, m)].best_adp if (task, m) in by else None for m in methods}
        cells = [_fmt(adps[m]) for m in methods]
        if "mcts" in methods:
            for m in methods:
                if m == "mcts":
                    continue
                cells.append(_fmt(improvement_percent(adps[m], adps.get("mcts"))))
        lines.append(f"| {task} | " + " | ".join(cells) + " |")

    if report.composition:
        lines += ["", "## Iteration rate with and without composed prompts", ""]
        lines.append(
            "| task | rate with (iters/min) | rate without (iters/min) "
            "| first functional with | first functional without |"
        )
        lines.append("|---|---|---|---|---|")
        for comp in report.composition:
            lines.append(
                f"| {comp.task} | {_fmt(comp.with_rate_per_min, 0)} "
                f"| {_fmt(comp.without_rate_per_min, 0)} "
                f"| {_fmt(comp.with_first_functional)} "
                f"| {_fmt(comp.without_first_functional)} |"
            )
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Functionality-bonus sweep


def max_identical_adp_streak(records: list[IterationRecord]) -> int:
    """Longest run of consecutive functional iterations with the same ADP."""
    best = cur = 0
    last: Optional[float] = None
    for rec in records:
        if rec.functional and rec.area is not None and rec.delay is not None:
            adp = rec.area * rec.delay
            cur = cur + 1 if adp == last else 1
            last = adp
            best = max(best, cur)
        else:
            cur, last = 0, None
    return best


@dataclass
class SweepRow:
    alpha_b: float
    fraction_functional: float
    distinct_terminals: int
    max_identical_adp_streak: int

    def to_json(self) -> dict:
        return dataclasses.asdict(self)


def sweep_baseline_reward(
    config: ExperimentConfig, alpha_b_values: list[float]
) -> list[SweepRow]:
    """Run the fixed reference task once per functionality-bonus value."""
    if len(alpha_b_values) < 2:
        raise ValueError("sweep needs at least two alpha_b values")
    task = reference_sweep_task()
    rows = []
    for alpha_b in alpha_b_values:
        run_config = dataclasses.replace(config, alpha_b=alpha_b, tasks=("sweep",))
        result = search(
            task.prompt_text,
            task.model,
            task.evaluator(),
            task.vocab,
            run_config.search_config(task.t_max),
        )
        records = result.per_iteration_log
        functional = sum(1 for r in records if r.functional)
        rows.append(
            SweepRow(
                alpha_b=alpha_b,
                fraction_functional=functional / len(records) if records else 0.0,
                distinct_terminals=result.distinct_terminals,
                max_identical_adp_streak=max_identical_adp_streak(records),
            )
        )
    return rows


def write_sweep_report(out_dir: str | Path, rows: list[SweepRow]) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "sweep.json"
    path.write_text(
        json.dumps([r.to_json() for r in rows], indent=2) + "\n", encoding="utf-8"
    )
    md = [
        "# Functionality-bonus sweep",
        "",
        "| alpha_b | fraction functional | distinct terminals | max identical-ADP streak |",
        "|---|---|---|---|",
    ]
    for r in rows:
        md.append(
            f"| {r.alpha_b} | {r.fraction_functional:.3f} "
            f"| {r.distinct_terminals} | {r.max_identical_adp_streak} |"
        )
    (out / "sweep.md").write_text("\n".join(md) + "\n", encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# Iterations-to-functional curves


def track_iterations_to_functional(config: ExperimentConfig) -> dict[str, list[int]]:
    """Cumulative functional-solution counts per iteration, per task.

    Returns {task: counts} where counts[i] is how many of iterations 0..i
    produced functional code. Writes ``{out_dir}/curves.csv`` with rows
    ``task,iteration,cumulative_functional``; a task that never went
    functional gets the single marker row ``task,none,0``.
    """
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    curves: dict[str, list[int]] = {}
    for spec in config.tasks:
        task = resolve_toy_task(spec)
        result = search(
            task.prompt_text,
            task.model,
            task.evaluator(),
            task.vocab,
            config.search_config(task.t_max),
        )
        counts: list[int] = []
        total = 0
        for rec in result.per_iteration_log:
            total += 1 if rec.functional else 0
            counts.append(total)
        curves[task.name] = counts

    with open(out_dir / "curves.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["task", "iteration", "cumulative_functional"])
        for name, counts in curves.items():
            if not counts or counts[-1] == 0:
                writer.writerow([name, "none", 0])
                continue
            for i, value in enumerate(counts):
                writer.writerow([name, i, value])
    return curves
