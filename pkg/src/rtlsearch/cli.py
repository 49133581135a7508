"""Command-line front end.

Subcommands:

    run          execute an experiment batch and write report/table artifacts
    search       tree-search a single toy task and print the best result
    baseline     greedy or beam decode a single toy task
    sweep-alpha  run the functionality-bonus sweep on the reference task
    report       re-render tables.md from an existing report.json
    serve-check  probe a model server's health, vocab, and top-k endpoints

Flags override config-file keys, which override built-in defaults.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import requests

from .baselines import beam_decode, best_functional_result, greedy_decode
from .evaluation import evaluate_terminal
from .experiment import (
    ExperimentConfig,
    RunReport,
    TaskRunRow,
    CompositionComparison,
    build_config,
    load_config_file,
    render_tables,
    resolve_toy_task,
    run_experiment,
    sweep_baseline_reward,
    track_iterations_to_functional,
    write_sweep_report,
)
from .mcts import search
from .tokens import render


def _add_search_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--iterations", type=int, default=None)
    parser.add_argument("--c-puct", type=float, default=None, dest="c_puct")
    parser.add_argument("--k", type=int, default=None)
    parser.add_argument("--rollout-k", type=int, default=None, dest="rollout_k")
    parser.add_argument("--beam-width", type=int, default=None, dest="beam_width")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--alpha-nc", type=float, default=None, dest="alpha_nc")
    parser.add_argument("--alpha-nf", type=float, default=None, dest="alpha_nf")
    parser.add_argument("--alpha-b", type=float, default=None, dest="alpha_b")
    parser.add_argument("--renormalize-priors", action="store_true", default=None,
                        dest="renormalize_priors")


def _config_from_args(args: argparse.Namespace, **extra) -> ExperimentConfig:
    file_values = load_config_file(args.config) if getattr(args, "config", None) else {}
    overrides = {
        key: getattr(args, key, None)
        for key in (
            "out_dir", "iterations", "c_puct", "k", "rollout_k", "beam_width",
            "seed", "alpha_nc", "alpha_nf", "alpha_b", "renormalize_priors",
            "workers",
        )
    }
    overrides.update(extra)
    return build_config(file_values, overrides)


def _cmd_run(args: argparse.Namespace) -> int:
    extra = {}
    if args.tasks:
        extra["tasks"] = tuple(args.tasks.split(","))
    if args.methods:
        extra["methods"] = tuple(args.methods.split(","))
    if not args.config and "tasks" not in extra:
        extra["tasks"] = ("trap:0", "redundant:0", "xorblock:0", "parity:0")
    config = _config_from_args(args, **extra)
    report = run_experiment(config)
    if args.curves:
        track_iterations_to_functional(config)
    failures = [r for r in report.rows if r.error]
    print(f"wrote {Path(config.out_dir) / 'report.json'}")
    print(f"wrote {Path(config.out_dir) / 'tables.md'}")
    for row in report.rows:
        adp = "-" if row.best_adp is None else f"{row.best_adp:g}"
        print(f"{row.task:>24} {row.method:>6}  functional={row.functional!s:5}  adp={adp}")
    if failures:
        print(f"{len(failures)} task/method runs failed; see report.json", file=sys.stderr)
        return 1
    return 0


def _cmd_search(args: argparse.Namespace) -> int:
    config = _config_from_args(args, tasks=(args.task,))
    task = resolve_toy_task(args.task)
    result = search(
        task.prompt_text,
        task.model,
        task.evaluator(),
        task.vocab,
        config.search_config(task.t_max),
    )
    if result.best_state is None:
        print("no terminal sequence found")
        return 1
    outcome = result.best_outcome
    print(f"task: {task.name}")
    print(f"best reward: {result.best_reward:.4f} (iteration {result.best_iteration})")
    print(f"functional: {outcome.functional}  compilable: {outcome.compilable}")
    if outcome.functional:
        print(f"area: {outcome.area:g}  delay: {outcome.delay:g}  adp: {outcome.adp:g}")
    print(f"first functional iteration: {result.first_functional_iteration}")
    print(f"distinct terminals: {result.distinct_terminals}")
    print("--- best code ---")
    print(render(result.best_state))
    return 0


def _cmd_baseline(args: argparse.Namespace) -> int:
    config = _config_from_args(args, tasks=(args.task,))
    task = resolve_toy_task(args.task)
    evaluator = task.evaluator()
    if args.method == "greedy":
        state = greedy_decode(task.prompt_text, task.model, task.vocab, task.t_max)
        outcome = evaluate_terminal(state, evaluator, None)
        best = (state, outcome) if outcome.functional else None
        fallback = (state, outcome)
    else:
        states = beam_decode(
            task.prompt_text, task.model, task.vocab, config.beam_width, task.t_max
        )
        best = best_functional_result(states, evaluator)
        fallback = (states[0], evaluate_terminal(states[0], evaluator, None)) if states else None
    chosen = best or fallback
    if chosen is None:
        print("decoder produced no terminal sequence")
        return 1
    state, outcome = chosen
    print(f"task: {task.name}  method: {args.method}")
    print(f"functional: {outcome.functional}  compilable: {outcome.compilable}")
    if outcome.functional:
        print(f"area: {outcome.area:g}  delay: {outcome.delay:g}  adp: {outcome.adp:g}")
    print("--- code ---")
    print(render(state))
    return 0


def _cmd_sweep_alpha(args: argparse.Namespace) -> int:
    values = [float(v) for v in args.alpha_b_values.split(",")]
    config = _config_from_args(args, tasks=("sweep",))
    rows = sweep_baseline_reward(config, values)
    path = write_sweep_report(config.out_dir, rows)
    print(f"wrote {path}")
    for row in rows:
        print(
            f"alpha_b={row.alpha_b:g}  functional={row.fraction_functional:.3f}  "
            f"distinct={row.distinct_terminals}  streak={row.max_identical_adp_streak}"
        )
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    report_path = Path(args.out_dir) / "report.json"
    data = json.loads(report_path.read_text(encoding="utf-8"))
    report = RunReport(
        config=data["config"],
        seed=data["seed"],
        started_at=data["started_at"],
        rows=[TaskRunRow(**row) for row in data["rows"]],
        composition=[CompositionComparison(**c) for c in data["composition"]],
    )
    tables_path = Path(args.out_dir) / "tables.md"
    tables_path.write_text(render_tables(report), encoding="utf-8")
    print(f"wrote {tables_path}")
    return 0


def _cmd_serve_check(args: argparse.Namespace) -> int:
    base = args.endpoint.rstrip("/")
    try:
        health = requests.get(base + "/healthz", timeout=args.timeout)
        vocab = requests.get(base + "/v1/vocab", timeout=args.timeout)
        vocab.raise_for_status()
        tokens = vocab.json()["tokens"]
        topk = requests.post(
            base + "/v1/topk",
            json={"prompt_token_ids": [], "generated_token_ids": [], "k": 3},
            timeout=args.timeout,
        )
        topk.raise_for_status()
        candidates = topk.json()["candidates"]
    except requests.RequestException as exc:
        print(f"server check failed: {exc}", file=sys.stderr)
        return 1
    print(f"healthz: {health.status_code}")
    print(f"vocab: {len(tokens)} tokens")
    print(f"topk: {len(candidates)} candidates, best {candidates[0]['text']!r}"
          if candidates else "topk: empty")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rtlsearch",
        description="Tree search for token-level hardware code generation",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute an experiment batch")
    p_run.add_argument("--config", type=str, default=None)
    p_run.add_argument("--out", dest="out_dir", type=str, default="runs/latest")
    p_run.add_argument("--tasks", type=str, default=None, help="comma-separated specs")
    p_run.add_argument("--methods", type=str, default=None)
    p_run.add_argument("--workers", type=int, default=None)
    p_run.add_argument("--curves", action="store_true", help="also write curves.csv")
    _add_search_flags(p_run)
    p_run.set_defaults(func=_cmd_run)

    p_search = sub.add_parser("search", help="tree-search one toy task")
    p_search.add_argument("task", help="task spec, e.g. trap:0")
    p_search.add_argument("--config", type=str, default=None)
    p_search.add_argument("--out", dest="out_dir", type=str, default="runs/single")
    _add_search_flags(p_search)
    p_search.set_defaults(func=_cmd_search)

    p_base = sub.add_parser("baseline", help="greedy or beam decode one toy task")
    p_base.add_argument("task")
    p_base.add_argument("--method", choices=("greedy", "beam"), default="greedy")
    p_base.add_argument("--config", type=str, default=None)
    p_base.add_argument("--out", dest="out_dir", type=str, default="runs/baseline")
    _add_search_flags(p_base)
    p_base.set_defaults(func=_cmd_baseline)

    p_sweep = sub.add_parser("sweep-alpha", help="functionality-bonus sweep")
    p_sweep.add_argument("--alpha-b-values", dest="alpha_b_values",
                         type=str, default="0.1,0.5,1.0")
    p_sweep.add_argument("--config", type=str, default=None)
    p_sweep.add_argument("--out", dest="out_dir", type=str, default="runs/sweep")
    _add_search_flags(p_sweep)
    p_sweep.set_defaults(func=_cmd_sweep_alpha)

    p_report = sub.add_parser("report", help="re-render tables from report.json")
    p_report.add_argument("--out", dest="out_dir", type=str, required=True)
    p_report.set_defaults(func=_cmd_report)

    p_serve = sub.add_parser("serve-check", help="probe a model server")
    p_serve.add_argument("--endpoint", type=str, required=True)
    p_serve.add_argument("--timeout", type=float, default=10.0)
    p_serve.set_defaults(func=_cmd_serve_check)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
