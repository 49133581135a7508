"""Reward-guided tree search for token-level hardware code generation."""

from .baselines import beam_decode, best_functional_result, greedy_decode
from .composition import (
    CompositionPolicy,
    ModuleLibrary,
    ModuleRecord,
    Provenance,
    compose_prompt,
    store_module,
)
from .enumeration import enumerate_terminals, oracle_best
from .evaluation import (
    EvaluationCache,
    EvaluationSession,
    Evaluator,
    ExternalToolEvaluator,
    evaluate_terminal,
)
from .experiment import (
    ExperimentConfig,
    RunReport,
    build_config,
    default_toy_config,
    run_experiment,
    sweep_baseline_reward,
    track_iterations_to_functional,
)
from .mcts import SearchConfig, SearchResult, search
from .models import (
    ModelDistribution,
    PolicyModel,
    RemoteModel,
    RemoteModelConfig,
    ToyGrammarModel,
    filtered_distribution,
    greedy_next,
    load_toy_model,
)
from .rewards import (
    NON_COMPILABLE,
    NON_FUNCTIONAL,
    Baseline,
    EvaluationOutcome,
    RewardParams,
    compute_reward,
    functional_outcome,
    set_baseline,
)
from .tokens import (
    SequenceState,
    Token,
    Vocabulary,
    initial_state,
    is_terminal,
    load_vocabulary,
    make_vocabulary,
    render,
    transition,
)
from .toycircuit import ToyCircuitEvaluator, ToyCircuitTask, toy_evaluate, truth_table

__all__ = [
    "Baseline",
    "CompositionPolicy",
    "EvaluationCache",
    "EvaluationOutcome",
    "EvaluationSession",
    "Evaluator",
    "ExperimentConfig",
    "ExternalToolEvaluator",
    "ModelDistribution",
    "ModuleLibrary",
    "ModuleRecord",
    "NON_COMPILABLE",
    "NON_FUNCTIONAL",
    "PolicyModel",
    "Provenance",
    "RemoteModel",
    "RemoteModelConfig",
    "RewardParams",
    "RunReport",
    "SearchConfig",
    "SearchResult",
    "SequenceState",
    "Token",
    "ToyCircuitEvaluator",
    "ToyCircuitTask",
    "ToyGrammarModel",
    "Vocabulary",
    "beam_decode",
    "best_functional_result",
    "build_config",
    "compose_prompt",
    "compute_reward",
    "default_toy_config",
    "enumerate_terminals",
    "evaluate_terminal",
    "filtered_distribution",
    "functional_outcome",
    "greedy_decode",
    "greedy_next",
    "initial_state",
    "is_terminal",
    "load_toy_model",
    "load_vocabulary",
    "make_vocabulary",
    "oracle_best",
    "render",
    "run_experiment",
    "search",
    "set_baseline",
    "store_module",
    "sweep_baseline_reward",
    "toy_evaluate",
    "track_iterations_to_functional",
    "transition",
    "truth_table",
]
