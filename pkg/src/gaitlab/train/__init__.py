from .baselines import BASELINE_KINDS, make_baseline_policy, run_baseline
from .disc import WindowBuffer, disc_update, gradient_penalty, imitation_reward
from .gae import gae, gae_batch, standardize, standardize_multi
from .loop import (
    METRIC_COLUMNS,
    MetricsWriter,
    TrainConfig,
    TrainResult,
    build_nets,
    evaluate,
    eval_imitation_error,
    train,
)
from .ppo import TrainablePolicy, WeightAnchoredPolicy, combined_advantages, ppo_update
from .rewards import goal_reward
from .rollout import OBJECTIVES, RolloutBatch, ScenarioSpec, WalkerEnv, collect_rollouts

__all__ = [
    "BASELINE_KINDS",
    "make_baseline_policy",
    "run_baseline",
    "WindowBuffer",
    "disc_update",
    "gradient_penalty",
    "imitation_reward",
    "gae",
    "gae_batch",
    "standardize",
    "standardize_multi",
    "METRIC_COLUMNS",
    "MetricsWriter",
    "TrainConfig",
    "TrainResult",
    "build_nets",
    "evaluate",
    "eval_imitation_error",
    "train",
    "TrainablePolicy",
    "WeightAnchoredPolicy",
    "combined_advantages",
    "ppo_update",
    "goal_reward",
    "OBJECTIVES",
    "RolloutBatch",
    "ScenarioSpec",
    "WalkerEnv",
    "collect_rollouts",
]
