"""Offline RL workbench for notification delivery timing.

A queue-based notification simulator, offline (double) DQN training, and
importance-sampling off-policy value estimators, implemented in C++ and
exposed here through a thin binding layer.
"""

from ._core import (
    Action,
    BaselinePolicy,
    Environment,
    EpsilonGreedyPolicy,
    GreedyQPolicy,
    Policy,
    PolicyValueEstimate,
    QNetwork,
    SimConfig,
    State,
    TrainConfig,
    TrainReport,
    TrajectoryBatch,
    UniformRandomPolicy,
    ValidationError,
    VisitWeights,
    collect_batch,
    evaluate_policy,
    rollout_value,
    train_offline,
    visit_probability,
)

__all__ = [
    "Action",
    "BaselinePolicy",
    "Environment",
    "EpsilonGreedyPolicy",
    "GreedyQPolicy",
    "Policy",
    "PolicyValueEstimate",
    "QNetwork",
    "SimConfig",
    "State",
    "TrainConfig",
    "TrainReport",
    "TrajectoryBatch",
    "UniformRandomPolicy",
    "ValidationError",
    "VisitWeights",
    "collect_batch",
    "evaluate_policy",
    "rollout_value",
    "train_offline",
    "visit_probability",
]
