"""From-scratch dense-tensor neural network for EEG speaker identification."""

from .network import (
    EpochStats,
    Network,
    NetworkSpec,
    TrainConfig,
    adam_step,
    build_network,
    forward,
    gradient_check,
    load_checkpoint,
    predict,
    save_checkpoint,
    squared_hinge_loss,
    train,
)

__all__ = [
    "EpochStats",
    "Network",
    "NetworkSpec",
    "TrainConfig",
    "adam_step",
    "build_network",
    "forward",
    "gradient_check",
    "load_checkpoint",
    "predict",
    "save_checkpoint",
    "squared_hinge_loss",
    "train",
]
