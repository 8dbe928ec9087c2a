"""Learning instance classifiers from bag label proportions."""

from ._psvm import (
    ConfigError,
    DegenerateKernelError,
    Model,
    ParseError,
    SolverError,
    bag_error,
    optimize_bag,
    run_benchmark,
    run_toy,
    toy_dataset,
    train_alter,
    train_conv,
    train_invcal,
)

__all__ = [
    "ConfigError",
    "DegenerateKernelError",
    "Model",
    "ParseError",
    "SolverError",
    "bag_error",
    "optimize_bag",
    "run_benchmark",
    "run_toy",
    "toy_dataset",
    "train_alter",
    "train_conv",
    "train_invcal",
]
