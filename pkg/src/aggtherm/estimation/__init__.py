"""Batch identification of the aggregate model."""

from .identify import (
    EstimationResult,
    IdentConfig,
    Prediction,
    gradient,
    objective,
    predict_out_of_sample,
    solve_batch,
)
from .model import AugmentedModel, DiscreteModel, build_augmented_model, discretize

__all__ = [
    "AugmentedModel",
    "DiscreteModel",
    "EstimationResult",
    "IdentConfig",
    "Prediction",
    "build_augmented_model",
    "discretize",
    "gradient",
    "objective",
    "predict_out_of_sample",
    "solve_batch",
]
