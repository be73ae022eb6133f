"""
Rollouts, relative errors, the ablation matrix and heatmap output.
"""
from app.evaluation.metrics import format_results_table, per_sample_errors, relative_error
from app.evaluation.rollout import EvaluationResult, evaluate_model, unroll

__all__ = [
    "EvaluationResult",
    "evaluate_model",
    "format_results_table",
    "per_sample_errors",
    "relative_error",
    "unroll",
]
