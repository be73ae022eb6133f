"""
Trajectory-level error metrics.

The relative error of a model on a set of trajectories is a ratio of means:

    RE = mean_s ||u_pred_s - u_s|| / mean_s ||u_s||

with the discrete space-time L2 norm ||v|| = sqrt(dt * dx * sum v^2) taken
over the predicted steps K..n_t-1 only.
"""
import logging
import math

import numpy as np

from app.models import RunResult

logger = logging.getLogger(__name__)


def l2_norms(u: np.ndarray, dt: float, dx: float, start: int) -> np.ndarray:
    """
    Per-sample discrete L2 norms over steps ``start:``.

    Args:
        u: (S, n_t, n_x, n_ch) values
        dt: Time step
        dx: Grid spacing
        start: First step included (K for predicted steps)

    Returns:
        (S,) norms
    """
    u = np.asarray(u, dtype=np.float64)
    if u.ndim != 4:
        raise ValueError(f"expected (samples, n_t, n_x, n_ch), got shape {u.shape}")
    squares = np.square(u[:, start:]).reshape(u.shape[0], -1).sum(axis=1)
    return np.sqrt(dt * dx * squares)


def relative_error_from_norms(error_norms, truth_norms) -> float:
    """
    Ratio of mean error norm to mean truth norm.

    Raises:
        ValueError: no samples, or every truth norm is zero
    """
    error_norms = np.asarray(error_norms, dtype=np.float64)
    truth_norms = np.asarray(truth_norms, dtype=np.float64)
    if error_norms.shape != truth_norms.shape or error_norms.size == 0:
        raise ValueError(
            f"need matching non-empty norm arrays, got {error_norms.shape} and {truth_norms.shape}"
        )
    denominator = truth_norms.mean()
    if denominator == 0.0:
        raise ValueError("relative error is undefined: ground truth has zero norm")
    return float(error_norms.mean() / denominator)


def relative_error(
    pred: np.ndarray,
    truth: np.ndarray,
    dt: float,
    dx: float,
    start: int
) -> float:
    """
    Relative L2 error of a set of predicted trajectories.

    Args:
        pred: (S, n_t, n_x, n_ch) predictions
        truth: Ground truth of the same shape
        dt: Time step
        dx: Grid spacing
        start: First predicted step (K)

    Returns:
        RE as a fraction (0.1 = 10%)
    """
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape:
        raise ValueError(f"prediction shape {pred.shape} differs from truth {truth.shape}")
    error = relative_error_from_norms(
        l2_norms(pred - truth, dt, dx, start),
        l2_norms(truth, dt, dx, start),
    )
    logger.debug(f"Relative error over {pred.shape[0]} samples: {error:.4f}")
    return error


def per_sample_errors(
    pred: np.ndarray,
    truth: np.ndarray,
    dt: float,
    dx: float,
    start: int
) -> np.ndarray:
    """Relative error of each sample on its own; NaN where the truth norm is zero."""
    error_norms = l2_norms(np.asarray(pred, dtype=np.float64) - truth, dt, dx, start)
    truth_norms = l2_norms(truth, dt, dx, start)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(truth_norms > 0, error_norms / truth_norms, np.nan)


def _cell(result: RunResult, bold: bool) -> str:
    if math.isinf(result.mean) or math.isnan(result.mean):
        return f"diverged ({result.failures} failed)"
    text = f"{100 * result.mean:.2f}% ± {100 * result.std:.2f}%"
    return f"**{text}**" if bold else text


def format_results_table(results: list[RunResult]) -> str:
    """
    Markdown table of test relative errors.

    One row per model, one column per experiment, mean ± std in percent;
    the two lowest means in each column are bold.
    """
    experiments = list(dict.fromkeys(r.experiment for r in results))
    models = list(dict.fromkeys(r.model for r in results))
    cells = {(r.experiment, r.model): r for r in results}

    best = {}
    for experiment in experiments:
        column = sorted(
            (r for r in results if r.experiment == experiment and math.isfinite(r.mean)),
            key=lambda r: r.mean
        )
        best[experiment] = {r.model for r in column[:2]}

    table = "| Model | " + " | ".join(experiments) + " |\n"
    table += "|-------|" + "-------|" * len(experiments) + "\n"
    for model in models:
        row = []
        for experiment in experiments:
            result = cells.get((experiment, model))
            row.append(_cell(result, model in best[experiment]) if result else "n/a")
        table += f"| {model} | " + " | ".join(row) + " |\n"

    return table
