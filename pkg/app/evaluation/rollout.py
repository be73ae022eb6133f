"""
Autoregressive rollout of a trained solver over full trajectories.

Steps 0..K-1 are ground truth; each model call consumes the previous K
steps and produces the next K. With n_t=250 and K=25 that is 9 calls.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
import torch
from torch import nn

from app.evaluation.metrics import l2_norms, per_sample_errors, relative_error_from_norms
from app.graph import GraphTopology
from app.solvers.trajectory import Trajectory

logger = logging.getLogger(__name__)


def model_dtype(model: nn.Module) -> torch.dtype:
    for p in model.parameters():
        return p.dtype
    return torch.float64


def n_model_calls(n_t: int, K: int) -> int:
    return math.ceil((n_t - K) / K)


@torch.no_grad()
def unroll_batch(
    model: nn.Module,
    u: np.ndarray,
    eta: np.ndarray,
    graph: GraphTopology,
    dt: float,
    K: int
) -> np.ndarray:
    """
    Roll out a batch of trajectories from their seed windows.

    Args:
        model: Callable (window, graph, eta, t_k, dt) -> next window
        u: (B, n_t, n_x, n_ch) ground truth; only steps 0..K-1 are read
        eta: (B, d_eta)
        graph: Topology over n_x nodes
        dt: Time step
        K: Window length

    Returns:
        (B, n_t, n_x, n_ch) seed steps followed by predictions
    """
    dtype = model_dtype(model)
    n_t = u.shape[1]
    out = torch.empty(u.shape, dtype=dtype)
    out[:, :K] = torch.as_tensor(u[:, :K], dtype=dtype)
    eta_t = torch.as_tensor(np.asarray(eta).reshape(u.shape[0], -1), dtype=dtype)

    window = out[:, :K]
    for start in range(K, n_t, K):
        t_k = (start - 1) * dt
        window = model(window, graph, eta_t, t_k, dt)
        stop = min(start + K, n_t)
        out[:, start:stop] = window[:, :stop - start]
    return out.double().numpy()


def unroll(model: nn.Module, traj: Trajectory, graph: GraphTopology, K: int) -> Trajectory:
    """Predicted trajectory sharing ``traj``'s seed window and grid."""
    u = unroll_batch(model, traj.u[None], traj.eta[None], graph, traj.dt, K)[0]
    return Trajectory(u=u, L=traj.L, T=traj.T, eta=traj.eta.copy())


@dataclass
class EvaluationResult:
    """Test-set scores of one model."""
    relative_error: float
    per_sample: np.ndarray
    failures: int
    predictions: np.ndarray | None = None

    @property
    def failed(self) -> bool:
        return self.failures > 0


def evaluate_model(
    model: nn.Module,
    trajs: list[Trajectory],
    graph: GraphTopology,
    K: int,
    batch_size: int = 16,
    keep_predictions: bool = False
) -> EvaluationResult:
    """
    Unroll every trajectory and score the set.

    A rollout that produces a non-finite value counts as a failure and makes
    the set's relative error infinite.
    """
    if not trajs:
        raise ValueError("no trajectories to evaluate")
    truth = np.stack([traj.u for traj in trajs]).astype(np.float64)
    eta = np.stack([traj.eta for traj in trajs])
    dt, dx = trajs[0].dt, trajs[0].dx

    model.eval()
    pred = np.concatenate([
        unroll_batch(model, truth[i:i + batch_size], eta[i:i + batch_size], graph, dt, K)
        for i in range(0, len(trajs), batch_size)
    ])

    finite = np.isfinite(pred).reshape(len(trajs), -1).all(axis=1)
    failures = int((~finite).sum())
    per_sample = per_sample_errors(pred, truth, dt, dx, K)
    if failures:
        logger.warning(f"[Rollout] {failures}/{len(trajs)} rollouts produced non-finite values")
        error = math.inf
    else:
        error = relative_error_from_norms(
            l2_norms(pred - truth, dt, dx, K),
            l2_norms(truth, dt, dx, K),
        )

    logger.info(f"[Rollout] {len(trajs)} trajectories, relative error {error:.4%}")
    return EvaluationResult(
        relative_error=error,
        per_sample=per_sample,
        failures=failures,
        predictions=pred if keep_predictions else None,
    )
