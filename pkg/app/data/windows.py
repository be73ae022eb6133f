"""
K-lagged training windows.

A window pair starting at step k holds the input u^{k-K:k} (steps k-K..k-1)
and the target u^{k:k+K} (steps k..k+K-1). Windows are non-overlapping: k
runs over multiples of K with k + K <= n_t.
"""
from dataclasses import dataclass

import numpy as np

from app.solvers.trajectory import Trajectory

DEFAULT_K = 25


@dataclass(frozen=True)
class WindowPair:
    """Input/target blocks of one trajectory."""
    input: np.ndarray
    target: np.ndarray
    k_index: int
    t_k: float


def window_starts(n_t: int, K: int) -> list[int]:
    """Start steps k in {K, 2K, ...} with k + K <= n_t."""
    return list(range(K, n_t - K + 1, K))


def make_windows(traj: Trajectory, K: int = DEFAULT_K) -> list[WindowPair]:
    """
    Slice a trajectory into its K-lagged window pairs.

    Returns an empty list when n_t < 2K.
    """
    t = traj.t
    return [
        WindowPair(
            input=traj.u[k - K:k],
            target=traj.u[k:k + K],
            k_index=k,
            t_k=float(t[k - 1]),
        )
        for k in window_starts(traj.n_t, K)
    ]
