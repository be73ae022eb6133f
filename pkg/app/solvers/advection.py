"""
Exact solution of the two-speed advection system

    u_t + A u_x = 0,   A = [[a+b, b-a], [b-a, a+b]],

by the method of characteristics in the eigenbasis w = R^{-1} u, where
A = R diag(2a, 2b) R^{-1}.
"""
from dataclasses import dataclass

import numpy as np

from app.errors import ConfigurationError
from app.solvers.fourier import FourierSeries, eval_series
from app.solvers.trajectory import Trajectory, uniform_space, uniform_time

A_RANGE = (0.1, 1.0)
B_RANGE = (1.0, 10.0)

EIGENVECTORS = np.array([[-1.0, 1.0], [1.0, 1.0]])
EIGENVECTORS_INV = np.array([[-0.5, 0.5], [0.5, 0.5]])


@dataclass(frozen=True)
class AdvectionConfig:
    """Wave speeds and grid of one MS-wave run."""
    a: float
    b: float
    L: float = 16.0
    T: float = 4.0
    n_t: int = 250
    n_x_fine: int = 200

    def __post_init__(self):
        if not A_RANGE[0] <= self.a <= A_RANGE[1]:
            raise ConfigurationError(f"a must lie in {A_RANGE}, got {self.a}")
        if not B_RANGE[0] <= self.b <= B_RANGE[1]:
            raise ConfigurationError(f"b must lie in {B_RANGE}, got {self.b}")

    @property
    def speeds(self) -> np.ndarray:
        return np.array([2.0 * self.a, 2.0 * self.b])


def characteristic_solution(
    cfg: AdvectionConfig,
    u0: tuple[FourierSeries, FourierSeries],
    t,
    x
) -> np.ndarray:
    """
    Pointwise u(t, x); ``t`` and ``x`` broadcast.

    Returns:
        Array with a trailing channel axis of size 2
    """
    t = np.asarray(t, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    w = []
    for k, speed in enumerate(cfg.speeds):
        # characteristic foot, wrapped into the periodic domain
        foot = np.mod(x - speed * t, cfg.L)
        u_foot = np.stack([eval_series(s, 0.0, foot) for s in u0], axis=-1)
        w.append(u_foot @ EIGENVECTORS_INV[k])
    return np.stack(w, axis=-1) @ EIGENVECTORS.T


def solve_advection(
    cfg: AdvectionConfig,
    u0: tuple[FourierSeries, FourierSeries]
) -> Trajectory:
    """
    Sample the exact solution on the fine (n_t, n_x_fine) grid.

    Returns:
        Trajectory of shape (n_t, n_x_fine, 2) with eta = (a, b)
    """
    t = uniform_time(cfg.n_t, cfg.T)[:, None]
    x = uniform_space(cfg.n_x_fine, cfg.L)[None, :]
    u = characteristic_solution(cfg, u0, t, x)
    return Trajectory(u=u, L=cfg.L, T=cfg.T, eta=np.array([cfg.a, cfg.b]))


def characteristic_variables(u: np.ndarray) -> np.ndarray:
    """w = R^{-1} u on the trailing channel axis."""
    return u @ EIGENVECTORS_INV.T
