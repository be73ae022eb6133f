"""
Discretized solution trajectories and spatial downsampling.
"""
from dataclasses import dataclass, field

import numpy as np

from app.errors import ConfigurationError

# 2-tap box kernel, stride 2
DOWNSAMPLE_KERNEL = np.array([0.5, 0.5])


@dataclass
class Trajectory:
    """
    Solution field u[t][x][channel] on a uniform periodic grid.

    ``x`` is uniform on [0, L) and ``t`` uniform on [0, T].
    """
    u: np.ndarray
    L: float
    T: float
    eta: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        self.u = np.asarray(self.u)
        if self.u.ndim != 3:
            raise ConfigurationError(
                f"trajectory field must be [n_t][n_x][n_ch], got shape {self.u.shape}"
            )
        self.eta = np.asarray(self.eta, dtype=np.float64).reshape(-1)

    @property
    def n_t(self) -> int:
        return self.u.shape[0]

    @property
    def n_x(self) -> int:
        return self.u.shape[1]

    @property
    def n_ch(self) -> int:
        return self.u.shape[2]

    @property
    def d_eta(self) -> int:
        return self.eta.shape[0]

    @property
    def dx(self) -> float:
        return self.L / self.n_x

    @property
    def dt(self) -> float:
        return self.T / (self.n_t - 1)

    @property
    def x(self) -> np.ndarray:
        return uniform_space(self.n_x, self.L)

    @property
    def t(self) -> np.ndarray:
        return uniform_time(self.n_t, self.T)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.u)))


def uniform_space(n_x: int, L: float) -> np.ndarray:
    """Periodic grid points i*L/n_x, i = 0..n_x-1."""
    return np.arange(n_x) * (L / n_x)


def uniform_time(n_t: int, T: float) -> np.ndarray:
    """Output times on [0, T] including both ends."""
    return np.linspace(0.0, T, n_t)


def downsample(traj: Trajectory) -> Trajectory:
    """
    Halve the spatial resolution with the stride-2 box kernel.

    The coarse sample j averages fine samples 2j and 2j+1; time and channels
    are untouched.

    Raises:
        ConfigurationError: n_x is odd
    """
    if traj.n_x % 2:
        raise ConfigurationError(f"cannot downsample odd n_x={traj.n_x}")
    pairs = traj.u.reshape(traj.n_t, traj.n_x // 2, 2, traj.n_ch)
    u = np.einsum("tjkc,k->tjc", pairs, DOWNSAMPLE_KERNEL)
    return Trajectory(u=u, L=traj.L, T=traj.T, eta=traj.eta.copy())
