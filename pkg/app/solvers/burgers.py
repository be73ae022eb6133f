"""
Ground truth for Burgers' equation with variable viscosity and forcing,

    u_t + (u^2 - beta u_x)_x = alpha f(t, x),   u(t, 0) = u(t, L),

discretized with WENO5 (global Lax-Friedrichs splitting) for the convection
term, a fourth-order central difference for the diffusion term, and classical
RK4 with a CFL-limited step that lands exactly on the output times.
"""
import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from app.errors import ConfigurationError
from app.solvers.fourier import FourierSeries, eval_series
from app.solvers.trajectory import Trajectory, uniform_space, uniform_time
from app.solvers.weno import flux_divergence

logger = logging.getLogger(__name__)

BETA_MAX = 0.2
DIFFUSION_EPS = 1e-12


class SolverDivergence(RuntimeError):
    """The explicit integrator produced a non-finite state or step."""


@dataclass(frozen=True)
class BurgersConfig:
    """Parameters and grid of one Burgers run."""
    alpha: float = 0.0
    beta: float = 0.0
    L: float = 16.0
    T: float = 4.0
    n_t: int = 250
    n_x_fine: int = 200
    courant: float = 0.4

    def __post_init__(self):
        if self.alpha not in (0.0, 1.0):
            raise ConfigurationError(f"alpha is a forcing switch (0 or 1), got {self.alpha}")
        if not 0.0 <= self.beta <= BETA_MAX:
            raise ConfigurationError(f"beta must lie in [0, {BETA_MAX}], got {self.beta}")


def burgers_flux(u: np.ndarray) -> np.ndarray:
    """f(u) = u^2."""
    return u * u


def fourth_order_laplacian(u: np.ndarray, dx: float) -> np.ndarray:
    """Periodic (-u[i-2] + 16u[i-1] - 30u[i] + 16u[i+1] - u[i+2]) / (12 dx^2)."""
    return (
        -np.roll(u, 2) + 16.0 * np.roll(u, 1) - 30.0 * u
        + 16.0 * np.roll(u, -1) - np.roll(u, -2)
    ) / (12.0 * dx * dx)


def rk4_step(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    t: float,
    u: np.ndarray,
    dt: float
) -> np.ndarray:
    """One classical fourth-order Runge-Kutta step."""
    k1 = rhs(t, u)
    k2 = rhs(t + 0.5 * dt, u + 0.5 * dt * k1)
    k3 = rhs(t + 0.5 * dt, u + 0.5 * dt * k2)
    k4 = rhs(t + dt, u + dt * k3)
    return u + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    u0: np.ndarray,
    times: np.ndarray,
    max_dt: Callable[[np.ndarray], float]
) -> np.ndarray:
    """
    March ``u0`` through ``times`` with RK4, storing a snapshot at each.

    Internal steps are ``min(max_dt(u), time left to the next output)``.

    Returns:
        Array of shape (len(times), *u0.shape)

    Raises:
        SolverDivergence: non-finite state or step size
    """
    out = np.empty((len(times),) + u0.shape)
    out[0] = u0
    u = u0.copy()
    t = float(times[0])
    for n in range(1, len(times)):
        target = float(times[n])
        while t < target:
            dt = min(max_dt(u), target - t)
            if not np.isfinite(dt) or dt <= 0.0:
                raise SolverDivergence(f"invalid time step {dt} at t={t:.4f}")
            u = rk4_step(rhs, t, u, dt)
            # snap to the output time to avoid a sliver step
            t = target if target - (t + dt) < 1e-12 * max(1.0, target) else t + dt
            if not np.all(np.isfinite(u)):
                raise SolverDivergence(f"non-finite state at t={t:.4f}")
        out[n] = u
    return out


def solve_burgers(
    cfg: BurgersConfig,
    series: FourierSeries,
    seed: int | None = None
) -> Trajectory:
    """
    Solve one Burgers trajectory on the fine grid.

    The initial condition is f(0, x) and the forcing alpha f(t, x), both from
    the same series.

    Args:
        cfg: Parameters and grid
        series: Series defining the initial condition and forcing
        seed: Sample seed, reported in failures

    Returns:
        Trajectory of shape (n_t, n_x_fine, 1) with eta = (beta,) when
        alpha = 1 and an empty eta otherwise

    Raises:
        SolverDivergence: CFL failure or NaN, message names the seed
    """
    x = uniform_space(cfg.n_x_fine, cfg.L)
    dx = cfg.L / cfg.n_x_fine
    times = uniform_time(cfg.n_t, cfg.T)

    def rhs(t: float, u: np.ndarray) -> np.ndarray:
        alpha_max = float(np.max(np.abs(2.0 * u)))
        du = -flux_divergence(u, dx, burgers_flux, alpha_max)
        if cfg.beta > 0.0:
            du += cfg.beta * fourth_order_laplacian(u, dx)
        if cfg.alpha:
            du += cfg.alpha * eval_series(series, t, x)
        return du

    def max_dt(u: np.ndarray) -> float:
        alpha_max = float(np.max(np.abs(2.0 * u)))
        convective = dx / alpha_max if alpha_max > 0.0 else np.inf
        diffusive = dx * dx / (2.0 * cfg.beta + DIFFUSION_EPS)
        return cfg.courant * min(convective, diffusive)

    u0 = eval_series(series, 0.0, x)
    try:
        u = integrate(rhs, u0, times, max_dt)
    except SolverDivergence as e:
        raise SolverDivergence(f"{e} (seed={seed})") from e

    eta = np.array([cfg.beta]) if cfg.alpha else np.zeros(0)
    logger.debug(f"Burgers solve done: beta={cfg.beta:.4f}, seed={seed}")
    return Trajectory(u=u[:, :, None], L=cfg.L, T=cfg.T, eta=eta)


def solve_linear_advection_weno(
    u0: np.ndarray,
    c: float,
    L: float,
    times: np.ndarray,
    courant: float = 0.4
) -> np.ndarray:
    """
    Run the WENO5/RK4 pipeline on u_t + (c u)_x = 0 with frozen alpha = |c|.

    Used to measure the convergence order of the convection discretization.

    Returns:
        Snapshots of shape (len(times), n_x)
    """
    n_x = u0.shape[0]
    dx = L / n_x
    speed = abs(c)

    def rhs(t: float, u: np.ndarray) -> np.ndarray:
        return -flux_divergence(u, dx, lambda v: c * v, speed)

    return integrate(rhs, np.asarray(u0, dtype=np.float64), times, lambda u: courant * dx / speed)
