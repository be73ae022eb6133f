"""
Random problem instances for the three benchmarks.
"""
import numpy as np

from app.errors import ConfigurationError
from app.models import ExperimentId
from app.solvers.advection import A_RANGE, B_RANGE, AdvectionConfig, solve_advection
from app.solvers.burgers import BETA_MAX, BurgersConfig, solve_burgers
from app.solvers.fourier import DEFAULT_MODES, sample_fourier
from app.solvers.trajectory import Trajectory


def sample_burgers_config(
    rng: np.random.Generator,
    experiment: ExperimentId,
    **grid
) -> BurgersConfig:
    """E1: alpha = beta = 0. E2: alpha = 1, beta ~ U([0, 0.2])."""
    if experiment is ExperimentId.E1:
        return BurgersConfig(alpha=0.0, beta=0.0, **grid)
    if experiment is ExperimentId.E2:
        return BurgersConfig(alpha=1.0, beta=float(rng.uniform(0.0, BETA_MAX)), **grid)
    raise ConfigurationError(f"{experiment.slug} is not a Burgers experiment")


def sample_advection_config(rng: np.random.Generator, **grid) -> AdvectionConfig:
    """a ~ U([0.1, 1]), b ~ U([1, 10])."""
    a = float(rng.uniform(*A_RANGE))
    b = float(rng.uniform(*B_RANGE))
    return AdvectionConfig(a=a, b=b, **grid)


def sample_trajectory(
    experiment: ExperimentId,
    rng: np.random.Generator,
    seed: int | None = None,
    J: int = DEFAULT_MODES,
    **grid
) -> Trajectory:
    """
    Draw parameters and initial data, then solve on the fine grid.

    Args:
        experiment: Benchmark to sample
        rng: Generator owned by this sample
        seed: Sample seed, reported in solver failures
        J: Fourier modes per series
        **grid: Optional L, T, n_t, n_x_fine overrides
    """
    if experiment is ExperimentId.MS_WAVE:
        cfg = sample_advection_config(rng, **grid)
        u0 = (
            sample_fourier(rng, J, with_omega=False, L=cfg.L),
            sample_fourier(rng, J, with_omega=False, L=cfg.L),
        )
        return solve_advection(cfg, u0)

    cfg = sample_burgers_config(rng, experiment, **grid)
    series = sample_fourier(rng, J, with_omega=True, L=cfg.L)
    return solve_burgers(cfg, series, seed=seed)
