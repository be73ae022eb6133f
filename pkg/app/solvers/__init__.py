"""
Ground-truth solvers for the E1/E2 (Burgers) and MS-wave (two-speed
advection) benchmarks.
"""
from app.solvers.advection import AdvectionConfig, solve_advection
from app.solvers.burgers import BurgersConfig, solve_burgers
from app.solvers.fourier import FourierSeries, eval_series, sample_fourier
from app.solvers.trajectory import Trajectory, downsample
from app.solvers.weno import weno5_reconstruct

__all__ = [
    "AdvectionConfig",
    "BurgersConfig",
    "FourierSeries",
    "Trajectory",
    "downsample",
    "eval_series",
    "sample_fourier",
    "solve_advection",
    "solve_burgers",
    "weno5_reconstruct",
]
