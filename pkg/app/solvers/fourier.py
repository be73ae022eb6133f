"""
Random Fourier series used for initial conditions and forcing terms.

    f(t, x) = sum_j A_j sin(omega_j t + 2 pi ell_j x / L + phi_j)
"""
from dataclasses import dataclass

import numpy as np

from app.errors import ConfigurationError

AMPLITUDE_MAX = 0.5
OMEGA_MAX = 0.4
ELL_MIN = 1
ELL_MAX = 3
DEFAULT_MODES = 5


@dataclass(frozen=True)
class FourierSeries:
    """Coefficients of a J-mode series on an L-periodic domain."""
    A: np.ndarray
    omega: np.ndarray
    ell: np.ndarray
    phi: np.ndarray
    L: float

    @property
    def J(self) -> int:
        return self.A.shape[0]


def sample_fourier(
    rng: np.random.Generator,
    J: int = DEFAULT_MODES,
    with_omega: bool = True,
    L: float = 16.0
) -> FourierSeries:
    """
    Draw series coefficients from their uniform distributions.

    Args:
        rng: Seeded generator; draws happen in the order A, omega, phi, ell
        J: Number of modes
        with_omega: When False, all temporal frequencies are zero
        L: Domain length

    Returns:
        FourierSeries
    """
    if J < 1:
        raise ConfigurationError(f"need at least one mode, got J={J}")
    A = rng.uniform(-AMPLITUDE_MAX, AMPLITUDE_MAX, J)
    omega = rng.uniform(-OMEGA_MAX, OMEGA_MAX, J) if with_omega else np.zeros(J)
    phi = rng.uniform(0.0, 2.0 * np.pi, J)
    ell = rng.integers(ELL_MIN, ELL_MAX + 1, J)
    return FourierSeries(A=A, omega=omega, ell=ell, phi=phi, L=float(L))


def eval_series(f: FourierSeries, t, x) -> np.ndarray:
    """
    Evaluate the series at time(s) ``t`` and position(s) ``x``.

    ``t`` and ``x`` broadcast against each other; the mode axis is summed.
    """
    t = np.asarray(t, dtype=np.float64)[..., None]
    x = np.asarray(x, dtype=np.float64)[..., None]
    phase = f.omega * t + 2.0 * np.pi * f.ell * x / f.L + f.phi
    return np.sum(f.A * np.sin(phase), axis=-1)
