"""
Fifth-order WENO reconstruction (Jiang-Shu weights) and the global
Lax-Friedrichs split interface flux built on it.
"""
from typing import Callable

import numpy as np

WENO_EPS = 1e-6
# linear weights of the three candidate stencils
WENO_LINEAR_WEIGHTS = (0.1, 0.6, 0.3)


def weno5_reconstruct(stencil) -> np.ndarray:
    """
    Reconstruct the value at the right interface of the centre cell.

    Args:
        stencil: Values (v[i-2], v[i-1], v[i], v[i+1], v[i+2]) on the last
                 axis; leading axes are batched

    Returns:
        Interface value v[i+1/2], shape of the leading axes
    """
    v = np.asarray(stencil, dtype=np.float64)
    vm2, vm1, v0, vp1, vp2 = (v[..., k] for k in range(5))

    q0 = (2.0 * vm2 - 7.0 * vm1 + 11.0 * v0) / 6.0
    q1 = (-vm1 + 5.0 * v0 + 2.0 * vp1) / 6.0
    q2 = (2.0 * v0 + 5.0 * vp1 - vp2) / 6.0

    beta0 = 13.0 / 12.0 * (vm2 - 2.0 * vm1 + v0) ** 2 + 0.25 * (vm2 - 4.0 * vm1 + 3.0 * v0) ** 2
    beta1 = 13.0 / 12.0 * (vm1 - 2.0 * v0 + vp1) ** 2 + 0.25 * (vm1 - vp1) ** 2
    beta2 = 13.0 / 12.0 * (v0 - 2.0 * vp1 + vp2) ** 2 + 0.25 * (3.0 * v0 - 4.0 * vp1 + vp2) ** 2

    d0, d1, d2 = WENO_LINEAR_WEIGHTS
    a0 = d0 / (WENO_EPS + beta0) ** 2
    a1 = d1 / (WENO_EPS + beta1) ** 2
    a2 = d2 / (WENO_EPS + beta2) ** 2
    return (a0 * q0 + a1 * q1 + a2 * q2) / (a0 + a1 + a2)


def periodic_stencils(values: np.ndarray, offsets) -> np.ndarray:
    """Stack rolled copies so that out[i, m] = values[(i + offsets[m]) % n]."""
    return np.stack([np.roll(values, -o) for o in offsets], axis=-1)


def weno5_interface_flux(
    u: np.ndarray,
    flux: Callable[[np.ndarray], np.ndarray],
    alpha: float
) -> np.ndarray:
    """
    Numerical flux F[i+1/2] for every cell on a periodic grid.

    f+ = (f(u) + alpha u) / 2 is reconstructed from the left stencil and
    f- = (f(u) - alpha u) / 2 from the mirrored right stencil.

    Args:
        u: State, shape (n_x,)
        flux: Physical flux function
        alpha: Splitting speed, at least max |f'(u)|
    """
    fu = flux(u)
    f_plus = 0.5 * (fu + alpha * u)
    f_minus = 0.5 * (fu - alpha * u)
    left = weno5_reconstruct(periodic_stencils(f_plus, (-2, -1, 0, 1, 2)))
    right = weno5_reconstruct(periodic_stencils(f_minus, (3, 2, 1, 0, -1)))
    return left + right


def flux_divergence(
    u: np.ndarray,
    dx: float,
    flux: Callable[[np.ndarray], np.ndarray],
    alpha: float
) -> np.ndarray:
    """Conservative approximation of d/dx f(u): (F[i+1/2] - F[i-1/2]) / dx."""
    interface = weno5_interface_flux(u, flux, alpha)
    return (interface - np.roll(interface, 1)) / dx
