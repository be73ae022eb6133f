"""
Reverse-mode gradients as flat vectors, and their verification against
central finite differences.
"""
import logging
from typing import Callable

import torch

from app.errors import TapeError
from app.nn.params import ParamStore

logger = logging.getLogger(__name__)

FD_STEP = 1e-5
COORDS_PER_TENSOR = 64
# Entries smaller than this fraction of the largest checked gradient are
# compared against that floor rather than against their own magnitude.
GRAD_FLOOR_REL = 1e-2


def backward(output: torch.Tensor, store: ParamStore) -> torch.Tensor:
    """
    Gradient of a scalar output with respect to every parameter.

    Parameters the output does not depend on (including those only reached
    through detached computation) get zeros.

    Raises:
        TapeError: output is not a scalar recorded from any parameter
    """
    if output.numel() != 1:
        raise TapeError(f"backward needs a scalar output, got shape {tuple(output.shape)}")
    if not output.requires_grad:
        raise TapeError("output is not connected to any recorded parameter")
    params = store.tensors()
    grads = torch.autograd.grad(output.reshape(()), params, allow_unused=True)
    return torch.cat([
        (g if g is not None else torch.zeros_like(p)).reshape(-1)
        for g, p in zip(grads, params)
    ]).detach()


def relative_error(analytic: torch.Tensor, numeric: torch.Tensor) -> torch.Tensor:
    """
    |a - n| / max(|a|, |n|, floor) with floor = GRAD_FLOOR_REL * max over
    all checked entries of max(|a|, |n|).

    The measure is invariant to rescaling the loss, so a uniform 1% error
    in the gradient reads as ~1e-2 whatever the gradient magnitude.
    """
    magnitude = torch.maximum(analytic.abs(), numeric.abs())
    floor = GRAD_FLOOR_REL * magnitude.max()
    floor = torch.clamp(floor, min=torch.finfo(magnitude.dtype).tiny)
    return (analytic - numeric).abs() / torch.maximum(magnitude, floor)


def check_coordinates(store: ParamStore, per_tensor: int, seed: int) -> torch.Tensor:
    """
    Flat indices to check: up to ``per_tensor`` random entries of every
    weight tensor plus every entry of every bias vector.
    """
    generator = torch.Generator().manual_seed(seed)
    picked = []
    for name, where in store.slices().items():
        size = where.stop - where.start
        if name.endswith("bias") or size <= per_tensor:
            local = torch.arange(size)
        else:
            local = torch.randperm(size, generator=generator)[:per_tensor]
        picked.append(local + where.start)
    return torch.cat(picked)


def grad_check(
    loss_fn: Callable[[], torch.Tensor],
    store: ParamStore,
    per_tensor: int = COORDS_PER_TENSOR,
    step: float = FD_STEP,
    seed: int = 0,
    analytic: torch.Tensor | None = None
) -> float:
    """
    Max relative error between reverse-mode and central-difference gradients.

    Args:
        loss_fn: Closure recomputing the scalar loss from the current
                 parameters (run the model in float64)
        store: Parameters to check
        per_tensor: Random coordinates checked per weight tensor
        step: Finite-difference step h
        seed: Coordinate sampling seed
        analytic: Precomputed gradient to check instead of ``backward``

    Returns:
        The measured maximum relative error
    """
    if analytic is None:
        analytic = backward(loss_fn(), store)
    coords = check_coordinates(store, per_tensor, seed)
    base = store.flat()

    numeric = torch.empty(coords.shape[0], dtype=base.dtype)
    try:
        with torch.no_grad():
            for n, idx in enumerate(coords.tolist()):
                shifted = base.clone()
                shifted[idx] += step
                store.load_flat(shifted)
                plus = float(loss_fn())
                shifted[idx] -= 2.0 * step
                store.load_flat(shifted)
                minus = float(loss_fn())
                numeric[n] = (plus - minus) / (2.0 * step)
    finally:
        store.load_flat(base)

    error = float(relative_error(analytic[coords].to(numeric), numeric).max())
    logger.info(f"Gradient check: {coords.shape[0]} coordinates, max relative error {error:.3e}")
    return error
