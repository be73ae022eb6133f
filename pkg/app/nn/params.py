"""
Named/flat views over a module's parameters and fan-in initialization.
"""
import logging
import math

import torch
from torch import nn
from torch.nn.utils import parameters_to_vector, vector_to_parameters

from app.errors import ShapeError

logger = logging.getLogger(__name__)


class ParamStore:
    """
    Parameters of one model, addressable by name or as a flat vector.

    The flat ordering is ``module.named_parameters()`` order, which is stable
    for a given architecture.
    """

    def __init__(self, module: nn.Module):
        self.module = module

    def named(self) -> dict[str, torch.Tensor]:
        return dict(self.module.named_parameters())

    def tensors(self) -> list[torch.Tensor]:
        return list(self.module.parameters())

    @property
    def total_count(self) -> int:
        return sum(p.numel() for p in self.module.parameters())

    def flat(self) -> torch.Tensor:
        """Detached copy of all parameters as one vector."""
        return parameters_to_vector(self.module.parameters()).detach().clone()

    def load_flat(self, vector: torch.Tensor) -> None:
        """Overwrite every parameter from a flat vector."""
        if vector.shape != (self.total_count,):
            raise ShapeError("load_flat", vector.shape, (self.total_count,))
        with torch.no_grad():
            vector_to_parameters(vector.to(self.tensors()[0]), self.module.parameters())

    def slices(self) -> dict[str, slice]:
        """Position of each named tensor inside the flat vector."""
        out, start = {}, 0
        for name, p in self.module.named_parameters():
            out[name] = slice(start, start + p.numel())
            start += p.numel()
        return out


def init_params(module: nn.Module, seed: int) -> ParamStore:
    """
    Draw every weight and bias from U(-1/sqrt(fan_in), +1/sqrt(fan_in)).

    Layers declare ``fan_in``; their direct parameters are drawn in
    registration order from one generator seeded with ``seed``.
    """
    generator = torch.Generator().manual_seed(seed)
    with torch.no_grad():
        for layer in module.modules():
            fan_in = getattr(layer, "fan_in", None)
            if fan_in is None:
                continue
            bound = 1.0 / math.sqrt(fan_in)
            for p in layer.parameters(recurse=False):
                sample = torch.rand(p.shape, generator=generator, dtype=torch.float64)
                p.copy_((2.0 * sample - 1.0) * bound)
    store = ParamStore(module)
    logger.debug(f"Initialized {store.total_count} parameters (seed={seed})")
    return store
