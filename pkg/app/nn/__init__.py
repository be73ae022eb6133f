"""
Tensor primitives, parameter storage and gradient verification.
"""
from app.nn.core import Conv1d, Dense, SwishMLP, affine, conv1d, segment_sum, swish
from app.nn.gradcheck import backward, grad_check
from app.nn.params import ParamStore, init_params

__all__ = [
    "Conv1d",
    "Dense",
    "ParamStore",
    "SwishMLP",
    "affine",
    "backward",
    "conv1d",
    "grad_check",
    "init_params",
    "segment_sum",
    "swish",
]
