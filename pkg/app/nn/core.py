"""
Dense tensor primitives and the layer modules built from them.

All primitives are thin, shape-checked wrappers over torch operations, so
reverse-mode gradients come from torch's autograd tape. Layers expose a
``fan_in`` attribute that parameter initialization reads.
"""
import torch
import torch.nn.functional as F
from torch import nn

from app.errors import ShapeError


# ============================================================================
# Primitives
# ============================================================================

def affine(x: torch.Tensor, weight: torch.Tensor, bias: torch.Tensor | None) -> torch.Tensor:
    """x @ W^T + b over the last axis of ``x``; W has shape (out, in)."""
    if x.shape[-1] != weight.shape[-1]:
        raise ShapeError("affine", x.shape, weight.shape)
    if bias is not None and bias.shape != weight.shape[:1]:
        raise ShapeError("affine", weight.shape, bias.shape)
    return F.linear(x, weight, bias)


def conv1d(
    x: torch.Tensor,
    kernels: torch.Tensor,
    bias: torch.Tensor | None,
    stride: int = 1,
    padding: int = 0
) -> torch.Tensor:
    """
    1D cross-correlation of x (batch, in_ch, length) with kernels
    (out_ch, in_ch, width). ``padding=0`` is a valid convolution.
    """
    if x.dim() != 3 or kernels.dim() != 3 or x.shape[1] != kernels.shape[1]:
        raise ShapeError("conv1d", x.shape, kernels.shape)
    if x.shape[2] + 2 * padding < kernels.shape[2]:
        raise ShapeError("conv1d", x.shape, kernels.shape)
    return F.conv1d(x, kernels, bias, stride=stride, padding=padding)


def sigmoid(x: torch.Tensor) -> torch.Tensor:
    return torch.sigmoid(x)


def tanh(x: torch.Tensor) -> torch.Tensor:
    return torch.tanh(x)


def swish(x: torch.Tensor) -> torch.Tensor:
    """x * sigmoid(x)."""
    return F.silu(x)


def _check_same(op: str, a: torch.Tensor, b: torch.Tensor) -> None:
    if a.shape != b.shape:
        raise ShapeError(op, a.shape, b.shape)


def add(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    _check_same("add", a, b)
    return a + b


def sub(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    _check_same("sub", a, b)
    return a - b


def mul(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    _check_same("mul", a, b)
    return a * b


def segment_sum(messages: torch.Tensor, dst: torch.Tensor, n_nodes: int) -> torch.Tensor:
    """
    Sum messages per destination node.

    Args:
        messages: (..., n_edges, features)
        dst: Destination node of each edge, shape (n_edges,)
        n_nodes: Number of output rows

    Returns:
        (..., n_nodes, features)
    """
    if messages.dim() < 2 or messages.shape[-2] != dst.shape[0]:
        raise ShapeError("segment_sum", messages.shape, dst.shape)
    node_axis = messages.dim() - 2
    out_shape = messages.shape[:node_axis] + (n_nodes, messages.shape[-1])
    out = messages.new_zeros(out_shape)
    return out.index_add(node_axis, dst, messages)


# ============================================================================
# Layers
# ============================================================================

class Dense(nn.Module):
    """Affine layer y = x W^T + b."""

    def __init__(self, in_features: int, out_features: int, bias: bool = True):
        super().__init__()
        self.in_features = in_features
        self.out_features = out_features
        self.fan_in = in_features
        self.weight = nn.Parameter(torch.zeros(out_features, in_features))
        self.bias = nn.Parameter(torch.zeros(out_features)) if bias else None

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return affine(x, self.weight, self.bias)


class Conv1d(nn.Module):
    """1D convolution layer over (batch, channels, length) inputs."""

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel_size: int,
        stride: int = 1,
        padding: int = 0
    ):
        super().__init__()
        self.stride = stride
        self.padding = padding
        self.kernel_size = kernel_size
        self.fan_in = in_channels * kernel_size
        self.weight = nn.Parameter(torch.zeros(out_channels, in_channels, kernel_size))
        self.bias = nn.Parameter(torch.zeros(out_channels))

    def output_length(self, length: int) -> int:
        return (length + 2 * self.padding - self.kernel_size) // self.stride + 1

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return conv1d(x, self.weight, self.bias, self.stride, self.padding)


class SwishMLP(nn.Module):
    """
    Two affine layers with swish after the first, and after the second when
    ``final_activation`` is set.
    """

    def __init__(self, in_features: int, hidden: int, out_features: int, final_activation: bool = True):
        super().__init__()
        self.first = Dense(in_features, hidden)
        self.second = Dense(hidden, out_features)
        self.final_activation = final_activation

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        h = self.second(swish(self.first(x)))
        return swish(h) if self.final_activation else h
