"""
Convolutional decoders mapping final node features to K future steps.

Both decoders predict differences d^l and apply

    u^{k+l} = u^k + (t_{k+l} - t_k) * d^l,    l = 1..K

on a uniform time grid, so step l sits l * dt after the last input step.
"""
import logging

import torch
from torch import nn

from app.errors import ConfigurationError
from app.nn.core import Conv1d, Dense, swish

logger = logging.getLogger(__name__)

HIDDEN_CHANNELS = 8
SYSTEM_KERNEL = 5


def resolve_decoder_kernels(n_hid: int, K: int) -> tuple[int, int, int]:
    """
    Kernel/stride triple (k1, s1, k2) for the scalar decoder.

    The first convolution (kernel k1, stride s1) must shrink n_hid to
    K + k2 - 1 so the second valid convolution (kernel k2) ends at exactly
    K values. Larger k2 and s1 are preferred.

    Returns:
        (16, 4, 5) for n_hid=128, K=25
    """
    for k2 in range(5, 0, -1):
        mid = K + k2 - 1
        for s1 in range(4, 0, -1):
            k1 = n_hid - s1 * (mid - 1)
            if k1 >= 1:
                return k1, s1, k2
    raise ConfigurationError(f"no decoder kernels map {n_hid} features to {K} steps")


def validate_decoder_kernels(n_hid: int, K: int, kernels: tuple[int, int, int]) -> None:
    k1, s1, k2 = kernels
    if min(k1, s1, k2) < 1 or k1 > n_hid:
        raise ConfigurationError(f"invalid decoder kernels {kernels}")
    mid = (n_hid - k1) // s1 + 1
    if mid - k2 + 1 != K:
        raise ConfigurationError(
            f"decoder kernels {kernels} map {n_hid} features to {mid - k2 + 1} steps, expected {K}"
        )


def apply_differences(u_last: torch.Tensor, d: torch.Tensor, dt: torch.Tensor | float) -> torch.Tensor:
    """
    Additive update from predicted differences.

    Args:
        u_last: Last input step, (B, N, C)
        d: Differences, (B, K, N, C)
        dt: Time step, scalar or (B,)

    Returns:
        (B, K, N, C) predicted steps
    """
    K = d.shape[1]
    offsets = torch.arange(1, K + 1, dtype=d.dtype, device=d.device)
    dt = torch.as_tensor(dt, dtype=d.dtype, device=d.device)
    if dt.dim() == 0:
        dt = dt.expand(d.shape[0])
    lead = (dt[:, None] * offsets[None, :])[:, :, None, None]
    return u_last[:, None] + lead * d


class ScalarDecoder(nn.Module):
    """Conv(1->8, k1, stride s1) + swish, then Conv(8->1, k2) over the feature axis."""

    def __init__(self, n_hid: int, K: int, kernels: tuple[int, int, int] | None = None):
        super().__init__()
        kernels = tuple(kernels) if kernels is not None else resolve_decoder_kernels(n_hid, K)
        validate_decoder_kernels(n_hid, K, kernels)
        self.kernels = kernels
        k1, s1, k2 = kernels
        self.first = Conv1d(1, HIDDEN_CHANNELS, k1, stride=s1)
        self.second = Conv1d(HIDDEN_CHANNELS, 1, k2)

    @property
    def final_conv(self) -> Conv1d:
        return self.second

    def differences(self, X: torch.Tensor) -> torch.Tensor:
        """(B, N, H) -> (B, K, N, 1)."""
        b, n, h = X.shape
        signal = X.reshape(b * n, 1, h)
        d = self.second(swish(self.first(signal)))
        return d.reshape(b, n, -1).permute(0, 2, 1)[..., None]


class SystemDecoder(nn.Module):
    """Dense(H -> C*K), reshape to (C, K), then two same-padded convolutions."""

    def __init__(self, n_hid: int, K: int, n_ch: int):
        super().__init__()
        self.K = K
        self.n_ch = n_ch
        pad = SYSTEM_KERNEL // 2
        self.lift = Dense(n_hid, n_ch * K)
        self.first = Conv1d(n_ch, HIDDEN_CHANNELS, SYSTEM_KERNEL, padding=pad)
        self.second = Conv1d(HIDDEN_CHANNELS, n_ch, SYSTEM_KERNEL, padding=pad)

    @property
    def final_conv(self) -> Conv1d:
        return self.second

    def differences(self, X: torch.Tensor) -> torch.Tensor:
        """(B, N, H) -> (B, K, N, C)."""
        b, n, _ = X.shape
        signal = self.lift(X).reshape(b * n, self.n_ch, self.K)
        d = self.second(swish(self.first(signal)))
        return d.reshape(b, n, self.n_ch, self.K).permute(0, 3, 1, 2)


def build_decoder(n_hid: int, K: int, n_ch: int, kernels: tuple[int, int, int] | None = None) -> nn.Module:
    if n_ch == 1:
        return ScalarDecoder(n_hid, K, kernels)
    if kernels is not None:
        logger.warning(f"Decoder kernels {kernels} ignored for a {n_ch}-channel system decoder")
    return SystemDecoder(n_hid, K, n_ch)
