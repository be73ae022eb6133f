"""
Node encoders producing the initial features X^0.

FFN: [u_i^{k-K:k} (channel-major), x_i, t_k, eta] -> Linear-Swish-Linear-Swish.
Recurrent: the per-step sequence [u_i^{k-K+l}, x_i, t_{k-K+l}, eta] runs
through a LEM or LSTM cell from a zero state; the final hidden state goes
through Linear-Swish-Linear-Swish.
"""
import torch
from torch import nn

from app.network.cells import LemCell, LstmCell
from app.nn.core import SwishMLP


def flatten_window(window: torch.Tensor) -> torch.Tensor:
    """(B, K, N, C) -> (B, N, C*K), channel-major per node."""
    b, k, n, c = window.shape
    return window.permute(0, 2, 3, 1).reshape(b, n, c * k)


def broadcast_nodes(values: torch.Tensor, n_nodes: int) -> torch.Tensor:
    """(B, D) -> (B, N, D)."""
    return values[:, None, :].expand(values.shape[0], n_nodes, values.shape[1])


class FfnEncoder(nn.Module):
    """Two-layer swish network on the flattened window."""

    def __init__(self, K: int, n_ch: int, d_eta: int, hidden: int):
        super().__init__()
        self.in_features = n_ch * K + 2 + d_eta
        self.mlp = SwishMLP(self.in_features, hidden, hidden)

    def forward(
        self,
        window: torch.Tensor,
        x: torch.Tensor,
        t_k: torch.Tensor,
        eta: torch.Tensor,
        step_times: torch.Tensor
    ) -> torch.Tensor:
        b, _, n, _ = window.shape
        features = torch.cat([
            flatten_window(window),
            x.expand(b, n)[..., None],
            t_k[:, None, None].expand(b, n, 1),
            broadcast_nodes(eta, n),
        ], dim=-1)
        return self.mlp(features)


class RecurrentEncoder(nn.Module):
    """LEM or LSTM over the K window steps, then a two-layer swish network."""

    def __init__(self, kind: str, n_ch: int, d_eta: int, hidden: int, lem_dt: float = 1.0):
        super().__init__()
        self.kind = kind
        self.step_features = n_ch + 2 + d_eta
        if kind == "lem":
            self.cell = LemCell(self.step_features, hidden, dt=lem_dt)
        elif kind == "lstm":
            self.cell = LstmCell(self.step_features, hidden)
        else:
            raise ValueError(f"unknown recurrent encoder '{kind}'")
        self.mlp = SwishMLP(hidden, hidden, hidden)

    def sequence(
        self,
        window: torch.Tensor,
        x: torch.Tensor,
        eta: torch.Tensor,
        step_times: torch.Tensor
    ) -> torch.Tensor:
        """Per-step inputs, shape (B, N, K, n_ch + 2 + d_eta)."""
        b, k, n, c = window.shape
        return torch.cat([
            window.permute(0, 2, 1, 3),
            x[None, :, None, None].expand(b, n, k, 1),
            step_times[:, None, :, None].expand(b, n, k, 1),
            eta[:, None, None, :].expand(b, n, k, eta.shape[-1]),
        ], dim=-1)

    def final_hidden(self, inputs: torch.Tensor) -> torch.Tensor:
        """Run the cell over the step axis of (B, N, K, F) inputs."""
        state = self.cell.initial_state(inputs.shape[:2], inputs)
        for step in range(inputs.shape[2]):
            state = self.cell(state, inputs[:, :, step])
        # LemState.y or the LSTM h
        return state.y if self.kind == "lem" else state[0]

    def forward(
        self,
        window: torch.Tensor,
        x: torch.Tensor,
        t_k: torch.Tensor,
        eta: torch.Tensor,
        step_times: torch.Tensor
    ) -> torch.Tensor:
        return self.mlp(self.final_hidden(self.sequence(window, x, eta, step_times)))
