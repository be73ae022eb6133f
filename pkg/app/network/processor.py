"""
Message-passing processor layers.

    m_ij   = phi([X_i, X_j, u_i - u_j, x_i - x_j, eta])
    F(X)_i = psi([X_i, sum_{j in N(i)} m_ij, eta])

A plain layer returns F(X). A gated layer owns two such networks F and
F_hat and returns (1 - s) * X + s * tanh(F(X)) with s = sigmoid(F_hat(X)).
"""
from dataclasses import dataclass

import torch
from torch import nn

from app.nn.core import SwishMLP, add, mul, segment_sum, sigmoid, tanh


@dataclass
class EdgeContext:
    """Per-forward quantities shared by all processor layers."""
    src: torch.Tensor
    dst: torch.Tensor
    n_nodes: int
    u_diff: torch.Tensor
    rel_pos: torch.Tensor
    eta_edges: torch.Tensor
    eta_nodes: torch.Tensor


class MpnnLayer(nn.Module):
    """One message-passing network F_theta."""

    def __init__(self, hidden: int, window_features: int, d_eta: int):
        super().__init__()
        self.message_net = SwishMLP(2 * hidden + window_features + 1 + d_eta, hidden, hidden)
        # linear output so a gate built on it spans (0, 1)
        self.update_net = SwishMLP(2 * hidden + d_eta, hidden, hidden, final_activation=False)

    def messages(self, X: torch.Tensor, ctx: EdgeContext) -> torch.Tensor:
        edge_in = torch.cat([
            X[:, ctx.dst],
            X[:, ctx.src],
            ctx.u_diff,
            ctx.rel_pos,
            ctx.eta_edges,
        ], dim=-1)
        return self.message_net(edge_in)

    def forward(self, X: torch.Tensor, ctx: EdgeContext) -> torch.Tensor:
        aggregated = segment_sum(self.messages(X, ctx), ctx.dst, ctx.n_nodes)
        return self.update_net(torch.cat([X, aggregated, ctx.eta_nodes], dim=-1))


def gate_combine(X: torch.Tensor, gate_logits: torch.Tensor, candidate: torch.Tensor) -> torch.Tensor:
    """(1 - sigmoid(g)) * X + sigmoid(g) * tanh(candidate)."""
    s = sigmoid(gate_logits)
    return add(mul(1.0 - s, X), mul(s, tanh(candidate)))


class GatedLayer(nn.Module):
    """Gated update with an update network and a gate network of equal shape."""

    def __init__(self, hidden: int, window_features: int, d_eta: int):
        super().__init__()
        self.update = MpnnLayer(hidden, window_features, d_eta)
        self.gate = MpnnLayer(hidden, window_features, d_eta)

    def forward(self, X: torch.Tensor, ctx: EdgeContext) -> torch.Tensor:
        # F_hat evaluated once and used for both gate factors
        return gate_combine(X, self.gate(X, ctx), self.update(X, ctx))


class PlainLayer(nn.Module):
    """X^n = F(X^{n-1})."""

    def __init__(self, hidden: int, window_features: int, d_eta: int):
        super().__init__()
        self.update = MpnnLayer(hidden, window_features, d_eta)

    def forward(self, X: torch.Tensor, ctx: EdgeContext) -> torch.Tensor:
        return self.update(X, ctx)
