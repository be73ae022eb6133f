"""
Recurrent cells for the node encoder: LEM (long expressive memory) and LSTM.
"""
from typing import NamedTuple

import torch
from torch import nn

from app.nn.core import Dense, add, mul, sigmoid, tanh


class LemState(NamedTuple):
    """Hidden states (z, y) of a LEM cell."""
    z: torch.Tensor
    y: torch.Tensor


class LemCell(nn.Module):
    """
    One LEM step:

        dt_n     = dt * sigmoid(W1 y + V1 u + b1)
        dtbar_n  = dt * sigmoid(W2 y + V2 u + b2)
        z_n      = (1 - dt_n) * z + dt_n * tanh(Wz y + Vz u + bz)
        y_n      = (1 - dtbar_n) * y + dtbar_n * tanh(Wy z_n + Vy u + by)

    The input maps V1, V2, Vz, Vy (with the four biases) are one fused
    layer, as are W1, W2, Wz acting on y.
    """

    def __init__(self, in_features: int, hidden: int, dt: float = 1.0):
        super().__init__()
        self.hidden = hidden
        self.dt = dt
        self.input_map = Dense(in_features, 4 * hidden)
        self.state_map = Dense(hidden, 3 * hidden, bias=False)
        self.z_map = Dense(hidden, hidden, bias=False)

    def initial_state(self, batch_shape, like: torch.Tensor) -> LemState:
        zeros = like.new_zeros(tuple(batch_shape) + (self.hidden,))
        return LemState(zeros, zeros.clone())

    def forward(self, state: LemState, u: torch.Tensor) -> LemState:
        v1, v2, vz, vy = self.input_map(u).chunk(4, dim=-1)
        w1, w2, wz = self.state_map(state.y).chunk(3, dim=-1)

        dt_n = self.dt * sigmoid(add(w1, v1))
        dtbar_n = self.dt * sigmoid(add(w2, v2))
        z = add(mul(1.0 - dt_n, state.z), mul(dt_n, tanh(add(wz, vz))))
        y = add(mul(1.0 - dtbar_n, state.y), mul(dtbar_n, tanh(add(self.z_map(z), vy))))
        return LemState(z, y)

    def gates(self, state: LemState, u: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        """The multi-rate steps (dt_n, dtbar_n) a forward call would use."""
        v1, v2, _, _ = self.input_map(u).chunk(4, dim=-1)
        w1, w2, _ = self.state_map(state.y).chunk(3, dim=-1)
        return self.dt * sigmoid(w1 + v1), self.dt * sigmoid(w2 + v2)


class LstmCell(nn.Module):
    """
    Standard LSTM step with gates ordered (i, f, g, o) and separate
    input-side and hidden-side bias vectors.
    """

    def __init__(self, in_features: int, hidden: int):
        super().__init__()
        self.hidden = hidden
        self.input_map = Dense(in_features, 4 * hidden)
        self.hidden_map = Dense(hidden, 4 * hidden)

    def initial_state(self, batch_shape, like: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        zeros = like.new_zeros(tuple(batch_shape) + (self.hidden,))
        return zeros, zeros.clone()

    def forward(
        self,
        state: tuple[torch.Tensor, torch.Tensor],
        u: torch.Tensor
    ) -> tuple[torch.Tensor, torch.Tensor]:
        h, c = state
        gates = add(self.input_map(u), self.hidden_map(h))
        i, f, g, o = gates.chunk(4, dim=-1)
        c = add(mul(sigmoid(f), c), mul(sigmoid(i), tanh(g)))
        h = mul(sigmoid(o), tanh(c))
        return h, c
