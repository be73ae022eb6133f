"""
The autoregressive solver: encoder -> processor layers -> decoder.

One forward call maps the K-lagged window u^{k-K:k} to u^{k:k+K}. The six
ablation variants differ only in the encoder kind and whether processor
layers are gated.
"""
import logging

import torch
from torch import nn

from app.graph import GraphTopology
from app.models import MODEL_VARIANTS, ExperimentId, ModelConfig
from app.network.decoder import apply_differences, build_decoder
from app.network.encoder import FfnEncoder, RecurrentEncoder, broadcast_nodes, flatten_window
from app.network.processor import EdgeContext, GatedLayer, PlainLayer
from app.nn.params import ParamStore, init_params

logger = logging.getLogger(__name__)

# Gradient-check profile
TINY_N_X = 12
TINY_K = 4
TINY_N_HID = 8
TINY_N_LAYERS = 2


class MSMPSolver(nn.Module):
    """
    Encode-process-decode network over the periodic grid graph.

    Tensors are batched: windows are (B, K, N, C), eta is (B, d_eta),
    t_k is the time of the last input step, shape (B,).
    """

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        c = config
        if c.encoder == "ffn":
            self.encoder = FfnEncoder(c.K, c.n_ch, c.d_eta, c.n_hid)
        else:
            self.encoder = RecurrentEncoder(c.encoder, c.n_ch, c.d_eta, c.n_hid, c.lem_dt)

        layer_cls = GatedLayer if c.gated else PlainLayer
        self.layers = nn.ModuleList([
            layer_cls(c.n_hid, c.n_ch * c.K, c.d_eta) for _ in range(c.n_layers)
        ])
        self.decoder = build_decoder(c.n_hid, c.K, c.n_ch, c.decoder_kernels)

    @property
    def variant(self) -> str:
        return self.config.variant

    def edge_context(
        self,
        window: torch.Tensor,
        graph: GraphTopology,
        eta: torch.Tensor
    ) -> EdgeContext:
        b = window.shape[0]
        src = torch.as_tensor(graph.src, dtype=torch.long, device=window.device)
        dst = torch.as_tensor(graph.dst, dtype=torch.long, device=window.device)
        flat = flatten_window(window)
        rel_pos = torch.as_tensor(graph.relative_positions(), dtype=window.dtype, device=window.device)
        return EdgeContext(
            src=src,
            dst=dst,
            n_nodes=graph.n_nodes,
            u_diff=flat[:, dst] - flat[:, src],
            rel_pos=rel_pos[None, :, None].expand(b, graph.n_edges, 1),
            eta_edges=broadcast_nodes(eta, graph.n_edges),
            eta_nodes=broadcast_nodes(eta, graph.n_nodes),
        )

    def process(
        self,
        window: torch.Tensor,
        graph: GraphTopology,
        eta: torch.Tensor,
        t_k: torch.Tensor,
        dt: torch.Tensor
    ) -> torch.Tensor:
        """Final node features X^L, shape (B, N, n_hid)."""
        x = torch.as_tensor(graph.x, dtype=window.dtype, device=window.device)
        lags = torch.arange(self.config.K - 1, -1, -1, dtype=window.dtype, device=window.device)
        step_times = t_k[:, None] - lags[None, :] * dt[:, None]

        X = self.encoder(window, x, t_k, eta, step_times)
        ctx = self.edge_context(window, graph, eta)
        for layer in self.layers:
            X = layer(X, ctx)
        return X

    def forward(
        self,
        window: torch.Tensor,
        graph: GraphTopology,
        eta: torch.Tensor,
        t_k: torch.Tensor | float,
        dt: torch.Tensor | float
    ) -> torch.Tensor:
        """
        Predict the next K steps.

        Args:
            window: (B, K, N, C) input steps
            graph: Topology over the N nodes
            eta: (B, d_eta) equation parameters
            t_k: Time of the last input step, scalar or (B,)
            dt: Uniform time step, scalar or (B,)

        Returns:
            (B, K, N, C) predicted steps
        """
        b = window.shape[0]
        t_k = torch.as_tensor(t_k, dtype=window.dtype, device=window.device).expand(b)
        dt = torch.as_tensor(dt, dtype=window.dtype, device=window.device).expand(b)
        eta = eta.to(window).reshape(b, self.config.d_eta)

        X = self.process(window, graph, eta, t_k, dt)
        d = self.decoder.differences(X)
        return apply_differences(window[:, -1], d, dt)


def build_model(
    config: ModelConfig,
    seed: int = 0,
    dtype: torch.dtype = torch.float32
) -> tuple[MSMPSolver, ParamStore]:
    """Construct and initialize a solver."""
    model = MSMPSolver(config).to(dtype)
    store = init_params(model, seed)
    logger.info(
        f"Built {config.variant} (n_hid={config.n_hid}, layers={config.n_layers}, "
        f"K={config.K}, n_ch={config.n_ch}, d_eta={config.d_eta}): {store.total_count} parameters"
    )
    return model, store


def zero_final_conv(model: MSMPSolver) -> None:
    """Zero the decoder's last convolution so the model predicts persistence."""
    with torch.no_grad():
        model.decoder.final_conv.weight.zero_()
        model.decoder.final_conv.bias.zero_()


def count_parameters(config: ModelConfig) -> int:
    return ParamStore(MSMPSolver(config)).total_count


def expected_eta_delta(variant: str, n_hid: int = 128, n_layers: int = 6) -> int:
    """
    Parameters added by one extra equation-parameter input.

    Each MPNN gains one input column in phi and in psi; the encoder gains one
    column in its first layer (FFN) or in its four fused input maps (LEM/LSTM).
    """
    encoder, gated = MODEL_VARIANTS[variant]
    encoder_delta = 1 if encoder == "ffn" else 4
    mpnns = n_layers * (2 if gated else 1)
    return (encoder_delta + 2 * mpnns) * n_hid


def parameter_table(n_hid: int = 128, n_layers: int = 6, K: int = 25) -> dict[str, dict[str, int]]:
    """Parameter count of every variant on every experiment."""
    table = {}
    for variant in MODEL_VARIANTS:
        table[variant] = {
            experiment.slug: count_parameters(ModelConfig.for_variant(
                variant, experiment, n_hid=n_hid, n_layers=n_layers, K=K
            ))
            for experiment in ExperimentId
        }
    return table


def format_parameter_table(table: dict[str, dict[str, int]]) -> str:
    experiments = [e.slug for e in ExperimentId]
    lines = [
        "| Model | " + " | ".join(experiments) + " |",
        "|" + "---|" * (len(experiments) + 1),
    ]
    for variant, counts in table.items():
        lines.append(f"| {variant} | " + " | ".join(str(counts[e]) for e in experiments) + " |")
    return "\n".join(lines)


def tiny_model_config(variant: str, experiment: ExperimentId = ExperimentId.E1) -> ModelConfig:
    """Small float64-friendly profile for gradient checks."""
    return ModelConfig.for_variant(
        variant,
        experiment,
        n_hid=TINY_N_HID,
        n_layers=TINY_N_LAYERS,
        K=TINY_K,
    )
