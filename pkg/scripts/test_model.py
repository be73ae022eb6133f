#!/usr/bin/env python3
"""
Tests for the model family: recurrent cells, encoders, message passing,
gating, decoders, the full solver, parameter counts and checkpoints.
"""
import sys
from pathlib import Path
sys.path.insert(0, str(Path(__file__).parent.parent))

import pytest
import torch

from app.errors import CheckpointFormatError, ConfigurationError
from app.graph import build_graph
from app.models import MODEL_VARIANTS, ExperimentId, ModelConfig
from app.network.cells import LemCell, LemState, LstmCell
from app.network.checkpoint import Domain, load_checkpoint, read_checkpoint, save_checkpoint
from app.network.decoder import (
    ScalarDecoder,
    SystemDecoder,
    apply_differences,
    resolve_decoder_kernels,
    validate_decoder_kernels,
)
from app.network.encoder import FfnEncoder, RecurrentEncoder
from app.network.processor import EdgeContext, GatedLayer, MpnnLayer, gate_combine
from app.network.solver import (
    TINY_K,
    TINY_N_X,
    build_model,
    count_parameters,
    expected_eta_delta,
    tiny_model_config,
    zero_final_conv,
)
from app.nn.gradcheck import backward, grad_check
from app.nn.params import ParamStore, init_params

F64 = torch.float64


def random_inputs(config: ModelConfig, n_x: int, batch: int = 2, seed: int = 0):
    generator = torch.Generator().manual_seed(seed)
    window = torch.randn(batch, config.K, n_x, config.n_ch, generator=generator, dtype=F64)
    eta = torch.rand(batch, config.d_eta, generator=generator, dtype=F64)
    return window, eta


def edge_context(src, dst, n_nodes, window_features, d_eta, batch=1, seed=0) -> EdgeContext:
    generator = torch.Generator().manual_seed(seed)
    src, dst = torch.tensor(src, dtype=torch.long), torch.tensor(dst, dtype=torch.long)
    eta = torch.rand(batch, d_eta, generator=generator, dtype=F64)
    n_edges = src.shape[0]
    return EdgeContext(
        src=src,
        dst=dst,
        n_nodes=n_nodes,
        u_diff=torch.randn(batch, n_edges, window_features, generator=generator, dtype=F64),
        rel_pos=torch.randn(batch, n_edges, 1, generator=generator, dtype=F64),
        eta_edges=eta[:, None, :].expand(batch, n_edges, d_eta),
        eta_nodes=eta[:, None, :].expand(batch, n_nodes, d_eta),
    )


INSTANCES = 100


def swish_reference(v: torch.Tensor) -> torch.Tensor:
    return v / (1.0 + torch.exp(-v))


def mlp_reference(net, v: torch.Tensor) -> torch.Tensor:
    """Two-layer network written out from its raw weights, one vector at a time."""
    W1, b1 = net.first.weight.detach(), net.first.bias.detach()
    W2, b2 = net.second.weight.detach(), net.second.bias.detach()
    out = W2 @ swish_reference(W1 @ v + b1) + b2
    return swish_reference(out) if net.final_activation else out


def mpnn_reference(layer: MpnnLayer, X: torch.Tensor, ctx: EdgeContext) -> torch.Tensor:
    """Node-by-node loop over the edge list of one message-passing layer."""
    batch, n_nodes, hidden = X.shape
    out = torch.empty_like(X)
    for b in range(batch):
        aggregated = torch.zeros(n_nodes, hidden, dtype=X.dtype)
        for e, (j, i) in enumerate(zip(ctx.src.tolist(), ctx.dst.tolist())):
            edge_in = torch.cat([X[b, i], X[b, j], ctx.u_diff[b, e], ctx.rel_pos[b, e], ctx.eta_edges[b, e]])
            aggregated[i] += mlp_reference(layer.message_net, edge_in)
        for i in range(n_nodes):
            node_in = torch.cat([X[b, i], aggregated[i], ctx.eta_nodes[b, i]])
            out[b, i] = mlp_reference(layer.update_net, node_in)
    return out


def randint(generator: torch.Generator, low: int, high: int) -> int:
    return int(torch.randint(low, high + 1, (1,), generator=generator))


def random_graph(generator: torch.Generator, max_nodes: int = 7):
    """Random directed multigraph, self-loops and isolated nodes allowed."""
    n_nodes = randint(generator, 1, max_nodes)
    n_edges = randint(generator, 0, 3 * n_nodes)
    src = torch.randint(0, n_nodes, (n_edges,), generator=generator).tolist()
    dst = torch.randint(0, n_nodes, (n_edges,), generator=generator).tolist()
    return src, dst, n_nodes


def scale_parameters(module, factor: float):
    with torch.no_grad():
        for p in module.parameters():
            p.mul_(factor)
    return module


# ============================================================================
# LEM and LSTM cells
# ============================================================================

def test_lem_zero_weights_halve_the_state():
    cell = LemCell(3, 4, dt=1.0).double()
    ones = torch.ones(1, 4, dtype=F64)
    state = cell(LemState(ones, ones.clone()), torch.randn(1, 3, dtype=F64))
    torch.testing.assert_close(state.z, torch.full((1, 4), 0.5, dtype=F64))
    torch.testing.assert_close(state.y, torch.full((1, 4), 0.5, dtype=F64))


def test_lem_zero_state_is_fixed_point():
    cell = LemCell(3, 4).double()
    state = cell.initial_state((2,), torch.zeros(1, dtype=F64))
    for _ in range(20):
        state = cell(state, torch.zeros(2, 3, dtype=F64))
    assert torch.all(state.z == 0) and torch.all(state.y == 0)


def test_lem_matches_straight_line_update():
    for seed in range(INSTANCES):
        generator = torch.Generator().manual_seed(seed)
        n_in, H = randint(generator, 1, 4), randint(generator, 1, 8)
        dt = 0.05 + 1.45 * float(torch.rand(1, generator=generator))
        cell = init_params(LemCell(n_in, H, dt=dt).double(), seed=seed).module
        scale_parameters(cell, 1.0 + 3.0 * float(torch.rand(1, generator=generator)))

        V = cell.input_map.weight.detach()
        b = cell.input_map.bias.detach()
        W = cell.state_map.weight.detach()
        W_y = cell.z_map.weight.detach()
        V1, V2, Vz, Vy = V[:H], V[H:2 * H], V[2 * H:3 * H], V[3 * H:]
        b1, b2, bz, by = b[:H], b[H:2 * H], b[2 * H:3 * H], b[3 * H:]
        W1, W2, Wz = W[:H], W[H:2 * H], W[2 * H:]

        z = torch.randn(H, generator=generator, dtype=F64)
        y = torch.randn(H, generator=generator, dtype=F64)
        state = LemState(z[None], y[None])
        for _ in range(10):
            u = 2.0 * torch.randn(n_in, generator=generator, dtype=F64)
            step = dt * torch.sigmoid(W1 @ y + V1 @ u + b1)
            step_bar = dt * torch.sigmoid(W2 @ y + V2 @ u + b2)
            z = (1 - step) * z + step * torch.tanh(Wz @ y + Vz @ u + bz)
            y = (1 - step_bar) * y + step_bar * torch.tanh(W_y @ z + Vy @ u + by)
            state = cell(state, u[None])
        torch.testing.assert_close(state.z[0], z, atol=1e-12, rtol=0, msg=f"seed {seed}")
        torch.testing.assert_close(state.y[0], y, atol=1e-12, rtol=0, msg=f"seed {seed}")


def test_lem_bounds_over_many_steps():
    cell = init_params(LemCell(3, 16, dt=1.0).double(), seed=9).module
    generator = torch.Generator().manual_seed(1)
    y0 = 2.0 * torch.randn(8, 16, generator=generator, dtype=F64)
    state = LemState(torch.randn(8, 16, generator=generator, dtype=F64), y0)
    bound = max(float(y0.abs().max()), 1.0)
    for _ in range(1000):
        u = torch.randn(8, 3, generator=generator, dtype=F64)
        step, step_bar = cell.gates(state, u)
        assert torch.all((step > 0) & (step < 1))
        assert torch.all((step_bar > 0) & (step_bar < 1))
        state = cell(state, u)
        assert float(state.y.abs().max()) <= bound + 1e-12


def test_lstm_parameter_count_and_zero_state():
    cell = LstmCell(3, 128)
    assert ParamStore(cell).total_count == 68096
    assert ParamStore(cell).total_count - ParamStore(LemCell(3, 128)).total_count == 512

    small = LstmCell(3, 4).double()
    h, c = small.initial_state((2,), torch.zeros(1, dtype=F64))
    for _ in range(5):
        h, c = small((h, c), torch.randn(2, 3, dtype=F64))
    assert torch.all(h == 0) and torch.all(c == 0)


def test_lstm_matches_textbook_step():
    for seed in range(INSTANCES):
        generator = torch.Generator().manual_seed(seed)
        n_in, H = randint(generator, 1, 4), randint(generator, 1, 8)
        cell = init_params(LstmCell(n_in, H).double(), seed=seed).module
        scale_parameters(cell, 1.0 + 3.0 * float(torch.rand(1, generator=generator)))
        W_i, b_i = cell.input_map.weight.detach(), cell.input_map.bias.detach()
        W_h, b_h = cell.hidden_map.weight.detach(), cell.hidden_map.bias.detach()

        h = torch.randn(H, generator=generator, dtype=F64)
        c = torch.randn(H, generator=generator, dtype=F64)
        state = (h[None], c[None])
        for _ in range(5):
            u = 2.0 * torch.randn(n_in, generator=generator, dtype=F64)
            pre = W_i @ u + b_i + W_h @ h + b_h
            i, f, g, o = (pre[n * H:(n + 1) * H] for n in range(4))
            c = torch.sigmoid(f) * c + torch.sigmoid(i) * torch.tanh(g)
            h = torch.sigmoid(o) * torch.tanh(c)
            state = cell(state, u[None])
        torch.testing.assert_close(state[1][0], c, atol=1e-12, rtol=0, msg=f"seed {seed}")
        torch.testing.assert_close(state[0][0], h, atol=1e-12, rtol=0, msg=f"seed {seed}")


# ============================================================================
# Encoders
# ============================================================================

def test_ffn_encoder_input_dims():
    assert FfnEncoder(25, 1, 0, 128).in_features == 27
    assert FfnEncoder(25, 2, 2, 128).in_features == 54


def test_zero_weight_encoders_output_zero():
    window = torch.randn(2, 25, 10, 1, dtype=F64)
    x, t_k, eta = torch.linspace(0, 1, 10, dtype=F64), torch.ones(2, dtype=F64), torch.zeros(2, 0, dtype=F64)
    step_times = torch.ones(2, 25, dtype=F64)
    for encoder in (FfnEncoder(25, 1, 0, 16), RecurrentEncoder("lem", 1, 0, 16), RecurrentEncoder("lstm", 1, 0, 16)):
        X = encoder.double()(window, x, t_k, eta, step_times)
        assert X.shape == (2, 10, 16)
        assert torch.all(X == 0)


def test_recurrent_encoder_step_width():
    assert RecurrentEncoder("lem", 1, 0, 128).step_features == 3
    assert RecurrentEncoder("lstm", 2, 2, 128).step_features == 6
    with pytest.raises(ValueError):
        RecurrentEncoder("gru", 1, 0, 8)


def test_single_step_sequence_is_one_cell_step():
    encoder = init_params(RecurrentEncoder("lem", 1, 1, 6).double(), seed=3).module
    window = torch.randn(1, 1, 3, 1, dtype=F64)
    x = torch.tensor([0.0, 1.0, 2.0], dtype=F64)
    eta = torch.tensor([[0.1]], dtype=F64)
    step_times = torch.tensor([[0.5]], dtype=F64)

    inputs = torch.cat([
        window[0, 0],
        x[:, None],
        torch.full((3, 1), 0.5, dtype=F64),
        torch.full((3, 1), 0.1, dtype=F64),
    ], dim=-1)
    state = encoder.cell(encoder.cell.initial_state((3,), inputs), inputs)
    expected = encoder.mlp(state.y)

    X = encoder(window, x, torch.tensor([0.5], dtype=F64), eta, step_times)
    torch.testing.assert_close(X[0], expected, atol=1e-12, rtol=0)


# ============================================================================
# Message passing and gating
# ============================================================================

def test_message_input_width_for_e2():
    layer = MpnnLayer(128, 25, 1)
    assert layer.message_net.first.in_features == 283
    assert layer.update_net.first.in_features == 257


def test_edgeless_graph_aggregates_zero():
    layer = init_params(MpnnLayer(4, 2, 1).double(), seed=0).module
    ctx = edge_context([], [], 3, 2, 1)
    X = torch.randn(1, 3, 4, dtype=F64)
    expected = layer.update_net(torch.cat([X, torch.zeros(1, 3, 4, dtype=F64), ctx.eta_nodes], dim=-1))
    torch.testing.assert_close(layer(X, ctx), expected, atol=1e-12, rtol=0)


def test_path_graph_aggregation_matches_manual_sum():
    src, dst = [0, 1, 1, 2], [1, 0, 2, 1]
    layer = init_params(MpnnLayer(4, 2, 1).double(), seed=1).module
    ctx = edge_context(src, dst, 3, 2, 1, seed=2)
    X = torch.randn(1, 3, 4, dtype=F64)
    torch.testing.assert_close(layer(X, ctx), mpnn_reference(layer, X, ctx), atol=1e-12, rtol=0)


def test_message_passing_matches_edge_loop_on_random_graphs():
    for seed in range(INSTANCES):
        generator = torch.Generator().manual_seed(seed)
        src, dst, n_nodes = random_graph(generator)
        hidden, window_features, d_eta = randint(generator, 1, 6), randint(generator, 1, 4), randint(generator, 0, 2)
        batch = randint(generator, 1, 2)
        layer = init_params(MpnnLayer(hidden, window_features, d_eta).double(), seed=seed).module
        scale_parameters(layer, 1.0 + 2.0 * float(torch.rand(1, generator=generator)))
        ctx = edge_context(src, dst, n_nodes, window_features, d_eta, batch=batch, seed=seed)
        X = 2.0 * torch.randn(batch, n_nodes, hidden, generator=generator, dtype=F64)
        torch.testing.assert_close(layer(X, ctx), mpnn_reference(layer, X, ctx), atol=1e-12, rtol=0, msg=f"seed {seed}")


def test_gated_layer_matches_reference_on_random_graphs():
    for seed in range(INSTANCES):
        generator = torch.Generator().manual_seed(seed)
        src, dst, n_nodes = random_graph(generator)
        hidden, window_features, d_eta = randint(generator, 1, 6), randint(generator, 1, 4), randint(generator, 0, 2)
        layer = init_params(GatedLayer(hidden, window_features, d_eta).double(), seed=seed).module
        scale_parameters(layer, 1.0 + 2.0 * float(torch.rand(1, generator=generator)))
        ctx = edge_context(src, dst, n_nodes, window_features, d_eta, batch=2, seed=seed)
        X = 2.0 * torch.randn(2, n_nodes, hidden, generator=generator, dtype=F64)

        s = torch.sigmoid(mpnn_reference(layer.gate, X, ctx))
        expected = (1 - s) * X + s * torch.tanh(mpnn_reference(layer.update, X, ctx))
        torch.testing.assert_close(layer(X, ctx), expected, atol=1e-12, rtol=0, msg=f"seed {seed}")


@pytest.mark.parametrize("logit,closed", [(-40.0, True), (40.0, False)])
def test_saturated_gate(logit, closed):
    layer = init_params(GatedLayer(4, 2, 0).double(), seed=3).module
    with torch.no_grad():
        layer.gate.update_net.second.weight.zero_()
        layer.gate.update_net.second.bias.fill_(logit)
    ctx = edge_context([0, 1, 1, 2], [1, 0, 2, 1], 3, 2, 0)
    X = torch.randn(1, 3, 4, dtype=F64)
    expected = X if closed else torch.tanh(layer.update(X, ctx))
    torch.testing.assert_close(layer(X, ctx), expected, atol=1e-12, rtol=0)


def test_gated_layer_is_convex_combination():
    layer = init_params(GatedLayer(6, 3, 1).double(), seed=5).module
    ctx = edge_context([0, 1, 1, 2, 2, 3, 3, 0], [1, 0, 2, 1, 3, 2, 0, 3], 4, 3, 1, batch=2)
    X = 3.0 * torch.randn(2, 4, 6, dtype=F64)

    gate, candidate = layer.gate(X, ctx), layer.update(X, ctx)
    s = torch.sigmoid(gate)
    direct = (1 - s) * X + s * torch.tanh(candidate)
    out = layer(X, ctx)
    torch.testing.assert_close(out, direct, atol=1e-12, rtol=0)

    low = torch.minimum(X, torch.tanh(candidate))
    high = torch.maximum(X, torch.tanh(candidate))
    assert torch.all(out >= low - 1e-12) and torch.all(out <= high + 1e-12)
    torch.testing.assert_close(gate_combine(X, gate, candidate), out)


# ============================================================================
# Decoders
# ============================================================================

@pytest.mark.parametrize("n_hid,K,expected", [
    (128, 25, (16, 4, 5)),
    (8, 4, (1, 1, 5)),
    (32, 4, (4, 4, 5)),
    (64, 25, (8, 2, 5)),
])
def test_resolved_decoder_kernels(n_hid, K, expected):
    assert resolve_decoder_kernels(n_hid, K) == expected
    validate_decoder_kernels(n_hid, K, expected)


def test_invalid_decoder_kernels_raise():
    with pytest.raises(ConfigurationError):
        validate_decoder_kernels(128, 25, (16, 4, 4))
    with pytest.raises(ConfigurationError):
        ScalarDecoder(128, 25, (200, 1, 5))


def test_decoder_output_shapes():
    X = torch.randn(2, 7, 128)
    scalar = ScalarDecoder(128, 25)
    assert scalar.first.output_length(128) == 29
    assert scalar.differences(X).shape == (2, 25, 7, 1)
    assert SystemDecoder(128, 25, 2).differences(X).shape == (2, 25, 7, 2)


def test_apply_differences_update_rule():
    u_last = torch.ones(1, 3, 1, dtype=F64)
    d = torch.full((1, 25, 3, 1), 2.0, dtype=F64)
    out = apply_differences(u_last, d, 0.016)
    torch.testing.assert_close(out[0, 0], torch.full((3, 1), 1.032, dtype=F64))
    torch.testing.assert_close(out[0, 24], torch.full((3, 1), 1.0 + 25 * 0.032, dtype=F64))
    torch.testing.assert_close(apply_differences(u_last, torch.zeros_like(d), 0.016), u_last[:, None].expand_as(d))


# ============================================================================
# Full solver
# ============================================================================

def test_e1_forward_shape():
    config = ModelConfig.for_variant("mp-pde", ExperimentId.E1)
    model, _ = build_model(config, seed=0)
    graph = build_graph(100, 16.0)
    with torch.no_grad():
        out = model(torch.randn(1, 25, 100, 1), graph, torch.zeros(1, 0), 24 * 4.0 / 249, 4.0 / 249)
    assert out.shape == (1, 25, 100, 1)
    assert torch.all(torch.isfinite(out))


@pytest.mark.parametrize("experiment", [ExperimentId.E2, ExperimentId.MS_WAVE])
def test_zero_final_conv_gives_persistence(experiment):
    config = tiny_model_config("msmp-pde", experiment)
    model, _ = build_model(config, seed=1, dtype=F64)
    zero_final_conv(model)
    window, eta = random_inputs(config, TINY_N_X)
    with torch.no_grad():
        out = model(window, build_graph(TINY_N_X, 16.0), eta, 1.0, 0.1)
    torch.testing.assert_close(out, window[:, -1:].expand_as(out), atol=0, rtol=0)


def test_f32_and_f64_forward_agree():
    config = tiny_model_config("msmp-pde", ExperimentId.E2)
    model64, _ = build_model(config, seed=2, dtype=F64)
    model32, _ = build_model(config, seed=2, dtype=torch.float32)
    window, eta = random_inputs(config, TINY_N_X, seed=3)
    graph = build_graph(TINY_N_X, 16.0)
    with torch.no_grad():
        out64 = model64(window, graph, eta, 0.5, 0.1)
        out32 = model32(window.float(), graph, eta.float(), 0.5, 0.1).double()
    assert float(torch.linalg.norm(out32 - out64) / torch.linalg.norm(out64)) < 1e-4


def test_forward_is_deterministic():
    config = tiny_model_config("lstmgated", ExperimentId.E2)
    model, _ = build_model(config, seed=0, dtype=F64)
    window, eta = random_inputs(config, TINY_N_X)
    graph = build_graph(TINY_N_X, 16.0)
    with torch.no_grad():
        assert torch.equal(model(window, graph, eta, 0.3, 0.1), model(window, graph, eta, 0.3, 0.1))


@pytest.mark.parametrize("variant", list(MODEL_VARIANTS))
def test_ring_rotation_equivariance(variant):
    config = tiny_model_config(variant, ExperimentId.E2)
    model, _ = build_model(config, seed=4, dtype=F64)
    graph = build_graph(TINY_N_X, 16.0)
    rotated = graph.rolled(1)
    window, eta = random_inputs(config, TINY_N_X, seed=6)
    t_k, dt = torch.tensor([0.3, 0.6], dtype=F64), torch.tensor([0.1, 0.1], dtype=F64)

    with torch.no_grad():
        features = model.process(window, graph, eta, t_k, dt)
        features_rot = model.process(torch.roll(window, 1, dims=2), rotated, eta, t_k, dt)
        out = model(window, graph, eta, t_k, dt)
        out_rot = model(torch.roll(window, 1, dims=2), rotated, eta, t_k, dt)
    torch.testing.assert_close(features_rot, torch.roll(features, 1, dims=1), atol=1e-10, rtol=0)
    torch.testing.assert_close(out_rot, torch.roll(out, 1, dims=2), atol=1e-10, rtol=0)


# ============================================================================
# Parameter counts
# ============================================================================

@pytest.mark.parametrize("variant,multiple", [
    ("mp-pde", 13), ("lstm", 16), ("lem", 16), ("gated", 25), ("lstmgated", 28), ("msmp-pde", 28),
])
def test_eta_parameter_delta(variant, multiple):
    e1 = count_parameters(ModelConfig.for_variant(variant, ExperimentId.E1))
    e2 = count_parameters(ModelConfig.for_variant(variant, ExperimentId.E2))
    assert e2 - e1 == expected_eta_delta(variant) == multiple * 128


def test_encoder_parameter_differences():
    counts = {v: count_parameters(ModelConfig.for_variant(v, ExperimentId.E1)) for v in MODEL_VARIANTS}
    assert counts["mp-pde"] == 633137
    assert counts["lem"] - counts["mp-pde"] == 80512
    assert counts["lstm"] - counts["lem"] == 512


def test_build_model_reports_store():
    model, store = build_model(tiny_model_config("gated"), seed=0)
    assert store.module is model
    assert model.variant == "gated"
    assert store.total_count == count_parameters(tiny_model_config("gated"))


# ============================================================================
# Checkpoints
# ============================================================================

def test_checkpoint_round_trip(tmp_path):
    config = tiny_model_config("msmp-pde", ExperimentId.MS_WAVE)
    model, store = build_model(config, seed=5)
    domain = Domain(ExperimentId.MS_WAVE, 16.0, 4.0, 40, TINY_N_X)
    path = save_checkpoint(model, domain, tmp_path / "model.msmc")

    loaded, loaded_domain = load_checkpoint(path)
    assert loaded.config == config
    assert loaded_domain == domain
    assert torch.equal(ParamStore(loaded).flat(), store.flat())

    window, eta = random_inputs(config, TINY_N_X)
    graph = read_checkpoint(path).graph()
    with torch.no_grad():
        expected = model(window.float(), graph, eta.float(), 1.0, domain.dt)
        assert torch.equal(loaded(window.float(), graph, eta.float(), 1.0, domain.dt), expected)


def test_checkpoint_keeps_explicit_kernels(tmp_path):
    config = tiny_model_config("mp-pde").model_copy(update={"n_hid": 32})
    model, _ = build_model(config)
    path = save_checkpoint(model, Domain(ExperimentId.E1, 16.0, 4.0, 40, TINY_N_X), tmp_path / "k.msmc")
    assert read_checkpoint(path).config.decoder_kernels == (4, 4, 5)


def test_corrupt_checkpoints_are_rejected(tmp_path):
    model, _ = build_model(tiny_model_config("lem"))
    path = save_checkpoint(model, Domain(ExperimentId.E1, 16.0, 4.0, 40, TINY_N_X), tmp_path / "c.msmc")
    data = path.read_bytes()

    path.write_bytes(data[:-4])
    with pytest.raises(CheckpointFormatError):
        read_checkpoint(path)
    path.write_bytes(b"XXXX" + data[4:])
    with pytest.raises(CheckpointFormatError):
        read_checkpoint(path)


# ============================================================================
# Gradient checks
# ============================================================================

@pytest.mark.parametrize("variant", list(MODEL_VARIANTS))
def test_tiny_model_gradients(variant):
    config = tiny_model_config(variant, ExperimentId.E2)
    model, store = build_model(config, seed=7, dtype=F64)
    graph = build_graph(TINY_N_X, 16.0)
    window, eta = random_inputs(config, TINY_N_X, seed=8)
    target = torch.randn(2, TINY_K, TINY_N_X, 1, dtype=F64)

    def loss():
        return ((model(window, graph, eta, 0.3, 0.1) - target) ** 2).mean()

    assert grad_check(loss, store) < 1e-4


def test_tiny_system_model_gradients():
    config = tiny_model_config("msmp-pde", ExperimentId.MS_WAVE)
    model, store = build_model(config, seed=3, dtype=F64)
    graph = build_graph(TINY_N_X, 16.0)
    window, eta = random_inputs(config, TINY_N_X, seed=1)

    def loss():
        return (model(window, graph, eta, 0.3, 0.1) ** 2).mean()

    assert grad_check(loss, store) < 1e-4


@pytest.mark.parametrize("variant", ["mp-pde", "msmp-pde"])
def test_tiny_model_gradient_check_flags_one_percent_error(variant):
    config = tiny_model_config(variant, ExperimentId.MS_WAVE)
    model, store = build_model(config, seed=3, dtype=F64)
    graph = build_graph(TINY_N_X, 16.0)
    window, eta = random_inputs(config, TINY_N_X, seed=1)

    def loss():
        return (model(window, graph, eta, 0.3, 0.1) ** 2).mean()

    assert grad_check(loss, store, analytic=1.01 * backward(loss(), store)) > 5e-3


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
