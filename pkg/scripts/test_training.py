#!/usr/bin/env python3
"""
Tests for the loss, AdamW, the learning-rate schedule and the pushforward
trainer.
"""
import sys
from pathlib import Path
sys.path.insert(0, str(Path(__file__).parent.parent))

import json
import math

import numpy as np
import pytest
import torch

from app.data.generate import generate_sample
from app.errors import ConfigurationError, ShapeError, TrainingError
from app.graph import build_graph
from app.models import ExperimentId, ModelConfig, TrainConfig
from app.network.checkpoint import Domain, load_checkpoint
from app.network.solver import TINY_K, TINY_N_X, build_model, tiny_model_config
from app.nn.params import ParamStore
from app.solvers.trajectory import Trajectory, uniform_space
from app.training.optimizer import AdamW, adamw_update, lr_at
from app.training.trainer import Trainer, rmse_loss, train_model

F64 = torch.float64
L = 16.0


def travelling_waves(n: int, n_t: int = 20, n_x: int = TINY_N_X, dt: float = 0.1, seed: int = 0) -> list[Trajectory]:
    """Single-mode waves moving at a per-sample speed stored as eta."""
    rng = np.random.default_rng(seed)
    x = uniform_space(n_x, L)
    t = np.arange(n_t) * dt
    trajs = []
    for _ in range(n):
        speed, phase = rng.uniform(0.5, 1.5), rng.uniform(0, 2 * np.pi)
        u = np.sin(2 * np.pi * (x[None, :] - speed * t[:, None]) / L + phase)
        trajs.append(Trajectory(u=u[:, :, None], L=L, T=dt * (n_t - 1), eta=np.array([speed])))
    return trajs


def tiny_trainer(trajs, valid=(), seed=0, **overrides) -> Trainer:
    model, _ = build_model(tiny_model_config("msmp-pde", ExperimentId.E2), seed=seed, dtype=F64)
    fields = {"batch_size": 4, "batches_per_epoch": 2, "epochs": 2, "seed": seed}
    fields.update(overrides)
    return Trainer(model, trajs, list(valid), build_graph(TINY_N_X, L), TrainConfig(**fields))


# ============================================================================
# Loss and schedule
# ============================================================================

def test_rmse_examples():
    target = torch.randn(2, 4, 3, 1)
    assert rmse_loss(target, target).item() == 0.0
    assert rmse_loss(target + 1.0, target).item() == pytest.approx(1.0)
    pred = torch.tensor([3.0, 4.0]) / math.sqrt(2)
    assert rmse_loss(pred, torch.zeros(2)).item() == pytest.approx(math.sqrt(12.5), rel=1e-6)
    with pytest.raises(ShapeError):
        rmse_loss(torch.zeros(2, 3), torch.zeros(3, 2))


@pytest.mark.parametrize("epoch,expected", [(0, 1e-4), (4, 1e-4), (7, 4e-5), (19, 6.4e-6)])
def test_lr_schedule(epoch, expected):
    assert lr_at(epoch) == pytest.approx(expected, rel=1e-12)


def test_lr_schedule_rejects_negative_epoch():
    with pytest.raises(ValueError):
        lr_at(-1)


# ============================================================================
# AdamW
# ============================================================================

def test_adamw_pure_decay():
    theta = torch.tensor([1.0], dtype=F64)
    zeros = torch.zeros(1, dtype=F64)
    adamw_update(theta, zeros, zeros.clone(), zeros.clone(), step=1, lr=0.1, weight_decay=0.01)
    assert theta.item() == pytest.approx(0.999, abs=1e-15)


def test_adamw_first_step():
    theta = torch.tensor([1.0], dtype=F64)
    m, v = torch.zeros(1, dtype=F64), torch.zeros(1, dtype=F64)
    adamw_update(theta, torch.ones(1, dtype=F64), m, v, step=1, lr=0.1)
    assert theta.item() == pytest.approx(1 - 0.1 / (1 + 1e-8) - 0.1 * 1e-8, abs=1e-12)
    assert m.item() == pytest.approx(0.1) and v.item() == pytest.approx(0.001)


def test_adamw_matches_torch_reference():
    torch.manual_seed(0)
    start = torch.randn(5, 3, dtype=F64)
    ours = torch.nn.Parameter(start.clone())
    reference = torch.nn.Parameter(start.clone())
    opt_ours = AdamW([ours], lr=1e-2, weight_decay=0.1)
    opt_ref = torch.optim.AdamW([reference], lr=1e-2, weight_decay=0.1, eps=1e-8)
    for _ in range(5):
        grad = torch.randn(5, 3, dtype=F64)
        ours.grad, reference.grad = grad.clone(), grad.clone()
        opt_ours.step()
        opt_ref.step()
    torch.testing.assert_close(ours.detach(), reference.detach(), atol=1e-12, rtol=0)


def test_zero_learning_rate_keeps_parameters():
    model, store = build_model(tiny_model_config("gated"), dtype=F64)
    before = store.flat()
    for p in model.parameters():
        p.grad = torch.randn_like(p)
    AdamW(model.parameters(), lr=0.0).step()
    assert torch.equal(store.flat(), before)
    with pytest.raises(ValueError):
        AdamW(model.parameters(), lr=-1.0)


# ============================================================================
# Trainer
# ============================================================================

def test_trainer_rejects_short_or_empty_data():
    with pytest.raises(ConfigurationError):
        tiny_trainer(travelling_waves(2, n_t=3 * TINY_K - 1))
    with pytest.raises(ConfigurationError):
        tiny_trainer([])


def test_default_batches_cover_all_windows():
    trainer = tiny_trainer(travelling_waves(4), batches_per_epoch=None, batch_size=2)
    # starts 4, 8, 12, 16 per trajectory
    assert trainer.batches_per_epoch == 8


def test_sampled_unrolls_stay_inside_trajectory():
    trainer = tiny_trainer(travelling_waves(3))
    depths = set()
    for _ in range(200):
        r, index, starts = trainer.sample_batch(8)
        depths.add(r)
        assert torch.all(starts % TINY_K == 0)
        assert torch.all(starts + (r + 1) * TINY_K <= trainer.n_t)
        assert torch.all((index >= 0) & (index < 3))
    assert depths == {1, 2}


def test_gather_reads_target_blocks():
    trajs = travelling_waves(2)
    trainer = tiny_trainer(trajs)
    block = trainer.gather(torch.tensor([1]), torch.tensor([4]), 2 * TINY_K)
    np.testing.assert_array_equal(block[0].numpy(), trajs[1].u[12:16])


def test_pushforward_first_call_is_detached():
    trainer = tiny_trainer(travelling_waves(2))
    window = trainer.gather(torch.tensor([0, 1]), torch.tensor([0, 0]), 0).requires_grad_(True)
    target = trainer.gather(torch.tensor([0, 1]), torch.tensor([0, 0]), 2 * TINY_K)
    eta = trainer.eta[:2]
    t_k = torch.full((2,), (TINY_K - 1) * trainer.dt, dtype=F64)

    trainer.model.zero_grad()
    trainer.pushforward_loss(window, eta, t_k, target, r=2).backward()
    assert window.grad is None
    pushed = [p.grad.clone() for p in trainer.model.parameters()]

    trainer.model.zero_grad()
    with torch.no_grad():
        first = trainer.model(window, trainer.graph, eta, t_k, trainer.dt)
    second = trainer.model(first, trainer.graph, eta, t_k + TINY_K * trainer.dt, trainer.dt)
    rmse_loss(second, target).backward()
    for got, expected in zip(pushed, (p.grad for p in trainer.model.parameters())):
        assert torch.equal(got, expected)

    trainer.pushforward_loss(window, eta, t_k, target, r=1).backward()
    assert window.grad is not None and torch.any(window.grad != 0)


def test_non_finite_loss_aborts_with_context():
    trainer = tiny_trainer(travelling_waves(2))
    trainer.store.load_flat(torch.full((trainer.store.total_count,), math.nan, dtype=F64))
    with pytest.raises(TrainingError) as excinfo:
        trainer.train_step(epoch=3, batch=7)
    assert (excinfo.value.epoch, excinfo.value.batch) == (3, 7)


def test_training_is_reproducible():
    first = tiny_trainer(travelling_waves(3), seed=4)
    second = tiny_trainer(travelling_waves(3), seed=4)
    result_a, result_b = first.fit(), second.fit()
    assert torch.equal(first.store.flat(), second.store.flat())
    assert [m.train_loss for m in result_a.curves] == [m.train_loss for m in result_b.curves]


def test_learning_rate_follows_schedule():
    trainer = tiny_trainer(travelling_waves(2), epochs=3, lr=1e-3, lr_step=1, lr_decay=0.5)
    result = trainer.fit()
    lrs = [m.lr for m in result.curves]
    assert lrs == pytest.approx([lr_at(e, 1e-3, 0.5, 1) for e in range(3)], rel=1e-12)


@pytest.mark.parametrize("lr,lr_step,lr_decay", [(1e-4, 5, 0.4), (3e-3, 2, 0.7), (1e-2, 1, 0.1)])
def test_scheduler_matches_lr_at_every_epoch(lr, lr_step, lr_decay):
    trainer = tiny_trainer(travelling_waves(2), lr=lr, lr_step=lr_step, lr_decay=lr_decay)
    for epoch in range(4 * lr_step + 3):
        assert trainer.optimizer.param_groups[0]["lr"] == lr_at(epoch, lr, lr_decay, lr_step)
        trainer.optimizer.step()
        trainer.scheduler.step()



def test_fit_keeps_best_validation_parameters():
    trainer = tiny_trainer(travelling_waves(3), valid=travelling_waves(2, seed=9), epochs=3, lr=1e-2)
    result = trainer.fit()
    errors = [m.valid_error for m in result.curves]
    assert result.best_epoch == int(np.argmin(errors))
    assert result.best_valid_error == min(errors)
    assert trainer.validate() == pytest.approx(result.best_valid_error, rel=1e-12)


def test_train_model_writes_artifacts(tmp_path):
    config = tiny_model_config("mp-pde", ExperimentId.E2)
    domain = Domain(ExperimentId.E2, L, 1.9, 20, TINY_N_X)
    train_config = TrainConfig(epochs=2, batch_size=4, batches_per_epoch=2)
    model, result = train_model(
        config, travelling_waves(4), travelling_waves(2, seed=1), train_config, domain,
        out_dir=tmp_path, dtype=F64
    )

    assert result.checkpoint == tmp_path / "checkpoint.msmc"
    lines = (tmp_path / "metrics.log").read_text().splitlines()
    assert lines[0] == "epoch\tlr\ttrain_loss\tvalid_re"
    assert len(lines) == 3
    curves = json.loads((tmp_path / "curves.json").read_text())
    assert curves["best_epoch"] == result.best_epoch
    assert len(curves["epochs"]) == 2

    loaded, loaded_domain = load_checkpoint(result.checkpoint)
    assert loaded_domain == domain
    np.testing.assert_allclose(
        ParamStore(loaded).flat().numpy(), ParamStore(model).flat().numpy(), rtol=1e-6, atol=1e-7
    )


@pytest.mark.slow
def test_ms_wave_overfit():
    n_t = 3 * TINY_K
    grid = {"n_t": n_t, "T": (n_t - 1) * 4.0 / 249, "n_x_fine": 100}
    trajs = [generate_sample(ExperimentId.MS_WAVE, 0, index, **grid) for index in range(4)]
    assert (trajs[0].n_x, trajs[0].n_ch) == (50, 2)

    config = ModelConfig.for_variant("msmp-pde", ExperimentId.MS_WAVE, n_hid=32, n_layers=2, K=TINY_K)
    model, _ = build_model(config, seed=0, dtype=F64)
    train_config = TrainConfig(
        epochs=10, batch_size=16, batches_per_epoch=50, lr=5e-3, lr_step=3, lr_decay=0.5,
        max_unroll=2, weight_decay=0.0
    )
    trainer = Trainer(model, trajs, [], build_graph(50, L), train_config)

    depths = []
    draw = trainer.sample_batch

    def recording_draw(batch_size):
        r, index, starts = draw(batch_size)
        depths.append(r)
        return r, index, starts

    trainer.sample_batch = recording_draw

    def full_loss() -> float:
        index = torch.arange(4).repeat_interleave(2)
        starts = torch.tensor([0, TINY_K] * 4)
        window = trainer.gather(index, starts, 0)
        t_k = (starts + TINY_K - 1).to(F64) * trainer.dt
        with torch.no_grad():
            pred = model(window, trainer.graph, trainer.eta[index], t_k, trainer.dt)
        return float(rmse_loss(pred, trainer.gather(index, starts, TINY_K)))

    before = full_loss()
    trainer.fit()
    assert len(depths) == 500 and set(depths) == {1, 2}
    assert before / full_loss() >= 100


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
