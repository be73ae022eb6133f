"""
Autoregressive training with pushforward truncation.

Each batch draws one unroll depth r uniformly from 1..max_unroll. The model
is applied r-1 times without recording gradients to push the input window
forward; only the final call is trained against the ground truth r blocks
after the input. Validation runs full rollouts once per epoch and the best
parameters are kept.
"""
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch
from torch.optim.lr_scheduler import LambdaLR

from app.errors import ConfigurationError, ShapeError, TrainingError
from app.evaluation.rollout import evaluate_model
from app.graph import GraphTopology, build_graph
from app.models import ModelConfig, TrainConfig
from app.network.checkpoint import Domain, save_checkpoint
from app.network.solver import MSMPSolver, build_model
from app.nn.params import ParamStore
from app.solvers.trajectory import Trajectory
from app.training.optimizer import AdamW, lr_at

logger = logging.getLogger(__name__)


def rmse_loss(pred: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    """sqrt(mean((pred - target)^2)) over every entry."""
    if pred.shape != target.shape:
        raise ShapeError("rmse_loss", pred.shape, target.shape)
    return torch.sqrt(torch.mean((pred - target) ** 2))


@dataclass
class EpochMetrics:
    epoch: int
    lr: float
    train_loss: float
    valid_error: float
    seconds: float


@dataclass
class TrainingResult:
    """Outcome of one training run."""
    best_epoch: int
    best_valid_error: float
    curves: list[EpochMetrics] = field(default_factory=list)
    checkpoint: Path | None = None

    def curves_dict(self) -> dict:
        return {
            "best_epoch": self.best_epoch,
            "best_valid_error": self.best_valid_error,
            "epochs": [asdict(m) for m in self.curves],
        }


def stack_trajectories(trajs: list[Trajectory], dtype: torch.dtype) -> tuple[torch.Tensor, torch.Tensor]:
    """(S, n_t, n_x, n_ch) fields and (S, d_eta) parameters."""
    u = torch.as_tensor(np.stack([t.u for t in trajs]), dtype=dtype)
    eta = torch.as_tensor(np.stack([t.eta for t in trajs]), dtype=dtype)
    return u, eta


class Trainer:
    """
    Pushforward trainer for one model on one training set.

    Args:
        model: Solver to train in place
        train_trajs: Training trajectories sharing one grid
        valid_trajs: Validation trajectories (early stopping)
        graph: Topology over the grid nodes
        config: Optimization hyperparameters
    """

    def __init__(
        self,
        model: MSMPSolver,
        train_trajs: list[Trajectory],
        valid_trajs: list[Trajectory],
        graph: GraphTopology,
        config: TrainConfig
    ):
        if not train_trajs:
            raise ConfigurationError("training set is empty")
        self.model = model
        self.store = ParamStore(model)
        self.graph = graph
        self.config = config
        self.valid_trajs = valid_trajs
        self.K = model.config.K

        dtype = next(model.parameters()).dtype
        self.u, self.eta = stack_trajectories(train_trajs, dtype)
        self.n_t = self.u.shape[1]
        self.dt = train_trajs[0].dt

        if self.n_t < (config.max_unroll + 1) * self.K:
            raise ConfigurationError(
                f"n_t={self.n_t} is too short for unroll depth {config.max_unroll} with K={self.K}"
            )

        windows = len(range(self.K, self.n_t - self.K + 1, self.K))
        self.batches_per_epoch = config.batches_per_epoch or math.ceil(
            len(train_trajs) * windows / config.batch_size
        )
        self.optimizer = AdamW(
            model.parameters(),
            lr=config.lr,
            betas=config.betas,
            eps=config.eps,
            weight_decay=config.weight_decay,
        )
        self.scheduler = LambdaLR(
            self.optimizer,
            lambda epoch: lr_at(epoch, 1.0, config.lr_decay, config.lr_step),
        )
        self.generator = torch.Generator().manual_seed(config.seed)

    # ------------------------------------------------------------------
    # Sampling
    # ------------------------------------------------------------------

    def valid_starts(self, r: int) -> int:
        """Number of input starts s = 0, K, 2K, ... with s + r*K <= n_t - K."""
        return (self.n_t - (r + 1) * self.K) // self.K + 1

    def sample_batch(self, batch_size: int) -> tuple[int, torch.Tensor, torch.Tensor]:
        """
        Draw an unroll depth and per-sample (trajectory, input start) pairs.

        Returns:
            (r, trajectory indices, input start steps)
        """
        r = int(torch.randint(1, self.config.max_unroll + 1, (1,), generator=self.generator))
        index = torch.randint(0, self.u.shape[0], (batch_size,), generator=self.generator)
        starts = self.K * torch.randint(0, self.valid_starts(r), (batch_size,), generator=self.generator)
        return r, index, starts

    def gather(self, index: torch.Tensor, starts: torch.Tensor, offset: int) -> torch.Tensor:
        """(B, K, n_x, n_ch) blocks starting at ``starts + offset``."""
        return torch.stack([
            self.u[i, s + offset:s + offset + self.K]
            for i, s in zip(index.tolist(), starts.tolist())
        ])

    # ------------------------------------------------------------------
    # Steps
    # ------------------------------------------------------------------

    def pushforward_loss(
        self,
        window: torch.Tensor,
        eta: torch.Tensor,
        t_k: torch.Tensor,
        target: torch.Tensor,
        r: int
    ) -> torch.Tensor:
        """
        RMSE of the r-th model call against ``target``.

        The first r-1 calls run without gradient recording.
        """
        with torch.no_grad():
            for _ in range(r - 1):
                window = self.model(window, self.graph, eta, t_k, self.dt)
                t_k = t_k + self.K * self.dt
        pred = self.model(window, self.graph, eta, t_k, self.dt)
        return rmse_loss(pred, target)

    def train_step(self, epoch: int, batch: int) -> float:
        r, index, starts = self.sample_batch(self.config.batch_size)
        window = self.gather(index, starts, 0)
        target = self.gather(index, starts, r * self.K)
        t_k = (starts + self.K - 1).to(window.dtype) * self.dt

        self.optimizer.zero_grad()
        loss = self.pushforward_loss(window, self.eta[index], t_k, target, r)
        if not torch.isfinite(loss):
            logger.error(f"[Trainer] Non-finite loss at epoch {epoch}, batch {batch}")
            raise TrainingError("non-finite training loss", epoch, batch)
        loss.backward()
        self.optimizer.step()
        return float(loss)

    def validate(self) -> float:
        if not self.valid_trajs:
            return math.nan
        result = evaluate_model(
            self.model, self.valid_trajs, self.graph, self.K, batch_size=self.config.batch_size
        )
        self.model.train()
        return result.relative_error

    # ------------------------------------------------------------------
    # Loop
    # ------------------------------------------------------------------

    def fit(self, log_path: Path | None = None) -> TrainingResult:
        """
        Train for ``config.epochs`` epochs, keeping the parameters with the
        lowest validation error. The model holds those parameters on return.
        """
        best_error, best_epoch = math.inf, -1
        best_params = self.store.flat()
        curves = []
        log_file = open(log_path, "w") if log_path else None

        try:
            if log_file:
                log_file.write("epoch\tlr\ttrain_loss\tvalid_re\n")
            for epoch in range(self.config.epochs):
                started = time.time()
                lr = self.optimizer.param_groups[0]["lr"]
                self.model.train()
                losses = [self.train_step(epoch, b) for b in range(self.batches_per_epoch)]
                valid_error = self.validate()
                self.scheduler.step()

                metrics = EpochMetrics(
                    epoch=epoch,
                    lr=lr,
                    train_loss=float(np.mean(losses)),
                    valid_error=valid_error,
                    seconds=time.time() - started,
                )
                curves.append(metrics)
                logger.info(
                    f"[Trainer] Epoch {epoch + 1}/{self.config.epochs}: lr={lr:.3e}, "
                    f"train_loss={metrics.train_loss:.5f}, valid_re={valid_error:.4%}"
                )
                if log_file:
                    log_file.write(f"{epoch}\t{lr:.6e}\t{metrics.train_loss:.6e}\t{valid_error:.6e}\n")
                    log_file.flush()

                # NaN validation never wins; without a validation set the last epoch does
                if valid_error < best_error or (math.isnan(valid_error) and not self.valid_trajs):
                    best_error, best_epoch = valid_error, epoch
                    best_params = self.store.flat()
        finally:
            if log_file:
                log_file.close()

        if best_epoch < 0:
            logger.warning("[Trainer] No epoch produced a finite validation error; keeping final parameters")
            best_epoch = self.config.epochs - 1
        else:
            self.store.load_flat(best_params)
        logger.info(f"[Trainer] Best epoch {best_epoch + 1} (valid_re={best_error:.4%})")
        return TrainingResult(best_epoch=best_epoch, best_valid_error=best_error, curves=curves)


def train_model(
    model_config: ModelConfig,
    train_trajs: list[Trajectory],
    valid_trajs: list[Trajectory],
    train_config: TrainConfig,
    domain: Domain,
    out_dir: str | Path | None = None,
    dtype: torch.dtype = torch.float32
) -> tuple[MSMPSolver, TrainingResult]:
    """
    Build, train and (optionally) persist one model.

    With ``out_dir`` set, writes ``checkpoint.msmc``, ``metrics.log`` and
    ``curves.json`` there.
    """
    model, _ = build_model(model_config, seed=train_config.seed, dtype=dtype)
    graph = build_graph(domain.n_x, domain.L, model_config.neighbors)
    trainer = Trainer(model, train_trajs, valid_trajs, graph, train_config)

    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    result = trainer.fit(out / "metrics.log" if out else None)

    if out is not None:
        result.checkpoint = save_checkpoint(model, domain, out / "checkpoint.msmc")
        with open(out / "curves.json", "w") as f:
            json.dump(result.curves_dict(), f, indent=2)
    return model, result
