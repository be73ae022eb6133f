"""
Pydantic models for the MSMP-PDE system.

Defines experiment identifiers, run configuration (dataset sizes, training,
architecture), result records and the HTTP request/response payloads.
"""
import math
import statistics
from enum import IntEnum
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator


# ============================================================================
# Experiments
# ============================================================================

class ExperimentId(IntEnum):
    """Benchmark identifiers as stored in dataset headers."""
    E1 = 1
    E2 = 2
    MS_WAVE = 3

    @property
    def slug(self) -> str:
        return {1: "e1", 2: "e2", 3: "ms-wave"}[self.value]

    @property
    def n_ch(self) -> int:
        return 2 if self is ExperimentId.MS_WAVE else 1

    @property
    def d_eta(self) -> int:
        return {1: 0, 2: 1, 3: 2}[self.value]

    @classmethod
    def from_slug(cls, slug: str) -> "ExperimentId":
        for member in cls:
            if member.slug == slug.lower():
                return member
        raise ValueError(
            f"unknown experiment '{slug}' (expected one of "
            f"{', '.join(m.slug for m in cls)})"
        )


ExperimentSlug = Literal["e1", "e2", "ms-wave"]
ModelSlug = Literal["mp-pde", "lstm", "lem", "gated", "lstmgated", "msmp-pde"]
EncoderKind = Literal["ffn", "lstm", "lem"]

# (encoder, gated) per ablation row
MODEL_VARIANTS: dict[str, tuple[str, bool]] = {
    "mp-pde": ("ffn", False),
    "lstm": ("lstm", False),
    "lem": ("lem", False),
    "gated": ("ffn", True),
    "lstmgated": ("lstm", True),
    "msmp-pde": ("lem", True),
}


# ============================================================================
# Run Configuration
# ============================================================================

class DatasetSizes(BaseModel):
    """Number of trajectories per split."""
    model_config = ConfigDict(extra="forbid")

    n_train: int = Field(default=2048, ge=1)
    n_valid: int = Field(default=128, ge=1)
    n_test: int = Field(default=128, ge=1)

    @classmethod
    def defaults_for(cls, experiment: ExperimentId) -> "DatasetSizes":
        if experiment is ExperimentId.MS_WAVE:
            return cls(n_train=1024, n_valid=128, n_test=128)
        return cls()


class TrainConfig(BaseModel):
    """Optimization hyperparameters."""
    model_config = ConfigDict(extra="forbid")

    epochs: int = Field(default=20, ge=1)
    batch_size: int = Field(default=16, ge=1)
    lr: float = Field(default=1e-4, ge=0.0, description="Initial learning rate")
    lr_decay: float = Field(default=0.4, gt=0.0)
    lr_step: int = Field(default=5, ge=1, description="Epochs between decays")
    max_unroll: int = Field(default=2, ge=1)
    weight_decay: float = Field(default=1e-8, ge=0.0)
    betas: tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8
    batches_per_epoch: int | None = Field(
        default=None,
        description="Defaults to one pass over all K-lagged windows"
    )
    seed: int = 0


class ModelConfig(BaseModel):
    """Architecture of one model variant."""
    model_config = ConfigDict(extra="forbid")

    encoder: EncoderKind = "lem"
    gated: bool = True
    n_hid: int = Field(default=128, ge=1)
    n_layers: int = Field(default=6, ge=1)
    K: int = Field(default=25, ge=1)
    n_ch: int = Field(default=1, ge=1)
    d_eta: int = Field(default=0, ge=0)
    decoder_kernels: tuple[int, int, int] | None = Field(
        default=None,
        description="(kernel1, stride1, kernel2) of the scalar decoder"
    )
    lem_dt: float = Field(default=1.0, gt=0.0)
    neighbors: int = Field(default=3, ge=1)

    @property
    def variant(self) -> str:
        for name, combo in MODEL_VARIANTS.items():
            if combo == (self.encoder, self.gated):
                return name
        raise ValueError(f"no variant for {self.encoder}/{self.gated}")

    @classmethod
    def for_variant(
        cls,
        variant: str,
        experiment: ExperimentId | None = None,
        **overrides
    ) -> "ModelConfig":
        """
        Build the config of one ablation row.

        Args:
            variant: One of the MODEL_VARIANTS keys
            experiment: Sets n_ch and d_eta when given
            **overrides: Any other ModelConfig field
        """
        if variant not in MODEL_VARIANTS:
            raise ValueError(
                f"unknown model '{variant}' (expected one of "
                f"{', '.join(MODEL_VARIANTS)})"
            )
        encoder, gated = MODEL_VARIANTS[variant]
        fields = {"encoder": encoder, "gated": gated}
        if experiment is not None:
            fields.update(n_ch=experiment.n_ch, d_eta=experiment.d_eta)
        fields.update(overrides)
        return cls(**fields)


class ArchitectureOverrides(BaseModel):
    """Architecture fields a config file may override."""
    model_config = ConfigDict(extra="forbid")

    n_hid: int | None = None
    n_layers: int | None = None
    K: int | None = None
    decoder_kernels: tuple[int, int, int] | None = None
    lem_dt: float | None = None
    neighbors: int | None = None

    def as_dict(self) -> dict:
        return self.model_dump(exclude_none=True)


class GridOverrides(BaseModel):
    """Reduced grids for desk-scale runs; None keeps the benchmark grid."""
    model_config = ConfigDict(extra="forbid")

    n_t: int | None = Field(default=None, ge=2)
    n_x: int | None = Field(default=None, ge=1, description="Stored (downsampled) grid size")

    def solver_grid(self) -> dict:
        """Keyword overrides for the ground-truth solvers."""
        grid = {}
        if self.n_t is not None:
            grid["n_t"] = self.n_t
        if self.n_x is not None:
            grid["n_x_fine"] = 2 * self.n_x
        return grid


class ExperimentSpec(BaseModel):
    """One (experiment, model) run as described by a config file or flags."""
    model_config = ConfigDict(extra="forbid")

    experiment: ExperimentSlug = "e1"
    model: ModelSlug = "msmp-pde"
    seed: int = 0
    out: Path = Path("runs")
    sizes: DatasetSizes | None = None
    grid: GridOverrides = Field(default_factory=GridOverrides)
    train: TrainConfig = Field(default_factory=TrainConfig)
    architecture: ArchitectureOverrides = Field(
        default_factory=ArchitectureOverrides
    )

    @property
    def experiment_id(self) -> ExperimentId:
        return ExperimentId.from_slug(self.experiment)

    def dataset_sizes(self) -> DatasetSizes:
        return self.sizes or DatasetSizes.defaults_for(self.experiment_id)

    def model_config_for(self) -> ModelConfig:
        return ModelConfig.for_variant(
            self.model, self.experiment_id, **self.architecture.as_dict()
        )


# ============================================================================
# Results
# ============================================================================

class RunResult(BaseModel):
    """Test relative errors of one (experiment, model) cell over folds."""
    experiment: ExperimentSlug
    model: ModelSlug
    fold_errors: list[float]
    mean: float
    std: float = Field(description="Sample (n-1) standard deviation")
    failures: int = Field(default=0, description="Rollouts that hit NaN")

    @classmethod
    def from_folds(
        cls,
        experiment: str,
        model: str,
        fold_errors: list[float],
        failures: int = 0
    ) -> "RunResult":
        mean, std = fold_statistics(fold_errors)
        return cls(
            experiment=experiment,
            model=model,
            fold_errors=list(fold_errors),
            mean=mean,
            std=std,
            failures=failures
        )

    @model_validator(mode="after")
    def _check_statistics(self) -> "RunResult":
        mean, std = fold_statistics(self.fold_errors)
        if not (_close(mean, self.mean) and _close(std, self.std)):
            raise ValueError("mean/std do not match fold_errors")
        return self


def fold_statistics(values: list[float]) -> tuple[float, float]:
    """Mean and sample standard deviation (0 for a single fold)."""
    if not values:
        raise ValueError("at least one fold error is required")
    if not all(math.isfinite(v) for v in values):
        # a failed fold poisons the whole cell
        return math.fsum(values) / len(values), math.nan
    mean = statistics.fmean(values)
    std = statistics.stdev(values) if len(values) > 1 else 0.0
    return mean, std


def _close(a: float, b: float) -> bool:
    if math.isnan(a) or math.isnan(b):
        return math.isnan(a) and math.isnan(b)
    if math.isinf(a) or math.isinf(b):
        return a == b
    return abs(a - b) <= 1e-12


# ============================================================================
# API Request/Response Models
# ============================================================================

class RolloutRequest(BaseModel):
    """Autoregressive rollout from a stored checkpoint."""
    checkpoint: str = Field(description="Checkpoint file name under output_dir")
    window: list[list[list[float]]] = Field(
        description="Seed window u^{0:K} as [K][n_x][n_ch]"
    )
    eta: list[float] = Field(default_factory=list)
    n_blocks: int = Field(default=1, ge=1, le=64)


class RolloutResponse(BaseModel):
    """Predicted blocks of K steps each."""
    prediction: list[list[list[float]]] = Field(
        description="Predicted steps as [n_blocks*K][n_x][n_ch]"
    )
    model: str
    dt: float
    processing_time_sec: float
