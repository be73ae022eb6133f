"""
The ablation matrix: every (experiment, model, fold) cell trained and scored
on its experiment's fixed test set.
"""
import csv
import json
import logging
import math
import statistics
from dataclasses import dataclass
from pathlib import Path

from app.data.generate import generate_experiment
from app.data.storage import dataset_path, read_dataset
from app.errors import TrainingError
from app.evaluation.metrics import format_results_table
from app.evaluation.rollout import evaluate_model
from app.graph import build_graph
from app.models import (
    MODEL_VARIANTS,
    ArchitectureOverrides,
    DatasetSizes,
    ExperimentId,
    ModelConfig,
    RunResult,
    TrainConfig,
)
from app.network.checkpoint import Domain
from app.training.trainer import train_model

logger = logging.getLogger(__name__)

RESULTS_COLUMNS = ("experiment", "model", "fold", "RE")
DIRECTIONAL_RATIO = 0.85


SHARED_DIR = "shared"


def shared_test_set(
    experiment: ExperimentId,
    sizes: DatasetSizes,
    data_dir: Path,
    master_seed: int,
    threads: int,
    grid: dict
) -> Path:
    """The experiment's test split, generated once and scored by every fold."""
    path = dataset_path(data_dir / SHARED_DIR, experiment, "test")
    if path.exists():
        logger.info(f"[Matrix] Reusing {experiment.slug} test set {path}")
        return path
    return generate_experiment(
        experiment, master_seed, sizes, data_dir / SHARED_DIR, threads=threads, splits=("test",), **grid
    )["test"]


def fold_datasets(
    experiment: ExperimentId,
    fold: int,
    sizes: DatasetSizes,
    data_dir: Path,
    master_seed: int,
    threads: int,
    grid: dict
) -> dict[str, Path]:
    """Train/valid files of one fold, generated on first use."""
    fold_dir = data_dir / f"fold{fold}"
    paths = {split: dataset_path(fold_dir, experiment, split) for split in ("train", "valid")}
    if all(p.exists() for p in paths.values()):
        logger.info(f"[Matrix] Reusing {experiment.slug} fold {fold} datasets in {fold_dir}")
        return paths
    return generate_experiment(
        experiment, master_seed, sizes, fold_dir, fold=fold, threads=threads, splits=("train", "valid"), **grid
    )



def run_matrix(
    experiments: list[ExperimentId],
    models: list[str],
    folds: int = 5,
    train_config: TrainConfig | None = None,
    sizes: DatasetSizes | None = None,
    architecture: ArchitectureOverrides | None = None,
    data_dir: str | Path = "data",
    out_dir: str | Path = "runs",
    master_seed: int = 0,
    threads: int = 1,
    grid: dict | None = None
) -> list[RunResult]:
    """
    Train and evaluate every model on every experiment for ``folds`` folds.

    Each fold draws fresh train/valid sets and a fresh initialization seed;
    all folds share the experiment's test set. A cell whose training
    diverges is recorded as a failure with infinite error.

    Writes ``results.csv`` (one row per fold), ``results.json`` and
    ``results.md`` under ``out_dir``.

    Returns:
        One RunResult per (experiment, model)
    """
    for model in models:
        if model not in MODEL_VARIANTS:
            raise ValueError(f"unknown model '{model}'")
    train_config = train_config or TrainConfig()
    architecture = architecture or ArchitectureOverrides()
    data_dir, out_dir = Path(data_dir), Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    grid = grid or {}

    results = []
    csv_path = out_dir / "results.csv"
    with open(csv_path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(RESULTS_COLUMNS)

        for experiment in experiments:
            exp_sizes = sizes or DatasetSizes.defaults_for(experiment)
            fold_errors = {model: [] for model in models}
            failures = {model: 0 for model in models}
            test = read_dataset(shared_test_set(experiment, exp_sizes, data_dir, master_seed, threads, grid))

            for fold in range(folds):
                paths = fold_datasets(experiment, fold, exp_sizes, data_dir, master_seed, threads, grid)
                train, valid = read_dataset(paths["train"]), read_dataset(paths["valid"])
                domain = Domain(experiment, train[0].L, train[0].T, train[0].n_t, train[0].n_x)

                for model in models:
                    config = ModelConfig.for_variant(model, experiment, **architecture.as_dict())
                    fold_config = train_config.model_copy(update={"seed": train_config.seed + fold})
                    cell_dir = out_dir / experiment.slug / model / f"fold{fold}"
                    logger.info(f"[Matrix] {experiment.slug} / {model} / fold {fold}")
                    try:
                        trained, _ = train_model(config, train, valid, fold_config, domain, cell_dir)
                        graph = build_graph(domain.n_x, domain.L, config.neighbors)
                        outcome = evaluate_model(trained, test, graph, config.K, fold_config.batch_size)
                        error, failed = outcome.relative_error, outcome.failures
                    except TrainingError as e:
                        logger.error(f"[Matrix] {experiment.slug} / {model} / fold {fold} diverged: {e}")
                        error, failed = math.inf, len(test)

                    fold_errors[model].append(error)
                    failures[model] += failed
                    writer.writerow([experiment.slug, model, fold, f"{error:.17g}"])
                    f.flush()

            for model in models:
                results.append(RunResult.from_folds(
                    experiment.slug, model, fold_errors[model], failures[model]
                ))

    with open(out_dir / "results.json", "w") as f:
        json.dump([r.model_dump() for r in results], f, indent=2)
    (out_dir / "results.md").write_text(format_results_table(results))
    logger.info(f"[Matrix] Wrote {len(results)} results to {csv_path}")
    return results


def read_results_csv(path: str | Path) -> list[RunResult]:
    """Rebuild RunResults from a per-fold results file."""
    rows = {}
    with open(path, newline="") as f:
        for row in csv.DictReader(f):
            key = (row["experiment"], row["model"])
            rows.setdefault(key, []).append(float(row["RE"]))
    return [RunResult.from_folds(exp, model, errors) for (exp, model), errors in rows.items()]


@dataclass
class DirectionalCheck:
    """Median-error comparisons against the ungated FFN baseline."""
    msmp_ratio: float
    gated_ratio: float
    threshold: float = DIRECTIONAL_RATIO

    @property
    def passed(self) -> bool:
        return self.msmp_ratio <= self.threshold and self.gated_ratio <= 1.0


def directional_check(
    results: list[RunResult],
    experiment: str = "ms-wave",
    threshold: float = DIRECTIONAL_RATIO
) -> DirectionalCheck:
    """
    Compare median fold errors: msmp-pde against threshold * mp-pde, and
    gated against mp-pde.

    Raises:
        KeyError: one of the three models is missing for ``experiment``
    """
    medians = {
        r.model: statistics.median(r.fold_errors)
        for r in results if r.experiment == experiment
    }
    baseline = medians["mp-pde"]
    check = DirectionalCheck(
        msmp_ratio=medians["msmp-pde"] / baseline,
        gated_ratio=medians["gated"] / baseline,
        threshold=threshold,
    )
    logger.info(
        f"[Matrix] {experiment}: msmp-pde/mp-pde={check.msmp_ratio:.3f}, "
        f"gated/mp-pde={check.gated_ratio:.3f}, passed={check.passed}"
    )
    return check
