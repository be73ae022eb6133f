"""
Train/valid/test materialization for the three benchmarks.

Each sample owns a generator seeded from (master seed, experiment, sample
index). Splits draw from disjoint index ranges: train and valid shift with
the fold, the test range is fixed so every fold is scored on the same set.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from app.data.storage import dataset_path, write_dataset
from app.errors import GenerationError
from app.models import DatasetSizes, ExperimentId
from app.solvers.burgers import SolverDivergence
from app.solvers.sampling import sample_trajectory
from app.solvers.trajectory import Trajectory, downsample

logger = logging.getLogger(__name__)

TEST_INDEX_BASE = 1 << 30
SPLITS = ("train", "valid", "test")


def sample_seed(master_seed: int, experiment: ExperimentId, index: int) -> int:
    """Deterministic per-sample seed."""
    sequence = np.random.SeedSequence([master_seed, int(experiment), index])
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def split_indices(sizes: DatasetSizes, fold: int = 0) -> dict[str, range]:
    """Sample index range of each split."""
    base = fold * (sizes.n_train + sizes.n_valid)
    return {
        "train": range(base, base + sizes.n_train),
        "valid": range(base + sizes.n_train, base + sizes.n_train + sizes.n_valid),
        "test": range(TEST_INDEX_BASE, TEST_INDEX_BASE + sizes.n_test),
    }


def generate_sample(
    experiment: ExperimentId,
    master_seed: int,
    index: int,
    **grid
) -> Trajectory:
    """
    Generate one downsampled trajectory.

    Raises:
        GenerationError: the solver failed; names the sample index and seed
    """
    seed = sample_seed(master_seed, experiment, index)
    rng = np.random.default_rng(seed)
    try:
        fine = sample_trajectory(experiment, rng, seed=seed, **grid)
    except SolverDivergence as e:
        raise GenerationError(str(e), experiment.slug, index, seed) from e
    if not fine.is_finite():
        raise GenerationError("non-finite trajectory", experiment.slug, index, seed)
    return downsample(fine)


def generate_split(
    experiment: ExperimentId,
    master_seed: int,
    indices: range,
    threads: int = 1,
    **grid
) -> list[Trajectory]:
    """Generate the trajectories of one index range, in index order."""
    def run(index: int) -> Trajectory:
        return generate_sample(experiment, master_seed, index, **grid)

    if threads <= 1:
        return [run(i) for i in indices]
    with ThreadPoolExecutor(max_workers=threads) as executor:
        return list(executor.map(run, indices))


def generate_experiment(
    experiment: ExperimentId,
    master_seed: int,
    sizes: DatasetSizes,
    out_dir: str | Path,
    fold: int = 0,
    threads: int = 1,
    splits: tuple[str, ...] = SPLITS,
    **grid
) -> dict[str, Path]:
    """
    Generate and write the split files of an experiment.

    Args:
        experiment: Benchmark to generate
        master_seed: Seed all sample seeds derive from
        sizes: Trajectories per split
        out_dir: Directory receiving ``{experiment}_{split}.msmp``
        fold: Cross-validation fold; shifts the train/valid seed ranges
        threads: Worker threads for the solver runs
        splits: Subset of train/valid/test to generate
        **grid: Optional L, T, n_t, n_x_fine overrides

    Returns:
        Mapping split name -> written path
    """
    unknown = set(splits) - set(SPLITS)
    if unknown:
        raise ValueError(f"unknown splits {sorted(unknown)}")
    paths = {}
    for split, indices in split_indices(sizes, fold).items():
        if split not in splits:
            continue
        logger.info(
            f"[Generate] {experiment.slug}/{split}: {len(indices)} samples "
            f"(seed={master_seed}, fold={fold})"
        )
        trajs = generate_split(experiment, master_seed, indices, threads, **grid)
        path = dataset_path(out_dir, experiment, split)
        write_dataset(trajs, path, experiment)
        paths[split] = path
    return paths
