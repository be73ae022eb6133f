#!/usr/bin/env python3
"""
Tests for dataset files, K-lagged windows, split generation and the
periodic computational graph.
"""
import sys
from pathlib import Path
sys.path.insert(0, str(Path(__file__).parent.parent))

import numpy as np
import pytest

from app.data.generate import generate_experiment, generate_sample, sample_seed, split_indices
from app.data.storage import (
    HEADER_DTYPE,
    dataset_path,
    read_dataset,
    read_header,
    write_dataset,
)
from app.data.windows import make_windows, window_starts
from app.errors import ConfigurationError, DatasetFormatError, GenerationError
from app.graph import build_graph, minimal_image
from app.models import DatasetSizes, ExperimentId
from app.solvers.burgers import SolverDivergence
from app.solvers.trajectory import Trajectory

SMALL_GRID = {"n_t": 30, "n_x_fine": 40}


def random_trajectory(rng, n_t=250, n_x=100, n_ch=1, d_eta=0) -> Trajectory:
    return Trajectory(
        u=rng.standard_normal((n_t, n_x, n_ch)),
        L=16.0,
        T=4.0,
        eta=rng.uniform(0, 1, d_eta),
    )


# ============================================================================
# Storage
# ============================================================================

def test_round_trip_is_bitwise_in_f32(tmp_path):
    rng = np.random.default_rng(0)
    traj = random_trajectory(rng, d_eta=1)
    path = tmp_path / "one.msmp"
    write_dataset([traj], path, ExperimentId.E2)

    loaded = read_dataset(path)
    assert len(loaded) == 1
    np.testing.assert_array_equal(loaded[0].u, traj.u.astype(np.float32))
    np.testing.assert_array_equal(loaded[0].eta, traj.eta)
    assert loaded[0].L == 16.0 and loaded[0].T == 4.0


def test_f32_quantization_error_is_small(tmp_path):
    rng = np.random.default_rng(1)
    traj = random_trajectory(rng, n_t=20, n_x=30)
    path = tmp_path / "q.msmp"
    write_dataset([traj], path, ExperimentId.E1)
    stored = read_dataset(path)[0].u.astype(np.float64)
    assert np.linalg.norm(stored - traj.u) / np.linalg.norm(traj.u) <= 1e-6


def test_header_fields_and_file_size(tmp_path):
    rng = np.random.default_rng(2)
    trajs = [random_trajectory(rng, n_t=10, n_x=8, n_ch=2, d_eta=2) for _ in range(3)]
    path = tmp_path / "ms.msmp"
    written = write_dataset(trajs, path, ExperimentId.MS_WAVE)
    header = read_header(path)

    assert header == written
    assert header.experiment is ExperimentId.MS_WAVE
    assert (header.n_traj, header.n_t, header.n_x, header.n_ch, header.d_eta) == (3, 10, 8, 2, 2)
    assert path.stat().st_size == HEADER_DTYPE.itemsize + 3 * (2 * 8 + 10 * 8 * 2 * 4)
    assert path.read_bytes()[:4] == b"MSMP"


def test_truncated_file_is_a_format_error(tmp_path):
    rng = np.random.default_rng(3)
    path = tmp_path / "t.msmp"
    write_dataset([random_trajectory(rng, n_t=5, n_x=8)], path, ExperimentId.E1)
    data = path.read_bytes()

    path.write_bytes(data[:-7])
    with pytest.raises(DatasetFormatError):
        read_dataset(path)
    path.write_bytes(data[:10])
    with pytest.raises(DatasetFormatError):
        read_dataset(path)


def test_bad_magic_and_version_are_rejected(tmp_path):
    rng = np.random.default_rng(4)
    path = tmp_path / "v.msmp"
    write_dataset([random_trajectory(rng, n_t=5, n_x=8)], path, ExperimentId.E1)
    data = bytearray(path.read_bytes())

    bad_magic = bytearray(data)
    bad_magic[:4] = b"XXXX"
    path.write_bytes(bytes(bad_magic))
    with pytest.raises(DatasetFormatError, match="magic"):
        read_dataset(path)

    bad_version = bytearray(data)
    bad_version[4:8] = (2).to_bytes(4, "little")
    path.write_bytes(bytes(bad_version))
    with pytest.raises(DatasetFormatError, match="version"):
        read_dataset(path)


def test_write_rejects_mixed_grids(tmp_path):
    rng = np.random.default_rng(5)
    trajs = [random_trajectory(rng, n_t=5, n_x=8), random_trajectory(rng, n_t=5, n_x=10)]
    with pytest.raises(ValueError):
        write_dataset(trajs, tmp_path / "mixed.msmp", ExperimentId.E1)
    with pytest.raises(ValueError):
        write_dataset([], tmp_path / "empty.msmp", ExperimentId.E1)


def test_dataset_path_convention(tmp_path):
    assert dataset_path(tmp_path, ExperimentId.MS_WAVE, "train").name == "ms-wave_train.msmp"


# ============================================================================
# Windows
# ============================================================================

@pytest.mark.parametrize("n_t,expected", [(250, 9), (50, 1), (49, 0)])
def test_window_counts(n_t, expected):
    traj = random_trajectory(np.random.default_rng(0), n_t=n_t, n_x=4)
    assert len(make_windows(traj, K=25)) == expected


def test_first_window_and_coverage():
    traj = random_trajectory(np.random.default_rng(6), n_t=250, n_x=4)
    pairs = make_windows(traj, K=25)

    first = pairs[0]
    np.testing.assert_array_equal(first.input, traj.u[0:25])
    np.testing.assert_array_equal(first.target, traj.u[25:50])
    assert first.k_index == 25
    assert first.t_k == pytest.approx(24 * traj.dt)
    assert [p.k_index - 25 for p in pairs] == list(range(0, 201, 25))

    targets = np.concatenate([p.target for p in pairs])
    np.testing.assert_array_equal(targets, traj.u[25:250])


def test_window_starts_are_multiples_of_k():
    assert window_starts(100, 10) == [10, 20, 30, 40, 50, 60, 70, 80, 90]


# ============================================================================
# Generation
# ============================================================================

def test_sample_seeds_are_deterministic_and_disjoint():
    sizes = DatasetSizes(n_train=16, n_valid=4, n_test=4)
    seeds = {
        split: {sample_seed(7, ExperimentId.E1, i) for i in indices}
        for split, indices in split_indices(sizes).items()
    }
    assert seeds["train"].isdisjoint(seeds["valid"])
    assert seeds["train"].isdisjoint(seeds["test"])
    assert seeds["valid"].isdisjoint(seeds["test"])
    assert sample_seed(7, ExperimentId.E1, 3) == sample_seed(7, ExperimentId.E1, 3)
    assert sample_seed(7, ExperimentId.E1, 3) != sample_seed(7, ExperimentId.E2, 3)


def test_folds_share_the_test_range_only():
    sizes = DatasetSizes(n_train=4, n_valid=2, n_test=2)
    fold0, fold1 = split_indices(sizes, 0), split_indices(sizes, 1)
    assert fold0["test"] == fold1["test"]
    assert set(fold0["train"]).isdisjoint(fold1["train"])
    assert set(fold0["valid"]).isdisjoint(fold1["valid"])


def test_generate_ms_wave_splits(tmp_path):
    sizes = DatasetSizes(n_train=4, n_valid=2, n_test=2)
    paths = generate_experiment(ExperimentId.MS_WAVE, 11, sizes, tmp_path, **SMALL_GRID)

    assert set(paths) == {"train", "valid", "test"}
    header = read_header(paths["train"])
    assert (header.n_traj, header.n_t, header.n_x, header.n_ch, header.d_eta) == (4, 30, 20, 2, 2)
    assert read_header(paths["valid"]).n_traj == 2
    assert read_header(paths["test"]).n_traj == 2


def test_generation_is_byte_identical(tmp_path):
    sizes = DatasetSizes(n_train=4, n_valid=2, n_test=2)
    first = generate_experiment(ExperimentId.E2, 5, sizes, tmp_path / "a", **SMALL_GRID)
    second = generate_experiment(ExperimentId.E2, 5, sizes, tmp_path / "b", threads=2, **SMALL_GRID)
    for split in first:
        assert first[split].read_bytes() == second[split].read_bytes()
    assert read_header(first["train"]).d_eta == 1


def test_e1_samples_have_no_eta():
    traj = generate_sample(ExperimentId.E1, 0, 0, **SMALL_GRID)
    assert traj.u.shape == (30, 20, 1)
    assert traj.d_eta == 0


def test_solver_failure_names_the_sample(monkeypatch):
    def diverge(*args, **kwargs):
        raise SolverDivergence("non-finite state at t=1.0")

    monkeypatch.setattr("app.data.generate.sample_trajectory", diverge)
    with pytest.raises(GenerationError) as excinfo:
        generate_sample(ExperimentId.E1, 3, 17)
    assert excinfo.value.index == 17
    assert excinfo.value.seed == sample_seed(3, ExperimentId.E1, 17)
    assert "sample=17" in str(excinfo.value)


# ============================================================================
# Graph
# ============================================================================

def test_graph_edge_count_and_neighbours():
    graph = build_graph(100, 16.0, k=3)
    assert graph.n_edges == 600
    assert graph.in_neighbors(0) == {1, 2, 3, 97, 98, 99}
    assert not np.any(graph.src == graph.dst)


def test_graph_saturated_case():
    graph = build_graph(7, 1.0, k=3)
    assert graph.n_edges == 42
    for i in range(7):
        assert graph.in_neighbors(i) == set(range(7)) - {i}


def test_graph_is_symmetric_and_regular():
    graph = build_graph(20, 4.0, k=3)
    edges = set(zip(graph.src.tolist(), graph.dst.tolist()))
    assert all((i, j) in edges for j, i in edges)
    assert np.all(np.bincount(graph.dst, minlength=20) == 6)
    assert np.all(np.bincount(graph.src, minlength=20) == 6)


def test_relative_positions_use_minimal_image():
    graph = build_graph(100, 16.0)
    rel = graph.relative_positions()
    edge = np.flatnonzero((graph.dst == 0) & (graph.src == 99))[0]
    assert rel[edge] == pytest.approx(0.16)
    assert np.all(np.abs(rel) <= 8.0)
    assert minimal_image(np.array([15.84]), 16.0)[0] == pytest.approx(-0.16)


def test_rolled_graph_permutes_edges_consistently():
    graph = build_graph(12, 3.0)
    rolled = graph.rolled(1)
    original = set(zip(graph.src.tolist(), graph.dst.tolist()))
    shifted = {((j + 1) % 12, (i + 1) % 12) for j, i in original}
    assert set(zip(rolled.src.tolist(), rolled.dst.tolist())) == shifted
    np.testing.assert_allclose(np.sort(rolled.relative_positions()), np.sort(graph.relative_positions()))


def test_graph_rejects_small_grids():
    with pytest.raises(ConfigurationError):
        build_graph(6, 1.0, k=3)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
