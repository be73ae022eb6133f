"""
Dataset files, K-lagged windows and split generation.
"""
from app.data.generate import generate_experiment, sample_seed, split_indices
from app.data.storage import dataset_path, read_dataset, read_header, write_dataset
from app.data.windows import WindowPair, make_windows

__all__ = [
    "WindowPair",
    "dataset_path",
    "generate_experiment",
    "make_windows",
    "read_dataset",
    "read_header",
    "sample_seed",
    "split_indices",
    "write_dataset",
]
