"""
Versioned little-endian binary format for trajectory sets.

Layout: a fixed header (magic "MSMP", version, experiment id, n_traj, n_t,
n_x, n_ch, d_eta, L, T) followed, per trajectory, by eta as f64 and u as f32
in t-major, then x, then channel order.
"""
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from app.errors import DatasetFormatError
from app.models import ExperimentId
from app.solvers.trajectory import Trajectory

logger = logging.getLogger(__name__)

MAGIC = b"MSMP"
FORMAT_VERSION = 1

HEADER_DTYPE = np.dtype([
    ("magic", "S4"),
    ("version", "<u4"),
    ("experiment", "u1"),
    ("n_traj", "<u4"),
    ("n_t", "<u4"),
    ("n_x", "<u4"),
    ("n_ch", "<u4"),
    ("d_eta", "<u4"),
    ("L", "<f8"),
    ("T", "<f8"),
])


@dataclass(frozen=True)
class DatasetHeader:
    """Parsed dataset header."""
    experiment: ExperimentId
    n_traj: int
    n_t: int
    n_x: int
    n_ch: int
    d_eta: int
    L: float
    T: float
    version: int = FORMAT_VERSION

    @property
    def record_bytes(self) -> int:
        return 8 * self.d_eta + 4 * self.n_t * self.n_x * self.n_ch

    @property
    def file_bytes(self) -> int:
        return HEADER_DTYPE.itemsize + self.n_traj * self.record_bytes


def dataset_path(root: str | Path, experiment: ExperimentId, split: str) -> Path:
    """Conventional file name, e.g. ``data/ms-wave_train.msmp``."""
    return Path(root) / f"{experiment.slug}_{split}.msmp"


def write_dataset(
    trajs: list[Trajectory],
    path: str | Path,
    experiment: ExperimentId
) -> DatasetHeader:
    """
    Write trajectories sharing one grid to ``path``.

    Raises:
        ValueError: empty list or mismatched grid/channel metadata
    """
    if not trajs:
        raise ValueError("cannot write an empty dataset")
    first = trajs[0]
    for i, traj in enumerate(trajs):
        if (traj.u.shape, traj.d_eta, traj.L, traj.T) != (first.u.shape, first.d_eta, first.L, first.T):
            raise ValueError(
                f"trajectory {i} has shape {traj.u.shape}/d_eta={traj.d_eta}, "
                f"expected {first.u.shape}/d_eta={first.d_eta}"
            )

    header = DatasetHeader(
        experiment=experiment,
        n_traj=len(trajs),
        n_t=first.n_t,
        n_x=first.n_x,
        n_ch=first.n_ch,
        d_eta=first.d_eta,
        L=float(first.L),
        T=float(first.T),
    )
    raw = np.zeros(1, dtype=HEADER_DTYPE)
    raw[0] = (
        MAGIC, FORMAT_VERSION, int(experiment), header.n_traj, header.n_t,
        header.n_x, header.n_ch, header.d_eta, header.L, header.T
    )

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(raw.tobytes())
        for traj in trajs:
            f.write(traj.eta.astype("<f8").tobytes())
            f.write(np.ascontiguousarray(traj.u, dtype="<f4").tobytes())

    logger.info(
        f"Wrote {header.n_traj} trajectories ({header.n_t}x{header.n_x}x{header.n_ch}) "
        f"to {path}"
    )
    return header


def _parse_header(buffer: bytes, path: Path) -> DatasetHeader:
    if len(buffer) < HEADER_DTYPE.itemsize:
        raise DatasetFormatError(f"{path}: truncated header ({len(buffer)} bytes)")
    raw = np.frombuffer(buffer, dtype=HEADER_DTYPE, count=1)[0]
    if bytes(raw["magic"]) != MAGIC:
        raise DatasetFormatError(f"{path}: bad magic {bytes(raw['magic'])!r}")
    if int(raw["version"]) != FORMAT_VERSION:
        raise DatasetFormatError(
            f"{path}: version {int(raw['version'])} is not supported "
            f"(expected {FORMAT_VERSION})"
        )
    try:
        experiment = ExperimentId(int(raw["experiment"]))
    except ValueError as e:
        raise DatasetFormatError(f"{path}: unknown experiment id {int(raw['experiment'])}") from e
    return DatasetHeader(
        experiment=experiment,
        n_traj=int(raw["n_traj"]),
        n_t=int(raw["n_t"]),
        n_x=int(raw["n_x"]),
        n_ch=int(raw["n_ch"]),
        d_eta=int(raw["d_eta"]),
        L=float(raw["L"]),
        T=float(raw["T"]),
        version=int(raw["version"]),
    )


def read_header(path: str | Path) -> DatasetHeader:
    """Parse only the header of a dataset file."""
    path = Path(path)
    with open(path, "rb") as f:
        return _parse_header(f.read(HEADER_DTYPE.itemsize), path)


def read_dataset(path: str | Path) -> list[Trajectory]:
    """
    Load every trajectory of a dataset file.

    Raises:
        DatasetFormatError: malformed header, version mismatch, or a payload
                            whose length differs from the declared sizes
    """
    path = Path(path)
    buffer = path.read_bytes()
    header = _parse_header(buffer, path)
    if len(buffer) != header.file_bytes:
        raise DatasetFormatError(
            f"{path}: payload is {len(buffer)} bytes, header declares {header.file_bytes}"
        )

    shape = (header.n_t, header.n_x, header.n_ch)
    offset = HEADER_DTYPE.itemsize
    trajs = []
    for _ in range(header.n_traj):
        eta = np.frombuffer(buffer, dtype="<f8", count=header.d_eta, offset=offset)
        offset += 8 * header.d_eta
        u = np.frombuffer(buffer, dtype="<f4", count=int(np.prod(shape)), offset=offset)
        offset += 4 * u.size
        trajs.append(Trajectory(
            u=u.reshape(shape).astype(np.float32),
            L=header.L,
            T=header.T,
            eta=eta.copy(),
        ))

    logger.info(f"Loaded {len(trajs)} trajectories from {path}")
    return trajs
