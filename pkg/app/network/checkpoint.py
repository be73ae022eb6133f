"""
Checkpoint files: architecture and domain header followed by the flat f32
parameter vector in ParamStore order.
"""
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from app.errors import CheckpointFormatError
from app.graph import GraphTopology, build_graph
from app.models import ExperimentId, ModelConfig
from app.network.solver import MSMPSolver
from app.nn.params import ParamStore

logger = logging.getLogger(__name__)

MAGIC = b"MSMC"
FORMAT_VERSION = 1
ENCODER_CODES = {"ffn": 0, "lstm": 1, "lem": 2}

HEADER_DTYPE = np.dtype([
    ("magic", "S4"),
    ("version", "<u4"),
    ("encoder", "u1"),
    ("gated", "u1"),
    ("n_hid", "<u4"),
    ("n_layers", "<u4"),
    ("K", "<u4"),
    ("n_ch", "<u4"),
    ("d_eta", "<u4"),
    ("kernels", "<u4", (3,)),
    ("lem_dt", "<f8"),
    ("neighbors", "<u4"),
    ("experiment", "u1"),
    ("L", "<f8"),
    ("T", "<f8"),
    ("n_t", "<u4"),
    ("n_x", "<u4"),
    ("n_params", "<u8"),
])


@dataclass(frozen=True)
class Domain:
    """Grid a checkpoint was trained on."""
    experiment: ExperimentId
    L: float
    T: float
    n_t: int
    n_x: int

    @property
    def dt(self) -> float:
        return self.T / (self.n_t - 1)

    def graph(self, neighbors: int) -> GraphTopology:
        return build_graph(self.n_x, self.L, neighbors)


@dataclass
class Checkpoint:
    config: ModelConfig
    domain: Domain
    params: np.ndarray

    def build(self, dtype: torch.dtype = torch.float32) -> MSMPSolver:
        """Instantiate the model and load the stored parameters."""
        model = MSMPSolver(self.config).to(dtype)
        store = ParamStore(model)
        if self.params.shape != (store.total_count,):
            raise CheckpointFormatError(
                f"checkpoint holds {self.params.size} parameters, "
                f"{self.config.variant} needs {store.total_count}"
            )
        store.load_flat(torch.from_numpy(self.params.astype(np.float64)))
        model.eval()
        return model

    def graph(self) -> GraphTopology:
        return self.domain.graph(self.config.neighbors)


def save_checkpoint(model: MSMPSolver, domain: Domain, path: str | Path) -> Path:
    config = model.config
    params = ParamStore(model).flat().to(torch.float32).cpu().numpy()
    kernels = getattr(model.decoder, "kernels", (0, 0, 0))

    raw = np.zeros(1, dtype=HEADER_DTYPE)
    raw[0] = (
        MAGIC, FORMAT_VERSION, ENCODER_CODES[config.encoder], int(config.gated),
        config.n_hid, config.n_layers, config.K, config.n_ch, config.d_eta,
        kernels, config.lem_dt, config.neighbors, int(domain.experiment),
        domain.L, domain.T, domain.n_t, domain.n_x, params.size,
    )

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(raw.tobytes())
        f.write(params.astype("<f4").tobytes())
    logger.info(f"Saved {config.variant} checkpoint ({params.size} parameters) to {path}")
    return path


def read_checkpoint(path: str | Path) -> Checkpoint:
    """
    Parse a checkpoint file.

    Raises:
        CheckpointFormatError: bad magic, unsupported version, unknown codes,
                               or a payload that does not match n_params
    """
    path = Path(path)
    buffer = path.read_bytes()
    if len(buffer) < HEADER_DTYPE.itemsize:
        raise CheckpointFormatError(f"{path}: truncated header ({len(buffer)} bytes)")
    raw = np.frombuffer(buffer, dtype=HEADER_DTYPE, count=1)[0]
    if bytes(raw["magic"]) != MAGIC:
        raise CheckpointFormatError(f"{path}: bad magic {bytes(raw['magic'])!r}")
    if int(raw["version"]) != FORMAT_VERSION:
        raise CheckpointFormatError(f"{path}: version {int(raw['version'])} is not supported")

    n_params = int(raw["n_params"])
    expected = HEADER_DTYPE.itemsize + 4 * n_params
    if len(buffer) != expected:
        raise CheckpointFormatError(f"{path}: payload is {len(buffer)} bytes, header declares {expected}")

    codes = {v: k for k, v in ENCODER_CODES.items()}
    try:
        encoder = codes[int(raw["encoder"])]
        experiment = ExperimentId(int(raw["experiment"]))
    except (KeyError, ValueError) as e:
        raise CheckpointFormatError(f"{path}: unknown encoder or experiment code") from e

    kernels = tuple(int(k) for k in raw["kernels"])
    config = ModelConfig(
        encoder=encoder,
        gated=bool(raw["gated"]),
        n_hid=int(raw["n_hid"]),
        n_layers=int(raw["n_layers"]),
        K=int(raw["K"]),
        n_ch=int(raw["n_ch"]),
        d_eta=int(raw["d_eta"]),
        decoder_kernels=kernels if any(kernels) else None,
        lem_dt=float(raw["lem_dt"]),
        neighbors=int(raw["neighbors"]),
    )
    domain = Domain(
        experiment=experiment,
        L=float(raw["L"]),
        T=float(raw["T"]),
        n_t=int(raw["n_t"]),
        n_x=int(raw["n_x"]),
    )
    params = np.frombuffer(buffer, dtype="<f4", count=n_params, offset=HEADER_DTYPE.itemsize)
    logger.debug(f"Read {config.variant} checkpoint from {path}")
    return Checkpoint(config=config, domain=domain, params=params.astype(np.float32))


def load_checkpoint(path: str | Path, dtype: torch.dtype = torch.float32) -> tuple[MSMPSolver, Domain]:
    checkpoint = read_checkpoint(path)
    return checkpoint.build(dtype), checkpoint.domain
