"""
FastAPI application for MSMP-PDE.

Serves inference from stored checkpoints: POST /rollout advances a seed
window by a number of K-step blocks.
"""
import logging
import time
from pathlib import Path

import numpy as np
import torch
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware

from app.config import configure_logging, get_settings
from app.errors import CheckpointFormatError, MsmpError
from app.models import RolloutRequest, RolloutResponse
from app.network.checkpoint import Checkpoint, read_checkpoint

configure_logging()
logger = logging.getLogger(__name__)

CHECKPOINT_SUFFIX = ".msmc"

# Create FastAPI app
app = FastAPI(
    title="MSMP-PDE",
    description="Multi-scale message-passing neural PDE solver",
    version="1.0.0"
)

# Add CORS
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

_loaded: dict[tuple[str, float], tuple[Checkpoint, torch.nn.Module]] = {}


def checkpoint_root() -> Path:
    return get_settings().output_dir


def resolve_checkpoint(name: str) -> Path:
    """Path of a checkpoint under the output directory, or 404."""
    root = checkpoint_root().resolve()
    path = (root / name).resolve()
    if root not in path.parents or path.suffix != CHECKPOINT_SUFFIX or not path.is_file():
        raise HTTPException(status_code=404, detail=f"Checkpoint not found: {name}")
    return path


def load_model(path: Path) -> tuple[Checkpoint, torch.nn.Module]:
    key = (str(path), path.stat().st_mtime)
    if key not in _loaded:
        checkpoint = read_checkpoint(path)
        _loaded[key] = (checkpoint, checkpoint.build())
        logger.info(f"Loaded {checkpoint.config.variant} from {path}")
    return _loaded[key]


@app.get("/")
def root():
    """Root endpoint."""
    return {
        "app": "MSMP-PDE",
        "version": "1.0.0",
        "description": "Autoregressive neural solver for 1D time-dependent PDEs",
        "endpoints": {
            "health": "/health",
            "checkpoints": "/checkpoints",
            "rollout": "/rollout (POST)",
            "docs": "/docs"
        }
    }


@app.get("/health")
def health():
    """Health check endpoint."""
    root_dir = checkpoint_root()
    return {
        "status": "healthy",
        "components": {
            "api": "ok",
            "output_dir": "ok" if root_dir.is_dir() else "missing",
            "torch": torch.__version__
        }
    }


@app.get("/checkpoints")
def list_checkpoints():
    """Checkpoint files under the output directory."""
    root_dir = checkpoint_root()
    if not root_dir.is_dir():
        return {"checkpoints": []}
    names = sorted(p.relative_to(root_dir).as_posix() for p in root_dir.rglob(f"*{CHECKPOINT_SUFFIX}"))
    return {"checkpoints": names}


@app.post("/rollout", response_model=RolloutResponse)
def rollout(request: RolloutRequest):
    """
    Advance a seed window by ``n_blocks`` model calls.

    Args:
        request: Checkpoint name, seed window [K][n_x][n_ch] and eta

    Returns:
        Predicted steps and the time step they are spaced by
    """
    start_time = time.time()
    path = resolve_checkpoint(request.checkpoint)

    try:
        checkpoint, model = load_model(path)
    except CheckpointFormatError as e:
        logger.error(f"Rollout failed: {e}")
        raise HTTPException(status_code=500, detail=str(e))

    config, domain = checkpoint.config, checkpoint.domain
    expected = (config.K, domain.n_x, config.n_ch)
    try:
        window = np.asarray(request.window, dtype=np.float32)
    except ValueError:
        raise HTTPException(status_code=422, detail=f"window is ragged, expected shape {expected}")
    if window.shape != expected:
        raise HTTPException(status_code=422, detail=f"window shape {window.shape}, expected {expected}")
    if len(request.eta) != config.d_eta:
        raise HTTPException(status_code=422, detail=f"eta has {len(request.eta)} values, expected {config.d_eta}")

    logger.info(f"Rollout request: {request.checkpoint}, {request.n_blocks} blocks")
    try:
        graph = checkpoint.graph()
        current = torch.from_numpy(window)[None]
        eta = torch.tensor([request.eta], dtype=torch.float32).reshape(1, config.d_eta)
        blocks = []
        with torch.no_grad():
            for n in range(request.n_blocks):
                t_k = (config.K * (n + 1) - 1) * domain.dt
                current = model(current, graph, eta, t_k, domain.dt)
                blocks.append(current[0])
        prediction = torch.cat(blocks).double().numpy()
    except MsmpError as e:
        logger.error(f"Rollout failed: {e}")
        raise HTTPException(status_code=500, detail=str(e))

    if not np.all(np.isfinite(prediction)):
        logger.warning(f"Rollout of {request.checkpoint} produced non-finite values")
        raise HTTPException(status_code=500, detail="rollout produced non-finite values")

    return RolloutResponse(
        prediction=prediction.tolist(),
        model=config.variant,
        dt=domain.dt,
        processing_time_sec=time.time() - start_time
    )


if __name__ == "__main__":
    import uvicorn
    uvicorn.run(app, host="0.0.0.0", port=8000)
