"""
Model family: encoders, message-passing processors, decoders, checkpoints.
"""
from app.network.checkpoint import Checkpoint, Domain, load_checkpoint, read_checkpoint, save_checkpoint
from app.network.solver import (
    MSMPSolver,
    build_model,
    expected_eta_delta,
    parameter_table,
    tiny_model_config,
    zero_final_conv,
)

__all__ = [
    "Checkpoint",
    "Domain",
    "MSMPSolver",
    "build_model",
    "expected_eta_delta",
    "load_checkpoint",
    "parameter_table",
    "read_checkpoint",
    "save_checkpoint",
    "tiny_model_config",
    "zero_final_conv",
]
