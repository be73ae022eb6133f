"""
Exception types raised by the MSMP-PDE package.

Library code raises these; the CLI and the HTTP service translate them into
exit codes and HTTP errors.
"""


class MsmpError(Exception):
    """Base class for all package errors."""


class ShapeError(MsmpError, ValueError):
    """Operands of a primitive have incompatible shapes."""

    def __init__(self, op: str, left, right):
        self.op = op
        self.left = tuple(left)
        self.right = tuple(right)
        super().__init__(
            f"{op}: incompatible shapes {self.left} and {self.right}"
        )


class ConfigurationError(MsmpError, ValueError):
    """A configuration value cannot produce a valid object."""


class GenerationError(MsmpError):
    """Ground-truth generation failed for one sample."""

    def __init__(self, message: str, experiment: str, index: int, seed: int):
        self.experiment = experiment
        self.index = index
        self.seed = seed
        super().__init__(
            f"{message} (experiment={experiment}, sample={index}, seed={seed})"
        )


class DatasetFormatError(MsmpError):
    """A dataset file is malformed, truncated or has the wrong version."""


class CheckpointFormatError(MsmpError):
    """A checkpoint file is malformed or does not match its header."""


class TapeError(MsmpError):
    """Backward was requested for an output with no recorded parameters."""


class TrainingError(MsmpError):
    """Training diverged (non-finite loss)."""

    def __init__(self, message: str, epoch: int, batch: int):
        self.epoch = epoch
        self.batch = batch
        super().__init__(f"{message} (epoch={epoch}, batch={batch})")
