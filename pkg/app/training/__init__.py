"""
Optimizer, learning-rate schedule and the pushforward trainer.
"""
from app.training.optimizer import AdamW, adamw_update, lr_at
from app.training.trainer import Trainer, TrainingResult, rmse_loss, train_model

__all__ = [
    "AdamW",
    "Trainer",
    "TrainingResult",
    "adamw_update",
    "lr_at",
    "rmse_loss",
    "train_model",
]
