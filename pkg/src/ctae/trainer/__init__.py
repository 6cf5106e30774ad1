"""Training loop, checkpoints and grid search."""

from .checkpoint import CheckpointRecord, load_checkpoint, save_checkpoint
from .config import TrainConfig, config_hash
from .grid import GridCell, GridResult, GridSpec, apply_cell, grid_search, split_latent_dims
from .loop import (LOG_COLUMNS, TrainingDiverged, TrainResult, fit_scalers,
                   model_from_record, train, write_log_csv)

__all__ = [
    "CheckpointRecord",
    "GridCell",
    "GridResult",
    "GridSpec",
    "LOG_COLUMNS",
    "TrainConfig",
    "TrainResult",
    "TrainingDiverged",
    "apply_cell",
    "config_hash",
    "fit_scalers",
    "grid_search",
    "load_checkpoint",
    "model_from_record",
    "save_checkpoint",
    "split_latent_dims",
    "train",
    "write_log_csv",
]
