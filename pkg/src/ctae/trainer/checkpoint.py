"""Checkpoint records and their on-disk format."""

from dataclasses import dataclass, field

import numpy as np

from .. import container
from ..diffcore import AdamState
from .config import TrainConfig

__all__ = ["CheckpointRecord", "save_checkpoint", "load_checkpoint"]


@dataclass(eq=False)
class CheckpointRecord:
    """Resumable state of a training run.

    Attributes
    ----------
    config : TrainConfig
    params : dict of str to ndarray
        Parameters after ``epoch`` completed epochs.
    best_params : dict of str to ndarray
        Parameters with the lowest validation loss seen so far.
    adam : AdamState
    epoch : int
    best_val : float
    best_epoch : int
    rng_state : dict
        ``bit_generator.state`` of the minibatch/dropout generator.
    input_mean, input_scale : list of ndarray
        Per-region standardisation fitted on training trials.
    splits : dict of str to ndarray
        ``train``, ``val`` and ``test`` trial indices.
    log : list of dict
        One row per epoch (epoch 0 is the untrained model).
    """

    config: TrainConfig
    params: dict
    best_params: dict
    adam: AdamState
    epoch: int
    best_val: float
    best_epoch: int
    rng_state: dict
    input_mean: list
    input_scale: list
    splits: dict
    log: list = field(default_factory=list)
    diverged: bool = False


def _to_arrays(record):
    arrays = {}
    for name, value in record.params.items():
        arrays[f"param/{name}"] = value
    for name, value in record.best_params.items():
        arrays[f"best/{name}"] = value
    for name in record.params:
        arrays[f"adam.m/{name}"] = record.adam.first[name]
        arrays[f"adam.v/{name}"] = record.adam.second[name]
    for r, (m, s) in enumerate(zip(record.input_mean, record.input_scale)):
        arrays[f"scaler.mean/{r}"] = m
        arrays[f"scaler.scale/{r}"] = s
    for key, idx in record.splits.items():
        arrays[f"split/{key}"] = np.asarray(idx, dtype=np.float64)
    return arrays


def save_checkpoint(record, path):
    meta = {
        "config": record.config.to_dict(),
        "param_names": list(record.params),
        "epoch": record.epoch,
        # JSON has no inf; an untouched best is stored as null.
        "best_val": record.best_val if np.isfinite(record.best_val) else None,
        "best_epoch": record.best_epoch,
        "adam": {"step": record.adam.step, "beta1": record.adam.beta1,
                 "beta2": record.adam.beta2, "eps": record.adam.eps},
        "rng_state": record.rng_state,
        "n_regions": len(record.input_mean),
        "log": record.log,
        "diverged": record.diverged,
    }
    container.save(path, "checkpoint", _to_arrays(record), meta)


def load_checkpoint(path):
    arrays, meta = container.load(path, kind="checkpoint")
    config = TrainConfig.from_dict(meta["config"])
    dtype = np.dtype(config.model.dtype)
    names = meta["param_names"]
    adam = AdamState(
        first={n: arrays[f"adam.m/{n}"].astype(dtype) for n in names},
        second={n: arrays[f"adam.v/{n}"].astype(dtype) for n in names},
        **meta["adam"])
    n_regions = meta["n_regions"]
    return CheckpointRecord(
        config=config,
        params={n: arrays[f"param/{n}"].astype(dtype) for n in names},
        best_params={n: arrays[f"best/{n}"].astype(dtype) for n in names},
        adam=adam,
        epoch=meta["epoch"],
        best_val=np.inf if meta["best_val"] is None else meta["best_val"],
        best_epoch=meta["best_epoch"],
        rng_state=meta["rng_state"],
        input_mean=[arrays[f"scaler.mean/{r}"] for r in range(n_regions)],
        input_scale=[arrays[f"scaler.scale/{r}"] for r in range(n_regions)],
        splits={k: arrays[f"split/{k}"].astype(np.int64)
                for k in ("train", "val", "test")},
        log=meta["log"],
        diverged=meta.get("diverged", False))
