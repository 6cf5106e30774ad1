"""Cartesian hyperparameter search with validation-loss ranking."""

import dataclasses
import itertools
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .checkpoint import load_checkpoint, save_checkpoint
from .config import config_hash
from .loop import TrainingDiverged, model_from_record, train

__all__ = ["GridSpec", "GridCell", "GridResult", "grid_search", "split_latent_dims"]


@dataclass
class GridSpec:
    """Value lists per hyperparameter; ``None`` keeps the base value.

    Cells enumerate the cartesian product with ``n_layers`` varying
    slowest and ``warmup`` fastest.
    """

    n_layers: list = None
    latent_dims: list = None
    lambda_shared: list = None
    lambda_align: list = None
    lambda_orth: list = None
    lr: list = None
    warmup: list = None

    AXES = ("n_layers", "latent_dims", "lambda_shared", "lambda_align",
            "lambda_orth", "lr", "warmup")

    def cells(self):
        axes = [(name, list(getattr(self, name))) for name in self.AXES
                if getattr(self, name) is not None]
        if any(not values for _, values in axes):
            return []
        if not axes:
            return [{}]
        names = [a for a, _ in axes]
        return [dict(zip(names, combo))
                for combo in itertools.product(*(v for _, v in axes))]


def split_latent_dims(total, codes):
    """Spread ``total`` latent dims evenly over ``codes``; earlier codes
    take the remainder."""
    base, extra = divmod(int(total), len(codes))
    return {c: base + (i < extra) for i, c in enumerate(codes)}


def apply_cell(base, cell):
    """Copy of ``base`` TrainConfig with one grid cell's overrides."""
    model_kw, weight_kw, top_kw = {}, {}, {}
    for key, value in cell.items():
        if key == "n_layers":
            model_kw["n_layers"] = int(value)
        elif key == "latent_dims":
            codes = base.model.mask().codes()
            model_kw["subset_sizes"] = split_latent_dims(value, codes)
        elif key == "lambda_shared":
            weight_kw["shared"] = float(value)
        elif key == "lambda_align":
            weight_kw["align"] = float(value)
        elif key == "lambda_orth":
            weight_kw["orth"] = float(value)
        elif key == "warmup":
            weight_kw["warmup"] = int(value)
        elif key == "lr":
            top_kw["lr"] = float(value)
        else:
            raise KeyError(f"unknown grid axis {key!r}")
    return dataclasses.replace(
        base, model=dataclasses.replace(base.model, **model_kw),
        weights=dataclasses.replace(base.weights, **weight_kw), **top_kw)


@dataclass
class GridCell:
    index: int
    overrides: dict
    config: object
    hash: str
    best_val: float
    diverged: bool
    checkpoint_path: str = None
    record: object = None

    def to_dict(self):
        return {"index": self.index, "overrides": self.overrides,
                "config": self.config.to_dict(), "hash": self.hash,
                "val_loss": None if not np.isfinite(self.best_val) else self.best_val,
                "diverged": self.diverged, "checkpoint_path": self.checkpoint_path}


@dataclass
class GridResult:
    ranked: list

    @property
    def best(self):
        return self.ranked[0]

    def best_model(self):
        return model_from_record(self.best.record)

    def to_list(self):
        return [c.to_dict() for c in self.ranked]


def _run_cell(args):
    index, overrides, config, recordings, epochs, path = args
    if path is not None and os.path.exists(path):
        record = load_checkpoint(path)
        if record.epoch >= (config.epochs if epochs is None else epochs) or record.diverged:
            return index, record
    try:
        record = train(config, recordings, epochs=epochs).record
    except TrainingDiverged as err:
        record = err.record
        record.diverged = True
    if path is not None:
        save_checkpoint(record, path)
    return index, record


def rank_key(cell):
    # Divergent cells last, then validation loss, then smaller D, then order.
    val = cell.best_val if np.isfinite(cell.best_val) else np.inf
    return (cell.diverged, val, cell.config.model.n_latent, cell.index)


def grid_search(base, grid, recordings, epochs=None, jobs=1, cache_dir=None):
    """Train one model per grid cell and rank them by validation loss.

    Parameters
    ----------
    base : TrainConfig
        Values for every axis the grid leaves empty.
    grid : GridSpec
    recordings : list of RegionRecording
    epochs : int, optional
        Epoch cap for every cell (short-budget search).
    jobs : int
        Worker processes; results do not depend on it.
    cache_dir : str, optional
        Per-cell checkpoints named by config hash; finished cells found
        there are reused, so an interrupted search can be resumed.

    Returns
    -------
    GridResult
        Cells sorted best first; divergent cells are ranked last.
    """
    overrides = grid.cells()
    if not overrides:
        raise ValueError("the grid is empty")
    tasks = []
    configs = []
    for i, cell in enumerate(overrides):
        config = apply_cell(base, cell)
        configs.append(config)
        path = None
        if cache_dir is not None:
            os.makedirs(cache_dir, exist_ok=True)
            path = os.path.join(cache_dir, f"cell-{config_hash(config)}.ckpt")
        tasks.append((i, cell, config, recordings, epochs, path))
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = dict(pool.map(_run_cell, tasks))
    else:
        results = dict(map(_run_cell, tasks))
    cells = []
    for i, cell in enumerate(overrides):
        record = results[i]
        cells.append(GridCell(
            index=i, overrides=cell, config=configs[i], hash=config_hash(configs[i]),
            best_val=float(record.best_val), diverged=bool(record.diverged),
            checkpoint_path=tasks[i][5], record=record))
    return GridResult(sorted(cells, key=rank_key))
