"""The training loop: minibatch Adam on the weighted coupled objective."""

import copy
import csv
import logging

import numpy as np

from ..datasets import check_recordings, stack_labels, train_val_test
from ..diffcore import AdamState, adam_step, backward, clip_global_norm, no_grad
from ..objectives import evaluate_objective
from ..seqmodel import CTAEModel
from .checkpoint import CheckpointRecord

__all__ = ["TrainingDiverged", "TrainResult", "train", "fit_scalers",
           "model_from_record", "LOG_COLUMNS", "write_log_csv"]

logger = logging.getLogger(__name__)

LOG_COLUMNS = ("epoch", "rec", "shared", "align", "orth", "lambda_orth_eff",
               "total", "val_total", "clipped")


class TrainingDiverged(FloatingPointError):
    """Raised when a loss goes non-finite; ``components`` holds the dump."""

    def __init__(self, epoch, components, record=None):
        detail = ", ".join(f"{k}={v!r}" for k, v in components.items())
        super().__init__(f"non-finite loss at epoch {epoch}: {detail}")
        self.epoch = epoch
        self.components = components
        self.record = record


class TrainResult:
    """Outcome of :func:`train`: the resumable record and the best model."""

    def __init__(self, record, model):
        self.record = record
        self.model = model

    @property
    def log(self):
        return self.record.log

    @property
    def best_val(self):
        return self.record.best_val


def fit_scalers(values_list, trials):
    """Per-channel mean and sd over training trials and time bins."""
    means, scales = [], []
    for values in values_list:
        x = values[trials]
        mean = x.mean(axis=(0, 2))
        scale = x.std(axis=(0, 2))
        scale[scale < 1e-12] = 1.0
        means.append(mean)
        scales.append(scale)
    return means, scales


def model_from_record(record, best=True):
    """Rebuild a model holding the record's best (or current) parameters."""
    model = CTAEModel(record.config.model, seed=record.config.seed)
    model.params.load_state_dict(record.best_params if best else record.params)
    model.set_standardization(record.input_mean, record.input_scale)
    return model


def write_log_csv(rows, path):
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=LOG_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: (repr(row[k]) if isinstance(row[k], float) else row[k])
                             for k in LOG_COLUMNS})


def _components(report):
    return {k: getattr(report, k) for k in ("rec", "shared", "align", "orth", "total")}


def _validate(model, xs, config):
    weights = config.weights
    with no_grad():
        _, report, _ = evaluate_objective(
            model, xs, weights, epoch=0, training=False,
            two_region_path=config.two_region_path, lambda_orth=weights.orth)
    return report.total


def _initial_record(config, recordings):
    n_trials = recordings[0].n_trials
    labels = stack_labels(recordings)
    train_idx, val_idx, test_idx = train_val_test(
        n_trials, labels=labels, seed=config.seed, fractions=config.split)
    if val_idx.size == 0:
        raise ValueError("the validation split is empty")
    model = CTAEModel(config.model, seed=config.seed)
    means, scales = fit_scalers([r.values for r in recordings], train_idx)
    params = model.params.state_dict()
    return CheckpointRecord(
        config=config, params=params,
        best_params={k: v.copy() for k, v in params.items()},
        adam=AdamState.zeros_like(model.params), epoch=0, best_val=np.inf,
        best_epoch=0,
        rng_state=np.random.default_rng([config.seed, 1]).bit_generator.state,
        input_mean=means, input_scale=scales,
        splits={"train": train_idx, "val": val_idx, "test": test_idx})


def train(config, recordings, resume=None, epochs=None, callback=None):
    """Train a coupled autoencoder and keep the best validation checkpoint.

    Parameters
    ----------
    config : TrainConfig
    recordings : list of RegionRecording or arrays (trials, channels, time)
    resume : CheckpointRecord, optional
        Continue from this record; the continuation is bit-identical to an
        uninterrupted run.
    epochs : int, optional
        Stop after this many total epochs instead of ``config.epochs``.
    callback : callable, optional
        Called as ``callback(row)`` every ``config.report_every`` epochs.

    Returns
    -------
    TrainResult

    Raises
    ------
    TrainingDiverged
        If a training or validation loss becomes non-finite.
    """
    recordings = check_recordings(recordings)
    if len(recordings) != config.model.n_regions:
        raise ValueError(f"config has {config.model.n_regions} regions, "
                         f"data has {len(recordings)}")
    target_epochs = config.epochs if epochs is None else int(epochs)
    if resume is None:
        record = _initial_record(config, recordings)
    else:
        record = copy.deepcopy(resume)
        record.config = config
    weights = config.weights

    model = CTAEModel(config.model, seed=config.seed)
    model.params.load_state_dict(record.params)
    model.set_standardization(record.input_mean, record.input_scale)
    xs = model.prepare_inputs([r.values for r in recordings])
    train_idx, val_idx = record.splits["train"], record.splits["val"]
    x_train = [x[train_idx] for x in xs]
    x_val = [x[val_idx] for x in xs]
    n_train = train_idx.size
    batch_size = config.resolved_batch_size(n_train)

    rng = np.random.default_rng()
    rng.bit_generator.state = record.rng_state
    adam = record.adam

    if record.epoch == 0 and not record.log:
        val = _validate(model, x_val, config)
        record.best_val, record.best_epoch = val, 0
        record.best_params = model.params.state_dict()
        record.log.append({"epoch": 0, "rec": np.nan, "shared": np.nan,
                           "align": np.nan, "orth": np.nan,
                           "lambda_orth_eff": 0.0, "total": np.nan,
                           "val_total": val, "clipped": 0})

    for epoch in range(record.epoch + 1, target_epochs + 1):
        order = rng.permutation(n_train) if batch_size < n_train else np.arange(n_train)
        sums = dict.fromkeys(("rec", "shared", "align", "orth", "total"), 0.0)
        n_clipped = 0
        lam = 0.0
        for start in range(0, n_train, batch_size):
            batch = order[start:start + batch_size]
            xb = [x[batch] for x in x_train]
            total, report, _ = evaluate_objective(
                model, xb, weights, epoch, training=True, rng=rng,
                two_region_path=config.two_region_path)
            if not np.isfinite(report.total):
                record.diverged = True
                raise TrainingDiverged(epoch, _components(report), record)
            grads = backward(total, model.params)
            grads, _, clipped = clip_global_norm(grads, config.clip_norm)
            n_clipped += int(clipped)
            adam_step(model.params, grads, adam, config.lr)
            model.params.zero_grad()
            share = batch.size / n_train
            for key in sums:
                sums[key] += share * getattr(report, key)
            lam = report.lambda_orth_eff
        val = _validate(model, x_val, config)
        if not np.isfinite(val):
            record.diverged = True
            raise TrainingDiverged(epoch, {"val_total": val}, record)
        row = {"epoch": epoch, **sums, "lambda_orth_eff": lam,
               "val_total": val, "clipped": n_clipped}
        record.log.append(row)
        if val < record.best_val:
            record.best_val, record.best_epoch = val, epoch
            record.best_params = model.params.state_dict()
        record.epoch = epoch
        if callback is not None and (epoch % config.report_every == 0
                                     or epoch == target_epochs):
            callback(row)
        if n_clipped:
            logger.debug("epoch %d: gradient clipped in %d batches", epoch, n_clipped)

    record.params = model.params.state_dict()
    record.adam = adam
    record.rng_state = rng.bit_generator.state
    return TrainResult(record, model_from_record(record))
