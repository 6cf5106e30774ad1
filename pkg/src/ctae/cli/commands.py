"""Implementations of the ``ctae`` subcommands.

Each command takes resolved config values plus paths, writes its outputs
into ``run_dir`` and returns a dict describing inputs and outputs for the
manifest.
"""

import json
import os

import numpy as np

from ..datasets import (SyntheticSpec, generate_synthetic, load_dataset, load_ground_truth,
                        save_dataset, save_ground_truth, stack_labels)
from ..evalkit import subspace_recovery, write_curve_csv, write_json
from ..objectives import LossWeights
from ..pipeline import encode_recordings, evaluate_subspaces, run_ablation
from ..seqmodel import ModelConfig
from ..trainer import (GridSpec, TrainConfig, grid_search, load_checkpoint,
                       model_from_record, save_checkpoint, train, write_log_csv)
from ..trainer.loop import TrainingDiverged

__all__ = ["synth", "train_cmd", "grid", "evaluate", "ablate", "train_config_from_values"]


def _dump_json(obj, path):
    write_json(obj, path)
    return os.path.basename(path)


def synth(values, run_dir):
    spec = SyntheticSpec(
        n_regions=values["n_regions"], subset_sizes=values["subset_sizes"],
        n_trials=values["n_trials"], n_timesteps=values["n_timesteps"],
        channels=tuple(values["channels"]), smoothness=values["smoothness"],
        mixing=values["mixing"], noise_std=values["noise_std"],
        n_conditions=values["n_conditions"],
        condition_amplitude=values["condition_amplitude"],
        bin_width_ms=values["bin_width_ms"], seed=values["seed"])
    recordings, truth = generate_synthetic(spec)
    data_path = os.path.join(run_dir, "data.ctae")
    truth_path = os.path.join(run_dir, "truth.ctae")
    save_dataset(data_path, recordings)
    save_ground_truth(truth_path, truth, spec)
    return {"outputs": {"data": "data.ctae", "truth": "truth.ctae"}}


def train_config_from_values(values, recordings):
    channels = tuple(r.n_channels for r in recordings)
    model = ModelConfig(
        channels=channels, n_timesteps=recordings[0].n_timesteps,
        subset_sizes=values["subset_sizes"], n_layers=values["n_layers"],
        d_model=values["d_model"], n_heads=values["n_heads"], d_ff=values["d_ff"],
        dropout=values["dropout"], standardize=values["standardize"],
        dtype=values["dtype"])
    weights = LossWeights(shared=values["lambda_shared"], align=values["lambda_align"],
                          orth=values["lambda_orth"], warmup=values["warmup"])
    return TrainConfig(model=model, weights=weights, lr=values["lr"],
                       epochs=values["epochs"], batch_size=values["batch_size"],
                       seed=values["seed"],
                       split=(values["split_train"], values["split_val"]),
                       report_every=values["report_every"],
                       clip_norm=values["clip_norm"],
                       two_region_path=values["two_region_path"])


def _load_regions(data_path, regions):
    recordings = load_dataset(data_path)
    if regions is not None:
        recordings = [recordings[r] for r in regions]
    return recordings


def _summary(record):
    return {"best_val": record.best_val, "best_epoch": record.best_epoch,
            "epochs": record.epoch, "diverged": record.diverged,
            "splits": {k: v.tolist() for k, v in record.splits.items()}}


def train_cmd(values, run_dir, data_path, regions=None, epochs=None, progress=None):
    recordings = _load_regions(data_path, regions)
    config = train_config_from_values(values, recordings)
    try:
        result = train(config, recordings, epochs=epochs, callback=progress)
        record = result.record
    except TrainingDiverged as err:
        if err.record is not None:
            save_checkpoint(err.record, os.path.join(run_dir, "checkpoint.ckpt"))
            write_log_csv(err.record.log, os.path.join(run_dir, "log.csv"))
        raise
    save_checkpoint(record, os.path.join(run_dir, "checkpoint.ckpt"))
    write_log_csv(record.log, os.path.join(run_dir, "log.csv"))
    _dump_json(_summary(record), os.path.join(run_dir, "summary.json"))
    return {"inputs": {"data": os.path.abspath(data_path)},
            "outputs": {"checkpoint": "checkpoint.ckpt", "log": "log.csv",
                        "summary": "summary.json"}}


def grid(values, run_dir, data_path, regions=None, jobs=1):
    recordings = _load_regions(data_path, regions)
    base = train_config_from_values(values, recordings)
    spec = GridSpec(**{axis: values[f"grid_{axis}"] for axis in GridSpec.AXES})
    cache = os.path.join(run_dir, "cells")
    result = grid_search(base, spec, recordings, epochs=values["grid_epochs"],
                         jobs=jobs, cache_dir=cache)
    rows = []
    for cell in result.ranked:
        row = cell.to_dict()
        row["checkpoint_path"] = os.path.relpath(cell.checkpoint_path, run_dir)
        row["val_losses"] = [r["val_total"] for r in cell.record.log]
        rows.append(row)
    with open(os.path.join(run_dir, "grid.json"), "w") as fh:
        json.dump(_finite(rows), fh, indent=2, sort_keys=True)
        fh.write("\n")
    save_checkpoint(result.best.record, os.path.join(run_dir, "best.ckpt"))
    return {"inputs": {"data": os.path.abspath(data_path)},
            "outputs": {"results": "grid.json", "best": "best.ckpt", "cells": "cells"}}


def _finite(obj):
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_finite(v) for v in obj]
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj


def evaluate(values, run_dir, checkpoint_path, data_path, truth_path=None,
             subspaces=None, time_resolved=None):
    record = load_checkpoint(checkpoint_path)
    model = model_from_record(record)
    recordings = load_dataset(data_path)
    if len(recordings) != model.config.n_regions:
        raise ValueError("data and checkpoint disagree on the number of regions")
    encoded = encode_recordings(model, recordings)
    labels = stack_labels(recordings)
    targets = recordings[0].targets
    subspaces = subspaces or values["subspaces"]
    time_resolved = values["time_resolved"] if time_resolved is None else time_resolved
    report, curves = evaluate_subspaces(
        encoded, labels=labels, targets=targets, subspaces=subspaces,
        folds=values["folds"], seed=values["seed"], time_resolved=time_resolved,
        window=values["window"], time_window=values["time_window"])
    outputs = {}
    if truth_path is not None:
        truth = load_ground_truth(truth_path)
        mask = encoded.mask
        report["recovery"] = subspace_recovery(
            encoded.fused[:, mask.shared_indices()],
            [encoded.fused[:, mask.private_indices(r)] for r in range(mask.n_regions)],
            truth, folds=values["folds"], seed=values["seed"])
    serial = {key: (val.to_dict() if hasattr(val, "to_dict") else val)
              for key, val in report.items() if key != "subspaces"}
    serial["subspaces"] = {
        name: {k: (v.to_dict() if hasattr(v, "to_dict") else v) for k, v in entry.items()}
        for name, entry in report["subspaces"].items()}
    outputs["report"] = _dump_json(serial, os.path.join(run_dir, "eval.json"))
    for name, curve in curves.items():
        fname = f"curve_{name}.csv"
        write_curve_csv(curve, os.path.join(run_dir, fname))
        outputs[f"curve_{name}"] = fname
    dims = {name: entry["dims"] for name, entry in report["subspaces"].items()}
    inputs = {"checkpoint": os.path.abspath(checkpoint_path),
              "data": os.path.abspath(data_path)}
    if truth_path is not None:
        inputs["truth"] = os.path.abspath(truth_path)
    return {"inputs": inputs, "outputs": outputs, "feature_dims": dims}


def ablate(values, run_dir, data_path, truth_path=None, jobs=1):
    recordings = load_dataset(data_path)
    base = train_config_from_values(values, recordings)
    truth = load_ground_truth(truth_path) if truth_path else None
    rows, records = run_ablation(base, recordings, truth=truth, folds=values["folds"],
                                 seed=values["eval_seed"], jobs=jobs)
    names = sorted({k for row in rows for k in row.accuracy})
    with open(os.path.join(run_dir, "ablation.csv"), "w") as fh:
        fh.write(",".join(["variant"] + [f"{n}_mean,{n}_sd" for n in names]
                          + ["gram_offdiag", "alignment", "best_val"]) + "\n")
        for row in rows:
            cells = [row.variant]
            for n in names:
                cells += [repr(row.accuracy.get(n, float("nan"))),
                          repr(row.accuracy_sd.get(n, float("nan")))]
            cells += [repr(row.gram_offdiag), repr(row.alignment), repr(row.best_val)]
            fh.write(",".join(cells) + "\n")
    _dump_json({"rows": [r.to_dict() for r in rows]}, os.path.join(run_dir, "ablation.json"))
    for row, record in zip(rows, records):
        if record is not None:
            save_checkpoint(record, os.path.join(run_dir, f"{row.variant}.ckpt"))
    inputs = {"data": os.path.abspath(data_path)}
    if truth_path:
        inputs["truth"] = os.path.abspath(truth_path)
    return {"inputs": inputs, "outputs": {"table": "ablation.csv", "report": "ablation.json"}}
