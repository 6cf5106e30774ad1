"""Encode data with a trained model, score it, and run loss ablations."""

import dataclasses
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .datasets import check_recordings, stack_labels
from .diffcore import no_grad
from .evalkit import (FeatureView, alignment_diagnostics, fit_linear_decoder,
                      fit_logistic_decoder, gram_diagnostics, subspace_recovery,
                      time_resolved_decoding, variance_per_latent)
from .trainer import TrainingDiverged, train

__all__ = [
    "ABLATIONS",
    "EncodedData",
    "encode_recordings",
    "subspace_names",
    "parse_subspace",
    "evaluate_subspaces",
    "AblationRow",
    "ablation_config",
    "run_ablation",
]

# Variant name -> loss weight set to zero.
ABLATIONS = {"full": None, "no_shared": "shared", "no_align": "align",
             "no_orth": "orth"}


@dataclass
class EncodedData:
    """Latents of every trial, ``(trials, D, time)``."""

    fused: np.ndarray
    regions: list
    mask: object

    def view(self, subspace):
        return FeatureView.from_latents(self.fused, self.mask, parse_subspace(subspace))


def encode_recordings(model, recordings):
    values = [r.values if hasattr(r, "values") else np.asarray(r) for r in recordings]
    xs = model.prepare_inputs(values)
    with no_grad():
        bundle = model.encode(xs)
    fused = np.swapaxes(bundle.fused.data, 1, 2).astype(np.float64)
    regions = [np.swapaxes(z.data, 1, 2).astype(np.float64) for z in bundle.region_latents]
    return EncodedData(fused=fused, regions=regions, mask=model.mask)


def subspace_names(mask):
    names = ["shared"] if mask.shared_indices().size else []
    return names + [f"private-{r + 1}" for r in range(mask.n_regions)
                    if mask.private_indices(r).size]


def parse_subspace(name):
    """CLI names (``shared``, ``private-1``, ``code-101``, ``all``) to view sources."""
    if name in ("shared", "all"):
        return name
    if name.startswith("private-"):
        return f"private:{int(name.split('-', 1)[1]) - 1}"
    if name.startswith("code-"):
        return f"code:{name.split('-', 1)[1]}"
    raise ValueError(f"unknown subspace {name!r}")


def evaluate_subspaces(encoded, labels=None, targets=None, subspaces=None, folds=5,
                       seed=0, time_resolved=False, window=5, time_window=None):
    """Discrete and continuous decoding per subspace plus latent diagnostics."""
    subspaces = subspaces or subspace_names(encoded.mask)
    out = {"subspaces": {}, "gram": gram_diagnostics(encoded.fused, encoded.mask),
           "variance": variance_per_latent(encoded.fused)}
    if encoded.mask.shared_indices().size:
        out["alignment"] = alignment_diagnostics(encoded.regions, encoded.fused, encoded.mask)
    curves = {}
    for name in subspaces:
        view = encoded.view(name)
        entry = {"dims": view.dims.tolist()}
        if labels is not None:
            entry["discrete"] = fit_logistic_decoder(view, labels, folds=folds, seed=seed)
            if time_resolved:
                curves[name] = time_resolved_decoding(view, labels, window=window,
                                                      folds=folds, seed=seed)
        if targets is not None:
            entry["continuous"] = fit_linear_decoder(view, targets, folds=folds, seed=seed,
                                                     time_window=time_window)
        out["subspaces"][name] = entry
    return out, curves


@dataclass
class AblationRow:
    variant: str
    accuracy: dict
    accuracy_sd: dict
    gram_offdiag: float
    alignment: float
    best_val: float
    diverged: bool = False
    recovery: dict = field(default_factory=dict)

    def to_dict(self):
        return dataclasses.asdict(self)


def ablation_config(base, variant):
    """Copy of ``base`` with one loss weight zeroed (``full`` is unchanged)."""
    zeroed = ABLATIONS[variant]
    if zeroed is None:
        return base
    weights = dataclasses.replace(base.weights, **{zeroed: 0.0})
    return dataclasses.replace(base, weights=weights)


def _ablation_task(args):
    variant, config, recordings, truth, folds, seed = args
    try:
        result = train(config, recordings)
    except TrainingDiverged as err:
        nan = float("nan")
        return AblationRow(variant, {}, {}, nan, nan, nan, diverged=True), None
    encoded = encode_recordings(result.model, recordings)
    labels = stack_labels(recordings)
    acc, sd = {}, {}
    for name in subspace_names(encoded.mask):
        report = fit_logistic_decoder(encoded.view(name), labels, folds=folds, seed=seed)
        acc[name], sd[name] = report.mean, report.sd
    gram = gram_diagnostics(encoded.fused, encoded.mask)
    align = (alignment_diagnostics(encoded.regions, encoded.fused, encoded.mask).mean_deviation
             if encoded.mask.shared_indices().size else float("nan"))
    recovery = {}
    if truth is not None:
        mask = encoded.mask
        report = subspace_recovery(
            encoded.fused[:, mask.shared_indices()],
            [encoded.fused[:, mask.private_indices(r)] for r in range(mask.n_regions)],
            truth, folds=folds, seed=seed)
        recovery = report.to_dict()
    row = AblationRow(variant, acc, sd, gram.mean_offdiag, align,
                      float(result.best_val), recovery=recovery)
    return row, result.record


def run_ablation(base, recordings, truth=None, folds=5, seed=0, jobs=1,
                 variants=tuple(ABLATIONS)):
    """Train each loss ablation and decode conditions from every subspace.

    Returns ``(rows, records)`` in ``variants`` order.
    """
    recordings = check_recordings(recordings)
    if stack_labels(recordings) is None:
        raise ValueError("ablation needs condition labels")
    tasks = [(v, ablation_config(base, v), recordings, truth, folds, seed) for v in variants]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_ablation_task, tasks))
    else:
        results = [_ablation_task(t) for t in tasks]
    return [r for r, _ in results], [rec for _, rec in results]
