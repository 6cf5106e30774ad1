"""Sliding-window decoding with a once-per-fold classifier."""

from dataclasses import asdict, dataclass

import numpy as np

from .decoders import fit_classifier, standardize_fold
from .features import check_features, make_folds

__all__ = ["TimeCurve", "time_resolved_decoding"]


@dataclass
class TimeCurve:
    """Accuracy per window centre.

    Attributes
    ----------
    accuracy : ndarray of shape (n_timesteps,)
        Mean over folds.
    sd : ndarray of shape (n_timesteps,)
        Standard deviation over folds.
    fold_accuracy : ndarray of shape (n_folds, n_timesteps)
    truncated : ndarray of bool
        Centres whose window runs past either end of the trial.
    full_accuracy : float
        Accuracy with every bin visible.
    window : int
    chance : float
        Largest class prevalence.
    """

    accuracy: np.ndarray
    sd: np.ndarray
    fold_accuracy: np.ndarray
    truncated: np.ndarray
    full_accuracy: float
    window: int
    chance: float

    def to_dict(self):
        out = asdict(self)
        for key in ("accuracy", "sd", "fold_accuracy", "truncated"):
            out[key] = np.asarray(out[key]).tolist()
        return out


def time_resolved_decoding(features, labels, window=5, folds=5, seed=0,
                           C=1.0, tol=1e-6):
    """Localise label information in time.

    One classifier per fold is trained on z-scored, time-flattened
    features. At test time every bin further than ``window // 2`` from the
    centre is set to its training mean (zero after z-scoring) and the
    accuracy is recorded per centre. A window at least as long as the trial
    masks nothing, so the curve is flat at the full-feature accuracy.

    Parameters
    ----------
    features : FeatureView or array of shape (n_trials, n_dims, n_timesteps)
    labels : array-like of shape (n_trials,)
    window : int
        Odd width, or any width >= n_timesteps.
    folds : int or list of (train, test)
    seed : int

    Returns
    -------
    TimeCurve
    """
    x = check_features(features)
    labels = np.asarray(labels)
    n_trials, n_dims, steps = x.shape
    if window < 1:
        raise ValueError("window must be positive")
    if window < steps and window % 2 == 0:
        raise ValueError("window must be odd unless it spans the whole trial")
    half = window // 2
    centres = np.arange(steps)
    if window >= steps:
        visible = np.ones((steps, steps), dtype=bool)
        truncated = np.zeros(steps, dtype=bool)
    else:
        visible = np.abs(centres[:, None] - centres[None, :]) <= half
        truncated = (centres - half < 0) | (centres + half > steps - 1)
    flat = x.reshape(n_trials, -1)
    # Flattened column j belongs to time bin j % steps.
    bin_of_column = np.tile(np.arange(steps), n_dims)
    fold_pairs = make_folds(n_trials, folds, labels=labels, seed=seed)
    fold_acc = np.zeros((len(fold_pairs), steps))
    fold_full = np.zeros(len(fold_pairs))
    for f, (train, test) in enumerate(fold_pairs):
        xtr, xte, _ = standardize_fold(flat[train], flat[test])
        clf, _ = fit_classifier(xtr, labels[train], C=C, tol=tol)
        fold_full[f] = np.mean(clf.predict(xte) == labels[test])
        for c in centres:
            keep = visible[c][bin_of_column]
            pred = clf.predict(np.where(keep, xte, 0.0))
            fold_acc[f, c] = np.mean(pred == labels[test])
    _, counts = np.unique(labels, return_counts=True)
    return TimeCurve(accuracy=fold_acc.mean(axis=0), sd=fold_acc.std(axis=0),
                     fold_accuracy=fold_acc, truncated=truncated,
                     full_accuracy=float(fold_full.mean()), window=int(window),
                     chance=float(counts.max() / n_trials))
