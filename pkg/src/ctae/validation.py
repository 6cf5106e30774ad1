"""Input validation for multi-region data."""

import numpy as np

from .datasets import RegionRecording

__all__ = ["check_Xs", "check_labels"]


def check_Xs(Xs, n_regions=None, channels=None, n_timesteps=None):
    """Validate simultaneous recordings ``Xs``.

    Parameters
    ----------
    Xs : sequence of arrays of shape (n_trials, n_channels_r, n_timesteps) or RegionRecording
    n_regions, channels, n_timesteps : optional
        Expected values, checked when given (e.g. against a fitted model).

    Returns
    -------
    list of float64 ndarray
    """
    if isinstance(Xs, np.ndarray) and Xs.dtype != object:
        raise ValueError("Xs must be a sequence of per-region arrays, not one array")
    out = []
    for r, X in enumerate(Xs):
        if isinstance(X, RegionRecording):
            X = X.values
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 3:
            raise ValueError(f"region {r}: expected (trials, channels, time), "
                             f"got shape {X.shape}")
        if not np.all(np.isfinite(X)):
            raise ValueError(f"region {r}: input contains NaN or inf")
        out.append(X)
    if len(out) < 2:
        raise ValueError(f"at least two regions are required, got {len(out)}")
    if n_regions is not None and len(out) != n_regions:
        raise ValueError(f"expected {n_regions} regions, got {len(out)}")
    if len({X.shape[0] for X in out}) != 1:
        raise ValueError("regions disagree on the number of trials")
    if len({X.shape[2] for X in out}) != 1:
        raise ValueError("regions disagree on the number of time bins")
    if channels is not None:
        got = tuple(X.shape[1] for X in out)
        if got != tuple(channels):
            raise ValueError(f"expected channels {tuple(channels)}, got {got}")
    if n_timesteps is not None and out[0].shape[2] != n_timesteps:
        raise ValueError(f"expected {n_timesteps} time bins, got {out[0].shape[2]}")
    return out


def check_labels(y, n_trials):
    if y is None:
        return None
    y = np.asarray(y)
    if y.shape != (n_trials,):
        raise ValueError(f"expected {n_trials} labels, got shape {y.shape}")
    return y
