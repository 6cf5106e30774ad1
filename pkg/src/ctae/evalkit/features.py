"""Feature views over latent blocks and fold construction."""

from dataclasses import dataclass

import numpy as np

from ..datasets import split_trials

__all__ = ["FeatureView", "make_folds", "check_features"]


def check_features(features):
    """Coerce to a finite ``(trials, dims, time)`` float array."""
    if isinstance(features, FeatureView):
        return features.values
    x = np.asarray(features, dtype=np.float64)
    if x.ndim == 2:
        x = x[:, :, None]
    if x.ndim != 3:
        raise ValueError(f"features must be (trials, dims, time), got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("features contain NaN or inf")
    return x


@dataclass(eq=False)
class FeatureView:
    """A named selection of latent dimensions, ``(trials, dims, time)``.

    Parameters
    ----------
    values : ndarray of shape (n_trials, n_dims, n_timesteps)
    source : str
        ``'shared'``, ``'private:<r>'``, ``'code:<bits>'`` or ``'all'``.
    dims : ndarray of int
        Latent indices the view was taken from.
    """

    values: np.ndarray
    source: str = "all"
    dims: np.ndarray = None

    @classmethod
    def from_latents(cls, latents, mask, source="all", time_window=None):
        """Select dimensions of fused latents ``(trials, D, time)`` by block."""
        z = check_features(latents)
        if z.shape[1] != mask.n_latent:
            raise ValueError(f"latents have {z.shape[1]} dims, mask has "
                             f"{mask.n_latent}")
        if source == "all":
            dims = np.arange(mask.n_latent)
        elif source == "shared":
            dims = mask.shared_indices()
        elif source.startswith("private:"):
            dims = mask.private_indices(int(source.split(":", 1)[1]))
        elif source.startswith("code:"):
            dims = mask.block_indices(source.split(":", 1)[1])
        else:
            raise ValueError(f"unknown feature source {source!r}")
        values = z[:, dims, :]
        if time_window is not None:
            values = values[:, :, slice(*time_window)]
        return cls(values=values, source=source, dims=dims)


def make_folds(n_trials, folds=5, labels=None, seed=0):
    """``[(train_idx, test_idx), ...]`` from a fold count or explicit pairs."""
    if isinstance(folds, (int, np.integer)):
        parts = split_trials(n_trials, int(folds), labels=labels, seed=seed)
        everything = np.arange(n_trials)
        return [(np.setdiff1d(everything, test), test) for test in parts]
    out = []
    for train, test in folds:
        train, test = np.asarray(train), np.asarray(test)
        if np.intersect1d(train, test).size:
            raise ValueError("a fold's train and test trials overlap")
        out.append((train, test))
    if not out:
        raise ValueError("no folds given")
    return out
