"""Seeded, optionally stratified trial splits."""

import numpy as np

__all__ = ["split_trials", "train_val_test"]


def _quotas(n, weights, deficit):
    # Floor of each share, leftovers to the splits furthest below target.
    base = np.floor(n * weights + 1e-9).astype(np.int64)
    extra = n - int(base.sum())
    if extra:
        frac = n * weights - base
        order = np.lexsort((-frac, -(deficit - base)))
        base[order[:extra]] += 1
    return base


def split_trials(n_trials, fractions, labels=None, seed=0, require_all_classes=True):
    """Partition ``range(n_trials)`` into disjoint, exhaustive index sets.

    Parameters
    ----------
    n_trials : int
    fractions : int or sequence of float
        An int ``n`` asks for ``n`` equal folds. A sequence gives split
        fractions; when they sum to less than one the remainder becomes an
        extra final split (the test set).
    labels : array-like of shape (n_trials,), optional
        Condition labels for stratification.
    seed : int
    require_all_classes : bool
        Raise when a split receives no trial of some class. Train/val/test
        splits of small data sets turn this off.

    Returns
    -------
    list of ndarray
        Sorted trial indices per split.

    Raises
    ------
    ValueError
        If fractions are invalid or a split receives no member of a class.
    """
    if isinstance(fractions, (int, np.integer)):
        if fractions < 2:
            raise ValueError("need at least two folds")
        weights = np.full(int(fractions), 1.0 / fractions)
    else:
        weights = np.asarray(fractions, dtype=np.float64)
        if weights.ndim != 1 or weights.size == 0 or np.any(weights <= 0):
            raise ValueError("fractions must be a non-empty list of positives")
        total = weights.sum()
        if total > 1 + 1e-9:
            raise ValueError(f"fractions sum to {total:.6g} > 1")
        if 1 - total > 1e-9:
            weights = np.append(weights, 1 - total)
    n_splits = weights.size
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n_trials)
    if labels is None:
        groups = [(None, perm)]
    else:
        labels = np.asarray(labels)
        if labels.shape != (n_trials,):
            raise ValueError("one label per trial is required")
        groups = [(c, perm[labels[perm] == c]) for c in np.unique(labels)]
    parts = [[] for _ in range(n_splits)]
    assigned = np.zeros(n_splits)
    seen = 0
    for c, members in groups:
        seen += members.size
        quota = _quotas(members.size, weights, weights * seen - assigned)
        cuts = np.cumsum(quota)[:-1]
        for j, chunk in enumerate(np.split(members, cuts)):
            if require_all_classes and labels is not None and chunk.size == 0:
                raise ValueError(f"split {j} has no trial of class {c!r}")
            parts[j].extend(chunk.tolist())
        assigned += quota
    if any(len(p) == 0 for p in parts):
        raise ValueError("a split is empty; use fewer splits or more trials")
    return [np.sort(np.asarray(p, dtype=np.int64)) for p in parts]


def train_val_test(n_trials, labels=None, seed=0, fractions=(0.7, 0.15)):
    """``(train, validation, test)`` indices; test takes the remainder."""
    parts = split_trials(n_trials, fractions, labels, seed,
                         require_all_classes=False)
    if len(parts) == 2:
        parts.append(np.zeros(0, dtype=np.int64))
    return tuple(parts)
