"""Scores for recovering planted latents from learned blocks."""

from dataclasses import asdict, dataclass

import numpy as np

from .decoders import fit_linear_decoder

__all__ = ["RecoveryReport", "subspace_recovery"]


@dataclass
class RecoveryReport:
    """Held-out R^2 between planted and recovered blocks.

    Attributes
    ----------
    shared_recovery : float
        Planted ``S`` predicted from the recovered shared block.
    shared_leakage : list of float
        Planted ``S`` predicted from each recovered private block.
    private_recovery : list of float
        Planted ``P^(r)`` predicted from recovered private block ``r``.
    private_leakage : list of float
        Planted ``P^(r)`` predicted from the recovered shared block.
    """

    shared_recovery: float
    shared_leakage: list
    private_recovery: list
    private_leakage: list

    def to_dict(self):
        return asdict(self)


def _r2(features, targets, folds, seed):
    if features.shape[1] == 0 or targets.shape[1] == 0:
        return float("nan")
    return fit_linear_decoder(features, targets, folds=folds, seed=seed).mean


def subspace_recovery(shared, privates, truth, folds=5, seed=0):
    """Cross-validated linear recovery and leakage scores.

    Every time bin of every trial is one sample; folds split whole trials.

    Parameters
    ----------
    shared : array of shape (n_trials, d_s, n_timesteps)
        Recovered shared block.
    privates : list of arrays of shape (n_trials, d_r, n_timesteps)
        Recovered private block per region.
    truth : GroundTruth
    folds : int
    seed : int

    Returns
    -------
    RecoveryReport
    """
    planted_s = truth.shared
    planted_p = [truth.private(r) for r in range(len(privates))]
    return RecoveryReport(
        shared_recovery=_r2(shared, planted_s, folds, seed),
        shared_leakage=[_r2(p, planted_s, folds, seed) for p in privates],
        private_recovery=[_r2(p, t, folds, seed) for p, t in zip(privates, planted_p)],
        private_leakage=[_r2(shared, t, folds, seed) for t in planted_p])
