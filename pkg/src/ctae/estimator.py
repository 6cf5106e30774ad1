"""Scikit-learn style front end for the coupled transformer autoencoder."""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .datasets import RegionRecording
from .diffcore import no_grad
from .objectives import LossWeights
from .seqmodel import ModelConfig
from .trainer import TrainConfig, model_from_record, train
from .validation import check_Xs, check_labels

__all__ = ["CTAE"]


class CTAE(BaseEstimator, TransformerMixin):
    """Coupled transformer autoencoder for simultaneously recorded regions.

    Each region is encoded by its own causal transformer; the per-region
    latents are fused by masked averaging over the regions that claim each
    dimension, and every region is reconstructed from its claimed
    dimensions.

    Parameters
    ----------
    subset_sizes : dict of str to int, optional
        Latent block size per region-subset code. Defaults to
        ``{'11': d, '10': d, '01': d}`` with ``d = 5`` for two regions.
    n_layers, d_model, n_heads, d_ff : int
        Transformer sizes.
    dropout : float
    lambda_shared, lambda_align, lambda_orth : float
        Loss weights.
    warmup : int
        Orthogonality warm-up length in epochs.
    lr : float
    epochs : int
    batch_size : int, optional
    validation_fraction : float
        Share of trials held out for model selection.
    random_state : int

    Attributes
    ----------
    record_ : CheckpointRecord
        Training state, including the per-epoch log.
    model_ : CTAEModel
        Model with the best validation parameters.
    n_regions_ : int
    channels_ : tuple of int
    n_timesteps_ : int

    Examples
    --------
    >>> est = CTAE(epochs=5).fit([X1, X2], y)       # doctest: +SKIP
    >>> Z = est.transform([X1, X2])                 # (trials, D, time)
    """

    def __init__(self, subset_sizes=None, n_layers=1, d_model=32, n_heads=4,
                 d_ff=64, dropout=0.0, lambda_shared=1.0, lambda_align=0.5,
                 lambda_orth=0.01, warmup=100, lr=1e-4, epochs=1000,
                 batch_size=None, validation_fraction=0.15, random_state=0):
        self.subset_sizes = subset_sizes
        self.n_layers = n_layers
        self.d_model = d_model
        self.n_heads = n_heads
        self.d_ff = d_ff
        self.dropout = dropout
        self.lambda_shared = lambda_shared
        self.lambda_align = lambda_align
        self.lambda_orth = lambda_orth
        self.warmup = warmup
        self.lr = lr
        self.epochs = epochs
        self.batch_size = batch_size
        self.validation_fraction = validation_fraction
        self.random_state = random_state

    def _train_config(self, channels, n_timesteps):
        sizes = self.subset_sizes
        if sizes is None:
            if len(channels) != 2:
                raise ValueError("subset_sizes is required for more than two regions")
            sizes = {"11": 5, "10": 5, "01": 5}
        model = ModelConfig(channels=channels, n_timesteps=n_timesteps,
                            subset_sizes=sizes, n_layers=self.n_layers,
                            d_model=self.d_model, n_heads=self.n_heads,
                            d_ff=self.d_ff, dropout=self.dropout)
        weights = LossWeights(shared=self.lambda_shared, align=self.lambda_align,
                              orth=self.lambda_orth, warmup=self.warmup)
        return TrainConfig(model=model, weights=weights, lr=self.lr,
                           epochs=self.epochs, batch_size=self.batch_size,
                           seed=self.random_state,
                           split=(1.0 - self.validation_fraction,
                                  self.validation_fraction))

    def fit(self, Xs, y=None):
        """Train on ``Xs``, a list of ``(trials, channels, time)`` arrays.

        ``y`` (condition labels) only stratifies the train/validation split.
        """
        Xs = check_Xs(Xs)
        y = check_labels(y, Xs[0].shape[0])
        channels = tuple(X.shape[1] for X in Xs)
        n_timesteps = Xs[0].shape[2]
        config = self._train_config(channels, n_timesteps)
        recordings = [RegionRecording(X, region=f"region{r}", labels=y)
                      for r, X in enumerate(Xs)]
        result = train(config, recordings)
        self.record_ = result.record
        self.model_ = result.model
        self.n_regions_ = len(Xs)
        self.channels_ = channels
        self.n_timesteps_ = n_timesteps
        return self

    def _encode(self, Xs):
        check_is_fitted(self, "model_")
        Xs = check_Xs(Xs, self.n_regions_, self.channels_, self.n_timesteps_)
        xs = self.model_.prepare_inputs(Xs)
        with no_grad():
            return self.model_.encode(xs)

    def transform(self, Xs):
        """Fused latents, ``(trials, D, time)``."""
        return np.swapaxes(self._encode(Xs).fused.data, 1, 2).copy()

    def transform_blocks(self, Xs):
        """Fused latents split by subset code, each ``(trials, d, time)``."""
        bundle = self._encode(Xs)
        return {code: np.swapaxes(block.data, 1, 2).copy()
                for code, block in bundle.blocks.items()}

    def transform_regions(self, Xs):
        """Per-region encoder outputs before fusion, each ``(trials, D, time)``."""
        bundle = self._encode(Xs)
        return [np.swapaxes(z.data, 1, 2).copy() for z in bundle.region_latents]

    def reconstruct(self, Xs):
        """Reconstructions in the original units, per region ``(trials, channels, time)``."""
        bundle = self._encode(Xs)
        with no_grad():
            recons = self.model_.reconstruct(bundle.fused)
        out = []
        for r, xhat in enumerate(recons):
            x = xhat.data * self.model_.input_scale[r] + self.model_.input_mean[r]
            out.append(np.swapaxes(x, 1, 2).copy())
        return out

    def score(self, Xs, y=None):
        """Negative mean squared reconstruction error (higher is better)."""
        Xs = check_Xs(Xs)
        errs = [np.mean((xhat - X) ** 2) for xhat, X in zip(self.reconstruct(Xs), Xs)]
        return -float(np.mean(errs))

    @classmethod
    def from_record(cls, record):
        """Estimator wrapping an existing training record."""
        c = record.config
        est = cls(subset_sizes=dict(c.model.subset_sizes), n_layers=c.model.n_layers,
                  d_model=c.model.d_model, n_heads=c.model.n_heads, d_ff=c.model.d_ff,
                  dropout=c.model.dropout, lambda_shared=c.weights.shared,
                  lambda_align=c.weights.align, lambda_orth=c.weights.orth,
                  warmup=c.weights.warmup, lr=c.lr, epochs=c.epochs,
                  batch_size=c.batch_size, validation_fraction=c.split[1],
                  random_state=c.seed)
        est.record_ = record
        est.model_ = model_from_record(record)
        est.n_regions_ = c.model.n_regions
        est.channels_ = tuple(c.model.channels)
        est.n_timesteps_ = c.model.n_timesteps
        return est
