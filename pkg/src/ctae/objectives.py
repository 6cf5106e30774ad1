"""Reconstruction, shared-only, alignment and orthogonality losses.

All tensors are batched and time-major: activity is ``(trials, T, N_r)``
and latents are ``(trials, T, D)``. Frobenius losses are summed over the
entries of one trial and averaged over the trials in the batch; 2-D inputs
count as a single trial.
"""

from dataclasses import asdict, dataclass

import numpy as np

from .diffcore import Tensor, no_grad, ops

__all__ = [
    "LossWeights",
    "LossReport",
    "loss_reconstruction",
    "loss_shared_only",
    "loss_alignment",
    "loss_orthogonality",
    "warmup_coefficient",
    "total_loss",
    "evaluate_objective",
]


@dataclass
class LossWeights:
    """Loss weights and the orthogonality warm-up length (in epochs)."""

    shared: float = 1.0
    align: float = 0.5
    orth: float = 0.01
    warmup: int = 100

    def __post_init__(self):
        for name in ("shared", "align", "orth"):
            if getattr(self, name) < 0:
                raise ValueError(f"lambda_{name} must be non-negative")
        if int(self.warmup) < 1:
            raise ValueError("warm-up length must be at least one epoch")
        self.warmup = int(self.warmup)

    def to_dict(self):
        return asdict(self)


@dataclass
class LossReport:
    rec: float
    shared: float
    align: float
    orth: float
    total: float
    epoch: int
    lambda_orth_eff: float

    def to_dict(self):
        return asdict(self)


def _n_trials(x):
    return x.shape[0] if x.ndim == 3 else 1


def _sq_frobenius_per_trial(diff):
    return ops.sum(ops.square(diff)) * (1.0 / _n_trials(diff))


def loss_reconstruction(recons, targets):
    """Sum over regions of the squared Frobenius reconstruction error."""
    if len(recons) != len(targets):
        raise ValueError("one reconstruction per region is required")
    total = None
    for xhat, x in zip(recons, targets):
        xhat = ops.as_tensor(xhat)
        if xhat.shape != np.shape(x):
            raise ValueError(f"reconstruction shape {xhat.shape} != target "
                             f"shape {np.shape(x)}")
        term = _sq_frobenius_per_trial(xhat - x)
        total = term if total is None else total + term
    return total


def loss_shared_only(fused, mask, decode, targets, two_region_path=False):
    """Reconstruct every region from the shared dimensions alone.

    ``decode(r, z, latent_mask)`` runs region ``r``'s decoder on
    ``latent_mask * z``. The general path masks with ``w_r * s`` where ``s``
    marks dimensions claimed by two or more regions; the two-region path
    uses the intersection ``w_1 * w_2`` for both decoders.
    """
    total = None
    for r, x in enumerate(targets):
        if two_region_path:
            keep = mask.intersection()
        else:
            keep = mask.shared_region_mask(r)
        term = _sq_frobenius_per_trial(decode(r, fused, keep) - x)
        total = term if total is None else total + term
    return total


def loss_alignment(fused, latents, mask):
    """``sum_r || (w_r 1^T) * Z - (w_r 1^T) * Z_r ||_F^2``.

    Dimensions claimed by a single region contribute exactly zero because
    the fused latent copies them.
    """
    total = None
    for r, z_r in enumerate(latents):
        w = mask.region_mask(r)
        term = _sq_frobenius_per_trial(ops.mul(fused, w) - ops.mul(z_r, w))
        total = term if total is None else total + term
    return total


def loss_orthogonality(fused):
    """Squared off-diagonal norm of the per-trial Gram ``Z^T Z / T``.

    ``fused`` is ``(trials, T, D)`` (or ``(T, D)``); the penalty is averaged
    over trials.
    """
    z = ops.as_tensor(fused)
    if z.ndim == 2:
        z = z.reshape(1, *z.shape)
    steps, width = z.shape[1], z.shape[2]
    gram = ops.matmul(z.swapaxes(1, 2), z) * (1.0 / steps)
    off = ops.mul(gram, 1.0 - np.eye(width, dtype=z.dtype))
    return ops.sum(ops.square(off)) * (1.0 / z.shape[0])


def warmup_coefficient(epoch, warmup, lambda_orth):
    """Orthogonality weight at ``epoch``: 0, then a linear ramp, then flat.

    ``0`` for ``epoch <= warmup``, ``(epoch - warmup) / warmup * lambda``
    up to ``2 * warmup`` and ``lambda`` afterwards.
    """
    if warmup < 1:
        raise ValueError("warm-up length must be at least one epoch")
    if epoch < 0:
        raise ValueError("epoch must be non-negative")
    if epoch <= warmup:
        return 0.0
    if epoch <= 2 * warmup:
        return (epoch - warmup) / warmup * lambda_orth
    return lambda_orth


def _value(x):
    return float(x.data) if isinstance(x, Tensor) else float(x)


def total_loss(components, weights, epoch, lambda_orth=None):
    """Weighted sum of the four components.

    ``components`` maps ``rec``, ``shared``, ``align`` and ``orth`` to
    scalars or scalar tensors. ``lambda_orth`` overrides the warm-up value
    (validation uses the final target). Returns ``(total, LossReport)``
    where ``total`` is a tensor when the components are.
    """
    if lambda_orth is None:
        lambda_orth = warmup_coefficient(epoch, weights.warmup, weights.orth)
    total = (components["rec"]
             + weights.shared * components["shared"]
             + weights.align * components["align"]
             + lambda_orth * components["orth"])
    report = LossReport(rec=_value(components["rec"]),
                        shared=_value(components["shared"]),
                        align=_value(components["align"]),
                        orth=_value(components["orth"]),
                        total=_value(total), epoch=int(epoch),
                        lambda_orth_eff=float(lambda_orth))
    return total, report


def evaluate_objective(model, xs, weights, epoch, training=False, rng=None,
                       two_region_path=False, lambda_orth=None):
    """Forward pass of ``model`` on prepared inputs and the weighted loss.

    ``xs`` are ``(trials, T, N_r)`` arrays already standardised by
    ``model.prepare_inputs``. Components with zero weight are evaluated
    without recording gradients.
    """
    bundle = model.encode(xs, training=training, rng=rng,
                          two_region_path=two_region_path)
    fused = bundle.fused
    recons = model.reconstruct(fused, training=training, rng=rng)

    def decode(r, z, keep):
        return model.decode_region(r, z, keep, training=training, rng=rng)

    if lambda_orth is None:
        lambda_orth = warmup_coefficient(epoch, weights.warmup, weights.orth)
    components = {"rec": loss_reconstruction(recons, xs)}
    if weights.shared > 0:
        components["shared"] = loss_shared_only(fused, model.mask, decode, xs,
                                                two_region_path)
    else:
        with no_grad():
            components["shared"] = loss_shared_only(fused, model.mask, decode,
                                                    xs, two_region_path)
    if weights.align > 0:
        components["align"] = loss_alignment(fused, bundle.region_latents,
                                             model.mask)
    else:
        with no_grad():
            components["align"] = loss_alignment(fused, bundle.region_latents,
                                                 model.mask)
    if lambda_orth > 0:
        components["orth"] = loss_orthogonality(fused)
    else:
        with no_grad():
            components["orth"] = loss_orthogonality(fused)
    total, report = total_loss(components, weights, epoch, lambda_orth)
    return total, report, bundle
