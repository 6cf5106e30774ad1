"""Weighted latent fusion and block extraction.

Latent tensors carry the latent axis last: ``(..., steps, n_latent)``.
"""

import numpy as np

from ..diffcore import Tensor, ops

__all__ = ["fuse_latents", "fuse_two_region", "extract_blocks"]


def _wrap(values):
    raw = not isinstance(values[0], Tensor)
    return raw, [ops.as_tensor(v) for v in values]


def fuse_latents(latents, mask):
    """Masked average of per-region latents over the regions claiming each dim.

    ``Z[..., d] = sum_r W[r, d] Z_r[..., d] / sum_r W[r, d]``. Private
    dimensions pass through unchanged; shared ones become the mean of the
    claiming regions.
    """
    if len(latents) != mask.n_regions:
        raise ValueError(f"expected {mask.n_regions} latent tensors, "
                         f"got {len(latents)}")
    counts = mask.claim_counts
    if np.any(counts == 0):
        raise ValueError("latent dimension with no claiming region")
    raw, latents = _wrap(latents)
    for z in latents:
        if z.shape[-1] != mask.n_latent:
            raise ValueError(f"latent width {z.shape[-1]} != {mask.n_latent}")
    acc = None
    for r, z in enumerate(latents):
        term = ops.mul(z, mask.W[r])
        acc = term if acc is None else acc + term
    fused = ops.div(acc, counts)
    return fused.data if raw else fused


def fuse_two_region(z1, z2, w1, w2):
    """Two-region fusion ``(w1 Z1 + w2 Z2) / (w1 + w2)``."""
    raw, (z1, z2) = _wrap([z1, z2])
    w1 = np.asarray(w1, dtype=np.float64)
    w2 = np.asarray(w2, dtype=np.float64)
    denom = w1 + w2
    if np.any(denom == 0):
        raise ValueError("latent dimension with no claiming region")
    fused = ops.div(ops.mul(z1, w1) + ops.mul(z2, w2), denom)
    return fused.data if raw else fused


def extract_blocks(z, mask):
    """Split the fused latent into one block per subset code.

    Returns a dict ``code -> (..., steps, block_size)``; empty blocks are
    returned with zero width.
    """
    blocks = {}
    for code, start, stop in mask.blocks:
        idx = np.arange(start, stop)
        if isinstance(z, Tensor):
            blocks[code] = ops.take(z, idx, axis=-1)
        else:
            blocks[code] = np.asarray(z)[..., start:stop]
    return blocks
