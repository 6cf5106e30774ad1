"""Gram, alignment and explained-variance diagnostics of latents."""

from dataclasses import asdict, dataclass

import numpy as np

from .features import check_features

__all__ = [
    "GramDiagnostics",
    "AlignmentDiagnostics",
    "VarianceReport",
    "gram_diagnostics",
    "alignment_diagnostics",
    "variance_per_latent",
]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        return None if not np.isfinite(obj) else float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


@dataclass
class GramDiagnostics:
    """Trial-averaged ``|<z_i, z_j>| / (|z_i| |z_j|)`` between latent rows.

    Attributes
    ----------
    matrix : ndarray of shape (D, D)
        Symmetric; NaN rows/columns mark collapsed dimensions.
    codes : list of str
    block_means : ndarray of shape (n_blocks, n_blocks)
        Mean of ``matrix`` over block pairs, diagonal entries excluded.
    mean_offdiag : float
        Mean over all ``i != j`` pairs of live dimensions.
    collapsed : list of int
        Dimensions whose row norm was zero in every trial.
    """

    matrix: np.ndarray
    codes: list
    block_means: np.ndarray
    mean_offdiag: float
    collapsed: list

    def to_dict(self):
        return _jsonable(asdict(self))


def gram_diagnostics(latents, mask=None, eps=1e-12):
    """Normalised dot products between latent rows, per block pair.

    Parameters
    ----------
    latents : array of shape (n_trials, D, n_timesteps)
    mask : MembershipMask, optional
        Supplies the block layout; without it all dims form one block.
    """
    z = check_features(latents)
    n_latent = z.shape[1]
    norms = np.linalg.norm(z, axis=2)
    dots = np.einsum("kit,kjt->kij", z, z)
    live = norms > eps
    denom = norms[:, :, None] * norms[:, None, :]
    valid = live[:, :, None] & live[:, None, :]
    cos = np.where(valid, np.abs(dots) / np.where(valid, denom, 1.0), np.nan)
    with np.errstate(invalid="ignore"):
        counts = valid.sum(axis=0)
        matrix = np.where(counts > 0, np.nansum(cos, axis=0) / np.maximum(counts, 1), np.nan)
    matrix = 0.5 * (matrix + matrix.T)
    collapsed = [int(d) for d in np.flatnonzero(~live.any(axis=0))]
    if mask is None:
        blocks = [("all", np.arange(n_latent))]
    else:
        blocks = [(code, np.arange(start, stop)) for code, start, stop in mask.blocks
                  if stop > start]
    off = ~np.eye(n_latent, dtype=bool)
    block_means = np.full((len(blocks), len(blocks)), np.nan)
    for a, (_, ia) in enumerate(blocks):
        for b, (_, ib) in enumerate(blocks):
            sub = matrix[np.ix_(ia, ib)][off[np.ix_(ia, ib)]]
            sub = sub[np.isfinite(sub)]
            if sub.size:
                block_means[a, b] = sub.mean()
    values = matrix[off]
    values = values[np.isfinite(values)]
    return GramDiagnostics(matrix=matrix, codes=[c for c, _ in blocks],
                           block_means=block_means,
                           mean_offdiag=float(values.mean()) if values.size else float("nan"),
                           collapsed=collapsed)


@dataclass
class AlignmentDiagnostics:
    """Deviation of each region's shared latents from the fused value.

    Attributes
    ----------
    dims : ndarray of int
        Shared latent indices.
    deviation : ndarray of shape (n_regions, n_shared)
        Mean over trials and bins of ``(Z^(r) - Z)^2``; NaN where the
        region does not claim the dimension.
    mean_deviation : float
    region_traces : ndarray of shape (n_regions, n_shared, n_timesteps)
        Trial-averaged per-region traces.
    fused_traces : ndarray of shape (n_shared, n_timesteps)
    """

    dims: np.ndarray
    deviation: np.ndarray
    mean_deviation: float
    region_traces: np.ndarray
    fused_traces: np.ndarray

    def to_dict(self):
        return _jsonable(asdict(self))


def alignment_diagnostics(region_latents, fused, mask):
    """Per-dimension squared deviation of ``Z^(r)_s`` from fused ``Z_s``.

    All arrays are ``(trials, D, time)``.
    """
    fused = check_features(fused)
    dims = mask.shared_indices()
    if dims.size == 0:
        raise ValueError("the mask has no shared dimensions")
    n_regions = mask.n_regions
    deviation = np.full((n_regions, dims.size), np.nan)
    traces = np.full((n_regions, dims.size, fused.shape[2]), np.nan)
    for r, z in enumerate(region_latents):
        z = check_features(z)
        claims = mask.region_mask(r)[dims] == 1
        diff = z[:, dims, :] - fused[:, dims, :]
        dev = np.mean(diff ** 2, axis=(0, 2))
        deviation[r, claims] = dev[claims]
        traces[r, claims] = z[:, dims[claims], :].mean(axis=0)
    return AlignmentDiagnostics(
        dims=dims, deviation=deviation,
        mean_deviation=float(np.nanmean(deviation)),
        region_traces=traces, fused_traces=fused[:, dims, :].mean(axis=0))


@dataclass
class VarianceReport:
    """Explained-variance fractions sorted high to low.

    Attributes
    ----------
    fractions : ndarray
        Sorted descending; sums to one unless all latents are zero.
    order : ndarray of int
        Latent index of each fraction.
    d_eff : int
        Count of fractions above ``threshold``.
    threshold : float
    """

    fractions: np.ndarray
    order: np.ndarray
    d_eff: int
    threshold: float

    def to_dict(self):
        return _jsonable(asdict(self))


def variance_per_latent(latents, threshold=0.01):
    """Variance of each latent over trials and time, as a share of the total."""
    z = check_features(latents)
    var = z.transpose(1, 0, 2).reshape(z.shape[1], -1).var(axis=1)
    total = var.sum()
    fractions = var / total if total > 0 else np.zeros_like(var)
    order = np.argsort(-fractions, kind="stable")
    fractions = fractions[order]
    return VarianceReport(fractions=fractions, order=order,
                          d_eff=int(np.sum(fractions > threshold)),
                          threshold=float(threshold))
