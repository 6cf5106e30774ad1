"""Planted shared/private latent generator with known ground truth."""

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.ndimage import correlate1d

from .. import container
from ..seqmodel.masks import build_membership
from .recording import RegionRecording

__all__ = [
    "SyntheticSpec",
    "GroundTruth",
    "generate_synthetic",
    "lowdin_orthonormalize",
    "save_ground_truth",
    "load_ground_truth",
]


def _default_sizes():
    return {"11": 3, "10": 3, "01": 3}


@dataclass
class SyntheticSpec:
    """Configuration of the planted-latent benchmark.

    Parameters
    ----------
    n_regions : int
    subset_sizes : dict of str to int
        Planted block sizes keyed by subset code (see ``build_membership``).
    n_trials, n_timesteps : int
    channels : tuple of int
        Channels per region.
    smoothness : float
        Standard deviation, in bins, of the Gaussian kernel applied to the
        white noise that seeds every latent row.
    mixing : {'tanh', 'linear'}
        ``'tanh'`` maps latents through one tanh hidden layer four times the
        region's latent width; ``'linear'`` is a plain matrix.
    noise_std : float
        Observation noise, relative to unit-variance channel signals.
    n_conditions : int
        Conditions planted as angular offsets in the first two shared rows.
    condition_amplitude : float
    bin_width_ms : float
    seed : int
    """

    n_regions: int = 2
    subset_sizes: dict = field(default_factory=_default_sizes)
    n_trials: int = 200
    n_timesteps: int = 30
    channels: tuple = (40, 40)
    smoothness: float = 3.0
    mixing: str = "tanh"
    noise_std: float = 0.05
    n_conditions: int = 8
    condition_amplitude: float = 1.0
    bin_width_ms: float = 100.0
    seed: int = 0

    def __post_init__(self):
        self.channels = tuple(int(c) for c in self.channels)
        self.subset_sizes = {str(k): int(v) for k, v in self.subset_sizes.items()}
        if len(self.channels) != self.n_regions:
            raise ValueError("one channel count per region is required")
        if self.mixing not in ("tanh", "linear"):
            raise ValueError(f"unknown mixing {self.mixing!r}")
        if self.n_trials < 1 or self.n_timesteps < 2:
            raise ValueError("need at least one trial and two time bins")
        if self.noise_std < 0 or self.smoothness <= 0:
            raise ValueError("noise_std must be >= 0 and smoothness > 0")
        if self.n_conditions < 1:
            raise ValueError("n_conditions must be positive")
        mask = build_membership(self.n_regions, self.subset_sizes)
        if mask.n_latent > self.n_timesteps:
            raise ValueError("more latent rows than time bins cannot be "
                             "mutually orthogonal")
        for r, n in enumerate(self.channels):
            claimed = int(mask.region_mask(r).sum())
            if n < claimed:
                raise ValueError(f"region {r} has {n} channels but claims "
                                 f"{claimed} latent dims (unidentifiable)")
        if self.n_conditions > 1 and mask.shared_indices().size == 0:
            raise ValueError("conditions are planted in shared rows; "
                             "add a shared block or set n_conditions=1")

    def mask(self):
        return build_membership(self.n_regions, self.subset_sizes)

    def to_dict(self):
        out = asdict(self)
        out["channels"] = list(self.channels)
        return out

    @classmethod
    def from_dict(cls, values):
        return cls(**values)


@dataclass(eq=False)
class GroundTruth:
    """Planted latents, mixing maps and labels.

    Attributes
    ----------
    latents : ndarray of shape (n_trials, n_latent, n_timesteps)
        Orthonormalised stacked rows, blocks in canonical code order.
    mask : MembershipMask
        Planted block layout.
    mixing : list of dict
        Per-region arrays: ``W1``, ``b1``, ``W2`` for tanh mixing or ``A``
        for linear, plus the channel ``scale``.
    labels : ndarray of shape (n_trials,)
    condition_trajectory : ndarray of shape (n_trials, 2, n_timesteps)
    """

    latents: np.ndarray
    mask: object
    mixing: list
    labels: np.ndarray
    condition_trajectory: np.ndarray

    def block(self, code):
        return self.latents[:, self.mask.block_indices(code), :]

    @property
    def shared(self):
        """Planted ``S`` (rows claimed by two or more regions)."""
        return self.latents[:, self.mask.shared_indices(), :]

    def private(self, r):
        """Planted ``P^(r)``."""
        return self.latents[:, self.mask.private_indices(r), :]


def lowdin_orthonormalize(rows):
    """Symmetric orthonormalisation so that ``rows @ rows.T / T == I``.

    Among all such bases it moves the rows the least, so planted condition
    structure survives.
    """
    steps = rows.shape[1]
    gram = rows @ rows.T / steps
    evals, evecs = np.linalg.eigh(gram)
    if evals.min() <= 1e-12 * max(evals.max(), 1.0):
        raise np.linalg.LinAlgError("latent rows are linearly dependent")
    inv_sqrt = (evecs / np.sqrt(evals)) @ evecs.T
    out = inv_sqrt @ rows
    # One Gram-Schmidt-free refinement pass tightens the result to ~1e-15.
    gram = out @ out.T / steps
    evals, evecs = np.linalg.eigh(gram)
    return (evecs / np.sqrt(evals)) @ evecs.T @ out


def _condition_profile(n_steps):
    t = (np.arange(n_steps) + 0.5) / n_steps
    return np.sin(np.pi * t)


def _smooth_rows(rng, n_rows, n_steps, sigma):
    radius = int(np.ceil(3 * sigma))
    offsets = np.arange(-radius, radius + 1)
    taps = np.exp(-0.5 * (offsets / sigma) ** 2)
    taps /= taps.sum()
    noise = rng.standard_normal((n_rows, n_steps + 2 * radius))
    rows = correlate1d(noise, taps, axis=1, mode="constant")[:, radius:-radius]
    rows -= rows.mean(axis=1, keepdims=True)
    return rows / np.sqrt(np.mean(rows ** 2, axis=1, keepdims=True))


def _sphere(rng, n_rows, n_cols):
    w = rng.standard_normal((n_rows, n_cols))
    return w / np.linalg.norm(w, axis=1, keepdims=True)


def generate_synthetic(spec):
    """Draw recordings whose latents are known.

    Returns
    -------
    recordings : list of RegionRecording
        ``labels`` are condition indices and ``targets`` the planted
        condition trajectory ``(trials, 2, T)``.
    truth : GroundTruth
    """
    rng = np.random.default_rng(spec.seed)
    mask = spec.mask()
    n_latent, steps, n_trials = mask.n_latent, spec.n_timesteps, spec.n_trials

    labels = np.arange(n_trials) % spec.n_conditions
    labels = labels[rng.permutation(n_trials)]
    angles = 2 * np.pi * labels / spec.n_conditions
    profile = _condition_profile(steps)
    trajectory = spec.condition_amplitude * np.stack(
        [np.cos(angles)[:, None] * profile, np.sin(angles)[:, None] * profile],
        axis=1)

    shared_rows = mask.shared_indices()[:2]
    latents = np.empty((n_trials, n_latent, steps))
    for k in range(n_trials):
        rows = _smooth_rows(rng, n_latent, steps, spec.smoothness)
        if spec.n_conditions > 1:
            rows[shared_rows] += trajectory[k, :shared_rows.size]
        latents[k] = lowdin_orthonormalize(rows)

    mixing = []
    recordings = []
    for r, n_channels in enumerate(spec.channels):
        claimed = np.flatnonzero(mask.region_mask(r))
        z = latents[:, claimed, :]
        d_r = claimed.size
        if spec.mixing == "tanh":
            hidden = 4 * d_r
            W1 = _sphere(rng, hidden, d_r)
            b1 = 0.5 * rng.standard_normal(hidden)
            W2 = _sphere(rng, n_channels, hidden)
            h = np.tanh(np.einsum("hd,kdt->kht", W1, z) + b1[None, :, None])
            signal = np.einsum("nh,kht->knt", W2, h)
            maps = {"W1": W1, "b1": b1, "W2": W2}
        else:
            A = _sphere(rng, n_channels, d_r)
            signal = np.einsum("nd,kdt->knt", A, z)
            maps = {"A": A}
        scale = signal.std(axis=(0, 2))
        scale[scale == 0] = 1.0
        signal = signal / scale[None, :, None]
        maps["scale"] = scale
        mixing.append(maps)
        values = signal + spec.noise_std * rng.standard_normal(signal.shape)
        recordings.append(RegionRecording(
            values, bin_width_ms=spec.bin_width_ms, region=f"region{r}",
            labels=labels.copy(), targets=trajectory.copy()))
    truth = GroundTruth(latents=latents, mask=mask, mixing=mixing,
                        labels=labels, condition_trajectory=trajectory)
    return recordings, truth


def save_ground_truth(path, truth, spec=None):
    """Write a ``ground_truth`` container next to a generated dataset."""
    arrays = {"latents": truth.latents, "labels": truth.labels.astype(np.float64),
              "condition_trajectory": truth.condition_trajectory}
    for r, maps in enumerate(truth.mixing):
        for key, value in maps.items():
            arrays[f"mixing{r}.{key}"] = value
    meta = {"subset_sizes": truth.mask.block_sizes(),
            "n_regions": truth.mask.n_regions,
            "mixing_keys": [sorted(m) for m in truth.mixing],
            "spec": None if spec is None else spec.to_dict()}
    container.save(path, "ground_truth", arrays, meta)


def load_ground_truth(path):
    arrays, meta = container.load(path, kind="ground_truth")
    mask = build_membership(meta["n_regions"], meta["subset_sizes"])
    mixing = [{key: arrays[f"mixing{r}.{key}"] for key in keys}
              for r, keys in enumerate(meta["mixing_keys"])]
    return GroundTruth(latents=arrays["latents"], mask=mask, mixing=mixing,
                       labels=arrays["labels"].astype(np.int64),
                       condition_trajectory=arrays["condition_trajectory"])
