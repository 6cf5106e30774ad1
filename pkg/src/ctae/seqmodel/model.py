"""Coupled causal transformer autoencoder: per-region encoders and decoders."""

from dataclasses import asdict, dataclass, field

import numpy as np

from ..diffcore import ParameterSet, ops
from . import layers
from .fusion import extract_blocks, fuse_latents, fuse_two_region
from .masks import build_membership

__all__ = ["ModelConfig", "LatentBundle", "CTAEModel"]


@dataclass
class ModelConfig:
    """Architecture sizes for an ``R``-region coupled autoencoder.

    ``subset_sizes`` maps binary region codes to latent block sizes; the
    total latent width ``D`` is their sum. For two regions use
    :meth:`two_region`.
    """

    channels: tuple
    n_timesteps: int
    subset_sizes: dict
    n_layers: int = 1
    d_model: int = 64
    n_heads: int = 4
    d_ff: int = 256
    dropout: float = 0.1
    standardize: bool = True
    dtype: str = "float64"

    def __post_init__(self):
        self.channels = tuple(int(c) for c in self.channels)
        self.subset_sizes = {str(k): int(v) for k, v in self.subset_sizes.items()}
        if self.n_regions < 2:
            raise ValueError("a coupled model needs at least two regions")
        if self.d_model % self.n_heads:
            raise ValueError(f"d_model={self.d_model} is not divisible by "
                             f"n_heads={self.n_heads}")
        if self.d_model % 2:
            raise ValueError("d_model must be even for the positional table")
        if self.n_layers < 1:
            raise ValueError("n_layers must be at least 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")
        if self.dtype not in ("float64", "float32"):
            raise ValueError("dtype must be 'float64' or 'float32'")
        self.mask()

    @classmethod
    def two_region(cls, channels, n_timesteps, d_shared, d_private1,
                   d_private2, **kwargs):
        return cls(channels=channels, n_timesteps=n_timesteps,
                   subset_sizes={"11": d_shared, "10": d_private1,
                                 "01": d_private2}, **kwargs)

    @property
    def n_regions(self):
        return len(self.channels)

    @property
    def n_latent(self):
        return int(sum(self.subset_sizes.values()))

    def mask(self):
        return build_membership(self.n_regions, self.subset_sizes)

    def to_dict(self):
        out = asdict(self)
        out["channels"] = list(self.channels)
        return out

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


@dataclass
class LatentBundle:
    """Per-region encoder outputs, the fused latent and its blocks."""

    region_latents: list
    fused: object
    blocks: dict = field(default_factory=dict)


class CTAEModel:
    """Per-region causal transformer encoders/decoders sharing one latent space.

    Parameters
    ----------
    config : ModelConfig
    seed : int
        Seeds parameter initialisation; identical seeds give bit-identical
        parameters.
    """

    def __init__(self, config, seed=0):
        self.config = config
        self.mask = config.mask()
        self.dtype = np.dtype(config.dtype)
        self.params = ParameterSet(dtype=self.dtype)
        rng = np.random.default_rng(seed)
        for r in range(config.n_regions):
            self._init_encoder(r, rng)
        for r in range(config.n_regions):
            self._init_decoder(r, rng)
        self._pe = layers.positional_encoding(
            config.n_timesteps, config.d_model).astype(self.dtype)
        self._causal = layers.causal_mask(config.n_timesteps).astype(self.dtype)
        self.input_mean = [np.zeros(n) for n in config.channels]
        self.input_scale = [np.ones(n) for n in config.channels]

    # -- construction -----------------------------------------------------
    def _init_block(self, prefix, rng, cross):
        c = self.config
        p = self.params
        layers.init_layer_norm(p, f"{prefix}.ln_self", c.d_model)
        layers.init_attention(p, f"{prefix}.self", c.d_model, rng)
        if cross:
            layers.init_layer_norm(p, f"{prefix}.ln_cross", c.d_model)
            layers.init_attention(p, f"{prefix}.cross", c.d_model, rng)
        layers.init_layer_norm(p, f"{prefix}.ln_ff", c.d_model)
        layers.init_feed_forward(p, f"{prefix}.ff", c.d_model, c.d_ff, rng)

    def _init_encoder(self, r, rng):
        c = self.config
        layers.init_linear(self.params, f"enc{r}.in", c.channels[r], c.d_model, rng)
        for i in range(c.n_layers):
            self._init_block(f"enc{r}.layer{i}", rng, cross=False)
        layers.init_layer_norm(self.params, f"enc{r}.ln_out", c.d_model)
        layers.init_linear(self.params, f"enc{r}.head", c.d_model, c.n_latent, rng)

    def _init_decoder(self, r, rng):
        c = self.config
        layers.init_linear(self.params, f"dec{r}.query", c.d_model, c.d_model, rng)
        layers.init_linear(self.params, f"dec{r}.memory", c.n_latent, c.d_model, rng)
        for i in range(c.n_layers):
            self._init_block(f"dec{r}.layer{i}", rng, cross=True)
        layers.init_layer_norm(self.params, f"dec{r}.ln_out", c.d_model)
        layers.init_linear(self.params, f"dec{r}.head", c.d_model, c.channels[r], rng)

    # -- input handling ---------------------------------------------------
    def set_standardization(self, means, scales):
        self.input_mean = [np.asarray(m, dtype=np.float64) for m in means]
        self.input_scale = [np.asarray(s, dtype=np.float64) for s in scales]

    def prepare_inputs(self, xs):
        """Trials x channels x time arrays -> standardised (trials, time, channels)."""
        out = []
        for r, x in enumerate(xs):
            x = np.asarray(x, dtype=np.float64)
            if x.ndim == 2:
                x = x[None]
            if x.shape[1] != self.config.channels[r]:
                raise ValueError(f"region {r}: expected {self.config.channels[r]} "
                                 f"channels, got {x.shape[1]}")
            x = np.swapaxes(x, 1, 2)
            if self.config.standardize:
                x = (x - self.input_mean[r]) / self.input_scale[r]
            out.append(np.ascontiguousarray(x, dtype=self.dtype))
        return out

    def _residual(self, h, update, training, rng):
        return h + ops.dropout(update, self.config.dropout, rng, training)

    # -- encoder / decoder ------------------------------------------------
    def encode_region(self, r, x, training=False, rng=None):
        """Encode ``(batch, T, N_r)`` activity of region ``r`` to ``(batch, T, D)``."""
        c = self.config
        x = ops.as_tensor(x, dtype=self.dtype)
        if x.ndim != 3 or x.shape[-1] != c.channels[r]:
            raise ValueError(f"region {r}: expected (batch, T, {c.channels[r]}) "
                             f"input, got {x.shape}")
        if x.shape[1] != c.n_timesteps:
            raise ValueError(f"expected {c.n_timesteps} time steps, got {x.shape[1]}")
        p = self.params
        h = layers.linear(x, p, f"enc{r}.in") + self._pe
        for i in range(c.n_layers):
            name = f"enc{r}.layer{i}"
            hs = layers.layer_norm(h, p, f"{name}.ln_self")
            a = layers.multi_head_attention(hs, hs, p, f"{name}.self",
                                            c.n_heads, self._causal)
            h = self._residual(h, a, training, rng)
            f = layers.feed_forward(layers.layer_norm(h, p, f"{name}.ln_ff"), p, f"{name}.ff")
            h = self._residual(h, f, training, rng)
        h = layers.layer_norm(h, p, f"enc{r}.ln_out")
        return layers.linear(h, p, f"enc{r}.head")

    def decode_region(self, r, z, latent_mask=None, training=False, rng=None):
        """Reconstruct region ``r`` from ``(w 1^T) * Z``.

        ``latent_mask`` defaults to the region's row ``w_r``; pass
        ``w_r * s`` for shared-only reconstruction.
        """
        c = self.config
        p = self.params
        z = ops.as_tensor(z, dtype=self.dtype)
        if latent_mask is None:
            latent_mask = self.mask.region_mask(r)
        masked = ops.mul(z, np.asarray(latent_mask, dtype=self.dtype))
        memory = layers.linear(masked, p, f"dec{r}.memory") + self._pe
        batch = z.shape[0]
        # Query tokens depend on position only, so until the first
        # cross-attention they are shared by every trial.
        h = layers.linear(self._pe[None], p, f"dec{r}.query")
        for i in range(c.n_layers):
            name = f"dec{r}.layer{i}"
            hs = layers.layer_norm(h, p, f"{name}.ln_self")
            h = self._residual(h, layers.multi_head_attention(
                hs, hs, p, f"{name}.self", c.n_heads, self._causal), training, rng)
            if h.shape[0] != batch:
                h = h + np.zeros((batch, 1, 1), dtype=self.dtype)
            hc = layers.layer_norm(h, p, f"{name}.ln_cross")
            h = self._residual(h, layers.multi_head_attention(
                hc, memory, p, f"{name}.cross", c.n_heads, self._causal), training, rng)
            f = layers.feed_forward(layers.layer_norm(h, p, f"{name}.ln_ff"), p, f"{name}.ff")
            h = self._residual(h, f, training, rng)
        h = layers.layer_norm(h, p, f"dec{r}.ln_out")
        return layers.linear(h, p, f"dec{r}.head")

    # -- full pass --------------------------------------------------------
    def fuse(self, latents, two_region_path=False):
        if two_region_path:
            if self.mask.n_regions != 2:
                raise ValueError("two-region fusion needs exactly two regions")
            return fuse_two_region(latents[0], latents[1],
                                   self.mask.W[0], self.mask.W[1])
        return fuse_latents(latents, self.mask)

    def encode(self, xs, training=False, rng=None, two_region_path=False):
        """Encode every region, fuse, and split into blocks."""
        latents = [self.encode_region(r, x, training, rng) for r, x in enumerate(xs)]
        fused = self.fuse(latents, two_region_path)
        return LatentBundle(region_latents=latents, fused=fused,
                            blocks=extract_blocks(fused, self.mask))

    def reconstruct(self, fused, training=False, rng=None):
        return [self.decode_region(r, fused, training=training, rng=rng)
                for r in range(self.config.n_regions)]
