"""Causal transformer encoders/decoders, membership masks and latent fusion."""

from .fusion import extract_blocks, fuse_latents, fuse_two_region
from .layers import causal_mask, positional_encoding
from .masks import (
    MembershipMask,
    build_membership,
    build_two_region_masks,
    canonical_code_order,
)
from .model import CTAEModel, LatentBundle, ModelConfig

__all__ = [
    "CTAEModel",
    "LatentBundle",
    "MembershipMask",
    "ModelConfig",
    "build_membership",
    "build_two_region_masks",
    "canonical_code_order",
    "causal_mask",
    "extract_blocks",
    "fuse_latents",
    "fuse_two_region",
    "positional_encoding",
]
