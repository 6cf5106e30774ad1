"""Coupled transformer autoencoders for shared and private latent dynamics."""

__version__ = "0.1.0"

from .estimator import CTAE  # noqa: E402

__all__ = ["CTAE", "__version__"]
