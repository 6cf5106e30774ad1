"""Binary membership matrices assigning latent dimensions to regions."""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "MembershipMask",
    "build_membership",
    "build_two_region_masks",
    "canonical_code_order",
]


def _popcount(code):
    return code.count("1")


def canonical_code_order(codes):
    """Sort subset codes: more claiming regions first, then by region index.

    Within one popcount, codes are ordered so that the lowest-numbered
    region comes first, i.e. descending string order (``110, 101, 011``
    and ``100, 010, 001`` for three regions).
    """
    return sorted(codes, key=lambda c: (-_popcount(c), tuple(-int(ch) for ch in c)))


@dataclass(frozen=True, eq=False)
class MembershipMask:
    """Membership matrix ``W`` (regions x latent dims) and its block layout.

    Attributes
    ----------
    W : ndarray of shape (n_regions, n_latent)
        ``W[r, d] == 1`` iff region ``r`` claims latent dimension ``d``.
    blocks : tuple of (code, start, stop)
        Contiguous column ranges, one per subset code, in canonical order.
    """

    W: np.ndarray
    blocks: tuple

    def __post_init__(self):
        W = np.asarray(self.W, dtype=np.float64)
        if W.ndim != 2:
            raise ValueError("membership matrix must be 2-D")
        if not np.all((W == 0) | (W == 1)):
            raise ValueError("membership matrix must be binary")
        if W.shape[1] and np.any(W.sum(axis=0) == 0):
            raise ValueError("every latent dimension must be claimed by at "
                             "least one region")
        W.setflags(write=False)
        object.__setattr__(self, "W", W)

    @property
    def n_regions(self):
        return self.W.shape[0]

    @property
    def n_latent(self):
        return self.W.shape[1]

    def region_mask(self, r):
        """Row ``w_r`` of the membership matrix."""
        return self.W[r]

    @property
    def claim_counts(self):
        return self.W.sum(axis=0)

    @property
    def shared(self):
        """Indicator of dimensions claimed by two or more regions."""
        return (self.claim_counts >= 2).astype(np.float64)

    def shared_region_mask(self, r):
        """``w_r * s``: the part of region ``r``'s mask that is shared."""
        return self.W[r] * self.shared

    def intersection(self):
        """Elementwise product of all region rows (two-region ``w^(s)``)."""
        return np.prod(self.W, axis=0)

    def codes(self):
        return [code for code, _, _ in self.blocks]

    def block_indices(self, code):
        for c, start, stop in self.blocks:
            if c == code:
                return np.arange(start, stop)
        raise KeyError(f"no block with code {code!r}")

    def block_sizes(self):
        return {code: stop - start for code, start, stop in self.blocks}

    def shared_indices(self):
        return np.flatnonzero(self.shared)

    def private_indices(self, r):
        own = (self.W[r] == 1) & (self.claim_counts == 1)
        return np.flatnonzero(own)

    def private_code(self, r):
        return "".join("1" if i == r else "0" for i in range(self.n_regions))

    def to_dict(self):
        return {"n_regions": self.n_regions,
                "subset_sizes": self.block_sizes()}


def build_membership(n_regions, subset_sizes):
    """Membership matrix from a map of subset code to block size.

    Parameters
    ----------
    n_regions : int
    subset_sizes : dict of str to int
        Keys are binary strings of length ``n_regions``; character ``i`` is
        ``'1'`` when region ``i`` (zero-based) claims the block. Zero-size
        blocks are allowed and occupy no columns.
    """
    if n_regions < 1:
        raise ValueError("n_regions must be positive")
    for code, size in subset_sizes.items():
        if len(code) != n_regions or set(code) - {"0", "1"}:
            raise ValueError(f"invalid subset code {code!r} for "
                             f"{n_regions} regions")
        if "1" not in code:
            raise ValueError(f"code {code!r} claims no region; every latent "
                             "dimension needs an owner")
        if int(size) < 0:
            raise ValueError(f"negative block size for {code!r}")
    columns = []
    blocks = []
    start = 0
    for code in canonical_code_order(subset_sizes):
        size = int(subset_sizes[code])
        col = np.array([int(ch) for ch in code], dtype=np.float64)
        columns.extend([col] * size)
        blocks.append((code, start, start + size))
        start += size
    W = (np.stack(columns, axis=1) if columns
         else np.zeros((n_regions, 0)))
    return MembershipMask(W=W, blocks=tuple(blocks))


def build_two_region_masks(d_shared, d_private1, d_private2):
    """Two-region masks ``w_1 = [1, 1, 0]`` and ``w_2 = [1, 0, 1]`` blockwise."""
    sizes = (d_shared, d_private1, d_private2)
    if any(int(s) < 0 for s in sizes):
        raise ValueError("block sizes must be non-negative")
    if not any(sizes):
        raise ValueError("at least one block must be non-empty")
    d_s, d_1, d_2 = (int(s) for s in sizes)
    w1 = np.concatenate([np.ones(d_s), np.ones(d_1), np.zeros(d_2)])
    w2 = np.concatenate([np.ones(d_s), np.zeros(d_1), np.ones(d_2)])
    blocks = (("11", 0, d_s), ("10", d_s, d_s + d_1),
              ("01", d_s + d_1, d_s + d_1 + d_2))
    return MembershipMask(W=np.stack([w1, w2]), blocks=blocks)
