"""l1 proximal operators for the block-separable wavelet regularizer."""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DimensionError

__all__ = [
    "RegularizerSpec",
    "soft_threshold",
    "prox_block",
    "prox_all",
    "regularizer_value",
]


@dataclass(frozen=True)
class RegularizerSpec:
    """``g(w) = lam * sum of ||w_i||_1`` over the penalized blocks.

    ``penalize_block=None`` means the default pattern: block 0
    (approximation) free, every detail block penalized.
    """

    lam: float
    penalize_block: tuple = None

    def __post_init__(self):
        if not self.lam >= 0:
            raise ConfigurationError(f"lambda must be >= 0, got {self.lam}")

    def penalized(self, i):
        if self.penalize_block is None:
            return i != 0
        return bool(self.penalize_block[i])

    def thresholds(self, layout, gamma):
        """Per-coefficient threshold ``gamma * lam`` (0 on free blocks)."""
        per_block = np.array(
            [gamma * self.lam if self.penalized(i) else 0.0 for i in range(layout.n_blocks)]
        )
        return np.repeat(per_block, layout.block_sizes)


def soft_threshold(z, tau):
    """Prox of ``tau * ||.||_1``: ``sign(z) * max(|z| - tau, 0)``."""
    if np.any(np.asarray(tau) < 0):
        raise ConfigurationError(f"threshold must be >= 0, got {tau}")
    z = np.asarray(z, dtype=float)
    return np.sign(z) * np.maximum(np.abs(z) - tau, 0.0)


def prox_block(spec, block_index, z, gamma, layout=None):
    """Prox of ``gamma * g_i`` applied to one block."""
    if not gamma > 0:
        raise ConfigurationError(f"gamma must be positive, got {gamma}")
    z = np.asarray(z, dtype=float)
    if layout is not None and z.shape != (layout.block_sizes[block_index],):
        raise DimensionError(
            f"block {block_index} has {layout.block_sizes[block_index]} entries, got {z.shape}"
        )
    if spec.penalized(block_index):
        return soft_threshold(z, gamma * spec.lam)
    return z.copy()


def prox_all(spec, z, gamma):
    """Blockwise prox of ``gamma * g`` on a whole :class:`CoeffVector`-shaped array."""
    return soft_threshold(z.data, spec.thresholds(z.layout, gamma))


def regularizer_value(spec, w):
    if spec.lam == 0:
        return 0.0
    total = 0.0
    for i in range(w.layout.n_blocks):
        if spec.penalized(i):
            total += np.abs(w.block(i)).sum()
    return float(spec.lam * total)
