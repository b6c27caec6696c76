"""Reconstruction quality, performance profiles and activation heatmaps."""

from dataclasses import dataclass
import math

import numpy as np

from .errors import DataError, DimensionError

__all__ = [
    "psnr",
    "ProfileCurve",
    "performance_profile",
    "profile_betas",
    "ActivationHeatmap",
    "activation_heatmap",
    "coarse_dominance",
    "GAP_FLOOR",
]

GAP_FLOOR = 1e-12


def psnr(reference, candidate, peak=1.0):
    """Peak signal-to-noise ratio in dB; ``math.inf`` for identical images."""
    reference = np.asarray(reference, dtype=float)
    candidate = np.asarray(candidate, dtype=float)
    if reference.shape != candidate.shape:
        raise DimensionError(f"shape mismatch: {reference.shape} vs {candidate.shape}")
    if not peak > 0:
        raise DataError(f"peak must be positive, got {peak}")
    mse = float(np.mean((reference - candidate) ** 2))
    if mse == 0:
        return math.inf
    return 10.0 * math.log10(peak**2 / mse)


@dataclass
class ProfileCurve:
    """Points ``(beta, rho)`` of one method's performance profile."""

    method: str
    betas: np.ndarray
    rhos: np.ndarray

    def rho_at(self, beta):
        """Step-function value: share of instances with ratio <= ``beta``."""
        idx = np.searchsorted(self.betas, beta, side="right") - 1
        return float(self.rhos[idx]) if idx >= 0 else 0.0


def _ratios(scores):
    methods = list(scores)
    if not methods:
        raise DataError("no methods to profile")
    table = np.array([np.asarray(scores[m], dtype=float) for m in methods])
    if table.ndim != 2 or table.shape[1] == 0:
        raise DataError("every method needs one score per instance")
    if not np.all(np.isfinite(table)) or np.any(table <= 0):
        raise DataError("performance-profile scores must be finite and positive")
    return methods, table / table.min(axis=0, keepdims=True)


def profile_betas(scores):
    """Breakpoints of the exact step functions: 1 and every observed ratio."""
    _, ratios = _ratios(scores)
    return np.unique(np.concatenate([[1.0], ratios.ravel()]))


def performance_profile(scores, betas=None):
    """Dolan-More profiles.

    ``scores`` maps method name to per-instance scores (lower is better,
    all positive).  For each instance the best score sets the reference,
    and ``rho_m(beta)`` is the share of instances where method ``m`` is
    within a factor ``beta`` of it.
    """
    methods, ratios = _ratios(scores)
    betas = profile_betas(scores) if betas is None else np.sort(np.asarray(betas, dtype=float))
    n_inst = ratios.shape[1]
    curves = {}
    for m, row in zip(methods, ratios):
        # tolerate round-off on the ratio of equal scores
        counts = (row[None, :] <= betas[:, None] * (1 + 1e-12)).sum(axis=1)
        curves[m] = ProfileCurve(m, betas.copy(), counts / n_inst)
    return curves


@dataclass
class ActivationHeatmap:
    """Activation frequency per block (rows) and iteration (columns)."""

    frequencies: np.ndarray

    @property
    def n_blocks(self):
        return self.frequencies.shape[0]

    @property
    def n_iterations(self):
        return self.frequencies.shape[1]


def activation_heatmap(traces):
    """Average the activation masks of several runs sharing ``(J, iterations)``."""
    if not traces:
        raise DataError("no traces given")
    stacks = [t.masks if hasattr(t, "masks") else np.asarray(t, dtype=bool) for t in traces]
    shape = stacks[0].shape
    if any(s.shape != shape for s in stacks) or len(shape) != 2 or shape[0] == 0:
        raise DataError(f"traces have inconsistent mask shapes: {[s.shape for s in stacks]}")
    return ActivationHeatmap(np.mean(np.stack(stacks).astype(float), axis=0).T)


def coarse_dominance(heatmap, window):
    """Mean activation of block 0 minus that of the finest block.

    ``window`` is a half-open iteration range ``(start, stop)`` of record
    indices; ``(0, 20)`` covers the first twenty iterations.
    """
    start, stop = window
    if not 0 <= start < stop <= heatmap.n_iterations:
        raise DataError(f"window {window} empty or outside 0..{heatmap.n_iterations}")
    f = heatmap.frequencies[:, start:stop]
    return float(f[0].mean() - f[-1].mean())
