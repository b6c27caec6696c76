"""Wavelet-domain deblurring instance: objective, gradient, dense reference.

The smooth term is ``f(w) = 0.5 * ||A W^T w - y||^2``, whose gradient is
``W A^T A W^T w - W A^T y``.  The constant ``W A^T y`` is computed once
when the problem is built.
"""

from dataclasses import dataclass, field

import numpy as np

from .degradation import (
    GaussianBlur,
    blur_adjoint,
    blur_apply,
    degrade,
    make_blur,
    operator_norm,
)
from .errors import CapacityError, ConfigurationError, DimensionError
from .proximal import RegularizerSpec, regularizer_value
from .wavelet import (
    BlockLayout,
    CoeffVector,
    embed_block,
    forward_dwt2,
    inverse_dwt2,
)

__all__ = [
    "Problem",
    "DenseOracle",
    "build_problem",
    "synthesize_problem",
    "normal_apply",
    "objective",
    "data_fidelity",
    "full_gradient",
    "build_dense_oracle",
    "DENSE_MAX_SIDE",
]

DENSE_MAX_SIDE = 64


@dataclass(frozen=True)
class Problem:
    blur: GaussianBlur
    observation: np.ndarray = field(repr=False)
    bank: object
    layout: BlockLayout
    reg: RegularizerSpec
    lipschitz: float
    stepsize: float
    aty: CoeffVector = field(repr=False)
    truth: np.ndarray = field(default=None, repr=False)

    @property
    def levels(self):
        return self.layout.levels

    @property
    def step_factor(self):
        return self.stepsize * self.lipschitz

    def with_lambda(self, lam):
        """Same instance with another regularization weight (no recomputation)."""
        reg = RegularizerSpec(lam, self.reg.penalize_block)
        return Problem(
            self.blur, self.observation, self.bank, self.layout, reg,
            self.lipschitz, self.stepsize, self.aty, self.truth,
        )


def build_problem(observation, blur, levels, bank, lam, step_factor=1.9, truth=None, norm_tol=1e-10):
    """Assemble a problem from an observation and its blur operator.

    ``blur`` may be a :class:`GaussianBlur` or a blur standard deviation.
    ``||A||`` is estimated by power iteration and the stepsize is
    ``step_factor / ||A||**2``.
    """
    if not 0 < step_factor < 2:
        raise ConfigurationError(f"step_factor must lie in (0, 2), got {step_factor}")
    y = np.asarray(observation, dtype=float)
    if y.ndim != 2 or y.shape[0] != y.shape[1]:
        raise DimensionError(f"observation must be a square image, got shape {y.shape}")
    if not isinstance(blur, GaussianBlur):
        blur = make_blur(blur, y.shape[0])
    layout = BlockLayout(y.shape[0], levels)
    norm = operator_norm(blur, tol=norm_tol)
    lipschitz = norm**2
    aty = forward_dwt2(blur_adjoint(blur, y), levels, bank)
    reg = lam if isinstance(lam, RegularizerSpec) else RegularizerSpec(float(lam))
    if truth is not None:
        truth = np.asarray(truth, dtype=float)
    return Problem(blur, y, bank, layout, reg, lipschitz, step_factor / lipschitz, aty, truth)


def synthesize_problem(truth, spec, levels, bank, lam, step_factor=1.9, rng=None):
    """Degrade ``truth`` according to ``spec`` and build the resulting problem."""
    truth = np.asarray(truth, dtype=float)
    y = degrade(truth, spec, rng=rng)
    blur = make_blur(spec.sigma_blur, truth.shape[0])
    return build_problem(y, blur, levels, bank, lam, step_factor, truth=truth)


def _check_layout(p, w):
    if w.layout != p.layout:
        raise DimensionError(f"coefficient layout {w.layout} does not match problem {p.layout}")


def normal_apply(p, w):
    """``W A^T A W^T w``."""
    _check_layout(p, w)
    x = inverse_dwt2(w, p.bank)
    return forward_dwt2(blur_adjoint(p.blur, blur_apply(p.blur, x)), p.levels, p.bank)


def data_fidelity(p, w):
    _check_layout(p, w)
    r = blur_apply(p.blur, inverse_dwt2(w, p.bank)) - p.observation
    return 0.5 * float(np.vdot(r, r))


def objective(p, w):
    """``0.5 * ||A W^T w - y||^2 + g(w)``."""
    return data_fidelity(p, w) + regularizer_value(p.reg, w)


def full_gradient(p, w):
    s = normal_apply(p, w)
    return CoeffVector(p.layout, s.data - p.aty.data)


@dataclass
class DenseOracle:
    """Explicit blocks ``M_ij = Pi_i W A^T A W^T Pi_j^T`` and ``Pi_i W A^T y``."""

    layout: BlockLayout
    cross_blocks: list
    const_terms: list

    def partial_gradient(self, w, i):
        return sum(self.cross_blocks[i][j] @ w.block(j) for j in range(self.layout.n_blocks)) - self.const_terms[i]

    def full_matrix(self):
        return np.block(self.cross_blocks)


def build_dense_oracle(p, max_side=DENSE_MAX_SIDE):
    """Assemble every ``M_ij`` column by column from unit coefficient vectors.

    Storage is ``O(n**2)``; refused above ``max_side``.
    """
    side = p.layout.image_side
    if side > max_side:
        raise CapacityError(
            f"dense oracle needs {side**4 * 8 / 2**20:.0f} MiB for a {side}x{side} image; "
            f"limit is side <= {max_side}"
        )
    layout = p.layout
    n = layout.size
    columns = np.empty((n, n))
    for j in range(layout.n_blocks):
        sl = layout.block_slice(j)
        for c in range(sl.start, sl.stop):
            e = np.zeros(layout.block_sizes[j])
            e[c - sl.start] = 1.0
            columns[:, c] = normal_apply(p, embed_block(j, e, layout)).data
    slices = [layout.block_slice(i) for i in range(layout.n_blocks)]
    cross = [[columns[si, sj].copy() for sj in slices] for si in slices]
    const = [p.aty.block(i).copy() for i in range(layout.n_blocks)]
    return DenseOracle(layout, cross, const)
