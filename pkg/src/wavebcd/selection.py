"""Block-activation rules for block-coordinate forward-backward.

Every rule returns an :class:`ActivationMask` over the ``J + 1`` wavelet
blocks.  Policies are referred to on the command line by short names:

========  ==========================================================
``fb``     all blocks every iteration
``stoc``   each block independently with a fixed probability ``p``
``mlfb``   cyclic coarse-to-fine: blocks ``0..(k mod (J+1))``
``gs``     the single block with the largest proximal update
``magic``  each block independently with probability ``||D_i|| / ||D||``
========  ==========================================================
"""

from dataclasses import dataclass
import enum

import numpy as np

from .errors import ConfigurationError, ConvergenceSignal
from .proximal import prox_all
from .wavelet import CoeffVector

__all__ = [
    "PolicyKind",
    "SelectionPolicy",
    "ActivationMask",
    "Candidates",
    "POLICY_NAMES",
    "policy_from_name",
    "candidate_updates",
    "select",
    "gs_probabilities",
]


class PolicyKind(enum.Enum):
    FULL = "fb"
    UNIFORM = "stoc"
    CYCLIC = "mlfb"
    DETERMINISTIC_GS = "gs"
    STOCHASTIC_GS = "magic"


POLICY_NAMES = tuple(k.value for k in PolicyKind)


@dataclass(frozen=True)
class SelectionPolicy:
    """A block-selection rule and its parameters.

    ``p`` is the activation probability of the uniform rule.  With
    ``cyclic_strict=True`` the cyclic rule uses ``i < k mod (J+1)``, which
    leaves every block idle once per period; the default ``i <= ...``
    always updates the approximation block.
    """

    kind: PolicyKind
    p: float = 0.5
    cyclic_strict: bool = False

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ConfigurationError(f"activation probability must lie in [0, 1], got {self.p}")

    @property
    def name(self):
        return self.kind.value

    @property
    def stochastic(self):
        return self.kind in (PolicyKind.UNIFORM, PolicyKind.STOCHASTIC_GS)


def policy_from_name(name, **params):
    try:
        kind = PolicyKind(str(name).lower())
    except ValueError:
        raise ConfigurationError(
            f"unknown method {name!r}; valid names are {', '.join(POLICY_NAMES)}"
        ) from None
    return SelectionPolicy(kind, **params)


@dataclass
class ActivationMask:
    bits: np.ndarray
    probabilities: np.ndarray = None

    @property
    def active(self):
        return np.flatnonzero(self.bits)

    def bitstring(self):
        return "".join("1" if b else "0" for b in self.bits)


@dataclass
class Candidates:
    """Proximal updates ``D_i = w_i - prox(w_i - gamma * grad_i)`` of every block."""

    delta: CoeffVector
    norms: np.ndarray

    @property
    def total_norm(self):
        return float(np.linalg.norm(self.norms))

    def block(self, i):
        return self.delta.block(i)


def candidate_updates(p, w, grad, gamma=None):
    """Evaluate the proximal-gradient update of every block at ``w``."""
    gamma = p.stepsize if gamma is None else gamma
    z = CoeffVector(w.layout, w.data - gamma * grad.data)
    delta = CoeffVector(w.layout, w.data - prox_all(p.reg, z, gamma))
    sq = np.add.reduceat(delta.data**2, np.asarray(w.layout.block_offsets))
    return Candidates(delta, np.sqrt(sq))


def gs_probabilities(norms):
    norms = np.asarray(norms, dtype=float)
    peak = norms.max(initial=0.0)
    if peak == 0:
        raise ConvergenceSignal("all block updates are zero")
    # rescale first so tiny or huge norms neither underflow nor overflow
    scaled = norms / peak
    return scaled / np.sqrt(np.sum(scaled**2))


def _argmax(norms):
    # np.argmax returns the first maximizer: ties go to the coarsest block
    return int(np.argmax(norms))


def select(policy, k, levels, norms, rng):
    """Activation mask for iteration ``k``.

    Raises :class:`ConvergenceSignal` under the greedy rules when every
    norm is zero.  Stochastic rules draw exactly ``J + 1`` uniforms from
    ``rng`` per call so streams stay aligned across policies.
    """
    n_blocks = levels + 1
    bits = np.zeros(n_blocks, dtype=bool)
    kind = policy.kind
    if kind is PolicyKind.FULL:
        bits[:] = True
        return ActivationMask(bits)
    if kind is PolicyKind.CYCLIC:
        top = k % n_blocks
        bits[: top if policy.cyclic_strict else top + 1] = True
        return ActivationMask(bits)
    if kind is PolicyKind.UNIFORM:
        bits[:] = rng.random(n_blocks) < policy.p
        if not bits.any():
            bits[0] = True
        return ActivationMask(bits)

    norms = np.asarray(norms, dtype=float)
    if np.any(norms < 0):
        raise ConfigurationError("block norms must be nonnegative")
    probs = gs_probabilities(norms)
    if kind is PolicyKind.DETERMINISTIC_GS:
        bits[_argmax(norms)] = True
        return ActivationMask(bits)
    bits[:] = rng.random(n_blocks) < probs
    if not bits.any():
        bits[_argmax(norms)] = True
    return ActivationMask(bits, probs)
