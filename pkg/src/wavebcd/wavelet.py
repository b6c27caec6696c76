"""Orthonormal periodized 2D wavelet transform with a flat block layout.

Coefficients are stored as one flat vector ``w = [w_0, w_1, ..., w_J]``:

* ``w_0`` is the approximation at the coarsest scale, row-major,
  ``(side / 2**J)**2`` entries;
* ``w_i`` (``i >= 1``) holds the details of level ``J - i + 1`` as the
  concatenation of the horizontal, vertical and diagonal sub-bands, each
  flattened row-major.  Block 1 is therefore the coarsest detail group and
  block ``J`` the finest.

Sub-band naming follows the usual convention: the horizontal band is
high-pass along axis 0 and low-pass along axis 1, the vertical band the
reverse, the diagonal band high-pass along both axes.
"""

from dataclasses import dataclass
from functools import cached_property, lru_cache
from math import comb

import numpy as np
from scipy import sparse

from .errors import ConfigurationError, DimensionError

__all__ = [
    "FilterBank",
    "BlockLayout",
    "CoeffVector",
    "make_filter_bank",
    "parse_wavelet",
    "forward_dwt2",
    "inverse_dwt2",
    "embed_block",
    "project_block",
]

MAX_DAUBECHIES_ORDER = 10


@dataclass(frozen=True, eq=False)
class FilterBank:
    """Orthonormal two-channel filter pair (compared and hashed by identity).

    ``highpass[n] = (-1)**n * lowpass[L - 1 - n]``.
    """

    name: str
    lowpass: np.ndarray
    highpass: np.ndarray

    @property
    def length(self):
        return len(self.lowpass)


def _daubechies_lowpass(order):
    # Spectral factorization: keep the roots inside the unit circle
    # (extremal phase), multiply by the (1 + z)**order zeros at Nyquist.
    coeffs = [comb(order - 1 + k, k) for k in range(order)]
    poly = np.poly1d([1.0])
    for _ in range(order):
        poly = poly * np.poly1d([1.0, 1.0])
    if order > 1:
        for y in np.roots(coeffs[::-1]):
            pair = np.roots([1.0, -(2.0 - 4.0 * y), 1.0])
            z = pair[np.argmin(np.abs(pair))]
            poly = poly * np.poly1d([1.0, -z])
    h = np.real(poly.coeffs)
    return h * np.sqrt(2.0) / h.sum()


def make_filter_bank(family, order=1):
    """Build an orthonormal filter bank.

    Parameters
    ----------
    family : {"haar", "daubechies"}
    order : int
        Number of vanishing moments for Daubechies filters (1..10);
        the filter has ``2 * order`` taps.  Haar is Daubechies order 1.
    """
    family = str(family).lower()
    if family == "haar":
        if order != 1:
            raise ConfigurationError(f"haar has order 1, got {order}")
        h = np.array([1.0, 1.0]) / np.sqrt(2.0)
        name = "haar"
    elif family in ("daubechies", "db"):
        if not isinstance(order, (int, np.integer)) or not 1 <= order <= MAX_DAUBECHIES_ORDER:
            raise ConfigurationError(
                f"daubechies order must be an integer in 1..{MAX_DAUBECHIES_ORDER}, got {order!r}"
            )
        h = np.array([1.0, 1.0]) / np.sqrt(2.0) if order == 1 else _daubechies_lowpass(int(order))
        name = f"db{order}"
    else:
        raise ConfigurationError(f"unsupported wavelet family {family!r}")
    n = np.arange(len(h))
    g = (-1.0) ** n * h[::-1]
    h.setflags(write=False)
    g.setflags(write=False)
    return FilterBank(name, h, g)


def parse_wavelet(label):
    """Map a short label (``haar``, ``db8``, ``daubechies:4``) to a filter bank."""
    text = str(label).strip().lower()
    if text == "haar":
        return make_filter_bank("haar", 1)
    for prefix in ("daubechies:", "db"):
        if text.startswith(prefix):
            digits = text[len(prefix):]
            if digits.isdigit():
                return make_filter_bank("daubechies", int(digits))
    raise ConfigurationError(f"cannot parse wavelet label {label!r}")


@dataclass(frozen=True)
class BlockLayout:
    """Sizes and offsets of the ``J + 1`` coefficient blocks."""

    image_side: int
    levels: int

    def __post_init__(self):
        side, levels = self.image_side, self.levels
        if levels < 1:
            raise DimensionError(f"levels must be >= 1, got {levels}")
        if side < 2 or side & (side - 1):
            raise DimensionError(f"image side must be a power of two, got {side}")
        if side % (2**levels):
            raise DimensionError(f"side {side} is not divisible by 2**{levels}")

    @property
    def n_blocks(self):
        return self.levels + 1

    @property
    def size(self):
        return self.image_side**2

    @cached_property
    def block_sizes(self):
        n, J = self.size, self.levels
        return (n // 4**J,) + tuple(3 * n // 4 ** (J - i + 1) for i in range(1, J + 1))

    @cached_property
    def block_offsets(self):
        return tuple(int(x) for x in np.concatenate([[0], np.cumsum(self.block_sizes)[:-1]]))

    def block_slice(self, i):
        if not 0 <= i <= self.levels:
            raise DimensionError(f"block index {i} out of range 0..{self.levels}")
        start = self.block_offsets[i]
        return slice(start, start + self.block_sizes[i])

    def block_ids(self):
        """Block index of every coefficient, as an integer array."""
        return np.repeat(np.arange(self.n_blocks), self.block_sizes)


@dataclass
class CoeffVector:
    """Flat coefficient vector partitioned according to ``layout``."""

    layout: BlockLayout
    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.data.shape != (self.layout.size,):
            raise DimensionError(
                f"coefficient data has shape {self.data.shape}, layout expects ({self.layout.size},)"
            )

    def block(self, i):
        return self.data[self.layout.block_slice(i)]

    def blocks(self):
        return [self.block(i) for i in range(self.layout.n_blocks)]

    def copy(self):
        return CoeffVector(self.layout, self.data.copy())

    def norm(self):
        return float(np.linalg.norm(self.data))

    @classmethod
    def zeros(cls, layout):
        return cls(layout, np.zeros(layout.size))


DENSE_LEVEL_MAX = 512


@lru_cache(maxsize=64)
def _level_matrix(bank, n):
    """Orthogonal ``n x n`` analysis matrix of one level: lowpass rows on top.

    Row ``k`` of the lowpass half carries ``h[t]`` at column
    ``(2k + t + 1 - L/2) mod n``; this tap alignment reproduces the common
    "periodization" convention, so coefficients line up with other
    toolkits using it.  Taps longer than ``n`` wrap and accumulate.
    """
    h, g = bank.lowpass, bank.highpass
    half = n // 2
    rows = np.arange(half)
    m = np.zeros((n, n))
    for t in range(len(h)):
        cols = (2 * rows + t + 1 - len(h) // 2) % n
        np.add.at(m, (rows, cols), h[t])
        np.add.at(m, (rows + half, cols), g[t])
    if n > DENSE_LEVEL_MAX:
        return sparse.csr_matrix(m)
    return m


def _analysis2(x, bank):
    m = _level_matrix(bank, x.shape[0])
    y = m @ (m @ x.T).T
    half = x.shape[0] // 2
    return y[:half, :half], y[half:, :half], y[:half, half:], y[half:, half:]


def _synthesis2(approx, horiz, vert, diag, bank):
    m = _level_matrix(bank, 2 * approx.shape[0])
    y = np.block([[approx, vert], [horiz, diag]])
    return m.T @ (m.T @ y.T).T


def forward_dwt2(image, levels, bank):
    """Multi-level orthonormal 2D DWT with periodic boundaries."""
    image = np.asarray(image, dtype=float)
    if image.ndim != 2 or image.shape[0] != image.shape[1]:
        raise DimensionError(f"expected a square 2D image, got shape {image.shape}")
    layout = BlockLayout(image.shape[0], levels)
    details = []
    approx = image
    for _ in range(levels):
        approx, horiz, vert, diag = _analysis2(approx, bank)
        details.append(np.concatenate([horiz.ravel(), vert.ravel(), diag.ravel()]))
    # details[0] is level 1 (finest); block order is coarse to fine
    data = np.concatenate([approx.ravel()] + details[::-1])
    return CoeffVector(layout, data)


def inverse_dwt2(coeffs, bank):
    """Inverse (equivalently, adjoint) of :func:`forward_dwt2`."""
    if not isinstance(coeffs, CoeffVector):
        raise DimensionError("inverse_dwt2 expects a CoeffVector")
    layout = coeffs.layout
    side0 = layout.image_side >> layout.levels
    approx = coeffs.block(0).reshape(side0, side0)
    for i in range(1, layout.n_blocks):
        s = approx.shape[0]
        horiz, vert, diag = coeffs.block(i).reshape(3, s, s)
        approx = _synthesis2(approx, horiz, vert, diag, bank)
    return approx


def embed_block(block_index, block_values, layout):
    """Zero coefficient vector carrying ``block_values`` in one block."""
    sl = layout.block_slice(block_index)
    block_values = np.asarray(block_values, dtype=float)
    if block_values.shape != (sl.stop - sl.start,):
        raise DimensionError(
            f"block {block_index} has {sl.stop - sl.start} entries, got shape {block_values.shape}"
        )
    out = CoeffVector.zeros(layout)
    out.data[sl] = block_values
    return out


def project_block(coeffs, block_index):
    """Copy of block ``block_index`` of ``coeffs``."""
    return coeffs.block(block_index).copy()
