"""Circular Gaussian blur operator and observation synthesis ``y = A x + noise``."""

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import ConfigurationError, DimensionError, NumericalError

__all__ = [
    "GaussianBlur",
    "DegradationSpec",
    "make_kernel",
    "make_blur",
    "blur_apply",
    "blur_adjoint",
    "operator_norm",
    "degrade",
]

SIGMA_BLUR_RANGE = (1.0, 15.0)
SIGMA_NOISE_RANGE = (1e-3, 1e-1)


def make_kernel(sigma_blur):
    """Normalized 1D Gaussian taps on ``[-radius, radius]``, ``radius = ceil(4 sigma)``.

    ``sigma_blur`` is the standard deviation in pixels.
    """
    if not sigma_blur > 0:
        raise ConfigurationError(f"sigma_blur must be positive, got {sigma_blur}")
    radius = int(math.ceil(4.0 * sigma_blur))
    k = np.arange(-radius, radius + 1)
    taps = np.exp(-(k**2) / (2.0 * sigma_blur**2))
    return taps / taps.sum()


@dataclass(frozen=True)
class GaussianBlur:
    """Separable circular convolution with a symmetric 1D kernel.

    The operator is applied as a 1D circular convolution along axis 0 and
    then along axis 1.  Each 1D convolution is evaluated through the DFT of
    the kernel wrapped onto the image period, which is exact for circulant
    matrices (kernels wider than the image wrap around).
    """

    sigma_blur: float
    image_side: int
    kernel_1d: np.ndarray = field(repr=False)

    @property
    def radius(self):
        return (len(self.kernel_1d) - 1) // 2

    @classmethod
    def identity(cls, image_side):
        return cls(0.0, image_side, np.array([1.0]))

    def wrapped_kernel(self):
        """Kernel folded onto one period: ``column[m] = sum_{k = m mod n} taps[k]``."""
        n = self.image_side
        col = np.zeros(n)
        np.add.at(col, np.arange(-self.radius, self.radius + 1) % n, self.kernel_1d)
        return col

    def transfer(self):
        """DFT of the wrapped 1D kernel (``rfft`` layout)."""
        cached = self.__dict__.get("_transfer")
        if cached is None:
            cached = np.fft.rfft(self.wrapped_kernel())
            object.__setattr__(self, "_transfer", cached)
        return cached


def make_blur(sigma_blur, image_side):
    return GaussianBlur(float(sigma_blur), int(image_side), make_kernel(sigma_blur))


def _check(op, image):
    image = np.asarray(image, dtype=float)
    if image.shape != (op.image_side, op.image_side):
        raise DimensionError(
            f"image shape {image.shape} does not match operator side {op.image_side}"
        )
    return image


def _filter(image, response, n):
    out = np.fft.irfft(np.fft.rfft(image, axis=0) * response[:, None], n=n, axis=0)
    return np.fft.irfft(np.fft.rfft(out, axis=1) * response[None, :], n=n, axis=1)


def blur_apply(op, image):
    """``A x``: circular convolution along rows then columns."""
    image = _check(op, image)
    return _filter(image, op.transfer(), op.image_side)


def blur_adjoint(op, image):
    """``A^T z``: circular correlation with the kernel."""
    image = _check(op, image)
    return _filter(image, np.conj(op.transfer()), op.image_side)


def operator_norm(op, tol=1e-10, max_iters=20000, seed=0):
    """Estimate ``||A||`` by power iteration on ``A^T A``.

    Starts from a standard normal image drawn from ``seed`` and stops once
    two successive estimates agree to ``tol`` relatively.
    """
    if not tol > 0:
        raise ConfigurationError(f"tol must be positive, got {tol}")
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((op.image_side, op.image_side))
    x /= np.linalg.norm(x)
    previous = None
    estimate = 0.0
    for _ in range(max_iters):
        z = blur_adjoint(op, blur_apply(op, x))
        eig = float(np.linalg.norm(z))
        if eig == 0.0:
            return 0.0
        estimate = math.sqrt(eig)
        x = z / eig
        if previous is not None and abs(estimate - previous) <= tol * estimate:
            return estimate
        previous = estimate
    raise NumericalError(
        f"power iteration did not reach tol={tol} in {max_iters} iterations "
        f"(last estimate {estimate!r})",
        last_estimate=estimate,
    )


@dataclass(frozen=True)
class DegradationSpec:
    """Blur and noise levels of one observation, plus the noise seed."""

    sigma_blur: float
    sigma_noise: float
    seed: int = 0
    check_ranges: bool = True

    def __post_init__(self):
        if not self.sigma_blur > 0:
            raise ConfigurationError(f"sigma_blur must be positive, got {self.sigma_blur}")
        if self.sigma_noise < 0:
            raise ConfigurationError(f"sigma_noise must be >= 0, got {self.sigma_noise}")
        if self.check_ranges:
            lo, hi = SIGMA_BLUR_RANGE
            if not lo <= self.sigma_blur <= hi:
                raise ConfigurationError(f"sigma_blur {self.sigma_blur} outside [{lo}, {hi}]")
            lo, hi = SIGMA_NOISE_RANGE
            if self.sigma_noise != 0 and not lo <= self.sigma_noise <= hi:
                raise ConfigurationError(f"sigma_noise {self.sigma_noise} outside [{lo}, {hi}]")


def degrade(truth, spec, rng=None):
    """Blur ``truth`` and add white Gaussian noise (not clipped).

    Noise is drawn from ``rng`` when given, otherwise from a PCG64 stream
    seeded with ``spec.seed``.
    """
    truth = np.asarray(truth, dtype=float)
    op = make_blur(spec.sigma_blur, truth.shape[0])
    clean = blur_apply(op, truth)
    if spec.sigma_noise == 0:
        return clean
    if rng is None:
        rng = np.random.Generator(np.random.PCG64(spec.seed))
    return clean + spec.sigma_noise * rng.standard_normal(clean.shape)
