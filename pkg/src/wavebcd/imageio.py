"""Minimal grayscale image I/O.

* PGM/PPM (binary ``P5``/``P6``, 8 or 16 bit) mapped to ``[0, 1]``;
  colour is reduced to luminance ``0.2126 R + 0.7152 G + 0.0722 B``.
* PFM (``Pf``, float32, grayscale) for unclipped float images such as
  noisy observations and reconstructions.
* PNG read through Pillow when it is installed.
"""

from pathlib import Path

import numpy as np

from .errors import DataError

__all__ = [
    "read_image",
    "write_pgm",
    "read_pgm",
    "write_pfm",
    "read_pfm",
    "to_luminance",
    "crop_square_pow2",
]

LUMA = np.array([0.2126, 0.7152, 0.0722])


def to_luminance(rgb):
    return np.asarray(rgb, dtype=float)[..., :3] @ LUMA


def _tokens(data, count, pos):
    """Read ``count`` whitespace-separated header tokens, skipping comments."""
    out = []
    n = len(data)
    while len(out) < count:
        while pos < n and data[pos : pos + 1].isspace():
            pos += 1
        if pos < n and data[pos : pos + 1] == b"#":
            while pos < n and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise DataError("truncated image header")
        out.append(data[start:pos])
    # exactly one whitespace byte separates the header from the raster
    return out, pos + 1


def read_pgm(path):
    """Read a binary PGM (``P5``) or PPM (``P6``) as floats in ``[0, 1]``."""
    data = Path(path).read_bytes()
    magic = data[:2]
    if magic not in (b"P5", b"P6"):
        raise DataError(f"{path}: not a binary PGM/PPM file (magic {magic!r})")
    (w, h, maxval), pos = _tokens(data, 3, 2)
    try:
        w, h, maxval = int(w), int(h), int(maxval)
    except ValueError:
        raise DataError(f"{path}: malformed header") from None
    if not 0 < maxval < 65536:
        raise DataError(f"{path}: invalid maxval {maxval}")
    channels = 1 if magic == b"P5" else 3
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    count = w * h * channels
    if len(data) - pos < count * dtype.itemsize:
        raise DataError(f"{path}: raster shorter than {w}x{h}x{channels}")
    raster = np.frombuffer(data, dtype=dtype, count=count, offset=pos)
    img = raster.astype(float).reshape(h, w, channels) / maxval
    return img[..., 0] if channels == 1 else to_luminance(img)


def write_pgm(path, image, bits=8):
    """Write ``image`` (clipped to ``[0, 1]``) as binary PGM."""
    if bits not in (8, 16):
        raise ValueError("bits must be 8 or 16")
    image = np.clip(np.asarray(image, dtype=float), 0.0, 1.0)
    maxval = 255 if bits == 8 else 65535
    raster = np.rint(image * maxval).astype(">u2" if bits == 16 else "u1")
    h, w = image.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n{maxval}\n".encode("ascii"))
        fh.write(raster.tobytes())


def write_pfm(path, image):
    """Grayscale PFM, little-endian float32, rows stored bottom to top."""
    image = np.asarray(image, dtype="<f4")
    h, w = image.shape
    with open(path, "wb") as fh:
        fh.write(f"Pf\n{w} {h}\n-1.0\n".encode("ascii"))
        fh.write(np.ascontiguousarray(image[::-1]).tobytes())


def read_pfm(path):
    data = Path(path).read_bytes()
    if data[:2] != b"Pf":
        raise DataError(f"{path}: not a grayscale PFM file")
    (w, h, scale), pos = _tokens(data, 3, 2)
    w, h, scale = int(w), int(h), float(scale)
    dtype = "<f4" if scale < 0 else ">f4"
    if len(data) - pos < 4 * w * h:
        raise DataError(f"{path}: raster shorter than {w}x{h}")
    img = np.frombuffer(data, dtype=dtype, count=w * h, offset=pos).reshape(h, w)
    return img[::-1].astype(float)


def read_image(path):
    """Read a PGM, PPM, PFM or (with Pillow) PNG file as a float grayscale array."""
    path = Path(path)
    try:
        head = path.read_bytes()[:8]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None
    if head[:2] in (b"P5", b"P6"):
        return read_pgm(path)
    if head[:2] == b"Pf":
        return read_pfm(path)
    if head.startswith(b"\x89PNG"):
        try:
            from PIL import Image
        except ImportError:
            raise DataError(f"{path}: reading PNG needs Pillow") from None
        with Image.open(path) as im:
            arr = np.asarray(im)
            maxval = 65535.0 if arr.dtype == np.uint16 or im.mode.startswith("I") else 255.0
        arr = arr.astype(float) / maxval
        return to_luminance(arr) if arr.ndim == 3 else arr
    raise DataError(f"{path}: unsupported image format")


def crop_square_pow2(image, side=None, origin=(0, 0)):
    """Crop a square power-of-two window (largest that fits when ``side`` is None)."""
    h, w = image.shape
    if side is None:
        side = 1 << (min(h, w).bit_length() - 1)
    r, c = origin
    if side & (side - 1) or r + side > h or c + side > w:
        raise DataError(f"cannot crop {side}x{side} at {origin} from a {h}x{w} image")
    return image[r : r + side, c : c + side].copy()
