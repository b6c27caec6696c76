"""Seeded piecewise-smooth test images in [0, 1]."""

import numpy as np


def piecewise_smooth(side, rng, n_shapes=12):
    """Smooth background plus overlapping rectangles and ellipses.

    Each shape carries its own linear intensity ramp, so the image has
    sharp edges between smooth regions.
    """
    yy, xx = np.mgrid[0:side, 0:side] / side
    a, b, c = rng.uniform(-0.3, 0.3, size=3)
    img = 0.5 + a * (xx - 0.5) + b * (yy - 0.5) + 0.1 * np.sin(2 * np.pi * (c + xx * yy))
    for _ in range(n_shapes):
        cx, cy = rng.uniform(0.1, 0.9, size=2)
        rx, ry = rng.uniform(0.05, 0.3, size=2)
        level = rng.uniform(0.0, 1.0)
        gx, gy = rng.uniform(-0.5, 0.5, size=2)
        if rng.random() < 0.5:
            inside = (np.abs(xx - cx) < rx) & (np.abs(yy - cy) < ry)
        else:
            inside = ((xx - cx) / rx) ** 2 + ((yy - cy) / ry) ** 2 < 1.0
        img = np.where(inside, level + gx * (xx - cx) + gy * (yy - cy), img)
    return np.clip(img, 0.0, 1.0)
