"""Deterministic scene feature extractor (56 x 56 x 24).

Stands in for a learned shallow backbone. Any callable with the same
``luma -> (56, 56, 24)`` contract can replace :func:`scene_features` in
:class:`~attncap.fusion.FusionHead`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

INPUT_SIZE = 224
GRID = 56
CHANNELS = 24

INTENSITY_RADII = (0, 1, 2, 3, 5, 8, 12, 16)
GRADIENT_RADII = (0, 2, 5, 12)
CONTRAST_RADII = (1, 2, 3, 5, 8, 12, 16, 24)


class DegenerateFrameError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SceneFeatures:
    grid: np.ndarray  # (56, 56, C)

    @property
    def channels(self):
        return self.grid.shape[2]


def _pool(img, factor):
    h, w = img.shape
    return img.reshape(h // factor, factor, w // factor, factor).mean(axis=(1, 3))


def _box(img, r):
    if r == 0:
        return img
    return ndimage.uniform_filter(img, size=2 * r + 1, mode="nearest")


def resample(luma, size=INPUT_SIZE):
    luma = np.asarray(luma, dtype=np.float64)
    if luma.ndim != 2 or luma.shape[0] == 0 or luma.shape[1] == 0:
        raise DegenerateFrameError(f"cannot extract features from frame of shape {luma.shape}")
    h, w = luma.shape
    if (h, w) == (size, size):
        return luma.copy()
    if h == 1 and w == 1:
        return np.full((size, size), luma[0, 0])
    out = ndimage.zoom(luma, (size / h, size / w), order=1, mode="nearest", grid_mode=True)
    return out[:size, :size]


def scene_features(frame):
    """Return :class:`SceneFeatures` for a :class:`SceneFrame` or a 2-D luma array."""
    luma = np.asarray(getattr(frame, "luma", frame), dtype=np.float64)
    # work relative to one pixel so flat regions stay exactly flat through resampling and blur
    ref = float(luma.flat[0]) if luma.size else 0.0
    img = resample(luma - ref)
    factor = INPUT_SIZE // GRID
    chans = []
    blurred = {}
    for r in sorted(set(INTENSITY_RADII) | set(GRADIENT_RADII)):
        blurred[r] = _box(img, r)
    for r in INTENSITY_RADII:
        chans.append(_pool(blurred[r], factor) + ref)
    gx = []
    gy = []
    for r in GRADIENT_RADII:
        dy, dx = np.gradient(blurred[r])
        gx.append(_pool(np.abs(dx), factor))
        gy.append(_pool(np.abs(dy), factor))
    chans.extend(gx)
    chans.extend(gy)
    sq = img * img
    for r in CONTRAST_RADII:
        m = _box(img, r)
        var = _box(sq, r) - m * m
        chans.append(_pool(np.sqrt(np.clip(var, 0.0, None)), factor))
    grid = np.stack(chans, axis=-1)
    return SceneFeatures(grid)
