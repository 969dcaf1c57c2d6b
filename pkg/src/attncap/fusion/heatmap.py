"""Gaussian relaxation of discrete gaze positions onto a square grid."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import kernels

GRID = 56


class HeatmapParameterError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class GazeHeatmap:
    grid: np.ndarray
    source_t: float | None
    weight: float


def grid_cell(p, size=GRID):
    """Grid cell ``(col, row)`` holding normalized position ``p``."""
    gx = min(max(int(math.floor(p[0] * size)), 0), size - 1)
    gy = min(max(int(math.floor(p[1] * size)), 0), size - 1)
    return gx, gy


def default_weights(n):
    """Recency-increasing weights, 0.4 for the oldest up to 1.0 for the newest."""
    if n == 1:
        return np.ones(1)
    return np.linspace(0.4, 1.0, n)


def gaussian_heatmap(p, weight=1.0, sigma=2.0, size=GRID, source_t=None):
    """Heatmap whose cell ``(col, row)`` is ``w / (sigma sqrt(2 pi)) exp(-D^2 / 2 sigma^2)``.

    ``D`` is the Euclidean distance, in grid cells, from the cell to the
    cell containing ``p``.
    """
    if not sigma > 0:
        raise HeatmapParameterError(f"sigma must be > 0, got {sigma}")
    if weight < 0:
        raise HeatmapParameterError(f"weight must be >= 0, got {weight}")
    grid = kernels.gaussian_heatmap(float(p[0]), float(p[1]), float(weight), float(sigma), int(size))
    return GazeHeatmap(grid, source_t, float(weight))


def build_gaze_stack(positions, weights=None, sigma=2.0, valid=None, times=None, size=GRID):
    """One heatmap per position, oldest first.

    Invalid positions are dropped and the stack is padded back to length N
    by repeating the oldest valid position (in front).
    """
    positions = [tuple(p) for p in positions]
    n = len(positions)
    if n == 0:
        raise ValueError("no gaze positions")
    weights = default_weights(n) if weights is None else np.asarray(weights, dtype=float)
    if len(weights) != n:
        raise ValueError(f"{len(weights)} weights for {n} positions")
    valid = [True] * n if valid is None else [bool(v) for v in valid]
    times = [None] * n if times is None else list(times)
    keep = [k for k in range(n) if valid[k]]
    if not keep:
        raise ValueError("no valid gaze position in window")
    idx = [keep[0]] * (n - len(keep)) + keep
    return [gaussian_heatmap(positions[k], weights[j], sigma, size, times[k]) for j, k in enumerate(idx)]
