import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from attncap.fusion.heatmap import (
    GRID,
    HeatmapParameterError,
    build_gaze_stack,
    default_weights,
    gaussian_heatmap,
    grid_cell,
)


def direct(pi, pk, w, sigma):
    d2 = (pi[0] - pk[0]) ** 2 + (pi[1] - pk[1]) ** 2
    return w / (sigma * math.sqrt(2 * math.pi)) * math.exp(-d2 / (2 * sigma * sigma))


def test_peak_value():
    h = gaussian_heatmap((0.5, 0.5), 1.0, 2.0)
    gx, gy = grid_cell((0.5, 0.5))
    assert h.grid[gy, gx] == pytest.approx(0.19947114020071635, abs=1e-15)
    assert round(h.grid[gy, gx], 5) == 0.19947


def test_distance_two():
    h = gaussian_heatmap((0.5, 0.5), 1.0, 2.0)
    gx, gy = grid_cell((0.5, 0.5))
    assert h.grid[gy, gx + 2] == pytest.approx(0.19947114020071635 * math.exp(-0.5), abs=1e-15)
    assert round(h.grid[gy + 2, gx], 5) == 0.12099


def test_zero_weight():
    assert not gaussian_heatmap((0.3, 0.7), 0.0, 2.0).grid.any()


def test_bad_sigma():
    for s in (0.0, -1.0):
        with pytest.raises(HeatmapParameterError):
            gaussian_heatmap((0.5, 0.5), 1.0, s)


def test_grid_mapping_floor_and_clamp():
    assert grid_cell((0.0, 0.0)) == (0, 0)
    assert grid_cell((1.0, 1.0)) == (55, 55)
    assert grid_cell((0.5, 0.25)) == (28, 14)
    assert grid_cell((27.99 / 56, 0.999)) == (27, 55)


def test_peak_at_source_cell():
    for p in [(0.01, 0.99), (0.33, 0.66), (0.999, 0.0)]:
        g = gaussian_heatmap(p, 0.7, 1.5).grid
        gy, gx = np.unravel_index(np.argmax(g), g.shape)
        assert (gx, gy) == grid_cell(p)
        assert (g >= 0).all()


def test_eq1_oracle_1000():
    rng = np.random.Generator(np.random.PCG64(2024))
    worst = 0.0
    for _ in range(1000):
        pk = rng.uniform(0, 1, 2)
        w = rng.uniform(0, 2)
        sigma = rng.uniform(0.2, 8)
        ci, ri = rng.integers(0, GRID, 2)
        h = gaussian_heatmap(pk, w, sigma).grid
        worst = max(worst, abs(h[ri, ci] - direct((ci, ri), grid_cell(pk), w, sigma)))
    assert worst <= 1e-12


@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(0.3, 6.0), st.floats(0.01, 3.0))
def test_strictly_decreasing_in_distance(px, py, sigma, w):
    g = gaussian_heatmap((px, py), w, sigma).grid
    gx, gy = grid_cell((px, py))
    rows, cols = np.mgrid[0:GRID, 0:GRID]
    d2 = (cols - gx) ** 2 + (rows - gy) ** 2
    d = d2.ravel()
    v = g.ravel()
    ud = np.unique(d)
    vals = np.array([v[d == k].max() for k in ud])
    lows = np.array([v[d == k].min() for k in ud])
    assert np.array_equal(vals, lows)  # one value per distance
    normal = vals > 1e-300  # below this, subnormal rounding can tie
    assert np.all(np.diff(vals[normal]) < 0)


def test_strict_decrease_near_source():
    g = gaussian_heatmap((0.5, 0.5), 1.0, 2.0).grid
    gx, gy = grid_cell((0.5, 0.5))
    prof = g[gy, gx : gx + 10]
    assert np.all(np.diff(prof) < 0)


# -- stacks ------------------------------------------------------------------------


def test_single_stack_equals_heatmap():
    (h,) = build_gaze_stack([(0.2, 0.3)], [0.8], 2.0)
    np.testing.assert_array_equal(h.grid, gaussian_heatmap((0.2, 0.3), 0.8, 2.0).grid)


def test_identical_positions_equal_weights():
    stack = build_gaze_stack([(0.4, 0.4)] * 4, [1.0] * 4, 2.0)
    for h in stack[1:]:
        np.testing.assert_array_equal(h.grid, stack[0].grid)


def test_default_weights_peak_ratio():
    np.testing.assert_allclose(default_weights(4), [0.4, 0.6, 0.8, 1.0])
    stack = build_gaze_stack([(0.5, 0.5)] * 4, None, 2.0)
    peaks = np.array([h.grid.max() for h in stack])
    np.testing.assert_allclose(peaks / peaks[-1], [0.4, 0.6, 0.8, 1.0], rtol=1e-14)


def test_ordering_preserved():
    pos = [(0.1, 0.1), (0.3, 0.3), (0.6, 0.6), (0.9, 0.9)]
    stack = build_gaze_stack(pos, [1.0] * 4, 2.0)
    for p, h in zip(pos, stack):
        gy, gx = np.unravel_index(np.argmax(h.grid), h.grid.shape)
        assert (gx, gy) == grid_cell(p)


def test_padding_repeats_oldest_valid():
    pos = [(0.1, 0.1), (0.3, 0.3), (0.6, 0.6), (0.9, 0.9)]
    stack = build_gaze_stack(pos, [0.4, 0.6, 0.8, 1.0], 2.0, valid=[False, True, False, True])
    cells = [np.unravel_index(np.argmax(h.grid), h.grid.shape)[::-1] for h in stack]
    assert cells == [grid_cell((0.3, 0.3))] * 3 + [grid_cell((0.9, 0.9))]
    # weights stay attached to stack slots
    assert [h.weight for h in stack] == [0.4, 0.6, 0.8, 1.0]


def test_weight_length_mismatch():
    with pytest.raises(ValueError):
        build_gaze_stack([(0.5, 0.5)] * 3, [1.0, 1.0], 2.0)
