"""Pure-Python twins of the compiled kernels in ``_kernels.pyx``.

Same signatures, same return types, same tie-breaking. Used when the
extension is not built or when ``ATTNCAP_PURE=1`` is set.
"""

import math

import numpy as np

UNKNOWN, SACCADE, PURSUIT, FIXATION = 0, 1, 2, 3


def classify_stream(t, x, y, valid, v_saccade, v_drift, dispersion_max, window, ema_alpha):
    n = len(t)
    labels = np.zeros(n, dtype=np.int8)
    lik = np.zeros(n, dtype=np.float64)
    ema = 0.0
    for i in range(n):
        lo = max(0, i - window + 1)
        idx = [j for j in range(lo, i + 1) if valid[j]]
        if not valid[i]:
            labels[i] = UNKNOWN
            lik[i] = ema if len(idx) >= 2 else 0.0
            continue
        if len(idx) < 2:
            labels[i] = UNKNOWN
            lik[i] = 0.0
            continue
        prev = idx[-2]
        dx = x[i] - x[prev]
        dy = y[i] - y[prev]
        speed = math.sqrt(dx * dx + dy * dy) / (t[i] - t[prev])
        if speed > v_saccade:
            label = SACCADE
        else:
            label = PURSUIT
            if speed <= v_drift:
                disp = 0.0
                for a in range(len(idx)):
                    for b in range(a + 1, len(idx)):
                        ddx = x[idx[a]] - x[idx[b]]
                        ddy = y[idx[a]] - y[idx[b]]
                        disp = max(disp, ddx * ddx + ddy * ddy)
                if math.sqrt(disp) <= dispersion_max:
                    label = FIXATION
        labels[i] = label
        ema = (1.0 - ema_alpha) * ema + ema_alpha * (0.0 if label == SACCADE else 1.0)
        lik[i] = ema
    return labels, lik


def box_majority(x, y, valid, lo, hi, half_side, q):
    if hi <= lo:
        return False
    sel = np.asarray(valid[lo:hi], dtype=bool)
    n = int(sel.sum())
    if n == 0:
        return False
    xs = np.asarray(x[lo:hi])[sel]
    ys = np.asarray(y[lo:hi])[sel]
    mx = float(np.median(xs))
    my = float(np.median(ys))
    inside = int(np.count_nonzero((np.abs(xs - mx) <= half_side) & (np.abs(ys - my) <= half_side)))
    return inside >= math.ceil(q * n - 1e-9)


def gaussian_heatmap(px, py, weight, sigma, size):
    gx = min(max(int(math.floor(px * size)), 0), size - 1)
    gy = min(max(int(math.floor(py * size)), 0), size - 1)
    rows, cols = np.mgrid[0:size, 0:size]
    d2 = ((cols - gx) ** 2 + (rows - gy) ** 2).astype(np.float64)
    return weight / (sigma * math.sqrt(2.0 * math.pi)) * np.exp(-d2 / (2.0 * sigma * sigma))
