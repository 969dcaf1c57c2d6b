# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-sample kernels.

Every function here has a line-for-line twin in :mod:`attncap._fallback`;
:mod:`attncap.kernels` picks one of the two at import time.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, exp, floor, ceil, fabs, M_PI
from libc.stdlib cimport malloc, free, qsort

cnp.import_array()

cdef enum:
    UNKNOWN = 0
    SACCADE = 1
    PURSUIT = 2
    FIXATION = 3


cdef int _cmp_double(const void *a, const void *b) noexcept nogil:
    cdef double da = (<double *> a)[0]
    cdef double db = (<double *> b)[0]
    if da < db:
        return -1
    if da > db:
        return 1
    return 0


cdef double _median(double *buf, Py_ssize_t n) noexcept nogil:
    qsort(buf, n, sizeof(double), _cmp_double)
    if n % 2 == 1:
        return buf[n // 2]
    return 0.5 * (buf[n // 2 - 1] + buf[n // 2])


def classify_stream(const double[:] t, const double[:] x, const double[:] y,
                    const cnp.uint8_t[:] valid, double v_saccade, double v_drift,
                    double dispersion_max, Py_ssize_t window, double ema_alpha):
    """Label every sample and return ``(labels, likelihood)``."""
    cdef Py_ssize_t n = t.shape[0]
    labels_arr = np.zeros(n, dtype=np.int8)
    lik_arr = np.zeros(n, dtype=np.float64)
    cdef cnp.int8_t[:] labels = labels_arr
    cdef double[:] lik = lik_arr
    cdef Py_ssize_t i, j, k, lo, prev, nvalid
    cdef double ema = 0.0, speed, dt, dx, dy, disp, d2, ind
    cdef int label
    for i in range(n):
        lo = i - window + 1
        if lo < 0:
            lo = 0
        nvalid = 0
        for j in range(lo, i + 1):
            if valid[j]:
                nvalid += 1
        if not valid[i]:
            labels[i] = UNKNOWN
            lik[i] = ema if nvalid >= 2 else 0.0
            continue
        if nvalid < 2:
            labels[i] = UNKNOWN
            lik[i] = 0.0
            continue
        prev = i - 1
        while not valid[prev]:
            prev -= 1
        dt = t[i] - t[prev]
        dx = x[i] - x[prev]
        dy = y[i] - y[prev]
        speed = sqrt(dx * dx + dy * dy) / dt
        if speed > v_saccade:
            label = SACCADE
        else:
            label = PURSUIT
            if speed <= v_drift:
                disp = 0.0
                for j in range(lo, i + 1):
                    if not valid[j]:
                        continue
                    for k in range(j + 1, i + 1):
                        if not valid[k]:
                            continue
                        dx = x[j] - x[k]
                        dy = y[j] - y[k]
                        d2 = dx * dx + dy * dy
                        if d2 > disp:
                            disp = d2
                if sqrt(disp) <= dispersion_max:
                    label = FIXATION
        labels[i] = label
        ind = 0.0 if label == SACCADE else 1.0
        ema = (1.0 - ema_alpha) * ema + ema_alpha * ind
        lik[i] = ema
    return labels_arr, lik_arr


def box_majority(const double[:] x, const double[:] y, const cnp.uint8_t[:] valid,
                 Py_ssize_t lo, Py_ssize_t hi, double half_side, double q):
    """Majority test over samples ``lo:hi`` around the coordinate-wise median."""
    cdef Py_ssize_t n = 0, i, inside = 0
    cdef double mx, my
    if hi <= lo:
        return False
    cdef double *bx = <double *> malloc((hi - lo) * sizeof(double))
    cdef double *by = <double *> malloc((hi - lo) * sizeof(double))
    if bx == NULL or by == NULL:
        free(bx)
        free(by)
        raise MemoryError()
    try:
        for i in range(lo, hi):
            if valid[i]:
                bx[n] = x[i]
                by[n] = y[i]
                n += 1
        if n == 0:
            return False
        # _median sorts the copies in place; the count below reads the originals
        mx = _median(bx, n)
        my = _median(by, n)
        for i in range(lo, hi):
            if valid[i] and fabs(x[i] - mx) <= half_side and fabs(y[i] - my) <= half_side:
                inside += 1
        return inside >= ceil(q * n - 1e-9)
    finally:
        free(bx)
        free(by)


def gaussian_heatmap(double px, double py, double weight, double sigma, Py_ssize_t size):
    """Render one Gaussian relaxation on a ``size x size`` grid (row = y)."""
    out_arr = np.empty((size, size), dtype=np.float64)
    cdef double[:, :] out = out_arr
    cdef Py_ssize_t gx = <Py_ssize_t> floor(px * size)
    cdef Py_ssize_t gy = <Py_ssize_t> floor(py * size)
    cdef Py_ssize_t r, c
    cdef double amp = weight / (sigma * sqrt(2.0 * M_PI))
    cdef double two_var = 2.0 * sigma * sigma
    cdef double d2
    if gx < 0:
        gx = 0
    elif gx > size - 1:
        gx = size - 1
    if gy < 0:
        gy = 0
    elif gy > size - 1:
        gy = size - 1
    for r in range(size):
        for c in range(size):
            d2 = <double> ((c - gx) * (c - gx) + (r - gy) * (r - gy))
            out[r, c] = amp * exp(-d2 / two_var)
    return out_arr
