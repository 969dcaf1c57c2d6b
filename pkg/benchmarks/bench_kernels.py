"""Compare the compiled kernels with their pure-Python twins.

    python benchmarks/bench_kernels.py [--repeat 5] [--samples 18000]

Each kernel is fed identical inputs on both backends; outputs are checked
for agreement before timing, so a speedup never hides a divergence.
"""

import argparse
import sys
import timeit

import numpy as np

from attncap import kernels


def _inputs(n, seed):
    rng = np.random.Generator(np.random.PCG64(seed))
    t = np.arange(n) / 30.0
    x = np.clip(0.5 + np.cumsum(rng.normal(0, 0.01, n)), 0, 1)
    y = np.clip(0.5 + np.cumsum(rng.normal(0, 0.01, n)), 0, 1)
    valid = (rng.uniform(size=n) > 0.02).astype(np.uint8)
    return t, x, y, valid


def cases(n):
    t, x, y, valid = _inputs(n, 0)
    win = 30
    starts = range(0, n - win, 7)
    return {
        "classify_stream": lambda k: k.classify_stream(t, x, y, valid, 1.2, 0.15, 0.01, 6, 0.3),
        "box_majority": lambda k: [k.box_majority(x, y, valid, s, s + win, 0.025, 0.9) for s in starts],
        "gaussian_heatmap": lambda k: [k.gaussian_heatmap(px, 0.5, 1.0, 2.0, 56) for px in np.linspace(0, 1, 200)],
    }


def _same(a, b):
    if isinstance(a, (tuple, list)):
        return len(a) == len(b) and all(_same(u, v) for u, v in zip(a, b))
    if isinstance(a, np.ndarray) and a.dtype.kind == "f":
        # numpy's vectorized exp and libm's differ in the last ulp
        return a.shape == b.shape and np.allclose(a, b, rtol=1e-14, atol=1e-300)
    if isinstance(a, np.ndarray):
        return np.array_equal(a, b)
    return a == b


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--samples", type=int, default=18000, help="gaze samples (18000 = 10 min at 30 Hz)")
    args = ap.parse_args(argv)

    py = kernels.load("python")
    try:
        cy = kernels.load("compiled")
    except ImportError:
        print("compiled extension not built; only the Python backend is available", file=sys.stderr)
        return 1

    print(f"{'kernel':<18} {'python s':>10} {'compiled s':>11} {'speedup':>8}")
    for name, fn in cases(args.samples).items():
        if not _same(fn(py), fn(cy)):
            print(f"{name}: backends disagree", file=sys.stderr)
            return 1
        tp = min(timeit.repeat(lambda: fn(py), number=1, repeat=args.repeat))
        tc = min(timeit.repeat(lambda: fn(cy), number=1, repeat=args.repeat))
        print(f"{name:<18} {tp:>10.4f} {tc:>11.4f} {tp / tc:>7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
