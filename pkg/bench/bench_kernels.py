"""Compare the compiled and numpy kernel backends.

Run ``python bench/bench_kernels.py [--repeat R]``. Each line reports the best
wall time per backend, the speedup, and the largest difference between the
two outputs.
"""

import argparse
import timeit

import numpy as np

from hjfrac import kernels
from hjfrac.grid import make_grid
from hjfrac.nonlocal_ops import half_set_weights


def cases(rng):
    g1 = make_grid(1, 4096, 2 * np.pi)
    u1 = rng.standard_normal(g1.shape)
    offs1, w1 = half_set_weights(g1, 2.0)
    g2 = make_grid(2, 64, 2 * np.pi)
    u2 = rng.standard_normal(g2.shape)
    offs2, w2 = half_set_weights(g2, 3.0)
    a = rng.standard_normal((64, 1024))
    d = np.abs(np.arange(1024)[:, None] - np.arange(1024)[None, :])
    pen = np.minimum(d, 1024 - d) ** 2 * 1e-3
    o1, n1, _ = g1.half_displacements(max_distance=g1.period / 4)
    yield "pucci 1D N=4096", lambda impl: kernels.pucci(u1, offs1, w1, 2.0, 0.5, impl=impl)
    yield "pucci 2D N=64^2", lambda impl: kernels.pucci(u2, offs2, w2, 2.0, 0.5, impl=impl)
    yield "maxplus 64x1024", lambda impl: kernels.maxplus_rows(a, pen, impl=impl)
    yield "pair ratio 1D N=4096", lambda impl: kernels.pair_ratio_max(u1, o1, n1, impl=impl)
    yield "neg second diff 1D", lambda impl: kernels.neg_second_diff_max(u1, o1, n1 * n1, impl=impl)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    try:
        compiled = kernels.backend_module("cython")
    except ImportError:
        print("compiled backend not built; nothing to compare")
        return 1
    fallback = kernels.backend_module("numpy")
    rng = np.random.default_rng(0)
    print(f"{'kernel':24s} {'cython[s]':>10s} {'numpy[s]':>10s} {'speedup':>8s} {'max diff':>10s}")
    for name, fn in cases(rng):
        tc = min(timeit.repeat(lambda: fn(compiled), number=1, repeat=args.repeat))
        tp = min(timeit.repeat(lambda: fn(fallback), number=1, repeat=args.repeat))
        diff = float(np.max(np.abs(np.asarray(fn(compiled)) - np.asarray(fn(fallback)))))
        print(f"{name:24s} {tc:10.4f} {tp:10.4f} {tp / tc:8.1f} {diff:10.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
