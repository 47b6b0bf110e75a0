"""Pure-numpy versions of the compiled kernels in ``_ext.pyx``.

Accumulation order matches the compiled loops so the two backends agree to
the last few ulps; the max-type reductions agree exactly.
"""

import numpy as np

# rows of the (rows, n, n) temporary used by ``maxplus_rows``
_CHUNK_ELEMENTS = 1 << 22


def _shift(u, offset):
    # value at i + offset, periodic
    return np.roll(u, tuple(-int(o) for o in offset), axis=tuple(range(u.ndim)))


def _phi(d, wpos, wneg):
    return np.where(d > 0, wpos * d, wneg * d)


def pucci_1d(u, offsets, weights, wpos, wneg):
    acc = np.zeros_like(u)
    for o, w in zip(offsets, weights):
        d = np.roll(u, -o) + np.roll(u, o) - 2.0 * u
        acc = acc + w * _phi(d, wpos, wneg)
    return acc


def pucci_2d(u, off0, off1, weights, wpos, wneg):
    acc = np.zeros_like(u)
    for a, b, w in zip(off0, off1, weights):
        d = _shift(u, (a, b)) + _shift(u, (-a, -b)) - 2.0 * u
        acc = acc + w * _phi(d, wpos, wneg)
    return acc


def maxplus_rows(a, pen):
    m, n = a.shape
    out = np.empty((m, n))
    step = max(1, _CHUNK_ELEMENTS // max(1, m * n))
    for i0 in range(0, n, step):
        i1 = min(n, i0 + step)
        out[:, i0:i1] = (a[:, None, :] - pen[None, i0:i1, :]).max(axis=-1)
    return out


def pair_ratio_max_1d(u, offsets, den):
    best = 0.0
    for o, d in zip(offsets, den):
        best = max(best, float(np.max(np.abs(np.roll(u, -o) - u) / d)))
    return best


def pair_ratio_max_2d(u, off0, off1, den):
    best = 0.0
    for a, b, d in zip(off0, off1, den):
        best = max(best, float(np.max(np.abs(_shift(u, (a, b)) - u) / d)))
    return best


def neg_second_diff_max_1d(u, offsets, den):
    best = -1.0e300
    for o, d in zip(offsets, den):
        v = -(np.roll(u, -o) + np.roll(u, o) - 2.0 * u) / d
        best = max(best, float(v.max()))
    return best


def neg_second_diff_max_2d(u, off0, off1, den):
    best = -1.0e300
    for a, b, d in zip(off0, off1, den):
        v = -(_shift(u, (a, b)) + _shift(u, (-a, -b)) - 2.0 * u) / d
        best = max(best, float(v.max()))
    return best
