"""Hot inner loops, compiled when possible.

The Cython extension ``_ext`` is used if it was built; otherwise the numpy
implementations in ``_py`` are used. Set ``HJFRAC_PURE_PYTHON=1`` to force the
fallback. All callers go through the wrappers below, which normalise dtypes.
"""

import os

import numpy as np

from . import _py

try:
    if os.environ.get("HJFRAC_PURE_PYTHON"):
        raise ImportError("pure-Python backend requested")
    from . import _ext as _impl

    BACKEND = "cython"
except ImportError:
    _impl = _py
    BACKEND = "numpy"


def _f(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def _i(a):
    return np.ascontiguousarray(a, dtype=np.int64)


def backend_module(name=None):
    """Return the kernel module named ``name`` ('cython' or 'numpy')."""
    if name is None:
        return _impl
    if name == "numpy":
        return _py
    if name == "cython":
        from . import _ext

        return _ext
    raise ValueError(f"unknown backend {name!r}")


def pucci(u, offsets, weights, wpos, wneg, impl=None):
    """Weighted sum of ``phi(delta u)`` over a half set of displacements.

    ``offsets`` is ``(m,)`` in 1D or ``(m, 2)`` in 2D; ``phi(d)`` is ``wpos*d``
    for ``d > 0`` and ``wneg*d`` otherwise.
    """
    impl = impl or _impl
    u = _f(u)
    offsets = np.asarray(offsets)
    if u.ndim == 1:
        return impl.pucci_1d(u, _i(offsets), _f(weights), float(wpos), float(wneg))
    return impl.pucci_2d(u, _i(offsets[:, 0]), _i(offsets[:, 1]), _f(weights),
                         float(wpos), float(wneg))


def maxplus_rows(a, pen, impl=None):
    """``out[r, i] = max_j a[r, j] - pen[i, j]``."""
    impl = impl or _impl
    return impl.maxplus_rows(_f(a), _f(pen))


def pair_ratio_max(u, offsets, den, impl=None):
    """``max |u(x + o_k) - u(x)| / den_k`` over all lattice points and offsets."""
    impl = impl or _impl
    u = _f(u)
    offsets = np.asarray(offsets)
    if len(offsets) == 0:
        return 0.0
    if u.ndim == 1:
        return float(impl.pair_ratio_max_1d(u, _i(offsets), _f(den)))
    return float(impl.pair_ratio_max_2d(u, _i(offsets[:, 0]), _i(offsets[:, 1]), _f(den)))


def neg_second_diff_max(u, offsets, den, impl=None):
    """``max -delta u(x, o_k) / den_k`` over all lattice points and offsets."""
    impl = impl or _impl
    u = _f(u)
    offsets = np.asarray(offsets)
    if u.ndim == 1:
        return float(impl.neg_second_diff_max_1d(u, _i(offsets), _f(den)))
    return float(impl.neg_second_diff_max_2d(u, _i(offsets[:, 0]), _i(offsets[:, 1]), _f(den)))
