import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hjfrac import kernels
from hjfrac.grid import make_grid
from hjfrac.nonlocal_ops import half_set_weights

NUMPY = kernels.backend_module("numpy")
try:
    COMPILED = kernels.backend_module("cython")
except ImportError:  # pragma: no cover - extension not built
    COMPILED = None

needs_ext = pytest.mark.skipif(COMPILED is None, reason="compiled kernels not built")


def test_backend_reported():
    assert kernels.BACKEND in ("cython", "numpy")
    with pytest.raises(ValueError):
        kernels.backend_module("fortran")


@needs_ext
@given(seed=st.integers(0, 2**32 - 1), dim=st.sampled_from([1, 2]), wpos=st.floats(0.1, 3), wneg=st.floats(0.1, 3))
def test_pucci_backends_identical(seed, dim, wpos, wneg):
    rng = np.random.default_rng(seed)
    g = make_grid(dim, 64 if dim == 1 else 16, 2 * np.pi)
    u = rng.normal(size=g.shape)
    offs, w = half_set_weights(g, dim + 1.0)
    a = kernels.pucci(u, offs, w, wpos, wneg, impl=NUMPY)
    b = kernels.pucci(u, offs, w, wpos, wneg, impl=COMPILED)
    np.testing.assert_array_equal(a, b)


@needs_ext
@given(seed=st.integers(0, 2**32 - 1), n=st.sampled_from([8, 33, 64]), rows=st.integers(1, 5))
def test_maxplus_backends_identical(seed, n, rows):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(rows, n))
    pen = rng.uniform(0, 5, size=(n, n))
    np.testing.assert_array_equal(kernels.maxplus_rows(a, pen, impl=NUMPY), kernels.maxplus_rows(a, pen, impl=COMPILED))
    brute = np.max(a[:, None, :] - pen[None, :, :], axis=2)
    np.testing.assert_array_equal(kernels.maxplus_rows(a, pen, impl=NUMPY), brute)


@needs_ext
@given(seed=st.integers(0, 2**32 - 1), dim=st.sampled_from([1, 2]))
def test_pair_and_second_difference_backends_identical(seed, dim):
    rng = np.random.default_rng(seed)
    g = make_grid(dim, 32 if dim == 1 else 8, 2 * np.pi)
    u = rng.normal(size=g.shape)
    offs, norms, _ = g.half_displacements()
    for fn in (kernels.pair_ratio_max, kernels.neg_second_diff_max):
        assert fn(u, offs, norms, impl=NUMPY) == fn(u, offs, norms, impl=COMPILED)


def test_pair_ratio_brute_force():
    rng = np.random.default_rng(1)
    u = rng.normal(size=16)
    offs = np.array([1, 3, 7])
    den = np.array([0.5, 1.0, 2.0])
    expect = max(np.max(np.abs(np.roll(u, -o) - u)) / d for o, d in zip(offs, den))
    assert kernels.pair_ratio_max(u, offs, den) == pytest.approx(expect, rel=1e-15)
    assert kernels.pair_ratio_max(u, np.array([], dtype=np.int64), np.array([])) == 0.0


def test_pure_python_fallback_selected_at_import():
    import os
    import subprocess
    import sys

    env = {**os.environ, "HJFRAC_PURE_PYTHON": "1"}
    code = "from hjfrac import kernels; print(kernels.BACKEND)"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
