"""Sup- and inf-convolutions on the lattice and the regularity they produce.

The penalty ``(|x - y|^2 + |t - s|^2) / eps`` is a sum of one-dimensional
terms, so the lattice supremum factorizes into a max-plus product along each
axis in turn (space axes with the torus metric, then time). Each factor is an
exhaustive scan, so the result is the exact discrete supremum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .grid import Grid, ScalarField, SpaceTimeField


@dataclass(frozen=True)
class ConvolutionParam:
    epsilon: float

    def __post_init__(self):
        if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")


def _eps(epsilon) -> float:
    return epsilon.epsilon if isinstance(epsilon, ConvolutionParam) else ConvolutionParam(float(epsilon)).epsilon


def _torus_penalty(grid: Grid, eps: float) -> np.ndarray:
    n = grid.n_points
    d = np.abs(np.arange(n)[:, None] - np.arange(n)[None, :])
    d = np.minimum(d, n - d) * grid.spacing
    return d * d / eps


def _maxplus_axis(a: np.ndarray, pen: np.ndarray, axis: int, impl=None) -> np.ndarray:
    moved = np.moveaxis(a, axis, -1)
    shape = moved.shape
    out = kernels.maxplus_rows(moved.reshape(-1, shape[-1]), pen, impl=impl)
    return np.moveaxis(out.reshape(shape), -1, axis)


def _sup_array(data: np.ndarray, grid: Grid, times, eps: float, impl=None) -> np.ndarray:
    pen = _torus_penalty(grid, eps)
    lead = 0 if times is None else 1
    out = data
    for ax in range(grid.dim):
        out = _maxplus_axis(out, pen, lead + ax, impl)
    if times is not None and len(times) > 1:
        t = np.asarray(times)
        tpen = (t[:, None] - t[None, :]) ** 2 / eps
        out = _maxplus_axis(out, tpen, 0, impl)
    return out


def sup_convolution(field, epsilon, impl=None):
    """``u^eps(x, t) = max_{y, s} u(y, s) - (|x - y|^2 + |t - s|^2) / eps`` over lattice and frames."""
    eps = _eps(epsilon)
    if isinstance(field, SpaceTimeField):
        return SpaceTimeField(field.grid, field.times, _sup_array(field.data, field.grid, field.times, eps, impl))
    return ScalarField(field.grid, _sup_array(field.values, field.grid, None, eps, impl))


def inf_convolution(field, epsilon, impl=None):
    """``u_eps = -(-u)^eps``."""
    eps = _eps(epsilon)
    if isinstance(field, SpaceTimeField):
        return SpaceTimeField(field.grid, field.times, -_sup_array(-field.data, field.grid, field.times, eps, impl))
    return ScalarField(field.grid, -_sup_array(-field.values, field.grid, None, eps, impl))


def _frames(field):
    if isinstance(field, SpaceTimeField):
        return [field.data[k] for k in range(field.n_frames)]
    return [field.values]


def semiconvexity_modulus(field, epsilon=None) -> float:
    """Smallest ``c >= 0`` with ``delta u(x, y) >= -c |y|^2`` at every lattice point and displacement.

    The scan covers every displacement on the torus (one of each ``+-y``
    pair). For space-time input the spatial modulus of each frame is taken
    and the maximum returned. ``epsilon`` is accepted for symmetry with the
    convolution routines and does not affect the measurement.
    """
    if epsilon is not None:
        _eps(epsilon)
    grid = field.grid
    offs, norms, _ = grid.half_displacements()
    den = norms * norms
    best = 0.0
    for frame in _frames(field):
        best = max(best, kernels.neg_second_diff_max(frame, offs, den))
    return best


def lipschitz_seminorm(field, max_distance: float | None = None) -> float:
    """``max |u(x) - u(y)| / |x - y|`` over lattice pairs with torus distance ``<= period/4``."""
    grid = field.grid
    r = grid.period / 4 if max_distance is None else max_distance
    offs, norms, _ = grid.half_displacements(max_distance=r)
    best = 0.0
    for frame in _frames(field):
        best = max(best, kernels.pair_ratio_max(frame, offs, norms))
    return best


def convexity_report(field, epsilon, h_tolerance: float = 10.0) -> dict:
    """Check the standard sup/inf-convolution properties on one field.

    The semiconvexity bound is ``2/eps``. Three Lipschitz bounds are reported:
    ``2 (||u||/eps)^(1/2)`` (the usual statement, valid when ``osc u <= ||u||``),
    ``2 (osc u / eps)^(1/2)`` (valid always) and ``(1/eps) ||u||^(1/2)``.
    Each comparison allows ``h_tolerance * h`` of slack.
    """
    eps = _eps(epsilon)
    grid = field.grid
    h = grid.spacing
    data = field.data if isinstance(field, SpaceTimeField) else field.values
    sup_c = sup_convolution(field, eps)
    inf_c = inf_convolution(field, eps)
    sup_data = sup_c.data if isinstance(sup_c, SpaceTimeField) else sup_c.values
    inf_data = inf_c.data if isinstance(inf_c, SpaceTimeField) else inf_c.values
    neg = (SpaceTimeField(grid, field.times, -data) if isinstance(field, SpaceTimeField)
           else ScalarField(grid, -data))
    dual = sup_convolution(neg, eps)
    dual_data = dual.data if isinstance(dual, SpaceTimeField) else dual.values
    sup_norm = float(np.max(np.abs(data)))
    osc = float(data.max() - data.min())
    modulus = semiconvexity_modulus(sup_c)
    lip = lipschitz_seminorm(sup_c)
    slack = h_tolerance * h
    bounds = {
        "standard": 2 * math.sqrt(sup_norm / eps),
        "oscillation": 2 * math.sqrt(osc / eps),
        "stated": math.sqrt(sup_norm) / eps,
    }
    return {
        "epsilon": eps,
        "h": h,
        "sup_above": bool(np.all(sup_data >= data)),
        "inf_below": bool(np.all(inf_data <= data)),
        "duality_exact": bool(np.array_equal(inf_data, -dual_data)),
        "max_preserved": bool(sup_data.max() == data.max()),
        "sup_norm_nonincreasing": bool(np.max(np.abs(sup_data)) <= sup_norm),
        "semiconvexity_modulus": modulus,
        "semiconvexity_bound": 2 / eps,
        "semiconvexity_ok": modulus <= 2 / eps + slack,
        "lipschitz_seminorm": lip,
        "lipschitz_bounds": bounds,
        "lipschitz_ok": {k: lip <= v + slack for k, v in bounds.items()},
    }
