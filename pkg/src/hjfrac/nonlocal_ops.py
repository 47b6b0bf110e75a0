"""Order-one nonlocal operators on the periodic lattice.

All quadrature-based operators share one representation,

    Op u(x) = 1/2 * sum_{y != 0} W(y) a(y) (u(x+y) + u(x-y) - 2u(x)),

where ``W(y)`` is a midpoint weight for the kernel ``|y|^-p`` (``p = n + 2s``
for the fractional Laplacian, ``p = n + 1`` for ``L_a`` and the extremal
operators). Far from the origin ``W = h^n K(y)`` with ``K`` the kernel summed
over periodic images. Inside a small core the weights are replaced by a
quadratic local model whose total second moment carries the analytically
integrated singular part (a zeta-function correction of the midpoint rule),
so the discretization error of the singular core is removed to leading order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import integrate, special

from . import kernels
from .grid import Grid, ScalarField

# periodic images summed explicitly in 2D, per axis in each direction
_IMAGES_2D = 8
# lattice half-widths for the 2D core moment extrapolation
_CORE_J = (128, 256)


class TailBoundExceeded(RuntimeError):
    """The truncated-tail error bound exceeds the caller's tolerance."""

    def __init__(self, bound: float, tolerance: float):
        super().__init__(f"tail error bound {bound:.3e} exceeds tolerance {tolerance:.3e}")
        self.bound = bound
        self.tolerance = tolerance


# --- parameter types ---------------------------------------------------


@dataclass(frozen=True)
class FractionalOrder:
    s: float

    def __post_init__(self):
        if not (0.0 < self.s < 1.0):
            raise ValueError(f"fractional order s must lie in (0, 1), got {self.s}")

    @property
    def critical(self) -> bool:
        return self.s == 0.5


def as_order(s) -> float:
    return s.s if isinstance(s, FractionalOrder) else FractionalOrder(float(s)).s


@dataclass(frozen=True)
class EllipticityBounds:
    lam: float
    Lam: float

    def __post_init__(self):
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise ValueError(f"lambda must be positive, got {self.lam}")
        if not (self.Lam >= self.lam and math.isfinite(self.Lam)):
            raise ValueError(f"Lambda ({self.Lam}) must be >= lambda ({self.lam})")


@dataclass(frozen=True)
class QuadratureScheme:
    """Quadrature parameters.

    Parameters
    ----------
    inner_cells : int
        Displacements with ``|y|_inf <= inner_cells * h`` form the singular core,
        so the core radius (``inner_cutoff``) is ``(inner_cells + 1/2) h >= h``.
        Only ``inner_cells = 1`` is available in 2D.
    tail_mode : {'periodic', 'truncate'}
        ``'periodic'`` sums the kernel over all periodic images. ``'truncate'``
        drops every displacement with ``|y| > tail_radius`` and reports the
        resulting error bound.
    tail_radius : float, optional
        Truncation radius; defaults to half the period.
    tail_tolerance : float, optional
        If given, a truncation bound above it raises :class:`TailBoundExceeded`.
    """

    inner_cells: int = 1
    tail_mode: str = "periodic"
    tail_radius: float | None = None
    tail_tolerance: float | None = None

    def __post_init__(self):
        if int(self.inner_cells) != self.inner_cells or self.inner_cells < 1:
            raise ValueError(f"inner_cells must be a positive integer, got {self.inner_cells}")
        if self.tail_mode not in ("periodic", "truncate"):
            raise ValueError(f"tail_mode must be 'periodic' or 'truncate', got {self.tail_mode!r}")
        if self.tail_radius is not None and not self.tail_radius > 0:
            raise ValueError(f"tail_radius must be positive, got {self.tail_radius}")
        if self.tail_tolerance is not None and not self.tail_tolerance > 0:
            raise ValueError(f"tail_tolerance must be positive, got {self.tail_tolerance}")

    def inner_cutoff(self, grid: Grid) -> float:
        return (self.inner_cells + 0.5) * grid.spacing

    def radius(self, grid: Grid) -> float | None:
        if self.tail_mode != "truncate":
            return None
        return grid.period / 2 if self.tail_radius is None else self.tail_radius


DEFAULT_SCHEME = QuadratureScheme()


@dataclass(frozen=True, eq=False)
class KernelSpec:
    """Symmetric kernel values ``a(y)`` on the lattice displacements of ``grid``.

    ``values`` is indexed like the grid (entry ``j`` is displacement ``j*h``
    modulo the period); the entry at zero displacement is ignored.
    """

    grid: Grid
    values: np.ndarray
    bounds: EllipticityBounds | None = None

    def __post_init__(self):
        a = np.array(self.values, dtype=np.float64).reshape(self.grid.shape)
        a.flat[0] = a.flat[1] if self.grid.dim == 1 else a[0, 1]
        if not np.all(np.isfinite(a)):
            raise ValueError("kernel values must be finite")
        mirrored = np.roll(np.flip(a, axis=tuple(range(a.ndim))), 1, axis=tuple(range(a.ndim)))
        if not np.array_equal(a, mirrored):
            raise ValueError("kernel is not symmetric: a(y) != a(-y) at some displacement")
        if self.bounds is not None:
            lo, hi = float(a.min()), float(a.max())
            if lo < self.bounds.lam or hi > self.bounds.Lam:
                raise ValueError(
                    f"kernel values in [{lo}, {hi}] violate bounds [{self.bounds.lam}, {self.bounds.Lam}]"
                )
        a.setflags(write=False)
        object.__setattr__(self, "values", a)

    @classmethod
    def constant(cls, grid: Grid, c: float, bounds: EllipticityBounds | None = None) -> "KernelSpec":
        return cls(grid, np.full(grid.shape, float(c)), bounds)

    @classmethod
    def from_function(cls, grid: Grid, a: Callable, bounds: EllipticityBounds | None = None) -> "KernelSpec":
        """Evaluate ``a`` at every displacement, given as signed coordinate arrays.

        A callable that is symmetric up to rounding is symmetrized exactly by
        averaging with its mirror image; a genuinely asymmetric one is rejected.
        """
        w = grid.wrapped_index() * grid.spacing
        comps = np.meshgrid(*([w] * grid.dim), indexing="ij")
        with np.errstate(all="ignore"):
            vals = np.broadcast_to(np.asarray(a(*comps), dtype=np.float64), grid.shape).copy()
            neg = np.broadcast_to(np.asarray(a(*[-c for c in comps]), dtype=np.float64), grid.shape)
        vals.flat[0] = vals.flat[1] if grid.dim == 1 else vals[0, 1]
        tol = 1e-12 * max(1.0, float(np.nanmax(np.abs(vals))))
        vals_ok = np.abs(vals - neg) <= tol
        vals_ok.flat[0] = True
        if not np.all(vals_ok):
            raise ValueError("kernel function is not symmetric: a(y) != a(-y)")
        mirrored = np.roll(np.flip(vals, axis=tuple(range(grid.dim))), 1, axis=tuple(range(grid.dim)))
        return cls(grid, 0.5 * (vals + mirrored), bounds)

    @classmethod
    def random(cls, grid: Grid, bounds: EllipticityBounds, rng: np.random.Generator) -> "KernelSpec":
        """Independent uniform values in ``[lambda, Lambda]`` on each ``{y, -y}`` pair."""
        raw = rng.uniform(bounds.lam, bounds.Lam, size=grid.shape)
        idx = np.arange(grid.size).reshape(grid.shape)
        mirror = np.roll(np.flip(idx, axis=tuple(range(grid.dim))), 1, axis=tuple(range(grid.dim)))
        return cls(grid, raw.reshape(-1)[np.minimum(idx, mirror)], bounds)


# --- constants and weights ----------------------------------------------


def nonlocal_constant(n: int, s: float) -> float:
    """Normalizing constant ``C_{n,s}`` of the singular-integral fractional Laplacian."""
    return 4.0**s * special.gamma(n / 2 + s) / (math.pi ** (n / 2) * abs(special.gamma(-s)))


def tail_integral(n: int, p: float, radius: float) -> float:
    """``int_{|y| > R} |y|^-p dy`` in dimension ``n`` (requires ``p > n``)."""
    if n == 1:
        return 2.0 * radius ** (1 - p) / (p - 1)
    return 2.0 * math.pi * radius ** (2 - p) / (p - 2)


def tail_bound(n: int, p: float, sup_norm: float, radius: float, prefactor: float = 1.0) -> float:
    """Error bound ``prefactor/2 * 4 ||u|| * int_{|y|>R} |y|^-p`` for a truncated tail."""
    return 0.5 * prefactor * 4.0 * sup_norm * tail_integral(n, p, radius)


def _angular_integral(expo: float) -> float:
    # int_0^{2 pi} max(|cos t|, |sin t|)^expo dt
    val, _ = integrate.quad(lambda t: math.cos(t) ** expo, 0.0, math.pi / 4, epsabs=1e-14, epsrel=1e-13)
    return 8.0 * val


def _periodic_kernel_1d(grid: Grid, p: float) -> np.ndarray:
    n, L = grid.n_points, grid.period
    d = np.arange(1, n)
    q = d / n
    K = np.zeros(n)
    K[1:] = L ** (-p) * (special.zeta(p, q) + special.zeta(p, 1.0 - q))
    return K


@lru_cache(maxsize=None)
def _core_moment_2d(p: float) -> float:
    """Lattice-unit second moment the 3x3 core must carry in 2D.

    ``lim_J [ int_{|y|_inf < J+1/2} y1^2 |y|^-p dy - sum_{2 <= |y|_inf <= J} y1^2 |y|^-p ]``,
    extrapolated from two box sizes with the known ``J^(2-p)`` error.
    """
    ang = _angular_integral(-(4.0 - p))
    vals = []
    for J in _CORE_J:
        box = 0.5 * (J + 0.5) ** (4 - p) / (4 - p) * ang
        j = np.arange(-J, J + 1, dtype=np.float64)
        a, b = np.meshgrid(j, j, indexing="ij")
        far = np.maximum(np.abs(a), np.abs(b)) >= 2
        r2 = a[far] ** 2 + b[far] ** 2
        lattice = float(np.sum(a[far] ** 2 * r2 ** (-p / 2)))
        vals.append(box - lattice)
    ratio = (_CORE_J[1] / _CORE_J[0]) ** (p - 2)
    return (vals[1] * ratio - vals[0]) / (ratio - 1)


def _periodic_kernel_2d(grid: Grid, p: float) -> np.ndarray:
    L = grid.period
    w = grid.wrapped_index() * grid.spacing
    a, b = np.meshgrid(w, w, indexing="ij")
    K = np.zeros(grid.shape)
    M = _IMAGES_2D
    for i in range(-M, M + 1):
        ai2 = (a + i * L) ** 2
        for j in range(-M, M + 1):
            r2 = ai2 + (b + j * L) ** 2
            if i == 0 and j == 0:
                r2[0, 0] = np.inf
            K += r2 ** (-p / 2)
    K += ((M + 0.5) * L) ** (2 - p) / ((p - 2) * L * L) * _angular_integral(p - 2)
    K[0, 0] = 0.0
    return K


@lru_cache(maxsize=64)
def _weights_cached(grid: Grid, p: float, scheme: QuadratureScheme) -> np.ndarray:
    h = grid.spacing
    norms = grid.displacement_norms()
    periodic = scheme.tail_mode == "periodic"
    with np.errstate(divide="ignore"):
        free = np.where(norms > 0, norms ** (-p), 0.0)
    if periodic:
        K = _periodic_kernel_1d(grid, p) if grid.dim == 1 else _periodic_kernel_2d(grid, p)
    else:
        K = free
    W = grid.cell_volume * K
    k = scheme.inner_cells
    widx = np.abs(grid.wrapped_index())
    if grid.dim == 1:
        qexp = 2.0 - p  # exponent of y^2 |y|^-p
        kappa = h ** (qexp + 1) * (np.sum(np.arange(1, k + 1, dtype=np.float64) ** qexp) - special.zeta(-qexp))
        s4 = np.sum((np.arange(1, k + 1) * h) ** 4)
        core = (widx >= 1) & (widx <= k)
        W[core] = kappa * (widx[core] * h) ** 2 / s4 + h * (K[core] - free[core])
    else:
        if k != 1:
            raise ValueError("2D quadrature supports inner_cells = 1 only")
        kappa = h ** (4 - p) * _core_moment_2d(p)
        ia, ib = np.meshgrid(widx, widx, indexing="ij")
        cheb = np.maximum(ia, ib)
        core = cheb == 1
        diag = core & (ia == 1) & (ib == 1)
        axial = core & ~diag
        W[axial] = kappa / (4 * h * h)
        W[diag] = kappa / (8 * h * h)
        W[core] += h * h * (K[core] - free[core])
    if not periodic:
        W[norms > scheme.radius(grid) * (1 + 1e-12)] = 0.0
    W.flat[0] = 0.0
    W.setflags(write=False)
    return W


def quadrature_weights(grid: Grid, p: float, scheme: QuadratureScheme = DEFAULT_SCHEME) -> np.ndarray:
    """Weights ``W(y)`` over all lattice displacements for the kernel ``|y|^-p``.

    ``p`` must satisfy ``n < p < n + 2``. The result is read-only and cached.
    """
    if not (grid.dim < p < grid.dim + 2):
        raise ValueError(f"kernel exponent {p} outside ({grid.dim}, {grid.dim + 2})")
    if scheme.tail_mode == "truncate" and scheme.radius(grid) > grid.period / 2 * (1 + 1e-12):
        raise ValueError("truncation radius must not exceed half the period")
    return _weights_cached(grid, float(p), scheme)


@lru_cache(maxsize=64)
def _half_set_cached(grid: Grid, p: float, scheme: QuadratureScheme):
    W = quadrature_weights(grid, p, scheme)
    offs, _, mult = grid.half_displacements()
    idx = tuple(np.mod(offs, grid.n_points).T) if grid.dim == 2 else np.mod(offs, grid.n_points)
    w = W[idx] * mult
    keep = w != 0
    offs, w = offs[keep], w[keep]
    offs.setflags(write=False)
    w.setflags(write=False)
    return offs, w


def half_set_weights(grid: Grid, p: float, scheme: QuadratureScheme = DEFAULT_SCHEME):
    """Offsets (one per ``{y, -y}`` pair) and weights so that ``Op u = sum_k w_k a_k delta u(., o_k)``."""
    quadrature_weights(grid, p, scheme)
    return _half_set_cached(grid, float(p), scheme)


def _check_tail(field: ScalarField, p: float, scheme: QuadratureScheme, prefactor: float) -> float | None:
    if scheme.tail_mode != "truncate":
        return None
    bound = tail_bound(field.grid.dim, p, field.sup_norm(), scheme.radius(field.grid), prefactor)
    if scheme.tail_tolerance is not None and bound > scheme.tail_tolerance:
        raise TailBoundExceeded(bound, scheme.tail_tolerance)
    return bound


def truncation_error_bound(field: ScalarField, s: float, scheme: QuadratureScheme) -> float:
    """Bound on the fractional-Laplacian error caused by a truncated tail (0 when periodic)."""
    s = as_order(s)
    n = field.grid.dim
    b = _check_tail(field, n + 2 * s, scheme, nonlocal_constant(n, s))
    return 0.0 if b is None else b


def _fft_apply(u: np.ndarray, Wa: np.ndarray) -> np.ndarray:
    # subtracting one sample keeps constants exactly in the kernel
    u = u - u.flat[0]
    axes = tuple(range(u.ndim))
    conv = np.fft.irfftn(np.fft.rfftn(u, axes=axes) * np.fft.rfftn(Wa, axes=axes), s=u.shape, axes=axes)
    return conv - Wa.sum() * u


# --- operators ----------------------------------------------------------


def second_difference(field: ScalarField, x_index, y_displacement) -> float:
    """``u(x+y) + u(x-y) - 2u(x)`` with lattice indices and periodic wraparound."""
    grid = field.grid
    xi = np.atleast_1d(np.asarray(x_index, dtype=np.int64))
    yi = np.atleast_1d(np.asarray(y_displacement, dtype=np.int64))
    if xi.size != grid.dim or yi.size != grid.dim:
        raise ValueError(f"indices must have {grid.dim} components")
    if np.any(xi < 0) or np.any(xi >= grid.n_points):
        raise IndexError(f"x_index {tuple(xi)} outside the grid")
    n = grid.n_points
    u = field.values
    plus = u[tuple(np.mod(xi + yi, n))]
    minus = u[tuple(np.mod(xi - yi, n))]
    return float(plus + minus - 2.0 * u[tuple(xi)])


def frequencies(grid: Grid) -> np.ndarray:
    """``|xi|`` on the FFT layout, with ``xi = 2 pi k / period``."""
    k = np.fft.fftfreq(grid.n_points, d=1.0 / grid.n_points) * (2 * np.pi / grid.period)
    comps = np.meshgrid(*([k] * grid.dim), indexing="ij")
    return np.sqrt(sum(c * c for c in comps))


def frac_laplacian_spectral(field: ScalarField, s) -> ScalarField:
    """Fourier multiplier ``|xi|^(2s)``; the zero mode maps to zero.

    The imaginary part of the inverse transform is rounding noise and is
    dropped if below ``1e-12 * ||u||_inf * max(1, max |xi|^(2s))``; otherwise a
    ``RuntimeError`` is raised.
    """
    s = as_order(s)
    u = field.values - field.values.flat[0]
    mult = frequencies(field.grid) ** (2 * s)
    out = np.fft.ifftn(np.fft.fftn(u) * mult)
    resid = float(np.max(np.abs(out.imag)))
    allowed = 1e-12 * field.sup_norm() * max(1.0, float(mult.max()))
    if resid > allowed:
        raise RuntimeError(f"imaginary residue {resid:.3e} exceeds {allowed:.3e}")
    return ScalarField(field.grid, out.real)


def frac_laplacian_quadrature(field: ScalarField, s, scheme: QuadratureScheme = DEFAULT_SCHEME) -> ScalarField:
    """Principal-value quadrature ``-C_{n,s}/2 * sum W(y) delta u(x, y)``."""
    s = as_order(s)
    n = field.grid.dim
    p = n + 2 * s
    C = nonlocal_constant(n, s)
    _check_tail(field, p, scheme, C)
    W = quadrature_weights(field.grid, p, scheme)
    return ScalarField(field.grid, -C * _fft_apply(field.values, W))


def linear_operator(field: ScalarField, kernel: KernelSpec, scheme: QuadratureScheme = DEFAULT_SCHEME,
                    method: str = "fft", at=None):
    """``L_a u = 1/2 * sum W(y) a(y) delta u(x, y)`` with the order-one kernel ``|y|^-(n+1)``.

    Parameters
    ----------
    method : {'fft', 'direct'}
        ``'fft'`` evaluates the circulant sum by FFT. ``'direct'`` accumulates
        the half-set terms ``w_k * (a_k * delta_k)`` sequentially, in the same
        order and grouping as :func:`extremal_plus`, so the two are comparable
        without rounding noise and the result commutes exactly with shifts.
    at : index, optional
        Evaluate only at this lattice index (implies ``'direct'``); returns a float.
    """
    grid = field.grid
    if kernel.grid != grid:
        raise ValueError("kernel and field live on different grids")
    p = grid.dim + 1.0
    amax = float(kernel.values.max())
    _check_tail(field, p, scheme, amax)
    if at is None and method == "fft":
        Wa = quadrature_weights(grid, p, scheme) * kernel.values
        return ScalarField(grid, _fft_apply(field.values, Wa))
    if method not in ("fft", "direct"):
        raise ValueError(f"unknown method {method!r}")
    offs, w = half_set_weights(grid, p, scheme)
    n = grid.n_points
    idx = tuple(np.mod(offs, n).T) if grid.dim == 2 else np.mod(offs, n)
    a = kernel.values[idx]
    u = field.values
    if at is not None:
        x = np.atleast_1d(np.asarray(at, dtype=np.int64))
        if grid.dim == 1:
            d = u[(x[0] + offs) % n] + u[(x[0] - offs) % n] - 2.0 * u[x[0]]
        else:
            d = (u[(x[0] + offs[:, 0]) % n, (x[1] + offs[:, 1]) % n]
                 + u[(x[0] - offs[:, 0]) % n, (x[1] - offs[:, 1]) % n] - 2.0 * u[x[0], x[1]])
        acc = 0.0
        for wk, ak, dk in zip(w.tolist(), a.tolist(), d.tolist()):
            acc = acc + wk * (ak * dk)
        return acc
    axes = tuple(range(grid.dim))
    acc = np.zeros_like(u)
    for o, wk, ak in zip(offs, w, a):
        o = tuple(np.atleast_1d(o))
        d = np.roll(u, [-c for c in o], axis=axes) + np.roll(u, o, axis=axes) - 2.0 * u
        acc = acc + wk * (ak * d)
    return ScalarField(grid, acc)


def _extremal(field: ScalarField, wpos: float, wneg: float, scheme: QuadratureScheme, impl=None) -> ScalarField:
    grid = field.grid
    p = grid.dim + 1.0
    _check_tail(field, p, scheme, max(wpos, wneg))
    offs, w = half_set_weights(grid, p, scheme)
    return ScalarField(grid, kernels.pucci(field.values, offs, w, wpos, wneg, impl=impl))


def extremal_plus(field: ScalarField, bounds: EllipticityBounds, scheme: QuadratureScheme = DEFAULT_SCHEME,
                  impl=None) -> ScalarField:
    """``M+ u = 1/2 * sum W(y) (Lambda delta+ - lambda delta-)``."""
    return _extremal(field, bounds.Lam, bounds.lam, scheme, impl)


def extremal_minus(field: ScalarField, bounds: EllipticityBounds, scheme: QuadratureScheme = DEFAULT_SCHEME,
                   impl=None) -> ScalarField:
    """``M- u = 1/2 * sum W(y) (lambda delta+ - Lambda delta-)``."""
    return _extremal(field, bounds.lam, bounds.Lam, scheme, impl)


def adapted_kernel(field: ScalarField, x_index, bounds: EllipticityBounds) -> KernelSpec:
    """Kernel ``Lambda * 1{delta u(x, y) > 0} + lambda * 1{delta u(x, y) <= 0}`` at a fixed ``x``.

    Since ``delta u(x, y) = delta u(x, -y)`` the result is symmetric, and
    ``linear_operator(field, kernel, at=x_index)`` reproduces ``M+ u(x)``.
    """
    grid = field.grid
    x = np.atleast_1d(np.asarray(x_index, dtype=np.int64))
    u = field.values
    axes = tuple(range(grid.dim))
    # shifted[y] = u(x + y), for every displacement y at once
    shifted = np.roll(u, [-int(c) for c in x], axis=axes)
    mirrored = np.roll(np.flip(shifted, axis=axes), 1, axis=axes)
    delta = shifted + mirrored - 2.0 * u[tuple(x)]
    vals = np.where(delta > 0, bounds.Lam, bounds.lam)
    return KernelSpec(grid, vals, bounds)


# --- gradients ------------------------------------------------------------


def one_sided_gradients(field: ScalarField) -> tuple[np.ndarray, np.ndarray]:
    """Backward and forward differences ``(p-, p+)``, each of shape ``(dim, *grid.shape)``."""
    u = field.values
    h = field.grid.spacing
    pm = np.stack([(u - np.roll(u, 1, axis=ax)) / h for ax in range(u.ndim)])
    pp = np.stack([(np.roll(u, -1, axis=ax) - u) / h for ax in range(u.ndim)])
    return pm, pp


def gradient(field: ScalarField) -> np.ndarray:
    """Centered differences, shape ``(dim, *grid.shape)``."""
    u = field.values
    h = field.grid.spacing
    return np.stack([(np.roll(u, -1, axis=ax) - np.roll(u, 1, axis=ax)) / (2 * h) for ax in range(u.ndim)])


def gradient_magnitude(field: ScalarField) -> ScalarField:
    g = gradient(field)
    return ScalarField(field.grid, np.sqrt(np.sum(g * g, axis=0)))
