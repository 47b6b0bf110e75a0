"""Time integration: HJ, finite Isaacs families, advection-diffusion, Burgers.

Every solver is an explicit monotone step for the first-order part followed,
where applicable, by the exact Fourier integrating factor
``exp(-dt |xi|^(2s))`` for the diffusion. For ``s <= 1/2`` the discrete
periodic kernel of that factor is positive with unit mass, so the composite
step is monotone and the maximum and comparison principles hold on the
lattice up to rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .grid import Grid, ScalarField, SpaceTimeField
from .nonlocal_ops import (
    DEFAULT_SCHEME,
    EllipticityBounds,
    QuadratureScheme,
    as_order,
    frequencies,
    nonlocal_constant,
    one_sided_gradients,
    quadrature_weights,
    gradient,
)


class GradientRangeError(RuntimeError):
    """The discrete gradient left the range where the Hamiltonian is trusted."""

    def __init__(self, time: float, observed: float, p_max: float):
        super().__init__(f"|grad u| = {observed:.6g} exceeds P_max = {p_max:.6g} at t = {time:.6g}")
        self.time = time
        self.observed = observed
        self.p_max = p_max


# --- Hamiltonians -------------------------------------------------------

_H_KINDS = ("zero", "constant", "affine", "quadratic", "abs")


@dataclass(frozen=True)
class HamiltonianSpec:
    """Closed-form Hamiltonian ``H(p)``.

    kinds
        ``zero``: 0. ``constant``: ``c``. ``affine``: ``b . p + c``.
        ``quadratic``: ``coef |p|^2 / 2``. ``abs``: ``coef |p|``.
    ``p_max`` bounds the gradient range on which ``H`` is trusted; runs that
    leave it abort.
    """

    kind: str
    coef: float = 1.0
    c: float = 0.0
    b: tuple = ()
    p_max: float = math.inf

    def __post_init__(self):
        if self.kind not in _H_KINDS:
            raise ValueError(f"unknown Hamiltonian kind {self.kind!r}; expected one of {_H_KINDS}")
        if not self.p_max > 0:
            raise ValueError(f"p_max must be positive, got {self.p_max}")
        for name in ("coef", "c"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        object.__setattr__(self, "b", tuple(float(x) for x in np.atleast_1d(self.b)) if len(np.atleast_1d(self.b)) else ())
        if self.kind == "affine" and not self.b:
            raise ValueError("affine Hamiltonian needs a drift vector b")

    @classmethod
    def zero(cls):
        return cls("zero")

    @classmethod
    def constant(cls, c: float):
        return cls("constant", c=c)

    @classmethod
    def affine(cls, b, c: float = 0.0):
        return cls("affine", b=tuple(np.atleast_1d(b)), c=c)

    @classmethod
    def quadratic(cls, coef: float = 1.0, p_max: float = math.inf):
        return cls("quadratic", coef=coef, p_max=p_max)

    @classmethod
    def absolute(cls, coef: float = 1.0):
        return cls("abs", coef=coef)

    def _bvec(self, P):
        b = np.asarray(self.b, dtype=np.float64)
        if b.size != P.shape[0]:
            raise ValueError(f"drift b has {b.size} components, gradient has {P.shape[0]}")
        return b.reshape((-1,) + (1,) * (P.ndim - 1))

    def __call__(self, P: np.ndarray) -> np.ndarray:
        """Evaluate at gradients ``P`` of shape ``(dim, ...)``."""
        P = np.asarray(P, dtype=np.float64)
        if self.kind == "zero":
            return np.zeros(P.shape[1:])
        if self.kind == "constant":
            return np.full(P.shape[1:], self.c)
        if self.kind == "affine":
            return np.sum(self._bvec(P) * P, axis=0) + self.c
        sq = np.sum(P * P, axis=0)
        if self.kind == "quadratic":
            return 0.5 * self.coef * sq
        return self.coef * np.sqrt(sq)

    def gradient(self, P: np.ndarray) -> np.ndarray:
        """``DH(p)``, shape ``(dim, ...)``; for ``abs`` the value at ``p = 0`` is 0."""
        P = np.asarray(P, dtype=np.float64)
        if self.kind in ("zero", "constant"):
            return np.zeros_like(P)
        if self.kind == "affine":
            return np.broadcast_to(self._bvec(P), P.shape).copy()
        if self.kind == "quadratic":
            return self.coef * P
        norm = np.sqrt(np.sum(P * P, axis=0))
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(norm > 0, self.coef * P / norm, 0.0)

    def lipschitz(self, p_range: float) -> float:
        """Lipschitz constant of ``H`` on ``{|p| <= p_range}``."""
        if self.kind in ("zero", "constant"):
            return 0.0
        if self.kind == "affine":
            return float(np.linalg.norm(self.b))
        if self.kind == "quadratic":
            return abs(self.coef) * p_range
        return abs(self.coef)


@dataclass(frozen=True, eq=False)
class IsaacsFamily:
    """Finite family for ``sup_i inf_j (c_ij + b_ij . grad u - L_{a_ij} u)``.

    ``c`` has shape ``(I, J)``, ``b`` shape ``(I, J, dim)``; ``kernels`` is
    ``None`` (every ``a_ij = C_{n,1/2}``, i.e. ``-L_a`` is the half Laplacian)
    or an ``I x J`` nested sequence of :class:`KernelSpec`.
    """

    c: np.ndarray
    b: np.ndarray
    kernels: Sequence | None = None
    bounds: EllipticityBounds | None = None

    def __post_init__(self):
        c = np.array(self.c, dtype=np.float64)
        if c.ndim != 2 or c.size == 0:
            raise ValueError("c must be a non-empty (I, J) array")
        b = np.array(self.b, dtype=np.float64)
        if b.ndim == 2:
            b = b[..., None]
        if b.shape[:2] != c.shape:
            raise ValueError(f"b has shape {b.shape}, expected {c.shape + ('dim',)}")
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(b))):
            raise ValueError("control family must be finite")
        if self.kernels is not None:
            ks = [list(row) for row in self.kernels]
            if len(ks) != c.shape[0] or any(len(r) != c.shape[1] for r in ks):
                raise ValueError("kernels must be an I x J nested sequence")
            if self.bounds is not None:
                for row in ks:
                    for k in row:
                        if k.values.min() < self.bounds.lam or k.values.max() > self.bounds.Lam:
                            raise ValueError("a kernel violates the ellipticity bounds")
            object.__setattr__(self, "kernels", ks)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "b", b)

    @property
    def drift_bound(self) -> float:
        return float(np.max(np.linalg.norm(self.b, axis=-1)))

    def shifted(self, kappa: float) -> "IsaacsFamily":
        return IsaacsFamily(self.c + kappa, self.b, self.kernels, self.bounds)


@dataclass(frozen=True, eq=False)
class DriftField:
    """Vector field ``w`` with ``|w(x)| <= A``, optionally piecewise constant in time.

    ``values`` has shape ``(dim, *grid.shape)`` or, with ``times`` given,
    ``(len(times), dim, *grid.shape)``; frame ``k`` is active on
    ``[times[k], times[k+1])``.
    """

    grid: Grid
    values: np.ndarray
    bound: float
    times: np.ndarray | None = None

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        dim = self.grid.dim
        if self.times is None:
            v = v.reshape((dim,) + self.grid.shape)
        else:
            t = np.array(self.times, dtype=np.float64).reshape(-1)
            if np.any(np.diff(t) <= 0):
                raise ValueError("drift times must be strictly increasing")
            v = v.reshape((t.size, dim) + self.grid.shape)
            t.setflags(write=False)
            object.__setattr__(self, "times", t)
        if not np.all(np.isfinite(v)):
            raise ValueError("drift must be finite")
        if not (self.bound >= 0 and math.isfinite(self.bound)):
            raise ValueError(f"drift bound must be finite and >= 0, got {self.bound}")
        norm = float(np.max(np.sqrt(np.sum(v * v, axis=-dim - 1)))) if v.size else 0.0
        if norm > self.bound * (1 + 1e-12):
            raise ValueError(f"|w| reaches {norm:.6g}, above the declared bound {self.bound:.6g}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "bound", float(self.bound))

    @classmethod
    def constant(cls, grid: Grid, w) -> "DriftField":
        w = np.atleast_1d(np.asarray(w, dtype=np.float64))
        vals = np.broadcast_to(w.reshape((-1,) + (1,) * grid.dim), (grid.dim,) + grid.shape)
        return cls(grid, vals.copy(), float(np.linalg.norm(w)))

    @classmethod
    def random(cls, grid: Grid, bound: float, rng: np.random.Generator, modes: int = 4,
               times=None) -> "DriftField":
        """Random trigonometric drift scaled so that ``max |w|`` lies in ``[bound/2, bound]``.

        Components are drawn independently, so the field is generically not
        divergence free.
        """
        n_frames = 1 if times is None else len(times)
        coords = grid.coordinates()
        L = grid.period
        out = np.empty((n_frames, grid.dim) + grid.shape)
        for f in range(n_frames):
            for comp in range(grid.dim):
                acc = np.zeros(grid.shape) + rng.normal()
                for _ in range(modes):
                    kvec = rng.integers(-3, 4, size=grid.dim)
                    phase = rng.uniform(0, 2 * np.pi)
                    arg = sum(2 * np.pi * k * x / L for k, x in zip(kvec, coords))
                    acc = acc + rng.normal() * np.cos(arg + phase)
                out[f, comp] = acc
            norm = np.max(np.sqrt(np.sum(out[f] ** 2, axis=0)))
            if norm > 0:
                out[f] *= bound * rng.uniform(0.5, 1.0) / norm
        if times is None:
            return cls(grid, out[0], bound)
        return cls(grid, out, bound, times)

    def at(self, t: float) -> np.ndarray:
        if self.times is None:
            return self.values
        k = int(np.searchsorted(self.times, t, side="right")) - 1
        return self.values[max(k, 0)]

    def scaled(self, factor: float) -> "DriftField":
        return DriftField(self.grid, self.values * factor, self.bound * abs(factor), self.times)


@dataclass(frozen=True)
class SolverConfig:
    """Time-stepping parameters.

    Parameters
    ----------
    t_end : float
        Final time (0 returns the initial frame).
    cfl : float
        Fraction of the monotone step limit, in ``(0, 1]``.
    s : float
        Diffusion order.
    output_stride : int
        Store every ``output_stride``-th step (the final time is always stored).
    output_times : sequence of float, optional
        Store exactly these times instead; steps are shortened to land on them.
    output_interval : float, optional
        Shorthand for ``output_times = (dt, 2 dt, ..., t_end)``.
    sigma : float, optional
        Fixed artificial viscosity for the HJ scheme. It must dominate the
        Lipschitz bound of ``H`` on the observed gradient range. By default the
        running bound is used.
    dt_max : float, optional
        Upper bound on the step; also the step used when the advective speed is
        zero. Defaults to the grid spacing.
    """

    t_end: float
    cfl: float = 0.5
    s: float = 0.5
    output_stride: int = 1
    output_times: tuple | None = None
    output_interval: float | None = None
    sigma: float | None = None
    dt_max: float | None = None

    def __post_init__(self):
        if not (0 < self.cfl <= 1):
            raise ValueError(f"cfl must lie in (0, 1], got {self.cfl}")
        if not (self.t_end >= 0 and math.isfinite(self.t_end)):
            raise ValueError(f"t_end must be finite and >= 0, got {self.t_end}")
        as_order(self.s)
        if int(self.output_stride) != self.output_stride or self.output_stride < 1:
            raise ValueError(f"output_stride must be a positive integer, got {self.output_stride}")
        if self.sigma is not None and not (self.sigma >= 0 and math.isfinite(self.sigma)):
            raise ValueError(f"sigma must be finite and >= 0, got {self.sigma}")
        if self.dt_max is not None and not self.dt_max > 0:
            raise ValueError(f"dt_max must be positive, got {self.dt_max}")
        if self.output_interval is not None:
            if self.output_times is not None:
                raise ValueError("give output_times or output_interval, not both")
            if not self.output_interval > 0:
                raise ValueError(f"output_interval must be positive, got {self.output_interval}")
            n = int(math.floor(self.t_end / self.output_interval + 1e-9))
            ot = [k * self.output_interval for k in range(1, n + 1)]
            if not ot or ot[-1] < self.t_end * (1 - 1e-12):
                ot.append(self.t_end)
            object.__setattr__(self, "output_times", tuple(t for t in ot if t > 0))
        if self.output_times is not None:
            ot = tuple(float(t) for t in self.output_times)
            if any(b <= a for a, b in zip(ot, ot[1:])) or (ot and (ot[0] <= 0 or ot[-1] > self.t_end)):
                raise ValueError("output_times must be strictly increasing within (0, t_end]")
            object.__setattr__(self, "output_times", ot)


# --- building blocks ----------------------------------------------------


@lru_cache(maxsize=32)
def _symbol(grid: Grid, s: float) -> np.ndarray:
    # |xi|^(2s) on the rfft layout
    full = frequencies(grid) ** (2 * s)
    out = full[..., : grid.n_points // 2 + 1].copy()
    out.setflags(write=False)
    return out


def diffuse(values: np.ndarray, grid: Grid, s: float, dt: float) -> np.ndarray:
    """Exact fractional heat flow over time ``dt``: multiply by ``exp(-dt |xi|^(2s))``."""
    if dt == 0:
        return values.copy()
    base = values.flat[0]
    v = values - base
    axes = tuple(range(grid.dim))
    out = np.fft.irfftn(np.fft.rfftn(v, axes=axes) * np.exp(-dt * _symbol(grid, s)), s=grid.shape, axes=axes)
    return out + base


def _upwind(w: np.ndarray, pm: np.ndarray, pp: np.ndarray) -> np.ndarray:
    return np.sum(np.maximum(w, 0.0) * pm + np.minimum(w, 0.0) * pp, axis=0)


def _grad_range(pm: np.ndarray, pp: np.ndarray) -> float:
    big = np.maximum(np.abs(pm), np.abs(pp))
    return float(np.max(np.sqrt(np.sum(big * big, axis=0))))


def numerical_hamiltonian(H: HamiltonianSpec, pm: np.ndarray, pp: np.ndarray, sigma: float) -> np.ndarray:
    """Lax-Friedrichs flux ``H((p- + p+)/2) - sigma/2 * sum(p+ - p-)``."""
    return H(0.5 * (pm + pp)) - 0.5 * sigma * np.sum(pp - pm, axis=0)


def _dt_limit(grid: Grid, speed: float, cfl: float, dt_max: float | None) -> float:
    cap = grid.spacing if dt_max is None else dt_max
    if speed <= 0:
        return cap
    return min(cap, cfl * grid.spacing / speed)


def _hj_rate(u: np.ndarray, grid: Grid, H: HamiltonianSpec, cfg: SolverConfig, t: float):
    f = ScalarField(grid, u)
    pm, pp = one_sided_gradients(f)
    prange = _grad_range(pm, pp)
    if prange > H.p_max:
        raise GradientRangeError(t, prange, H.p_max)
    A = H.lipschitz(prange)
    if cfg.sigma is None:
        sigma = A
    else:
        if cfg.sigma < A * (1 - 1e-12):
            raise ValueError(f"fixed sigma {cfg.sigma} is below the Lipschitz bound {A} at t = {t}")
        sigma = cfg.sigma
    rate = numerical_hamiltonian(H, pm, pp, sigma)
    return rate, _dt_limit(grid, grid.dim * sigma, cfg.cfl, cfg.dt_max)


def _isaacs_rate(u: np.ndarray, grid: Grid, fam: IsaacsFamily, cfg: SolverConfig, scheme: QuadratureScheme):
    f = ScalarField(grid, u)
    pm, pp = one_sided_gradients(f)
    W = quadrature_weights(grid, grid.dim + 1.0, scheme)
    I, J = fam.c.shape
    base = u - u.flat[0]
    axes = tuple(range(grid.dim))
    uhat = np.fft.rfftn(base, axes=axes)
    cache = {}

    def nonlocal_term(i, j):
        # -L_a u for control (i, j)
        if fam.kernels is None:
            key = None
            Wa = W * nonlocal_constant(grid.dim, 0.5)
        else:
            key = (i, j)
            Wa = W * fam.kernels[i][j].values
        if key not in cache:
            conv = np.fft.irfftn(uhat * np.fft.rfftn(Wa, axes=axes), s=grid.shape, axes=axes)
            cache[key] = (-(conv - Wa.sum() * base), float(Wa.sum()))
        return cache[key]

    sup = None
    stiff = 0.0
    for i in range(I):
        inf = None
        for j in range(J):
            bvec = fam.b[i, j].reshape((-1,) + (1,) * grid.dim)
            nl, mass = nonlocal_term(i, j)
            stiff = max(stiff, mass)
            val = fam.c[i, j] + _upwind(np.broadcast_to(bvec, pm.shape), pm, pp) + nl
            inf = val if inf is None else np.minimum(inf, val)
        sup = inf if sup is None else np.maximum(sup, inf)
    speed = float(np.max(np.sum(np.abs(fam.b), axis=-1)))
    rate_limit = stiff + speed / grid.spacing
    cap = grid.spacing if cfg.dt_max is None else cfg.dt_max
    dt = cap if rate_limit == 0 else min(cap, cfg.cfl / rate_limit)
    return sup, dt


def _ad_rate(u: np.ndarray, grid: Grid, drift: DriftField, cfg: SolverConfig, t: float):
    pm, pp = one_sided_gradients(ScalarField(grid, u))
    w = drift.at(t)
    speed = float(np.max(np.sum(np.abs(w), axis=0)))
    return _upwind(w, pm, pp), _dt_limit(grid, speed, cfg.cfl, cfg.dt_max)


def godunov_flux(vl: np.ndarray, vr: np.ndarray) -> np.ndarray:
    """Godunov flux of ``f(v) = v^2 / 2``."""
    return np.maximum(0.5 * np.maximum(vl, 0.0) ** 2, 0.5 * np.minimum(vr, 0.0) ** 2)


def _burgers_rate(v: np.ndarray, grid: Grid, cfg: SolverConfig):
    if grid.dim != 1:
        raise ValueError("Burgers solver is one-dimensional")
    flux = godunov_flux(v, np.roll(v, -1))  # at i + 1/2
    rate = (flux - np.roll(flux, 1)) / grid.spacing
    return rate, _dt_limit(grid, float(np.max(np.abs(v))), cfg.cfl, cfg.dt_max)


# --- single steps -------------------------------------------------------


def step_hj(state: ScalarField, hamiltonian: HamiltonianSpec, config: SolverConfig, dt: float | None = None,
            t: float = 0.0) -> ScalarField:
    """One step of ``u_t + H(grad u) + (-Lap)^s u = 0``; ``dt`` defaults to the CFL limit."""
    rate, lim = _hj_rate(state.values, state.grid, hamiltonian, config, t)
    dt = lim if dt is None else dt
    return ScalarField(state.grid, diffuse(state.values - dt * rate, state.grid, config.s, dt))


def step_isaacs(state: ScalarField, family: IsaacsFamily, bounds: EllipticityBounds | None,
                config: SolverConfig, dt: float | None = None,
                scheme: QuadratureScheme = DEFAULT_SCHEME) -> ScalarField:
    """One explicit step of ``u_t + sup_i inf_j (c_ij + b_ij . grad u - L_{a_ij} u) = 0``."""
    if bounds is not None and family.bounds is None and family.kernels is not None:
        family = IsaacsFamily(family.c, family.b, family.kernels, bounds)
    rate, lim = _isaacs_rate(state.values, state.grid, family, config, scheme)
    dt = lim if dt is None else dt
    return ScalarField(state.grid, state.values - dt * rate)


def step_advection_diffusion(state: ScalarField, drift: DriftField, config: SolverConfig,
                             dt: float | None = None, t: float = 0.0) -> ScalarField:
    """One step of ``v_t + w . grad v + (-Lap)^s v = 0`` (upwind transport, exact diffusion)."""
    rate, lim = _ad_rate(state.values, state.grid, drift, config, t)
    dt = lim if dt is None else dt
    return ScalarField(state.grid, diffuse(state.values - dt * rate, state.grid, config.s, dt))


def step_burgers(state: ScalarField, s, config: SolverConfig, dt: float | None = None) -> ScalarField:
    """One step of ``v_t + (v^2/2)_x + (-Lap)^s v = 0``; the step never exceeds the CFL limit."""
    s = as_order(s)
    rate, lim = _burgers_rate(state.values, state.grid, config)
    dt = lim if dt is None else min(dt, lim)
    return ScalarField(state.grid, diffuse(state.values - dt * rate, state.grid, s, dt))


# --- drivers --------------------------------------------------------------


def _integrate(u0: ScalarField, config: SolverConfig, rate_fn: Callable, s: float | None,
               callback: Callable | None) -> SpaceTimeField:
    grid = u0.grid
    u = np.array(u0.values)
    t = 0.0
    times, frames = [0.0], [u.copy()]
    use_stride = config.output_times is None
    targets = [] if use_stride else list(config.output_times)
    if not targets or targets[-1] < config.t_end:
        targets.append(config.t_end)
    step = 0
    for target in targets:
        while t < target:
            rate, lim = rate_fn(u, t)
            if t + lim >= target - 1e-12 * max(1.0, target):
                dt, t_next = target - t, target
            else:
                dt, t_next = lim, t + lim
            u = u - dt * rate
            if s is not None:
                u = diffuse(u, grid, s, dt)
            t = t_next
            step += 1
            if callback is not None:
                callback(t, ScalarField(grid, u))
            if use_stride:
                store = step % config.output_stride == 0 or t == config.t_end
            else:
                store = t == target
            if store and t > times[-1]:
                times.append(t)
                frames.append(u.copy())
    return SpaceTimeField(grid, times, np.stack(frames))


def solve_hj(u0: ScalarField, hamiltonian: HamiltonianSpec, config: SolverConfig,
             callback: Callable | None = None) -> SpaceTimeField:
    """Run the HJ scheme to ``config.t_end``; ``callback(t, field)`` sees every step."""
    grid = u0.grid
    return _integrate(u0, config, lambda u, t: _hj_rate(u, grid, hamiltonian, config, t),
                      as_order(config.s), callback)


def solve_isaacs(u0: ScalarField, family: IsaacsFamily, config: SolverConfig,
                 scheme: QuadratureScheme = DEFAULT_SCHEME, callback: Callable | None = None) -> SpaceTimeField:
    grid = u0.grid
    return _integrate(u0, config, lambda u, t: _isaacs_rate(u, grid, family, config, scheme), None, callback)


def solve_advection_diffusion(u0: ScalarField, drift: DriftField, config: SolverConfig,
                              callback: Callable | None = None) -> SpaceTimeField:
    grid = u0.grid
    if drift.grid != grid:
        raise ValueError("drift and initial data live on different grids")
    return _integrate(u0, config, lambda u, t: _ad_rate(u, grid, drift, config, t), as_order(config.s), callback)


def solve_burgers(v0: ScalarField, config: SolverConfig, callback: Callable | None = None) -> SpaceTimeField:
    grid = v0.grid
    return _integrate(v0, config, lambda u, t: _burgers_rate(u, grid, config), as_order(config.s), callback)


def linearize_drift(spacetime: SpaceTimeField, hamiltonian: HamiltonianSpec) -> DriftField:
    """``w = DH(grad u)`` frame by frame (centered gradient), piecewise constant in time."""
    grads = [gradient(f) for f in spacetime.frames]
    prange = max(float(np.max(np.sqrt(np.sum(g * g, axis=0)))) for g in grads)
    if prange > hamiltonian.p_max:
        k = next(i for i, g in enumerate(grads) if np.max(np.sqrt(np.sum(g * g, axis=0))) > hamiltonian.p_max)
        raise GradientRangeError(float(spacetime.times[k]), prange, hamiltonian.p_max)
    w = np.stack([hamiltonian.gradient(g) for g in grads])
    bound = max(hamiltonian.lipschitz(prange), float(np.max(np.sqrt(np.sum(w * w, axis=1)))))
    return DriftField(spacetime.grid, w, bound, spacetime.times)
