"""Periodic lattices, fields on them, parabolic cylinders and field files.

Everything lives on the torus ``[0, L)^dim`` sampled at ``x_i = i * h`` with
``h = L / n_points``. Arrays are row-major with shape ``(n,)`` or ``(n, n)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

# relative slack for "distance <= radius" so lattice points exactly on a sphere count
_BALL_RTOL = 1e-12


class FieldFormatError(ValueError):
    """Base class for problems reading a field file."""


class MalformedHeaderError(FieldFormatError):
    pass


class LengthMismatchError(FieldFormatError):
    pass


class NonFiniteError(FieldFormatError):
    pass


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid:
    """Uniform periodic lattice with ``n_points`` per axis on a torus of side ``period``."""

    dim: int
    n_points: int
    period: float

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        if not isinstance(self.n_points, (int, np.integer)) or not _is_power_of_two(int(self.n_points)):
            raise ValueError(f"n_points must be a power of two, got {self.n_points}")
        if self.n_points < 8:
            raise ValueError(f"n_points must be at least 8, got {self.n_points}")
        if not (self.period > 0 and math.isfinite(self.period)):
            raise ValueError(f"period must be positive and finite, got {self.period}")
        object.__setattr__(self, "n_points", int(self.n_points))
        object.__setattr__(self, "period", float(self.period))

    @property
    def spacing(self) -> float:
        return self.period / self.n_points

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n_points,) * self.dim

    @property
    def size(self) -> int:
        return self.n_points**self.dim

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    def axis(self) -> np.ndarray:
        return np.arange(self.n_points) * self.spacing

    def coordinates(self) -> list[np.ndarray]:
        """Lattice coordinates, one array of ``shape`` per axis."""
        ax = self.axis()
        return list(np.meshgrid(*([ax] * self.dim), indexing="ij"))

    def wrapped_index(self) -> np.ndarray:
        """Signed index in ``(-n/2, n/2]`` for each position along an axis."""
        j = np.arange(self.n_points)
        return np.where(j <= self.n_points // 2, j, j - self.n_points)

    def displacement_norms(self) -> np.ndarray:
        """Torus length ``|y|`` of every lattice displacement, indexed like the grid."""
        w = self.wrapped_index() * self.spacing
        comps = np.meshgrid(*([w] * self.dim), indexing="ij")
        return np.sqrt(sum(c * c for c in comps))

    def distance_from(self, center: Sequence[float]) -> np.ndarray:
        """Torus distance from every lattice point to ``center``."""
        center = _as_point(center, self.dim)
        L = self.period
        comps = []
        for c, x in zip(center, self.coordinates()):
            d = np.abs(x - c) % L
            comps.append(np.minimum(d, L - d))
        return np.sqrt(sum(c * c for c in comps))

    def ball_mask(self, center: Sequence[float], radius: float) -> np.ndarray:
        return self.distance_from(center) <= radius * (1 + _BALL_RTOL) + _BALL_RTOL * self.spacing

    def half_displacements(self, min_distance: float = 0.0, max_distance: float | None = None):
        """One representative of each ``{y, -y}`` pair of nonzero lattice displacements.

        Returns ``(offsets, norms, multiplicity)``: integer offsets of shape
        ``(m,)`` in 1D or ``(m, 2)`` in 2D, their torus lengths, and ``0.5`` for
        self-antipodal displacements (``y = -y`` mod n) or ``1.0`` otherwise.
        Summing ``multiplicity * f(y)`` over the result equals half the sum of
        ``f`` over all nonzero displacements when ``f(y) = f(-y)``.
        """
        n = self.n_points
        w = self.wrapped_index()
        if self.dim == 1:
            offs = w[1:]
            offs = offs[offs > 0]
            mult = np.where(offs == n // 2, 0.5, 1.0)
            norms = offs * self.spacing
            offs = offs.reshape(-1)
        else:
            a, b = np.meshgrid(w, w, indexing="ij")
            a = a.ravel()
            b = b.ravel()
            nz = (a != 0) | (b != 0)
            a, b = a[nz], b[nz]
            na = np.where(-a > n // 2, -a - n, np.where(-a <= -n // 2, -a + n, -a))
            nb = np.where(-b > n // 2, -b - n, np.where(-b <= -n // 2, -b + n, -b))
            fixed = (na == a) & (nb == b)
            keep = fixed | (a > na) | ((a == na) & (b > nb))
            a, b, fixed = a[keep], b[keep], fixed[keep]
            mult = np.where(fixed, 0.5, 1.0)
            norms = np.hypot(a, b) * self.spacing
            offs = np.stack([a, b], axis=1)
        sel = norms >= min_distance * (1 - _BALL_RTOL)
        if max_distance is not None:
            sel &= norms <= max_distance * (1 + _BALL_RTOL)
        return offs[sel], norms[sel], mult[sel]


def make_grid(dim: int, n_points: int, period: float) -> Grid:
    return Grid(dim, n_points, period)


def _as_point(center, dim: int) -> tuple[float, ...]:
    if np.isscalar(center):
        center = (center,)
    center = tuple(float(c) for c in center)
    if len(center) != dim:
        raise ValueError(f"point {center} does not have dimension {dim}")
    return center


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Real samples of a function on the lattice. Immutable."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64)
        if arr.size != self.grid.size:
            raise ValueError(f"expected {self.grid.size} values, got {arr.size}")
        arr = arr.reshape(self.grid.shape)
        if not np.all(np.isfinite(arr)):
            bad = np.argwhere(~np.isfinite(arr))[0]
            raise ValueError(f"non-finite value at index {tuple(int(i) for i in bad)}")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def with_values(self, values) -> "ScalarField":
        return ScalarField(self.grid, values)

    def shifted(self, shift) -> "ScalarField":
        """Field ``x -> u(x + shift * h)`` for an integer lattice shift."""
        shift = (shift,) if np.isscalar(shift) else tuple(shift)
        return ScalarField(self.grid, np.roll(self.values, [-s for s in shift], axis=tuple(range(self.grid.dim))))

    def __eq__(self, other):
        return (isinstance(other, ScalarField) and self.grid == other.grid
                and np.array_equal(self.values, other.values))


@dataclass(frozen=True, eq=False)
class SpaceTimeField:
    """Frames ``u(., t_k)`` at strictly increasing times, stored as ``(nt, *grid.shape)``."""

    grid: Grid
    times: np.ndarray
    data: np.ndarray

    def __post_init__(self):
        times = np.array(self.times, dtype=np.float64).reshape(-1)
        data = np.array(self.data, dtype=np.float64)
        if times.size == 0:
            raise ValueError("a space-time field needs at least one frame")
        if np.any(np.diff(times) <= 0):
            raise ValueError("times must be strictly increasing")
        if times[0] < 0:
            raise ValueError("times must start at t >= 0")
        if data.size != times.size * self.grid.size:
            raise ValueError(f"expected {times.size} frames of {self.grid.size} values, got {data.size} values")
        data = data.reshape((times.size,) + self.grid.shape)
        if not np.all(np.isfinite(data)):
            bad = np.argwhere(~np.isfinite(data))[0]
            raise ValueError(f"non-finite value at frame/index {tuple(int(i) for i in bad)}")
        times.setflags(write=False)
        data.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "data", data)

    @classmethod
    def from_frames(cls, times, frames: Sequence[ScalarField]) -> "SpaceTimeField":
        frames = list(frames)
        grid = frames[0].grid
        if any(f.grid != grid for f in frames):
            raise ValueError("frames do not share one grid")
        return cls(grid, times, np.stack([f.values for f in frames]))

    @property
    def n_frames(self) -> int:
        return self.times.size

    @property
    def frames(self) -> list[ScalarField]:
        return [ScalarField(self.grid, d) for d in self.data]

    def frame(self, k: int) -> ScalarField:
        return ScalarField(self.grid, self.data[k])

    def index_of(self, t: float, rtol: float = 1e-9) -> int:
        """Index of the frame at time ``t``; raises if no frame is that close."""
        k = int(np.argmin(np.abs(self.times - t)))
        scale = max(1.0, abs(t))
        if abs(self.times[k] - t) > rtol * scale:
            raise ValueError(f"no frame at t={t} (closest is {self.times[k]})")
        return k

    def frame_at(self, t: float, rtol: float = 1e-9) -> ScalarField:
        return self.frame(self.index_of(t, rtol))

    def window(self, t0: float, t1: float) -> "SpaceTimeField":
        """Frames with ``t0 <= t <= t1`` (inclusive, with a rounding slack)."""
        eps = 1e-12 * max(1.0, abs(t1))
        sel = (self.times >= t0 - eps) & (self.times <= t1 + eps)
        if not sel.any():
            raise ValueError(f"no frames in [{t0}, {t1}]")
        return SpaceTimeField(self.grid, self.times[sel], self.data[sel])

    def __eq__(self, other):
        return (isinstance(other, SpaceTimeField) and self.grid == other.grid
                and np.array_equal(self.times, other.times)
                and np.array_equal(self.data, other.data))


@dataclass(frozen=True)
class ParabolicCylinder:
    """``Q_r(x0, t0) = B_r(x0) x [t0 - r, t0]`` on the torus."""

    center_x: tuple
    center_t: float
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"radius must be positive, got {self.radius}")
        cx = (self.center_x,) if np.isscalar(self.center_x) else tuple(self.center_x)
        object.__setattr__(self, "center_x", tuple(float(c) for c in cx))
        object.__setattr__(self, "center_t", float(self.center_t))
        object.__setattr__(self, "radius", float(self.radius))

    def check_fits(self, grid: Grid):
        if self.radius > grid.period / 2 * (1 + _BALL_RTOL):
            raise ValueError(f"cylinder radius {self.radius} exceeds half the period {grid.period / 2}")
        _as_point(self.center_x, grid.dim)


def sample(grid: Grid, closed_form: Callable) -> ScalarField:
    """Evaluate ``closed_form(x)`` (1D) or ``closed_form(x, y)`` (2D) at the lattice points.

    The callable receives coordinate arrays and may return a scalar, which is
    broadcast.
    """
    coords = grid.coordinates()
    with np.errstate(all="ignore"):
        vals = np.broadcast_to(np.asarray(closed_form(*coords), dtype=np.float64), grid.shape)
    if not np.all(np.isfinite(vals)):
        bad = tuple(int(i) for i in np.argwhere(~np.isfinite(vals))[0])
        raise ValueError(f"closed form is not finite at lattice index {bad}")
    return ScalarField(grid, vals.copy())


def _cylinder_samples(field, cyl: ParabolicCylinder, clamp: bool) -> np.ndarray:
    grid = field.grid
    cyl.check_fits(grid)
    mask = grid.ball_mask(cyl.center_x, cyl.radius)
    if isinstance(field, ScalarField):
        return field.values[mask]
    t0, t1 = cyl.center_t - cyl.radius, cyl.center_t
    slack = 1e-9 * max(1.0, abs(t1))
    if not clamp and (t0 < field.times[0] - slack or t1 > field.times[-1] + slack):
        raise ValueError(
            f"cylinder time window [{t0}, {t1}] is not covered by frames "
            f"[{field.times[0]}, {field.times[-1]}]; pass clamp=True to truncate"
        )
    sel = (field.times >= t0 - slack) & (field.times <= t1 + slack)
    if not sel.any():
        raise ValueError(f"cylinder time window [{t0}, {t1}] contains no frames")
    return field.data[sel][:, mask]


def oscillation(field, cylinder: ParabolicCylinder, clamp: bool = False) -> float:
    """``max - min`` of the samples inside the cylinder.

    For a :class:`ScalarField` only the spatial ball is used. For a
    :class:`SpaceTimeField` the time window must lie inside the frame range
    unless ``clamp`` is requested explicitly.
    """
    vals = _cylinder_samples(field, cylinder, clamp)
    if vals.size == 0:
        raise ValueError("cylinder contains no lattice samples")
    return float(vals.max() - vals.min())


# --- field files ---------------------------------------------------------


def write_field(path, field) -> None:
    """Write a JSON header line followed by little-endian float64 samples."""
    header = {"dim": field.grid.dim, "n_points": field.grid.n_points, "period": field.grid.period}
    if isinstance(field, SpaceTimeField):
        header["times"] = [float(t) for t in field.times]
        payload = field.data
    else:
        payload = field.values
    with open(path, "wb") as fh:
        fh.write(json.dumps(header).encode("ascii") + b"\n")
        fh.write(np.ascontiguousarray(payload, dtype="<f8").tobytes())


def read_field(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    nl = raw.find(b"\n")
    if nl < 0:
        raise MalformedHeaderError(f"{path}: no header line")
    try:
        header = json.loads(raw[:nl].decode("ascii"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedHeaderError(f"{path}: header is not JSON ({exc})") from None
    if not isinstance(header, dict):
        raise MalformedHeaderError(f"{path}: header must be a JSON object")
    missing = {"dim", "n_points", "period"} - header.keys()
    if missing:
        raise MalformedHeaderError(f"{path}: header lacks {sorted(missing)}")
    unknown = header.keys() - {"dim", "n_points", "period", "times"}
    if unknown:
        raise MalformedHeaderError(f"{path}: unknown header keys {sorted(unknown)}")
    try:
        grid = Grid(header["dim"], header["n_points"], header["period"])
    except (TypeError, ValueError) as exc:
        raise MalformedHeaderError(f"{path}: invalid grid in header ({exc})") from None
    times = header.get("times")
    n_frames = 1 if times is None else len(times)
    payload = raw[nl + 1:]
    expected = 8 * grid.size * n_frames
    if len(payload) != expected:
        raise LengthMismatchError(f"{path}: expected {expected} payload bytes, found {len(payload)}")
    data = np.frombuffer(payload, dtype="<f8").astype(np.float64)
    if not np.all(np.isfinite(data)):
        raise NonFiniteError(f"{path}: payload has non-finite value at position {int(np.argmax(~np.isfinite(data)))}")
    if times is None:
        return ScalarField(grid, data)
    try:
        return SpaceTimeField(grid, times, data)
    except ValueError as exc:
        raise MalformedHeaderError(f"{path}: bad times ({exc})") from None


def export_csv(path, field) -> None:
    """One row per lattice point: coordinates, then one column per time."""
    grid = field.grid
    coords = [c.reshape(-1) for c in grid.coordinates()]
    names = ["x", "y"][: grid.dim]
    if isinstance(field, SpaceTimeField):
        cols = [d.reshape(-1) for d in field.data]
        names += [f"t={float(t)!r}" for t in field.times]
    else:
        cols = [field.flat]
        names += ["u"]
    table = np.column_stack(coords + cols)
    with open(path, "w") as fh:
        fh.write(",".join(names) + "\n")
        for row in table:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
