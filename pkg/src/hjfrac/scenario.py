"""Single-scenario execution: solve, diagnose and write every output with a manifest.

Output files (all inside the scenario's output directory)

``solution.fld``
    Every stored frame in the binary field format.
``final.csv``
    Final frame, header ``x,u`` (1D) or ``x,y,u`` (2D).
``decay.csv``
    Header ``t,max_u,min_u,osc,sup_norm``, one row per stored frame.
``lipschitz.csv``
    Header ``t,lipschitz_seminorm`` (diagnostic ``lipschitz``).
``shock.csv``
    Header ``s,n_points,t,max_gradient`` (diagnostic ``shock``).
``report.json``
    Run summary and every requested diagnostic.
``plot.gp``
    A gnuplot script reading the CSV files.
``manifest.json``
    :class:`RunManifest`; written last and not listed in itself.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import time
from dataclasses import asdict, dataclass, field, replace

import numpy as np
import scipy

from . import __version__, kernels
from .config import ScenarioConfig
from .convolution import convexity_report, lipschitz_seminorm
from .evolve import (DriftField, solve_advection_diffusion, solve_burgers, solve_hj, solve_isaacs)
from .grid import Grid, ScalarField, SpaceTimeField, export_csv, read_field, write_field
from .regularity import fit_modulus_exponent, odd_bump, shock_experiment, telescoping_bootstrap

GENERATOR = "numpy.random.PCG64"

DECAY_HEADER = ("t", "max_u", "min_u", "osc", "sup_norm")
LIPSCHITZ_HEADER = ("t", "lipschitz_seminorm")
SHOCK_HEADER = ("s", "n_points", "t", "max_gradient")


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def fmt(x) -> str:
    """Shortest round-trip text for a float (bit-exact through CSV)."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    if x is None:
        return ""
    return repr(float(x))


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    return obj


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


# --- initial data and drifts ------------------------------------------------


def random_trig(grid, rng: np.random.Generator, modes: int = 4, amplitude: float = 1.0) -> np.ndarray:
    """Random trigonometric polynomial with frequencies ``|k| <= modes``, scaled to ``max |u| = amplitude``."""
    coords = grid.coordinates()
    L = grid.period
    u = np.zeros(grid.shape)
    for _ in range(modes):
        kvec = rng.integers(-modes, modes + 1, size=grid.dim)
        if not kvec.any():
            kvec[0] = 1
        phase = rng.uniform(0, 2 * np.pi)
        arg = sum(2 * np.pi * k * x / L for k, x in zip(kvec, coords))
        u = u + rng.normal() / np.linalg.norm(kvec) * np.cos(arg + phase)
    m = np.max(np.abs(u))
    return u * (amplitude / m) if m > 0 else u


def initial_field(config: ScenarioConfig, rng: np.random.Generator) -> ScalarField:
    """Realize ``config.initial`` on ``config.grid``."""
    spec, grid = config.initial, config.grid
    kind, a, k = spec["kind"], spec["amplitude"], spec["k"]
    if kind == "file":
        f = read_field(spec["path"])
        if isinstance(f, SpaceTimeField):
            f = f.frame(f.n_frames - 1)
        if f.grid != grid:
            raise ValueError(f"field file grid {f.grid} does not match the configured grid {grid}")
        return f
    if kind == "random":
        return ScalarField(grid, random_trig(grid, rng, spec["modes"], a))
    coords = grid.coordinates()
    x = coords[0]
    scale = 2 * np.pi * k / grid.period
    if kind == "cos":
        v = a * np.prod([np.cos(scale * c) for c in coords], axis=0)
    elif kind == "sin":
        v = a * np.prod([np.sin(scale * c) for c in coords], axis=0)
    elif kind == "square":
        v = a * np.where(np.sin(scale * x) >= 0, 1.0, -1.0)
    elif kind == "abs-sin":
        v = a * np.abs(np.sin(scale * x))
    elif kind == "odd-bump":
        v = a * odd_bump(spec["width"])(x * 2 * np.pi / grid.period)
    else:  # pragma: no cover - rejected by the parser
        raise ValueError(kind)
    return ScalarField(grid, v)


def drift_field(config: ScenarioConfig, rng: np.random.Generator) -> DriftField:
    spec = config.drift
    if spec["kind"] == "constant":
        return DriftField.constant(config.grid, spec["w"])
    return DriftField.random(config.grid, spec["bound"], rng, modes=spec["modes"])


# --- manifest -----------------------------------------------------------------


@dataclass
class RunManifest:
    """Provenance record of one run.

    ``outputs`` maps file names (relative to ``out_dir``) to SHA-256 digests
    and sizes. ``status`` is ``ok`` or ``error``; on error ``failed_stage``
    names the stage that raised.
    """

    config_hash: str
    versions: dict
    seed: int
    generator: str
    resolution: dict
    out_dir: str
    outputs: dict = field(default_factory=dict)
    wall_clock_s: float = 0.0
    status: str = "ok"
    failed_stage: str | None = None
    error: str | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    def checksums(self) -> dict:
        return {k: v["sha256"] for k, v in self.outputs.items()}


def versions() -> dict:
    return {"hjfrac": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "kernels": kernels.BACKEND}


# --- running ------------------------------------------------------------------


def solve(config: ScenarioConfig, u0: ScalarField, rng: np.random.Generator) -> SpaceTimeField:
    eq = config.equation
    if eq == "hj":
        return solve_hj(u0, config.hamiltonian, config.solver)
    if eq == "isaacs":
        return solve_isaacs(u0, config.controls, config.solver)
    if eq == "advection-diffusion":
        return solve_advection_diffusion(u0, drift_field(config, rng), config.solver)
    return solve_burgers(u0, config.solver)


def _gnuplot(names: list[str], dim: int) -> str:
    lines = ["# generated plot script; run with: gnuplot plot.gp",
             "set datafile separator ','", "set key autotitle columnhead", "set terminal pngcairo size 900,600"]
    if "final.csv" in names:
        lines += ["set output 'final.png'"]
        lines += ["plot 'final.csv' using 1:2 with lines"] if dim == 1 else \
                 ["set view map", "splot 'final.csv' using 1:2:3 with image"]
    if "decay.csv" in names:
        lines += ["set output 'decay.png'", "set xlabel 't'",
                  "plot 'decay.csv' using 1:2 with lines, '' using 1:3 with lines, '' using 1:4 with lines"]
    if "lipschitz.csv" in names:
        lines += ["set output 'lipschitz.png'", "plot 'lipschitz.csv' using 1:2 with lines"]
    if "shock.csv" in names:
        lines += ["set output 'shock.png'", "set logscale y",
                  "plot 'shock.csv' using 3:($1==0.25?$4:1/0) with lines title 's=0.25', "
                  "'' using 3:($1==0.5?$4:1/0) with lines title 's=0.5'", "unset logscale y"]
    return "\n".join(lines) + "\n"


def _diagnose(config: ScenarioConfig, run: SpaceTimeField, out: str, written: list, report: dict):
    opts = config.diagnostic_options
    t_diag = config.solver.t_end if opts["t"] is None else opts["t"]
    frame = run.frame_at(t_diag)
    for name in config.diagnostics:
        if name == "lipschitz":
            rows = [(t, lipschitz_seminorm(run.frame(k))) for k, t in enumerate(run.times)]
            write_csv(os.path.join(out, "lipschitz.csv"), LIPSCHITZ_HEADER, rows)
            written.append("lipschitz.csv")
            report["lipschitz"] = {"initial": rows[0][1], "final": rows[-1][1],
                                   "max_increase": max(b[1] - a[1] for a, b in zip(rows, rows[1:]))
                                   if len(rows) > 1 else 0.0}
        elif name == "holder":
            fit = fit_modulus_exponent(frame)
            report["holder"] = {"t": t_diag, "alpha": fit.alpha, "constant": fit.constant,
                                "residual": fit.residual, "window": fit.window}
        elif name == "bootstrap":
            alpha = opts["alpha"]
            if alpha is None:
                alpha = min(1.0, fit_modulus_exponent(frame).alpha)
            report["bootstrap"] = telescoping_bootstrap(frame, alpha)
            report["bootstrap"]["t"] = t_diag
        elif name == "convexity":
            report["convexity"] = convexity_report(frame, opts["epsilon"])
            report["convexity"]["t"] = t_diag
        elif name == "shock":
            if config.initial["kind"] == "file":
                raise ValueError("the shock diagnostic refines the grid and needs closed-form initial data")

            def initial(x):
                fine = replace(config, grid=Grid(1, x.size, config.grid.period))
                return initial_field(fine, make_rng(config.seed)).values

            exp = shock_experiment(config.grid.n_points, config.solver.t_end, initial=initial,
                                   cfl=config.solver.cfl, output_stride=config.solver.output_stride)
            rows = []
            for key, s in (("super", exp["s_super"]), ("critical", exp["s_crit"])):
                rows += [(s, exp["n_points"], t, g) for t, g in zip(exp[key]["times"], exp[key]["max_gradient"])]
            write_csv(os.path.join(out, "shock.csv"), SHOCK_HEADER, rows)
            written.append("shock.csv")
            for key in ("super", "critical"):
                exp[key] = {k: v for k, v in exp[key].items() if k not in ("times", "max_gradient")}
            exp["initial_kind"] = config.initial["kind"]
            report["shock"] = exp


def run_scenario(config: ScenarioConfig, out_dir: str | None = None) -> RunManifest:
    """Execute ``config`` and write its outputs; the manifest records any failure stage."""
    out = config.out if out_dir is None else out_dir
    t_start = time.perf_counter()
    manifest = RunManifest(
        config_hash=config.config_hash(), versions=versions(), seed=config.seed, generator=GENERATOR,
        resolution={"dim": config.grid.dim, "n_points": config.grid.n_points, "h": config.grid.spacing,
                    "t_end": config.solver.t_end},
        out_dir=os.path.abspath(out))
    written: list[str] = []
    stage = "setup"
    try:
        os.makedirs(out, exist_ok=True)
        rng = make_rng(config.seed)
        stage = "initial"
        u0 = initial_field(config, rng)
        stage = "solve"
        run = solve(config, u0, rng)
        stage = "write"
        write_field(os.path.join(out, "solution.fld"), run)
        written.append("solution.fld")
        final = run.frame(run.n_frames - 1)
        export_csv(os.path.join(out, "final.csv"), final)
        written.append("final.csv")
        rows = [(t, f.max(), f.min(), f.max() - f.min(), np.abs(f).max()) for t, f in zip(run.times, run.data)]
        write_csv(os.path.join(out, "decay.csv"), DECAY_HEADER, rows)
        written.append("decay.csv")
        report = {"equation": config.equation, "n_frames": run.n_frames, "t_final": float(run.times[-1]),
                  "initial": {"max": float(u0.values.max()), "min": float(u0.values.min())},
                  "final": {"max": float(final.values.max()), "min": float(final.values.min())},
                  "config_hash": manifest.config_hash}
        stage = "diagnostics"
        _diagnose(config, run, out, written, report)
        stage = "write"
        write_json(os.path.join(out, "report.json"), report)
        written.append("report.json")
        with open(os.path.join(out, "plot.gp"), "w") as fh:
            fh.write(_gnuplot(written, config.grid.dim))
        written.append("plot.gp")
    except Exception as exc:  # noqa: BLE001 - recorded in the manifest
        manifest.status = "error"
        manifest.failed_stage = stage
        manifest.error = f"{type(exc).__name__}: {exc}"
    manifest.outputs = {name: {"sha256": sha256_file(os.path.join(out, name)),
                               "bytes": os.path.getsize(os.path.join(out, name))} for name in written}
    manifest.wall_clock_s = time.perf_counter() - t_start
    if os.path.isdir(out):
        write_json(os.path.join(out, "manifest.json"), manifest.to_dict())
    return manifest
