"""Scenario configuration: TOML documents validated into :class:`ScenarioConfig`.

Every problem in a document is collected before anything is raised, and each
message carries a dotted path into the document (``operator.s``,
``solver.t_end``). Unknown keys are errors.

Example
-------
::

    equation = "hj"
    seed = 3

    [grid]
    n_points = 256

    [initial]
    kind = "abs-sin"

    [hamiltonian]
    kind = "quadratic"

    [solver]
    t_end = 1.0
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
import sys
from dataclasses import dataclass, field, replace

import numpy as np

from .evolve import HamiltonianSpec, IsaacsFamily, SolverConfig
from .grid import Grid
from .nonlocal_ops import EllipticityBounds, FractionalOrder, nonlocal_constant

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

EQUATIONS = ("hj", "isaacs", "advection-diffusion", "burgers")
INITIAL_KINDS = ("cos", "sin", "square", "abs-sin", "odd-bump", "random", "file")
DRIFT_KINDS = ("constant", "random")
DIAGNOSTICS = ("lipschitz", "holder", "bootstrap", "convexity", "shock")

_REQUIRED = object()

# table -> key -> (type name, default)
_SCHEMA = {
    "equation": ("str", _REQUIRED),
    "seed": ("int", 0),
    "out": ("str", "out"),
    "grid": {
        "dim": ("int", 1),
        "n_points": ("int", _REQUIRED),
        "period": ("float", 2 * math.pi),
    },
    "initial": {
        "kind": ("str", _REQUIRED),
        "amplitude": ("float", 1.0),
        "k": ("int", 1),
        "width": ("float", 0.3),
        "modes": ("int", 4),
        "path": ("str", None),
    },
    "hamiltonian": {
        "kind": ("str", "zero"),
        "coef": ("float", 1.0),
        "c": ("float", 0.0),
        "b": ("floats", None),
        "p_max": ("float", math.inf),
    },
    "controls": {
        "c": ("array", _REQUIRED),
        "b": ("array", _REQUIRED),
    },
    "drift": {
        "kind": ("str", "constant"),
        "w": ("floats", None),
        "bound": ("float", 1.0),
        "modes": ("int", 4),
    },
    "operator": {
        "s": ("float", 0.5),
        "lam": ("float", None),
        "Lam": ("float", None),
        "A": ("float", 1.0),
    },
    "solver": {
        "t_end": ("float", _REQUIRED),
        "cfl": ("float", 0.5),
        "output_stride": ("int", 1),
        "output_interval": ("float", None),
        "sigma": ("float", None),
        "dt_max": ("float", None),
    },
    "diagnostics": {
        "requested": ("strs", []),
        "t": ("float", None),
        "epsilon": ("float", 0.5),
        "alpha": ("float", None),
    },
}

# tables that only make sense for some equations
_EQUATION_TABLES = {
    "hamiltonian": ("hj",),
    "controls": ("isaacs",),
    "drift": ("advection-diffusion",),
}


class ConfigError(ValueError):
    """A configuration document failed validation; ``errors`` lists every problem."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("invalid configuration:\n" + "\n".join(f"  {e}" for e in self.errors))


def _coerce(kind: str, value):
    """Return the coerced value or raise ``TypeError`` with a short reason."""
    if kind == "str":
        if not isinstance(value, str):
            raise TypeError("expected a string")
        return value
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise TypeError("expected an integer")
        return value
    if kind == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise TypeError("expected a number")
        return float(value)
    if kind == "floats":
        if not isinstance(value, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool)
                                                  for v in value):
            raise TypeError("expected a list of numbers")
        return [float(v) for v in value]
    if kind == "strs":
        if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
            raise TypeError("expected a list of strings")
        return list(value)
    if kind == "array":
        try:
            arr = np.array(value, dtype=np.float64)
        except (TypeError, ValueError):
            raise TypeError("expected a rectangular nested list of numbers") from None
        if arr.dtype == object:
            raise TypeError("expected a rectangular nested list of numbers")
        return arr.tolist()
    raise AssertionError(kind)


def _fill(doc: dict, schema: dict, prefix: str, errors: list, present: set) -> dict:
    out = {}
    for key in doc:
        if key not in schema:
            errors.append(f"{prefix}{key}: unknown key")
    for key, spec in schema.items():
        path = prefix + key
        if isinstance(spec, dict):
            sub = doc.get(key)
            if sub is None:
                sub = {}
            elif not isinstance(sub, dict):
                errors.append(f"{path}: expected a table")
                sub = {}
            else:
                present.add(key)
            out[key] = _fill(sub, spec, path + ".", errors, present)
            continue
        kind, default = spec
        if key in doc:
            try:
                out[key] = _coerce(kind, doc[key])
            except TypeError as exc:
                errors.append(f"{path}: {exc}, got {doc[key]!r}")
                out[key] = None if default is _REQUIRED else default
        elif default is _REQUIRED:
            out[key] = _REQUIRED
        else:
            out[key] = copy.deepcopy(default)
    return out


@dataclass(frozen=True, eq=False)
class ScenarioConfig:
    """A validated scenario.

    ``document`` is the defaults-filled document; it is what gets hashed.
    Tables that the equation does not use are ``None``.
    """

    equation: str
    grid: Grid
    initial: dict
    s: float
    bounds: EllipticityBounds
    A: float
    solver: SolverConfig
    diagnostics: tuple
    diagnostic_options: dict
    seed: int
    out: str
    hamiltonian: HamiltonianSpec | None = None
    controls: IsaacsFamily | None = None
    drift: dict | None = None
    document: dict = field(default_factory=dict)

    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON of ``document`` without ``out``."""
        doc = {k: v for k, v in self.document.items() if k != "out"}
        text = json.dumps(doc, sort_keys=True, separators=(",", ":"), allow_nan=True)
        return hashlib.sha256(text.encode("utf-8")).hexdigest()

    def with_overrides(self, seed: int | None = None, out: str | None = None) -> "ScenarioConfig":
        doc = copy.deepcopy(self.document)
        if seed is not None:
            if int(seed) != seed or seed < 0:
                raise ConfigError([f"seed: must be a non-negative integer, got {seed!r}"])
            doc["seed"] = int(seed)
        if out is not None:
            doc["out"] = str(out)
        return replace(self, seed=doc["seed"], out=doc["out"], document=doc)


def _check(errors: list, path: str, fn):
    try:
        return fn()
    except (TypeError, ValueError) as exc:
        errors.append(f"{path}: {exc}")
        return None


def _validate(doc: dict, present: set, errors: list):
    if doc["equation"] is _REQUIRED:
        errors.append("equation: missing required key")
        equation = None
    else:
        equation = doc["equation"]
        if equation not in EQUATIONS:
            errors.append(f"equation: must be one of {', '.join(EQUATIONS)}, got {equation!r}")
            equation = None
    if doc["seed"] is not None and doc["seed"] < 0:
        errors.append(f"seed: must be non-negative, got {doc['seed']}")
    for table, allowed in _EQUATION_TABLES.items():
        if table in present and equation is not None and equation not in allowed:
            errors.append(f"{table}: not used by equation {equation!r}")

    for table in ("grid", "initial", "solver"):
        for key, value in doc[table].items():
            if value is _REQUIRED:
                errors.append(f"{table}.{key}: missing required key")
    g = doc["grid"]
    grid = None
    if g["dim"] is not None and g["dim"] not in (1, 2):
        errors.append(f"grid.dim: must be 1 or 2, got {g['dim']}")
    elif g["n_points"] not in (_REQUIRED, None) and None not in g.values():
        n = g["n_points"]
        if n < 8 or n & (n - 1):
            errors.append(f"grid.n_points: must be a power of two and at least 8, got {n}")
        else:
            grid = _check(errors, "grid.period", lambda: Grid(g["dim"], n, g["period"]))
    if equation == "burgers" and g["dim"] != 1:
        errors.append(f"grid.dim: burgers runs are one-dimensional, got {g['dim']}")

    op = doc["operator"]
    s = _check(errors, "operator.s", lambda: FractionalOrder(op["s"]).s) if op["s"] is not None else None
    dim = g["dim"] if g["dim"] in (1, 2) else 1
    c_half = nonlocal_constant(dim, 0.5)
    lam = float(0.5 * c_half) if op["lam"] is None else op["lam"]
    Lam = float(2.0 * c_half) if op["Lam"] is None else op["Lam"]
    op["lam"], op["Lam"] = lam, Lam
    bounds = None
    if lam is not None and Lam is not None:
        if lam > Lam:
            errors.append(f"operator.lam, operator.Lam: lam ({lam}) must not exceed Lam ({Lam})")
        else:
            bounds = _check(errors, "operator.lam", lambda: EllipticityBounds(lam, Lam))
    if op["A"] is not None and not (op["A"] >= 0 and math.isfinite(op["A"])):
        errors.append(f"operator.A: must be finite and >= 0, got {op['A']}")

    ini = doc["initial"]
    if ini["kind"] not in (_REQUIRED, None) and ini["kind"] not in INITIAL_KINDS:
        errors.append(f"initial.kind: must be one of {', '.join(INITIAL_KINDS)}, got {ini['kind']!r}")
    if ini["kind"] == "file" and not ini["path"]:
        errors.append("initial.path: required when initial.kind = 'file'")
    if ini["kind"] == "odd-bump" and dim != 1:
        errors.append("initial.kind: odd-bump data is one-dimensional")
    if ini["amplitude"] is not None and not math.isfinite(ini["amplitude"]):
        errors.append("initial.amplitude: must be finite")
    if ini["width"] is not None and not ini["width"] > 0:
        errors.append(f"initial.width: must be positive, got {ini['width']}")
    if ini["modes"] is not None and ini["modes"] < 1:
        errors.append(f"initial.modes: must be >= 1, got {ini['modes']}")

    sv = doc["solver"]
    solver = None
    if sv["t_end"] not in (_REQUIRED, None):
        solver = _check(errors, "solver", lambda: SolverConfig(
            t_end=sv["t_end"], cfl=sv["cfl"], s=s if s is not None else 0.5,
            output_stride=sv["output_stride"], output_interval=sv["output_interval"],
            sigma=sv["sigma"], dt_max=sv["dt_max"]))

    hamiltonian = controls = drift = None
    if equation == "hj":
        hm = doc["hamiltonian"]
        b = () if hm["b"] is None else tuple(hm["b"])
        hamiltonian = _check(errors, "hamiltonian", lambda: HamiltonianSpec(
            hm["kind"], coef=hm["coef"], c=hm["c"], b=b, p_max=hm["p_max"]))
        if hamiltonian is not None and hamiltonian.kind == "affine" and len(b) != dim:
            errors.append(f"hamiltonian.b: needs {dim} components, got {len(b)}")
    elif equation == "isaacs":
        ct = doc["controls"]
        for key in ("c", "b"):
            if ct[key] is _REQUIRED:
                errors.append(f"controls.{key}: missing required key")
        if ct["c"] is not _REQUIRED and ct["b"] is not _REQUIRED and None not in (ct["c"], ct["b"]):
            controls = _check(errors, "controls", lambda: IsaacsFamily(ct["c"], ct["b"]))
            if controls is not None and controls.b.shape[-1] != dim:
                errors.append(f"controls.b: last axis must have {dim} components, got {controls.b.shape[-1]}")
                controls = None
    elif equation == "advection-diffusion":
        dr = doc["drift"]
        if dr["kind"] not in DRIFT_KINDS:
            errors.append(f"drift.kind: must be one of {', '.join(DRIFT_KINDS)}, got {dr['kind']!r}")
        elif dr["kind"] == "constant":
            if dr["w"] is None or len(dr["w"]) != dim:
                errors.append(f"drift.w: constant drift needs {dim} components")
            elif math.sqrt(sum(v * v for v in dr["w"])) > dr["bound"] * (1 + 1e-12):
                errors.append(f"drift.w, drift.bound: |w| exceeds bound {dr['bound']}")
        if dr["bound"] is not None and not (dr["bound"] >= 0 and math.isfinite(dr["bound"])):
            errors.append(f"drift.bound: must be finite and >= 0, got {dr['bound']}")
        if dr["modes"] is not None and dr["modes"] < 1:
            errors.append(f"drift.modes: must be >= 1, got {dr['modes']}")
        drift = dr

    dg = doc["diagnostics"]
    for name in dg["requested"] or []:
        if name not in DIAGNOSTICS:
            errors.append(f"diagnostics.requested: unknown diagnostic {name!r}; expected one of "
                          f"{', '.join(DIAGNOSTICS)}")
    if "shock" in (dg["requested"] or []) and equation not in (None, "burgers"):
        errors.append("diagnostics.requested: 'shock' needs equation = 'burgers'")
    if dg["epsilon"] is not None and not (dg["epsilon"] > 0 and math.isfinite(dg["epsilon"])):
        errors.append(f"diagnostics.epsilon: must be positive, got {dg['epsilon']}")
    if dg["t"] is not None and sv["t_end"] not in (_REQUIRED, None) and not (0 <= dg["t"] <= sv["t_end"]):
        errors.append(f"diagnostics.t: must lie in [0, solver.t_end], got {dg['t']}")
    if dg["alpha"] is not None and not (0 < dg["alpha"] <= 1):
        errors.append(f"diagnostics.alpha: must lie in (0, 1], got {dg['alpha']}")

    return dict(equation=equation, grid=grid, s=s, bounds=bounds, solver=solver,
                hamiltonian=hamiltonian, controls=controls, drift=drift)


def parse_document(doc: dict) -> ScenarioConfig:
    """Validate an already-parsed document; raises :class:`ConfigError` listing every problem."""
    if not isinstance(doc, dict):
        raise ConfigError(["<root>: expected a table"])
    errors: list[str] = []
    present: set = set()
    filled = _fill(doc, _SCHEMA, "", errors, present)
    parts = _validate(filled, present, errors)
    if errors:
        raise ConfigError(errors)
    for table, allowed in _EQUATION_TABLES.items():
        if parts["equation"] not in allowed:
            filled[table] = None
    return ScenarioConfig(
        equation=parts["equation"], grid=parts["grid"], initial=filled["initial"], s=parts["s"],
        bounds=parts["bounds"], A=filled["operator"]["A"], solver=parts["solver"],
        diagnostics=tuple(filled["diagnostics"]["requested"]),
        diagnostic_options={k: v for k, v in filled["diagnostics"].items() if k != "requested"},
        seed=filled["seed"], out=filled["out"], hamiltonian=parts["hamiltonian"],
        controls=parts["controls"], drift=parts["drift"], document=filled)


def parse_config(text: str) -> ScenarioConfig:
    """Parse and validate a TOML scenario document."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"<document>: not valid TOML ({exc})"]) from None
    return parse_document(doc)


def load_config(path) -> ScenarioConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError([f"<file>: cannot read {path} ({exc.strerror})"]) from None
    return parse_config(text)
