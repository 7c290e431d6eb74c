"""JSON scenario files: parsing, validation and compilation into solver inputs.

A scenario looks like::

    {"schema_version": 1, "name": "case-ii", "kind": "orbit_demo", "seed": 0,
     "parameters": {...}, "solver": {...}, "outputs": ["report", "atoms"]}

Everything is validated and compiled before any computation runs, so a bad
file never produces partial outputs.
"""
from __future__ import annotations

import copy
import hashlib
import json
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import measures as M
from . import operations as O
from . import quantum as Q
from .dynamics import IntegratorConfig, TwoBodyParams, flow_map, reduced_satellite_map
from .errors import DimensionError
from .solver import SolverConfig

SCHEMA_VERSION = 1
KINDS = ("quantum_fixpoint", "classical_fixpoint", "orbit_demo", "tightness_probe")
OUTPUTS = ("report", "curve", "atoms", "trajectory", "tightness", "weyl")


class ScenarioError(Exception):
    exit_code = 1


class ScenarioParseError(ScenarioError):
    """The file is not valid UTF-8 JSON."""

    exit_code = 2


class ScenarioValidationError(ScenarioError):
    """The JSON is well formed but a field is missing or invalid."""

    exit_code = 3

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass
class Scenario:
    name: str
    kind: str
    seed: int
    parameters: dict
    solver: dict
    outputs: list
    raw: dict = field(repr=False)
    inputs: dict = field(default_factory=dict, repr=False)

    def to_dict(self) -> dict:
        return copy.deepcopy(self.raw)

    @property
    def digest(self) -> str:
        return scenario_digest(self.raw)


def scenario_digest(raw: dict) -> str:
    """SHA-256 of the canonical JSON form; independent of key order."""
    text = json.dumps(raw, sort_keys=True, separators=(",", ":"), allow_nan=False)
    return hashlib.sha256(text.encode()).hexdigest()


def _reject_constant(name):
    raise ValueError(f"non-finite number {name} is not allowed")


def parse_scenario(path, seed: int | None = None, max_atoms: int | None = None) -> Scenario:
    try:
        with open(path, "rb") as fh:
            text = fh.read().decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ScenarioParseError(f"{path}: not UTF-8 ({exc})") from exc
    except OSError as exc:
        raise ScenarioParseError(f"{path}: {exc.strerror}") from exc
    return parse_scenario_text(text, source=str(path), seed=seed, max_atoms=max_atoms)


def parse_scenario_text(text: str, source: str = "<string>", seed: int | None = None,
                        max_atoms: int | None = None) -> Scenario:
    try:
        raw = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(f"{source}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    except ValueError as exc:
        raise ScenarioParseError(f"{source}: {exc}") from exc
    return validate_scenario(raw, seed=seed, max_atoms=max_atoms)


def validate_scenario(raw, seed: int | None = None, max_atoms: int | None = None) -> Scenario:
    if not isinstance(raw, dict):
        raise ScenarioValidationError("<root>", "scenario must be a JSON object")
    _check_finite(raw, "")
    version = raw.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ScenarioValidationError("schema_version", f"expected {SCHEMA_VERSION}, got {version!r}")
    name = raw.get("name")
    if not isinstance(name, str) or not name.strip():
        raise ScenarioValidationError("name", "must be a nonempty string")
    if not re.fullmatch(r"[A-Za-z0-9_.\-]+", name):
        raise ScenarioValidationError("name", "only letters, digits, '.', '_' and '-' are allowed")
    kind = raw.get("kind")
    if kind not in KINDS:
        raise ScenarioValidationError("kind", f"must be one of {', '.join(KINDS)}; got {kind!r}")
    file_seed = raw.get("seed", 0)
    if not _is_int(file_seed) or not 0 <= file_seed < 2 ** 64:
        raise ScenarioValidationError("seed", "must be an unsigned 64-bit integer")
    if seed is not None:
        if not 0 <= seed < 2 ** 64:
            raise ScenarioValidationError("seed", "override must be an unsigned 64-bit integer")
        file_seed = seed
    params = raw.get("parameters")
    if not isinstance(params, dict):
        raise ScenarioValidationError("parameters", "must be an object")
    solver = raw.get("solver", {})
    if not isinstance(solver, dict):
        raise ScenarioValidationError("solver", "must be an object")
    outputs = raw.get("outputs", ["report"])
    if not isinstance(outputs, list) or any(o not in OUTPUTS for o in outputs):
        raise ScenarioValidationError("outputs", f"entries must be among {', '.join(OUTPUTS)}")
    if "report" not in outputs:
        outputs = ["report", *outputs]

    sc = Scenario(name, kind, int(file_seed), params, solver, list(outputs), raw)
    cap = M.DEFAULT_MAX_ATOMS if max_atoms is None else int(max_atoms)
    builder = {
        "quantum_fixpoint": _build_quantum,
        "classical_fixpoint": _build_classical,
        "orbit_demo": _build_orbit,
        "tightness_probe": _build_tightness,
    }[kind]
    sc.inputs = builder(sc, cap)
    return sc


# ---- small field helpers

def _is_int(x):
    return isinstance(x, int) and not isinstance(x, bool)


def _is_num(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _check_finite(obj, path):
    if isinstance(obj, float) and not math.isfinite(obj):
        raise ScenarioValidationError(path or "<root>", "numbers must be finite")
    if isinstance(obj, dict):
        for k, v in obj.items():
            _check_finite(v, f"{path}.{k}" if path else k)
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            _check_finite(v, f"{path}[{i}]")


def _get(d, key, path, default=..., kind=None):
    p = f"{path}.{key}"
    if key not in d:
        if default is ...:
            raise ScenarioValidationError(p, "required field is missing")
        return default
    v = d[key]
    if kind == "num" and not _is_num(v):
        raise ScenarioValidationError(p, "must be a number")
    if kind == "int" and not _is_int(v):
        raise ScenarioValidationError(p, "must be an integer")
    if kind == "pos" and not (_is_num(v) and v > 0):
        raise ScenarioValidationError(p, "must be a positive number")
    if kind == "posint" and not (_is_int(v) and v > 0):
        raise ScenarioValidationError(p, "must be a positive integer")
    if kind == "nonneg" and not (_is_num(v) and v >= 0):
        raise ScenarioValidationError(p, "must be a nonnegative number")
    if kind == "dict" and not isinstance(v, dict):
        raise ScenarioValidationError(p, "must be an object")
    if kind == "list" and not isinstance(v, list):
        raise ScenarioValidationError(p, "must be a list")
    return v


def _guard(path, fn, *args, **kwargs):
    """Run a constructor, re-raising its complaint as a validation error at ``path``."""
    try:
        return fn(*args, **kwargs)
    except ScenarioValidationError:
        raise
    except (ValueError, TypeError, KeyError, DimensionError, ZeroDivisionError) as exc:
        raise ScenarioValidationError(path, str(exc)) from exc


# ---- matrices

def matrix_from_json(rows, path) -> np.ndarray:
    """Row-major list of rows; each entry a ``[re, im]`` pair (or a bare real)."""
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise ScenarioValidationError(path, "matrix must be a nonempty list of rows")
    n_cols = len(rows[0])
    out = np.zeros((len(rows), n_cols), dtype=complex)
    for i, row in enumerate(rows):
        if len(row) != n_cols:
            raise ScenarioValidationError(f"{path}[{i}]", "rows have different lengths")
        for j, e in enumerate(row):
            if _is_num(e):
                out[i, j] = e
            elif isinstance(e, list) and len(e) == 2 and all(_is_num(c) for c in e):
                out[i, j] = complex(e[0], e[1])
            else:
                raise ScenarioValidationError(f"{path}[{i}][{j}]", "entry must be [re, im]")
    return out


def matrix_to_json(m) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def _quantum_matrix(spec, path, d, rng, what):
    if isinstance(spec, str):
        if what != "U":
            raise ScenarioValidationError(path, f"unknown named state {spec!r}")
        named = {"identity": lambda: np.eye(d, dtype=complex), "swap": None, "cnot": Q.cnot}
        if spec not in named:
            raise ScenarioValidationError(path, f"unknown named unitary {spec!r}")
        if spec == "swap":
            root = int(round(math.sqrt(d)))
            if root * root != d:
                raise ScenarioValidationError(path, "swap needs d_A == d_B")
            return Q.swap(root)
        m = named[spec]()
        if m.shape[0] != d:
            raise ScenarioValidationError(path, f"{spec} has dimension {m.shape[0]}, expected {d}")
        return m
    if isinstance(spec, dict):
        if spec.get("random") is True:
            return Q.random_unitary(d, rng) if what == "U" else Q.random_density_matrix(d, rng)
        if "diag" in spec:
            diag = spec["diag"]
            if not isinstance(diag, list) or not all(_is_num(x) for x in diag):
                raise ScenarioValidationError(f"{path}.diag", "must be a list of numbers")
            return np.diag(np.asarray(diag, dtype=complex))
        raise ScenarioValidationError(path, "object form must be {\"random\": true} or {\"diag\": [...]}")
    return matrix_from_json(spec, path)


def _build_quantum(sc: Scenario, cap: int) -> dict:
    p, path = sc.parameters, "parameters"
    dims_raw = _get(p, "dims", path, kind="list")
    if len(dims_raw) != 2 or not all(_is_int(x) and x > 0 for x in dims_raw):
        raise ScenarioValidationError(f"{path}.dims", "must be [d_A, d_B] with positive integers")
    dims = Q.BipartiteDims(*dims_raw)
    if dims.total > Q.MAX_DIM:
        raise ScenarioValidationError(f"{path}.dims", f"d_A*d_B exceeds the cap {Q.MAX_DIM}")
    rng = np.random.default_rng(sc.seed)
    u = _quantum_matrix(_get(p, "U", path), f"{path}.U", dims.total, rng, "U")
    rho_a = _quantum_matrix(_get(p, "rho_A", path), f"{path}.rho_A", dims.d_a, rng, "rho")
    rho_b0 = _quantum_matrix(_get(p, "rho_B0", path), f"{path}.rho_B0", dims.d_b, rng, "rho")
    if u.shape != (dims.total, dims.total):
        raise ScenarioValidationError(f"{path}.U", f"must be {dims.total}x{dims.total}")
    if rho_a.shape != (dims.d_a, dims.d_a):
        raise ScenarioValidationError(f"{path}.rho_A", f"must be {dims.d_a}x{dims.d_a}")
    if rho_b0.shape != (dims.d_b, dims.d_b):
        raise ScenarioValidationError(f"{path}.rho_B0", f"must be {dims.d_b}x{dims.d_b}")
    _guard(f"{path}.U", Q.check_unitary, u)
    _guard(f"{path}.rho_A", Q.check_density_matrix, rho_a, name="rho_A")
    _guard(f"{path}.rho_B0", Q.check_density_matrix, rho_b0, name="rho_B0")
    restart = _get(p, "restart_every", path, 8)
    if restart is not None and not (_is_int(restart) and restart > 0):
        raise ScenarioValidationError(f"{path}.restart_every", "must be a positive integer or null")
    return {
        "dims": dims,
        "U": u,
        "rho_A": rho_a,
        "rho_B0": rho_b0,
        "max_iter": _get(p, "max_iter", path, 10_000, "posint"),
        "tol": _get(p, "tol", path, 1e-10, "pos"),
        "verify_tol": _get(p, "verify_tol", path, 1e-9, "pos"),
        "restart_every": restart,
    }


# ---- measures, maps, operations, dictionaries

def measure_from_json(d, path) -> M.AtomicMeasure:
    if not isinstance(d, dict):
        raise ScenarioValidationError(path, "measure must be an object")
    space = _guard(f"{path}.space", M.space_from_dict, _get(d, "space", path, kind="dict"))
    atoms = _get(d, "atoms", path, kind="list")
    if not atoms:
        raise ScenarioValidationError(f"{path}.atoms", "needs at least one atom")
    weights, points = [], []
    for i, a in enumerate(atoms):
        ap = f"{path}.atoms[{i}]"
        if not isinstance(a, dict):
            raise ScenarioValidationError(ap, "atom must be {\"w\": ..., \"x\": [...]}")
        w = _get(a, "w", ap, kind="nonneg")
        x = _get(a, "x", ap, kind="list")
        if len(x) != space.dim or not all(_is_num(c) for c in x):
            raise ScenarioValidationError(f"{ap}.x", f"must be {space.dim} numbers")
        weights.append(w)
        points.append(x)
    total = math.fsum(weights)
    if abs(total - 1.0) > M.NORMALIZATION_TOL:
        raise ScenarioValidationError(f"{path}.atoms", f"weights sum to {total!r}, expected 1")
    return _guard(path, M.AtomicMeasure, space, weights, points)


def parse_time_ratio(spec, path):
    """``"3T"``, ``"5/4 T"``, ``"golden T"`` or a plain number (multiple of T).

    Returns ``(ratio, symbolic_kind)``; ``symbolic_kind`` is None for numbers.
    """
    if _is_num(spec):
        return float(spec), None
    if not isinstance(spec, str):
        raise ScenarioValidationError(path, "time must be a number or a string like '5/4 T'")
    text = spec.replace(" ", "")
    if not text.endswith("T"):
        raise ScenarioValidationError(path, f"cannot read time {spec!r}; expected e.g. '5/4 T'")
    body = text[:-1] or "1"
    if body == "golden":
        return (math.sqrt(5.0) - 1.0) / 2.0, "irrational"
    try:
        frac = Fraction(body)
    except (ValueError, ZeroDivisionError) as exc:
        raise ScenarioValidationError(path, f"cannot read time {spec!r}") from exc
    return frac, ("integer_multiple" if frac.denominator == 1 else "rational")


def phase_map_from_json(d, path, cap) -> O.PhaseMap:
    kind = _get(d, "kind", path)
    if kind == "identity":
        return O.identity_map(_get(d, "dim", path, kind="posint"))
    if kind == "translation":
        v = _get(d, "v", path, kind="list")
        if not v or not all(_is_num(c) for c in v):
            raise ScenarioValidationError(f"{path}.v", "must be a list of numbers")
        return O.translation(v)
    if kind == "rotation":
        return O.circle_rotation(_guard(f"{path}.angle", O.parse_angle, _get(d, "angle", path)))
    if kind == "satellite":
        ratio, _ = parse_time_ratio(_get(d, "time", path), f"{path}.time")
        return reduced_satellite_map(ratio)
    if kind == "flow":
        params = two_body_from_json(_get(d, "params", path, kind="dict"), f"{path}.params")
        t = _get(d, "t", path, kind="num")
        cfg = _guard(f"{path}.dt", IntegratorConfig, _get(d, "dt", path, kind="pos"),
                     _get(d, "max_steps", path, 10_000_000, "posint"))
        _guard(f"{path}.t", cfg.n_steps, t)
        return flow_map(params, t, cfg)
    raise ScenarioValidationError(f"{path}.kind", f"unknown map kind {kind!r}")


def operation_from_json(d, path, cap) -> O.Operation:
    if not isinstance(d, dict):
        raise ScenarioValidationError(path, "operation must be an object")
    kind = _get(d, "kind", path)
    if kind == "pushforward":
        on = _get(d, "on", path, "full")
        if on not in ("full", "A", "B"):
            raise ScenarioValidationError(f"{path}.on", "must be 'full', 'A' or 'B'")
        return O.Pushforward(phase_map_from_json(_get(d, "map", path, kind="dict"), f"{path}.map", cap), on)
    if kind == "mix":
        lam = _get(d, "lambda", path, kind="num")
        if not 0 <= lam <= 1:
            raise ScenarioValidationError(f"{path}.lambda", "must lie in [0, 1]")
        w0 = measure_from_json(_get(d, "w0", path), f"{path}.w0")
        return O.MixWithFixed(w0, lam, _get(d, "merge_radius", path, 0.0, "nonneg"), cap)
    if kind == "compose":
        ops = _get(d, "ops", path, kind="list")
        if not ops:
            raise ScenarioValidationError(f"{path}.ops", "needs at least one operation")
        return O.Compose([operation_from_json(o, f"{path}.ops[{i}]", cap) for i, o in enumerate(ops)])
    raise ScenarioValidationError(f"{path}.kind", f"unknown operation kind {kind!r}")


def two_body_from_json(d, path) -> TwoBodyParams:
    keys = {"m_A": "m_a", "m_B": "m_b", "alpha": "alpha", "beta_A": "beta_a", "beta_B": "beta_b",
            "lambda": "lam", "softening": "softening"}
    unknown = set(d) - set(keys)
    if unknown:
        raise ScenarioValidationError(path, f"unknown fields {sorted(unknown)}")
    kwargs = {}
    for k, attr in keys.items():
        if k in d:
            kwargs[attr] = _get(d, k, path, kind="num")
    return _guard(path, TwoBodyParams, **kwargs)


def dictionary_from_json(entries, path) -> M.FunctionDictionary:
    if not isinstance(entries, list) or not entries:
        raise ScenarioValidationError(path, "must be a nonempty list")
    out = M.FunctionDictionary()
    for i, e in enumerate(entries):
        ep = f"{path}[{i}]"
        if not isinstance(e, dict):
            raise ScenarioValidationError(ep, "entry must be an object")
        kind = _get(e, "kind", ep)
        factor = _get(e, "factor", ep, "B")
        if factor not in ("A", "B", "full"):
            raise ScenarioValidationError(f"{ep}.factor", "must be 'A', 'B' or 'full'")
        prefix = e.get("prefix")
        if kind == "angular":
            part = M.angular_functions(_get(e, "max_harmonic", ep, 5, "posint"), factor,
                                       _get(e, "coord", ep, 0, "int"), prefix)
        elif kind == "clamp":
            part = M.clamp_functions(_get(e, "dim", ep, kind="posint"), factor,
                                     _get(e, "scale", ep, 1.0, "pos"), prefix)
        elif kind == "gaussian":
            centers = _get(e, "centers", ep, kind="list")
            part = _guard(ep, M.gaussian_functions, centers, _get(e, "width", ep, kind="pos"), factor, prefix)
        else:
            raise ScenarioValidationError(f"{ep}.kind", f"unknown dictionary kind {kind!r}")
        out = _guard(ep, lambda a, b: a + b, out, part)
    return out


def solver_from_json(d, path, cap, dim_b: int) -> SolverConfig:
    radii = _get(d, "tightness_radii", path, [1.0], "list")
    if not radii or not all(_is_num(r) and r > 0 for r in radii) or any(
            b <= a for a, b in zip(radii, radii[1:])):
        raise ScenarioValidationError(f"{path}.tightness_radii", "must be positive and strictly increasing")
    center = _get(d, "tightness_center", path, None)
    if center is not None and (not isinstance(center, list) or len(center) != dim_b):
        raise ScenarioValidationError(f"{path}.tightness_center", f"must be a list of {dim_b} numbers")
    return _guard(path, SolverConfig,
                  n_max=_get(d, "N_max", path, 1000, "posint"),
                  tol=_get(d, "tol", path, 1e-3, "pos"),
                  dictionary=dictionary_from_json(_get(d, "dictionary", path), f"{path}.dictionary"),
                  merge_radius=_get(d, "merge_radius", path, 0.0, "nonneg"),
                  tightness_radii=tuple(radii),
                  tightness_center=None if center is None else tuple(center),
                  record_every=_get(d, "record_every", path, 1, "posint"),
                  max_atoms=cap)


def _build_classical(sc: Scenario, cap: int) -> dict:
    p, path = sc.parameters, "parameters"
    w_a = measure_from_json(_get(p, "w_A", path), f"{path}.w_A")
    w_b0 = measure_from_json(_get(p, "w_B0", path), f"{path}.w_B0")
    for mu, name in ((w_a, "w_A"), (w_b0, "w_B0")):
        if mu.is_product:
            raise ScenarioValidationError(f"{path}.{name}.space", "must be a single factor")
    tau = operation_from_json(_get(p, "operation", path), f"{path}.operation", cap)
    cfg = solver_from_json(sc.solver, "solver", cap, w_b0.space.dim)
    return {"w_A": w_a, "w_B0": w_b0, "tau": tau, "config": cfg}


def _build_orbit(sc: Scenario, cap: int) -> dict:
    p, path = sc.parameters, "parameters"
    ratio, symbolic = parse_time_ratio(_get(p, "time", path), f"{path}.time")
    return {
        "ratio": ratio,
        "symbolic": symbolic,
        "time_text": p["time"],
        "N": _get(p, "N", path, 1000, "posint"),
        "theta0": _get(p, "theta0", path, 0.0, "num"),
        "merge_radius": _get(p, "merge_radius", path, 1e-9, "nonneg"),
        "radius": _get(p, "radius", path, 1.0, "pos"),
        "m_B": _get(p, "m_B", path, 1.0, "pos"),
        "alpha": _get(p, "alpha", path, 1.0, "pos"),
        "max_harmonic": _get(p, "max_harmonic", path, 5, "posint"),
        "max_denominator": _get(p, "max_denominator", path, 10 ** 6, "posint"),
        "classify_tol": _get(p, "classify_tol", path, 1e-12, "pos"),
        "weyl_every": _get(p, "weyl_every", path, 100, "posint"),
        "max_atoms": cap,
    }


def _build_tightness(sc: Scenario, cap: int) -> dict:
    p, path = sc.parameters, "parameters"
    params = two_body_from_json(_get(p, "two_body", path, kind="dict"), f"{path}.two_body")
    w_a = measure_from_json(_get(p, "w_A", path), f"{path}.w_A")
    w_b0 = measure_from_json(_get(p, "w_B0", path), f"{path}.w_B0")
    for mu, name in ((w_a, "w_A"), (w_b0, "w_B0")):
        if mu.is_product or mu.space.dim != 6:
            raise ScenarioValidationError(f"{path}.{name}.space", "must be a 6-dimensional single factor")
    t = _get(p, "t", path, kind="num")
    cfg = _guard(f"{path}.dt", IntegratorConfig, _get(p, "dt", path, kind="pos"),
                 _get(p, "max_steps", path, 10_000_000, "posint"))
    _guard(f"{path}.t", cfg.n_steps, t)
    radii = _get(p, "radii", path, kind="list")
    if not radii or not all(_is_num(r) and r > 0 for r in radii) or any(b <= a for a, b in zip(radii, radii[1:])):
        raise ScenarioValidationError(f"{path}.radii", "must be positive and strictly increasing")
    center = _get(p, "center", path, [0.0] * 6, "list")
    if len(center) != 6 or not all(_is_num(c) for c in center):
        raise ScenarioValidationError(f"{path}.center", "must be 6 numbers")
    n_atoms = len(w_a) * len(w_b0)
    if n_atoms > cap:
        raise ScenarioValidationError(path, f"product has {n_atoms} atoms, cap is {cap}")
    return {
        "params": params,
        "w_A": w_a,
        "w_B0": w_b0,
        "t": t,
        "integrator": cfg,
        "n_iter": _get(p, "n_iter", path, kind="posint"),
        "record_every": _get(p, "record_every", path, 1, "posint"),
        "radii": radii,
        "center": center,
        "tau": O.Pushforward(flow_map(params, t, cfg)),
    }
