"""Command-line front end: ``dctc run|batch|validate|demo``.

Each run writes into ``<out>/<scenario name>/``:

* ``report.json``: deterministic results (no timestamps), sorted keys,
* ``manifest.json``: scenario digest, tool version, seed, timestamps, file list,
* the requested CSV files (``curve.csv``, ``atoms.csv``, ``tightness.csv``,
  ``weyl.csv``, ``trajectory.csv``).

Exit codes: 0 success, 1 other failure, 2 parse error, 3 validation error,
4 solver did not converge, 5 resource cap hit.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from . import measures as M
from . import quantum as Q
from .dynamics import hamiltonian, satellite_phase_point
from .errors import ResourceLimitError
from .operations import TWO_PI, iterate
from .scenario import (
    SCHEMA_VERSION,
    Scenario,
    ScenarioError,
    ScenarioParseError,
    ScenarioValidationError,
    matrix_to_json,
    parse_scenario,
)
from .solver import (
    cesaro_bound,
    classify_time_ratio,
    equidistribution_stats,
    satellite_case,
    solve_classical_dctc,
    verify_dctc_classical,
)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_NOT_CONVERGED = 4
EXIT_RESOURCE = 5

OUTPUT_ROOT_ENV = "DCTC_OUTPUT_ROOT"
DEFAULT_OUTPUT_ROOT = "dctc-output"

DEMOS = {
    "case-i": ["case-i.json"],
    "case-ii": ["case-ii.json"],
    "case-iii": ["case-iii.json"],
    "kepler-tightness": ["kepler-free.json", "kepler-bound.json"],
}


@dataclass
class RunManifest:
    scenario: str
    digest: str
    tool_version: str
    seed: int
    started: str
    finished: str
    outputs: list = field(default_factory=list)
    status: str = "ok"
    exit_code: int = EXIT_OK
    error: dict | None = None

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "digest": self.digest,
            "tool_version": self.tool_version,
            "seed": self.seed,
            "started": self.started,
            "finished": self.finished,
            "outputs": list(self.outputs),
            "status": self.status,
            "exit_code": self.exit_code,
            "error": self.error,
        }


@dataclass
class RunResult:
    """What a pipeline hands to :func:`emit_plot_data` and the report writer."""

    report: dict
    converged: bool | None = None
    curve: tuple | None = None  # (header, rows)
    atoms: tuple | None = None
    tightness: tuple | None = None
    weyl: tuple | None = None
    trajectory: tuple | None = None


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="milliseconds")


def _jsonable(obj):
    """Plain JSON types only; non-finite floats become strings so output stays valid JSON."""
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if isinstance(obj, Fraction):
        return str(obj)
    return obj


def dumps_report(report: dict) -> str:
    return json.dumps(_jsonable(report), sort_keys=True, indent=2) + "\n"


# ---- pipelines

def _run_quantum(sc: Scenario) -> RunResult:
    p = sc.inputs
    dims = p["dims"]
    rho_b, diag = Q.solve_deutsch_fixed_point(p["U"], p["rho_A"], p["rho_B0"], dims, p["max_iter"],
                                              p["tol"], p["restart_every"])
    full = Q.tensor_product(p["rho_A"], rho_b)
    check = Q.verify_dctc_quantum(full, p["U"], p["rho_A"], dims, p["verify_tol"])
    report = {
        "dims": [dims.d_a, dims.d_b],
        "converged": diag.converged,
        "N_used": diag.n_used,
        "residual": diag.residual,
        "restarts": diag.restarts,
        "tol": p["tol"],
        "rho_B": matrix_to_json(rho_b),
        "verification": {**check.to_dict(), "passed": check.passed},
    }
    rows = [(n + 1, repr(float(r))) for n, r in enumerate(diag.residuals)]
    return RunResult(report, converged=diag.converged and check.passed,
                     curve=(["n", "epoch_residual"], rows))


def _atom_rows(mu: M.AtomicMeasure):
    header = ["w", *(f"x{i}" for i in range(mu.space.dim))]
    rows = [[repr(float(w)), *(repr(float(c)) for c in x)] for w, x in zip(mu.weights, mu.points)]
    return header, rows


def _run_classical(sc: Scenario) -> RunResult:
    p = sc.inputs
    cfg = p["config"]
    w, rep = solve_classical_dctc(p["tau"], p["w_A"], p["w_B0"], cfg)
    b = M.marginal_b(w, cfg.merge_radius)
    report = rep.to_dict()
    report["marginal_B_atoms"] = len(b)
    curve_rows = [[n, repr(float(a)), repr(float(bb)), repr(float(c))] for n, a, bb, c in rep.curve]
    tight_rows = [[n, *(repr(float(v)) for v in row)] for n, row in zip(rep.tightness_steps, rep.tightness_table)]
    return RunResult(
        report,
        converged=rep.converged,
        curve=(["N", "condition_A_deviation", "condition_B_deviation", "cesaro_bound"], curve_rows),
        atoms=_atom_rows(b),
        tightness=(["n", *(f"r={r!r}" for r in rep.tightness_radii)], tight_rows),
    )


def _visited_angles(tau, theta0, n):
    x = np.array([[float(np.remainder(theta0, TWO_PI))]])
    out = np.empty(n)
    for i in range(n):
        out[i] = x[0, 0]
        x = tau.phase_map(x)
    return out


def _run_orbit(sc: Scenario) -> RunResult:
    p = sc.inputs
    n = p["N"]
    w, tau, w_a = satellite_case(p["ratio"], n, p["theta0"], p["merge_radius"], p["max_atoms"])
    if p["symbolic"] is not None:
        r = Fraction(p["ratio"]) if p["symbolic"] != "irrational" else None
        cls = {"kind": p["symbolic"], "k": None if r is None else r.numerator,
               "l": None if r is None else r.denominator, "residual": 0.0, "source": "symbolic"}
    else:
        cls = {**classify_time_ratio(p["ratio"], 1.0, p["max_denominator"], p["classify_tol"]).to_dict(),
               "source": "decimal"}

    b = M.marginal_b(w, p["merge_radius"])
    dictionary = M.angular_functions(p["max_harmonic"], "B") + M.clamp_functions(1, "A")
    check = verify_dctc_classical(w, tau, w_a, dictionary)
    angles = _visited_angles(tau, p["theta0"], n)
    weyl, star = equidistribution_stats(angles, p["max_harmonic"])
    report = {
        "time": p["time_text"],
        "t_over_T": float(p["ratio"]),
        "classification": cls,
        "N": n,
        "marginal_B_atoms": len(b),
        "marginal_B": [{"w": float(wt), "angle": float(x[0])} for wt, x in zip(b.weights, b.points)]
        if len(b) <= 64 else None,
        "condition_A_deviation": check.condition_a_deviation,
        "condition_B_deviation": check.condition_b_deviation,
        "cesaro_bound": cesaro_bound(n),
        "dictionary_ids": check.dictionary_ids,
        "weyl_sums": weyl,
        "star_discrepancy": star,
    }

    pts = satellite_phase_point(b.points[:, 0], p["radius"], p["m_B"], p["alpha"])
    atom_rows = [[repr(float(th)), repr(float(wt)), *(repr(float(c)) for c in row)]
                 for th, wt, row in zip(b.points[:, 0], b.weights, pts)]

    m = np.arange(1, p["max_harmonic"] + 1)[:, None]
    partial = np.cumsum(np.exp(1j * m * angles[None, :]), axis=1)
    weyl_rows = []
    for k in sorted({*range(p["weyl_every"], n + 1, p["weyl_every"]), n}):
        sums = np.abs(partial[:, k - 1]) / k
        _, star_k = equidistribution_stats(angles[:k], 1)
        weyl_rows.append([k, *(repr(float(s)) for s in sums), repr(star_k)])
    return RunResult(
        report,
        atoms=(["angle", "weight", "x", "y", "px", "py"], atom_rows),
        weyl=(["N", *(f"weyl_m{j}" for j in range(1, p["max_harmonic"] + 1)), "star_discrepancy"], weyl_rows),
    )


def _run_tightness(sc: Scenario) -> RunResult:
    p = sc.inputs
    mu0 = M.product_measure(p["w_A"], p["w_B0"])
    states = iterate(p["tau"], mu0, p["n_iter"])
    steps = sorted({*range(0, p["n_iter"] + 1, p["record_every"]), p["n_iter"]})
    b_marg = [M.marginal_b(states[n]) for n in steps]
    table = M.tightness_profile(b_marg, p["radii"], p["center"])
    params = p["params"]
    e0 = hamiltonian(params, states[0].points)
    e_end = hamiltonian(params, states[-1].points)
    drift = np.abs(e_end - e0) / np.maximum(np.abs(e0), 1e-300)
    report = {
        "n_iter": p["n_iter"],
        "t": p["t"],
        "params": params.to_dict(),
        "radii": p["radii"],
        "center": p["center"],
        "steps": steps,
        "mass_outside": table,
        "final_mass_outside": table[-1],
        "sup_mass_outside": table.max(axis=0),
        "max_relative_energy_drift": float(drift.max()),
    }
    tight_rows = [[n, *(repr(float(v)) for v in row)] for n, row in zip(steps, table)]
    cols = ["n", "t"] + [f"{nm}{ax}" for nm in ("qA", "pA", "qB", "pB") for ax in "xyz"] + ["E"]
    traj_rows = []
    for n in steps:
        x = states[n].points[0]
        traj_rows.append([n, repr(n * float(p["t"])), *(repr(float(c)) for c in x),
                          repr(float(hamiltonian(params, x)))])
    return RunResult(
        report,
        tightness=(["n", *(f"r={r!r}" for r in p["radii"])], tight_rows),
        trajectory=(cols, traj_rows),
    )


PIPELINES = {
    "quantum_fixpoint": _run_quantum,
    "classical_fixpoint": _run_classical,
    "orbit_demo": _run_orbit,
    "tightness_probe": _run_tightness,
}


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def emit_plot_data(result: RunResult, out_dir, outputs) -> list:
    """Write the requested CSV artifacts that the pipeline produced; returns file names."""
    out_dir = Path(out_dir)
    written = []
    for name in ("curve", "atoms", "tightness", "weyl", "trajectory"):
        data = getattr(result, name)
        if name in outputs and data is not None:
            _write_csv(out_dir / f"{name}.csv", *data)
            written.append(f"{name}.csv")
    return written


def run(scenario: Scenario, out_root=None) -> RunManifest:
    """Execute the scenario's pipeline and write its artifacts; never raises on solver failure."""
    out_dir = Path(output_root(out_root)) / scenario.name
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(scenario.name, scenario.digest, __version__, scenario.seed, _now(), "")
    try:
        result = PIPELINES[scenario.kind](scenario)
        report = {
            "schema_version": SCHEMA_VERSION,
            "scenario": scenario.name,
            "kind": scenario.kind,
            "seed": scenario.seed,
            "digest": scenario.digest,
            "tool_version": __version__,
            "result": result.report,
        }
        (out_dir / "report.json").write_text(dumps_report(report))
        manifest.outputs = ["report.json", *emit_plot_data(result, out_dir, scenario.outputs)]
        if result.converged is False:
            manifest.status, manifest.exit_code = "not_converged", EXIT_NOT_CONVERGED
    except ResourceLimitError as exc:
        manifest.status, manifest.exit_code = "failed", EXIT_RESOURCE
        manifest.error = {"type": type(exc).__name__, "message": str(exc)}
    except Exception as exc:  # the manifest is the diagnostic channel
        manifest.status, manifest.exit_code = "failed", EXIT_FAILURE
        manifest.error = {"type": type(exc).__name__, "message": str(exc),
                          "indices": list(getattr(exc, "indices", ()))}
    manifest.finished = _now()
    (out_dir / "manifest.json").write_text(json.dumps(_jsonable(manifest.to_dict()), indent=2) + "\n")
    return manifest


def output_root(explicit=None) -> str:
    if explicit:
        return str(explicit)
    return os.environ.get(OUTPUT_ROOT_ENV) or DEFAULT_OUTPUT_ROOT


def bundled_scenario(filename: str) -> Path:
    return Path(str(resources.files("dctc") / "scenarios" / filename))


def bundled_demos() -> list:
    return sorted(p for p in Path(str(resources.files("dctc") / "scenarios")).glob("*.json"))


def bundled_malformed() -> list:
    return sorted(Path(str(resources.files("dctc") / "scenarios" / "malformed")).glob("*.json"))


# ---- command handlers

def _load(path, args):
    return parse_scenario(path, seed=args.seed, max_atoms=args.max_atoms)


def _report_error(exc) -> int:
    if isinstance(exc, ScenarioError):
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    if isinstance(exc, ResourceLimitError):
        print(f"ResourceLimitError: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    raise exc


def _run_file(path, args) -> int:
    try:
        sc = _load(path, args)
    except (ScenarioError, ResourceLimitError) as exc:
        return _report_error(exc)
    manifest = run(sc, args.out)
    where = Path(output_root(args.out)) / sc.name
    msg = f"{sc.name}: {manifest.status} -> {where}"
    if manifest.error:
        msg += f" ({manifest.error['type']}: {manifest.error['message']})"
    print(msg)
    return manifest.exit_code


def cmd_run(args) -> int:
    return _run_file(args.scenario, args)


def cmd_validate(args) -> int:
    try:
        sc = _load(args.scenario, args)
    except (ScenarioError, ResourceLimitError) as exc:
        return _report_error(exc)
    print(f"ok: {sc.name} ({sc.kind}), digest {sc.digest[:16]}")
    return EXIT_OK


def _batch_worker(job):
    path, ns = job
    return str(path), _run_file(path, argparse.Namespace(**ns))


def cmd_batch(args) -> int:
    files = sorted(Path(args.directory).glob("*.json"))
    if not files:
        print(f"no scenario files in {args.directory}", file=sys.stderr)
        return EXIT_FAILURE
    ns = {"out": args.out, "seed": args.seed, "max_atoms": args.max_atoms}
    jobs = [(f, ns) for f in files]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_batch_worker, jobs))
    else:
        results = [_batch_worker(j) for j in jobs]
    return max(code for _, code in results)


def cmd_demo(args) -> int:
    codes = [_run_file(bundled_scenario(f), args) for f in DEMOS[args.name]]
    return max(codes)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dctc", description="Run D-CTC fixed-point scenarios.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help=f"output root (default ${OUTPUT_ROOT_ENV} or ./{DEFAULT_OUTPUT_ROOT})")
    common.add_argument("--seed", type=_u64, help="override the scenario seed")
    common.add_argument("--max-atoms", type=_positive_int, dest="max_atoms",
                        help=f"atom cap per measure (default {M.DEFAULT_MAX_ATOMS})")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", parents=[common], help="run one scenario file")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("batch", parents=[common], help="run every *.json scenario in a directory")
    p.add_argument("directory")
    p.add_argument("--jobs", type=_positive_int, default=1, help="parallel worker processes")
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("validate", parents=[common], help="parse and validate without running")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("demo", parents=[common], help="run a bundled demo")
    p.add_argument("name", choices=sorted(DEMOS))
    p.set_defaults(func=cmd_demo)
    return parser


def _u64(text):
    v = int(text)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
