import csv
import json
import shutil
from fractions import Fraction

import numpy as np
import pytest

from dctc import cli
from dctc.scenario import (
    ScenarioParseError,
    ScenarioValidationError,
    matrix_from_json,
    matrix_to_json,
    parse_scenario,
    parse_scenario_text,
    scenario_digest,
)

MINIMAL_QUANTUM = {
    "schema_version": 1,
    "name": "mini",
    "kind": "quantum_fixpoint",
    "parameters": {"dims": [2, 2], "U": "swap", "rho_A": [[[0.5, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.5, 0.0]]],
                   "rho_B0": {"diag": [1.0, 0.0]}},
}


def write(tmp_path, obj, name="s.json"):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return path


def read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_minimal_quantum_round_trip(tmp_path):
    sc = parse_scenario(write(tmp_path, MINIMAL_QUANTUM))
    assert sc.kind == "quantum_fixpoint" and sc.seed == 0 and sc.outputs == ["report"]
    again = parse_scenario_text(json.dumps(sc.to_dict()))
    assert again.digest == sc.digest
    np.testing.assert_array_equal(again.inputs["U"], sc.inputs["U"])


def test_matrix_json_round_trip():
    m = np.array([[1 + 2j, 0.5], [-1j, 3.0]])
    np.testing.assert_array_equal(matrix_from_json(matrix_to_json(m), "m"), m)


def test_digest_ignores_key_order():
    reordered = dict(reversed(list(MINIMAL_QUANTUM.items())))
    assert scenario_digest(reordered) == scenario_digest(MINIMAL_QUANTUM)
    changed = json.loads(json.dumps(MINIMAL_QUANTUM))
    changed["seed"] = 1
    assert scenario_digest(changed) != scenario_digest(MINIMAL_QUANTUM)


def test_weights_not_summing_to_one_names_atoms():
    bad = cli.bundled_scenario("malformed/weights-sum.json")
    with pytest.raises(ScenarioValidationError) as info:
        parse_scenario(bad)
    assert info.value.path.endswith("atoms")


def test_parse_error_reports_position():
    with pytest.raises(ScenarioParseError, match="line 2, column"):
        parse_scenario_text('{"a": 1,\n  oops}')


def test_non_finite_numbers_rejected():
    with pytest.raises(ScenarioParseError):
        parse_scenario_text('{"schema_version": 1, "x": NaN}')


def test_missing_schema_version():
    obj = dict(MINIMAL_QUANTUM)
    del obj["schema_version"]
    with pytest.raises(ScenarioValidationError, match="schema_version"):
        parse_scenario_text(json.dumps(obj))


@pytest.mark.parametrize("field,value,path", [
    ("name", "", "name"),
    ("seed", -1, "seed"),
    ("outputs", ["movie"], "outputs"),
])
def test_top_level_validation(field, value, path):
    obj = dict(MINIMAL_QUANTUM, **{field: value})
    with pytest.raises(ScenarioValidationError) as info:
        parse_scenario_text(json.dumps(obj))
    assert info.value.path == path


def _orbit(time):
    return {"schema_version": 1, "name": "o", "kind": "orbit_demo", "parameters": {"time": time, "N": 10}}


@pytest.mark.parametrize("time,ratio,kind", [
    ("5/4 T", Fraction(5, 4), "rational"),
    ("3T", Fraction(3), "integer_multiple"),
    ("T", Fraction(1), "integer_multiple"),
    ("golden T", (5 ** 0.5 - 1) / 2, "irrational"),
    (1.25, 1.25, None),
])
def test_orbit_time_parsing(time, ratio, kind):
    sc = parse_scenario_text(json.dumps(_orbit(time)))
    assert sc.inputs["ratio"] == ratio
    assert sc.inputs["symbolic"] == kind


def test_bad_orbit_time():
    with pytest.raises(ScenarioValidationError, match="parameters.time"):
        parse_scenario_text(json.dumps(_orbit("5/4 seconds")))


def test_seed_override_changes_random_inputs():
    obj = dict(MINIMAL_QUANTUM, parameters=dict(MINIMAL_QUANTUM["parameters"], U={"random": True}))
    a = parse_scenario_text(json.dumps(obj))
    b = parse_scenario_text(json.dumps(obj), seed=5)
    c = parse_scenario_text(json.dumps(obj), seed=5)
    assert b.seed == 5
    assert not np.allclose(a.inputs["U"], b.inputs["U"])
    np.testing.assert_array_equal(b.inputs["U"], c.inputs["U"])


def test_malformed_bundle_error_classes():
    expected = {
        "bad-json.json": (ScenarioParseError, 2),
        "unknown-kind.json": (ScenarioValidationError, 3),
        "weights-sum.json": (ScenarioValidationError, 3),
        "non-unitary.json": (ScenarioValidationError, 3),
        "negative-dt.json": (ScenarioValidationError, 3),
    }
    files = {p.name: p for p in cli.bundled_malformed()}
    assert set(files) == set(expected)
    for name, (cls, code) in expected.items():
        with pytest.raises(cls):
            parse_scenario(files[name])
        assert cli.main(["validate", str(files[name])]) == code


def test_swap_run_report(tmp_path):
    code = cli.main(["run", str(cli.bundled_scenario("quantum-swap.json")), "--out", str(tmp_path)])
    assert code == 0
    report = json.loads((tmp_path / "quantum-swap" / "report.json").read_text())
    assert report["schema_version"] == 1
    ver = report["result"]["verification"]
    assert ver["delta_1"] <= 1e-12 and ver["delta_2"] <= 1e-12
    manifest = json.loads((tmp_path / "quantum-swap" / "manifest.json").read_text())
    assert manifest["status"] == "ok" and "curve.csv" in manifest["outputs"]
    assert manifest["digest"] == report["digest"]


def test_run_is_deterministic(tmp_path):
    for name in ("quantum-random.json", "case-ii.json", "classical-golden.json"):
        path = str(cli.bundled_scenario(name))
        cli.main(["run", path, "--out", str(tmp_path / "a")])
        cli.main(["run", path, "--out", str(tmp_path / "b")])
        stem = name[:-5]
        for f in (tmp_path / "a" / stem).iterdir():
            if f.name != "manifest.json":
                assert f.read_bytes() == (tmp_path / "b" / stem / f.name).read_bytes(), f.name


def test_golden_curve_trends_down(tmp_path):
    cli.main(["run", str(cli.bundled_scenario("classical-golden.json")), "--out", str(tmp_path)])
    rows = read_csv(tmp_path / "classical-golden" / "curve.csv")[1:]
    dev = np.array([float(r[2]) for r in rows])
    bound = np.array([float(r[3]) for r in rows])
    assert np.all(dev <= bound)
    # trend: the running maximum of later deviations decreases
    tail_max = np.maximum.accumulate(dev[::-1])[::-1]
    assert np.all(np.diff(tail_max) <= 0)


def test_case_i_and_ii_atoms(tmp_path):
    cli.main(["demo", "case-i", "--out", str(tmp_path)])
    rows = read_csv(tmp_path / "case-i" / "atoms.csv")
    assert rows[0] == ["angle", "weight", "x", "y", "px", "py"]
    assert len(rows) == 2 and float(rows[1][1]) == 1.0

    cli.main(["demo", "case-ii", "--out", str(tmp_path)])
    rows = read_csv(tmp_path / "case-ii" / "atoms.csv")[1:]
    assert len(rows) == 4
    np.testing.assert_allclose([float(r[1]) for r in rows], 0.25, atol=1e-12)


def test_case_iii_many_distinct_angles(tmp_path):
    cli.main(["demo", "case-iii", "--out", str(tmp_path)])
    rows = read_csv(tmp_path / "case-iii" / "atoms.csv")[1:]
    assert len({r[0] for r in rows}) >= 1000
    weyl = read_csv(tmp_path / "case-iii" / "weyl.csv")
    assert weyl[0][0] == "N" and weyl[-1][0] == "10000"
    assert max(float(v) for v in weyl[-1][1:6]) < 0.02


def test_kepler_free_escapes(tmp_path):
    assert cli.main(["run", str(cli.bundled_scenario("kepler-free.json")), "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "kepler-free" / "tightness.csv")
    assert rows[0][1] == "r=10.0"
    assert float(rows[-1][1]) >= 0.99
    traj = read_csv(tmp_path / "kepler-free" / "trajectory.csv")
    assert traj[0][:2] == ["n", "t"] and traj[0][-1] == "E"


def test_env_var_sets_output_root(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUTPUT_ROOT_ENV, str(tmp_path / "env"))
    assert cli.main(["run", str(cli.bundled_scenario("case-i.json"))]) == 0
    assert (tmp_path / "env" / "case-i" / "report.json").exists()


def test_invalid_scenario_writes_nothing(tmp_path):
    bad = cli.bundled_scenario("malformed/non-unitary.json")
    assert cli.main(["run", str(bad), "--out", str(tmp_path)]) == 3
    assert list(tmp_path.iterdir()) == []


def test_non_convergence_exit_code(tmp_path):
    obj = json.loads(cli.bundled_scenario("classical-golden.json").read_text())
    obj["solver"]["N_max"] = 5
    obj["solver"]["tol"] = 1e-9
    code = cli.main(["run", str(write(tmp_path, obj)), "--out", str(tmp_path / "out")])
    assert code == cli.EXIT_NOT_CONVERGED
    manifest = json.loads((tmp_path / "out" / "classical-golden" / "manifest.json").read_text())
    assert manifest["status"] == "not_converged"
    assert (tmp_path / "out" / "classical-golden" / "report.json").exists()


def test_resource_cap_exit_code(tmp_path):
    code = cli.main(["run", str(cli.bundled_scenario("case-iii.json")), "--out", str(tmp_path), "--max-atoms", "100"])
    assert code == cli.EXIT_RESOURCE
    manifest = json.loads((tmp_path / "case-iii" / "manifest.json").read_text())
    assert manifest["status"] == "failed" and manifest["error"]["type"] == "ResourceLimitError"


def test_solver_error_goes_to_failed_manifest(tmp_path):
    # both bodies start at the same point: the unsoftened potential is singular
    obj = {
        "schema_version": 1, "name": "collide", "kind": "tightness_probe",
        "parameters": {
            "two_body": {"alpha": 1.0},
            "w_A": {"space": {"dim": 6, "factor": "A"}, "atoms": [{"w": 1.0, "x": [0, 0, 0, 0, 0, 0]}]},
            "w_B0": {"space": {"dim": 6, "factor": "B"}, "atoms": [{"w": 1.0, "x": [0, 0, 0, 0, 1, 0]}]},
            "t": 0.1, "dt": 0.01, "n_iter": 2, "radii": [1.0],
        },
    }
    code = cli.main(["run", str(write(tmp_path, obj)), "--out", str(tmp_path / "out")])
    assert code == cli.EXIT_FAILURE
    manifest = json.loads((tmp_path / "out" / "collide" / "manifest.json").read_text())
    assert manifest["error"]["type"] == "ExcludedConfigurationError"
    assert manifest["error"]["indices"] == [0]


def test_batch_runs_in_parallel(tmp_path):
    src = tmp_path / "scenarios"
    src.mkdir()
    for name in ("case-i.json", "case-ii.json", "quantum-swap.json"):
        shutil.copy(cli.bundled_scenario(name), src / name)
    assert cli.main(["batch", str(src), "--jobs", "2", "--out", str(tmp_path / "out")]) == 0
    for stem in ("case-i", "case-ii", "quantum-swap"):
        assert (tmp_path / "out" / stem / "report.json").exists()


def test_demo_names():
    assert sorted(cli.DEMOS) == ["case-i", "case-ii", "case-iii", "kepler-tightness"]
    for files in cli.DEMOS.values():
        for f in files:
            assert cli.bundled_scenario(f).exists()
