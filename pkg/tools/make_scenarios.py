"""Regenerate the bundled scenario files under src/dctc/scenarios/."""
import json
import math
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "src" / "dctc" / "scenarios"
TWO_PI = 2 * math.pi


def dump(name, obj):
    (OUT / name).write_text(json.dumps(obj, indent=2) + "\n")


def orbit(name, time, n, theta0=0.3):
    return {
        "schema_version": 1, "name": name, "kind": "orbit_demo", "seed": 0,
        "parameters": {"time": time, "N": n, "theta0": theta0, "merge_radius": 1e-9,
                       "radius": 1.0, "m_B": 1.0, "alpha": 1.0, "max_harmonic": 5, "weyl_every": 100},
        "outputs": ["report", "atoms", "weyl"],
    }


def phase_atoms(center_q, center_v, m, r, v_rel, n):
    atoms = []
    for j in range(n):
        a = TWO_PI * j / n
        q = [center_q[0] + r * math.cos(a), center_q[1] + r * math.sin(a), 0.0]
        v = [center_v[0] - v_rel * math.sin(a), center_v[1] + v_rel * math.cos(a), 0.0]
        atoms.append({"w": 1.0 / n, "x": q + [m * c for c in v]})
    return atoms


def kepler(name, lam, n_iter, radii, planet_q, planet_v, record_every):
    m_a, m_b = 1.0, 1e-3
    return {
        "schema_version": 1, "name": name, "kind": "tightness_probe", "seed": 0,
        "parameters": {
            "two_body": {"m_A": m_a, "m_B": m_b, "alpha": 1e-3, "beta_A": 1000.0, "beta_B": 1.0, "lambda": lam},
            "w_A": {"space": {"dim": 6, "factor": "A", "label": "planet"},
                    "atoms": [{"w": 1.0, "x": list(planet_q) + [m_a * c for c in planet_v]}]},
            "w_B0": {"space": {"dim": 6, "factor": "B", "label": "satellite"},
                     "atoms": phase_atoms(planet_q, planet_v, m_b, 1.0, 1.0, 4)},
            "t": TWO_PI, "dt": TWO_PI / 100, "n_iter": n_iter, "record_every": record_every,
            "radii": radii,
        },
        "outputs": ["report", "tightness", "trajectory"],
    }


def main():
    (OUT / "malformed").mkdir(parents=True, exist_ok=True)
    dump("case-i.json", orbit("case-i", "1T", 1000))
    dump("case-ii.json", orbit("case-ii", "1/4 T", 1000))
    dump("case-iii.json", orbit("case-iii", "golden T", 10000))
    dump("kepler-free.json", kepler("kepler-free", 0.0, 50, [10.0, 100.0], (0.0, 0.0, 0.0), (0.5, 0.0, 0.0), 1))
    dump("kepler-bound.json", kepler("kepler-bound", 1.0, 1000, [150.0], (100.0, 0.0, 0.0),
                                     (0.0, math.sqrt(10.0), 0.0), 10))

    dump("quantum-swap.json", {
        "schema_version": 1, "name": "quantum-swap", "kind": "quantum_fixpoint", "seed": 0,
        "parameters": {"dims": [2, 2], "U": "swap",
                       "rho_A": [[[0.75, 0.0], [0.25, -0.125]], [[0.25, 0.125], [0.25, 0.0]]],
                       "rho_B0": {"diag": [1.0, 0.0]}},
        "outputs": ["report", "curve"],
    })
    dump("quantum-random.json", {
        "schema_version": 1, "name": "quantum-random", "kind": "quantum_fixpoint", "seed": 20240611,
        "parameters": {"dims": [2, 2], "U": {"random": True}, "rho_A": {"random": True},
                       "rho_B0": {"diag": [0.5, 0.5]}, "tol": 1e-10},
        "outputs": ["report", "curve"],
    })

    angle_space_a = {"dim": 1, "factor": "A", "label": "fixed"}
    angle_space_b = {"dim": 1, "factor": "B", "label": "angle", "periods": [TWO_PI]}
    dictionary = [{"kind": "angular", "factor": "B", "max_harmonic": 5}, {"kind": "clamp", "factor": "A", "dim": 1}]
    dump("classical-golden.json", {
        "schema_version": 1, "name": "classical-golden", "kind": "classical_fixpoint", "seed": 0,
        "parameters": {
            "w_A": {"space": angle_space_a, "atoms": [{"w": 1.0, "x": [0.0]}]},
            "w_B0": {"space": angle_space_b, "atoms": [{"w": 1.0, "x": [0.3]}]},
            "operation": {"kind": "pushforward", "on": "B", "map": {"kind": "rotation", "angle": "golden"}},
        },
        "solver": {"N_max": 1000, "tol": 2e-3, "merge_radius": 1e-9, "record_every": 10,
                   "tightness_radii": [1.0, 7.0], "dictionary": dictionary},
        "outputs": ["report", "curve", "atoms", "tightness"],
    })
    prod_space = {"dim_A": 1, "dim_B": 1, "label": "fixed x angle", "periods": [None, TWO_PI]}
    dump("classical-mixing.json", {
        "schema_version": 1, "name": "classical-mixing", "kind": "classical_fixpoint", "seed": 0,
        "parameters": {
            "w_A": {"space": angle_space_a, "atoms": [{"w": 1.0, "x": [0.0]}]},
            "w_B0": {"space": angle_space_b, "atoms": [{"w": 1.0, "x": [0.0]}]},
            "operation": {"kind": "compose", "ops": [
                {"kind": "pushforward", "on": "B", "map": {"kind": "rotation", "angle": "1/3"}},
                {"kind": "mix", "lambda": 0.25, "merge_radius": 1e-9,
                 "w0": {"space": prod_space, "atoms": [{"w": 0.5, "x": [0.0, 1.0]}, {"w": 0.5, "x": [0.0, 4.0]}]}},
            ]},
        },
        "solver": {"N_max": 1000, "tol": 2e-3, "merge_radius": 1e-9, "record_every": 10,
                   "tightness_radii": [1.0, 7.0], "dictionary": dictionary},
        "outputs": ["report", "curve", "atoms", "tightness"],
    })

    bad = OUT / "malformed"
    (bad / "bad-json.json").write_text('{"schema_version": 1, "name": "bad-json",\n  "kind": "orbit_demo",,\n}\n')
    dump("malformed/unknown-kind.json", {"schema_version": 1, "name": "unknown-kind", "kind": "wormhole",
                                         "parameters": {}})
    dump("malformed/weights-sum.json", {
        "schema_version": 1, "name": "weights-sum", "kind": "classical_fixpoint",
        "parameters": {
            "w_A": {"space": angle_space_a, "atoms": [{"w": 1.0, "x": [0.0]}]},
            "w_B0": {"space": angle_space_b, "atoms": [{"w": 0.5, "x": [0.0]}, {"w": 0.4, "x": [1.0]}]},
            "operation": {"kind": "mix", "lambda": 0.5,
                          "w0": {"space": prod_space, "atoms": [{"w": 1.0, "x": [0.0, 1.0]}]}},
        },
        "solver": {"dictionary": dictionary},
    })
    dump("malformed/non-unitary.json", {
        "schema_version": 1, "name": "non-unitary", "kind": "quantum_fixpoint",
        "parameters": {"dims": [1, 2], "U": [[[1.0, 0.0], [1.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]],
                       "rho_A": [[[1.0, 0.0]]], "rho_B0": {"diag": [1.0, 0.0]}},
    })
    dump("malformed/negative-dt.json", {
        "schema_version": 1, "name": "negative-dt", "kind": "tightness_probe",
        "parameters": {
            "two_body": {"m_A": 1.0, "m_B": 1.0, "alpha": 1.0},
            "w_A": {"space": {"dim": 6, "factor": "A"}, "atoms": [{"w": 1.0, "x": [0, 0, 0, 0, 0, 0]}]},
            "w_B0": {"space": {"dim": 6, "factor": "B"}, "atoms": [{"w": 1.0, "x": [1, 0, 0, 0, 1, 0]}]},
            "t": 1.0, "dt": -0.01, "n_iter": 10, "radii": [10.0],
        },
    })


if __name__ == "__main__":
    main()
