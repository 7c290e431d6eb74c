"""Bound versus free two-body motion.

A light satellite orbits a planet. With the star's field switched on the pair
stays in a fixed ball; without it the pair drifts off and the B-marginals lose
all mass from every fixed ball.
"""
import tempfile
from pathlib import Path

import numpy as np

from dctc import cli
from dctc.scenario import parse_scenario

with tempfile.TemporaryDirectory() as out:
    for name in ("kepler-free.json", "kepler-bound.json"):
        sc = parse_scenario(cli.bundled_scenario(name))
        manifest = cli.run(sc, out)
        rows = np.loadtxt(Path(out) / sc.name / "tightness.csv", delimiter=",", skiprows=1, ndmin=2)
        print(f"{sc.name}: {manifest.status}, lambda = {sc.inputs['params'].lam}")
        radii = sc.inputs["radii"]
        for n, *mass in rows[:: max(1, len(rows) // 6)]:
            cells = ", ".join(f"r={r:g}: {m:.2f}" for r, m in zip(radii, mass))
            print(f"  n = {int(n):>4}  mass outside {cells}")
