"""The averaged product construction and its 2/N guarantee.

For a circle rotation acting on the B coordinate, measure how far the averaged
state w_(N) moves under one more application of the operation, and compare
with 2 ||f|| / N for cos/sin test functions.
"""
import math

import numpy as np

from dctc import measures as M
from dctc import operations as O
from dctc import solver as S

w_a = M.dirac([0.0], M.FactorSpace(1, "A"))
w_b0 = M.dirac([0.3], M.FactorSpace(1, "B", periods=(2 * math.pi,)))
tau = O.Pushforward(O.circle_rotation(O.parse_angle("golden")), on="B")
dictionary = M.angular_functions(5, "B") + M.clamp_functions(1, "A")

cfg = S.SolverConfig(n_max=500, tol=1e-9, dictionary=dictionary, merge_radius=1e-9, record_every=50)
w, report = S.solve_classical_dctc(tau, w_a, w_b0, cfg)

print(f"{'N':>5} {'dev_A':>10} {'dev_B':>10} {'2/N':>10}")
for n, dev_a, dev_b, bound in report.curve:
    print(f"{n:>5} {dev_a:10.2e} {dev_b:10.2e} {bound:10.2e}")

# mixing with a fixed state contracts, so the B-marginals settle geometrically
w0 = M.AtomicMeasure(M.ProductSpace(1, 1), [0.5, 0.5], [[0.0, 1.0], [0.0, 2.0]])
mix = O.MixWithFixed(w0, 0.25)
phis = S.phi_sequence(mix, w_a, M.dirac([5.0], M.FactorSpace(1, "B")), 30)
mass = [p.weights[p.points[:, 1] == 5.0].sum() for p in phis]
print("mass left on the starting atom:", np.round(mass[:8], 4))
