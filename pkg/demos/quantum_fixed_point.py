"""Deutsch fixed points for two qubits.

Build a random two-qubit unitary, solve for the CTC-side state and check both
consistency conditions on the joint state rho_A (x) rho_B.
"""
import warnings

import numpy as np

from dctc import quantum as Q

rng = np.random.default_rng(7)
dims = Q.BipartiteDims(2, 2)

u = Q.random_unitary(4, rng)
rho_a = Q.random_density_matrix(2, rng)

# the averaged iteration needs no contraction assumption
rho_b, diag = Q.solve_deutsch_fixed_point(u, rho_a, np.eye(2) / 2, dims)
print("converged:", diag.converged, "after", diag.n_used, "maps, residual", diag.residual)
print("rho_B* =\n", np.round(rho_b, 6))

report = Q.verify_dctc_quantum(Q.tensor_product(rho_a, rho_b), u, rho_a, dims)
print("delta_1 =", report.delta_1, " delta_2 =", report.delta_2, " passed:", report.passed)

# SWAP copies the chronology-respecting state onto the loop
rho_swap, _ = Q.solve_deutsch_fixed_point(Q.swap(2), rho_a, np.eye(2) / 2, dims)
print("SWAP: ||rho_B* - rho_A|| =", Q.trace_norm(rho_swap - rho_a))

# CNOT (A controls) dephases B in the X basis; every fixed point commutes with X
rho_cnot, _ = Q.solve_deutsch_fixed_point(Q.cnot(), np.diag([0.3, 0.7]), np.diag([1.0, 0.0]), dims)
print("CNOT fixed point =\n", np.round(rho_cnot.real, 10))

# a pure phase rotation on B has many fixed points; plain averaging stalls above tolerance
v = np.kron(np.eye(2), np.diag([1, np.exp(2j)]))
start = np.full((2, 2), 0.5, dtype=complex)
warnings.simplefilter("ignore", Q.NotConvergedWarning)
for restart in (None, 8):
    _, d = Q.solve_deutsch_fixed_point(v, np.eye(2) / 2, start, dims, max_iter=2000, restart_every=restart)
    print(f"restart_every={restart}: residual {d.residual:.2e} after {d.n_used} maps")
