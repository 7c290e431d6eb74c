"""The three cases of the satellite orbit.

The satellite's angle advances by 2 pi t/T per application. Integer ratios
leave it fixed, a ratio k/l spreads the averaged state over l atoms and an
irrational ratio fills the circle uniformly.
"""
from fractions import Fraction

import numpy as np

from dctc import measures as M
from dctc import solver as S
from dctc.dynamics import satellite_phase_point

golden = (np.sqrt(5) - 1) / 2
for label, ratio, n in (("t = T", Fraction(1), 1000), ("t = T/4", Fraction(1, 4), 1000),
                        ("t = golden T", golden, 10_000)):
    w, tau, w_a = S.satellite_case(ratio, n, theta0=0.3)
    b = M.marginal_b(w, 1e-9)
    weyl, star = S.equidistribution_stats(b.points[:, 0])
    cls = S.classify_time_ratio(float(ratio), 1.0, tol=1e-14)
    print(f"{label:>13}: {cls.kind:>16}, {len(b):>5} atoms, star discrepancy {star:.2e}, "
          f"max Weyl sum {weyl.max():.2e}")
    if len(b) <= 4:
        xy = satellite_phase_point(b.points[:, 0])
        for (theta,), wt, row in zip(b.points, b.weights, xy):
            print(f"{'':>15}angle {theta:.4f} weight {wt:.3f} position ({row[0]:+.3f}, {row[1]:+.3f})")
