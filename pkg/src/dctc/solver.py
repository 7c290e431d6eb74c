"""Averaged product construction of classical D-CTC states.

Given an operation ``tau`` on measures over ``X_A x X_B``, a state ``w_A`` on
``X_A`` and a starting state ``w_B0`` on ``X_B``::

    phi_1     = w_A x w_B0
    phi_{n+1} = w_A x marginal_B(tau(phi_n))
    w_(N)     = (1/N) sum_{n=1..N} phi_n

Every ``w_(N)`` has A-marginal ``w_A`` and its B-marginal moves under ``tau``
by at most ``2 ||f_B|| / N`` on any bounded test function ``f_B``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .dynamics import reduced_satellite_map
from .errors import DimensionError
from .measures import (
    DEFAULT_MAX_ATOMS,
    AtomicMeasure,
    FactorSpace,
    FunctionDictionary,
    convex_combine,
    dirac,
    integrate,
    marginal_b,
    product_measure,
    tightness_profile,
)
from .operations import TWO_PI, Operation, Pushforward, iterate


@dataclass
class SolverConfig:
    n_max: int = 1000
    tol: float = 1e-3
    dictionary: FunctionDictionary = field(default_factory=FunctionDictionary)
    merge_radius: float = 0.0
    tightness_radii: tuple = (1.0,)
    tightness_center: tuple | None = None
    record_every: int = 1
    max_atoms: int = DEFAULT_MAX_ATOMS

    def __post_init__(self):
        if self.n_max < 1:
            raise ValueError("n_max must be at least 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.record_every < 1:
            raise ValueError("record_every must be positive")
        if self.merge_radius < 0:
            raise ValueError("merge_radius must be nonnegative")


@dataclass
class DctcReport:
    """Deviations from both D-CTC conditions, normalized by each entry's bound.

    ``curve`` holds one ``(N, condition_a, condition_b, bound)`` row per checkpoint
    when the report comes from :func:`solve_classical_dctc`.
    """

    condition_a_deviation: float
    condition_b_deviation: float
    dictionary_ids: list
    n_used: int | None = None
    cesaro_bound: float | None = None
    converged: bool | None = None
    tol: float | None = None
    tightness_radii: list | None = None
    tightness_steps: list | None = None
    tightness_table: np.ndarray | None = None
    curve: list = field(default_factory=list)

    def passes(self, tol: float) -> bool:
        return self.condition_a_deviation <= tol and self.condition_b_deviation <= tol

    def to_dict(self) -> dict:
        table = None if self.tightness_table is None else self.tightness_table.tolist()
        return {
            "condition_A_deviation": self.condition_a_deviation,
            "condition_B_deviation": self.condition_b_deviation,
            "N_used": self.n_used,
            "cesaro_bound": self.cesaro_bound,
            "converged": self.converged,
            "tol": self.tol,
            "dictionary_ids": list(self.dictionary_ids),
            "tightness": {
                "radii": self.tightness_radii,
                "steps": self.tightness_steps,
                "mass_outside": table,
            },
        }

    def write_curve_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["N", "condition_A_deviation", "condition_B_deviation", "cesaro_bound"])
            for row in self.curve:
                w.writerow([row[0], *(repr(float(v)) for v in row[1:])])

    def write_tightness_csv(self, path) -> None:
        if self.tightness_table is None:
            raise ValueError("report has no tightness table")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", *(f"r={r!r}" for r in self.tightness_radii)])
            for n, row in zip(self.tightness_steps, self.tightness_table):
                w.writerow([n, *(repr(float(v)) for v in row)])


def _factor_check(w_a, w_b0):
    if w_a.is_product or w_b0.is_product:
        raise DimensionError("w_A and w_B0 must be single-factor measures")


def phi_sequence(tau: Operation, w_a: AtomicMeasure, w_b0: AtomicMeasure, n: int,
                 merge_radius: float = 0.0, max_atoms: int = DEFAULT_MAX_ATOMS) -> list:
    """``[phi_1, ..., phi_n]`` of the product-reconstruction recursion."""
    if n < 1:
        raise ValueError("n must be positive")
    _factor_check(w_a, w_b0)
    phis = [product_measure(w_a, w_b0, max_atoms)]
    while len(phis) < n:
        nxt_b = marginal_b(tau.apply(phis[-1]), merge_radius)
        phis.append(product_measure(w_a, nxt_b, max_atoms))
    return phis


def cesaro_state(phis: Sequence[AtomicMeasure], merge_radius: float = 0.0,
                 max_atoms: int = DEFAULT_MAX_ATOMS) -> AtomicMeasure:
    """Uniform mixture ``(1/N) sum phi_n``."""
    if len(phis) == 0:
        raise ValueError("need at least one state")
    n = len(phis)
    return convex_combine(np.full(n, 1.0 / n), phis, merge_radius, max_atoms)


def cesaro_bound(n: int, f_bound: float = 1.0) -> float:
    if n < 1:
        raise ValueError("N must be positive")
    return 2.0 * f_bound / n


def _split_dictionary(dictionary: FunctionDictionary):
    dict_a, dict_b = dictionary.for_factor("A"), dictionary.for_factor("B")
    if len(dict_a) == 0 or len(dict_b) == 0:
        raise ValueError("the dictionary needs entries on both factor A and factor B")
    return dict_a, dict_b


def _deviations(w, tau_w, w_a, dict_a, dict_b):
    dev_a = max(abs(integrate(w, f) - integrate(w_a, f)) / f.bound for f in dict_a)
    dev_b = max(abs(integrate(tau_w, f) - integrate(w, f)) / f.bound for f in dict_b)
    return dev_a, dev_b


def verify_dctc_classical(w: AtomicMeasure, tau: Operation, w_a: AtomicMeasure,
                          dictionary: FunctionDictionary) -> DctcReport:
    """Evaluate both D-CTC conditions for an arbitrary candidate ``w`` on ``X_A x X_B``."""
    if not w.is_product:
        raise DimensionError("w must live on a product space")
    if w_a.is_product or w_a.space.dim != w.space.dim_a:
        raise DimensionError("w_A does not match the A factor of w")
    dict_a, dict_b = _split_dictionary(dictionary)
    dev_a, dev_b = _deviations(w, tau.apply(w), w_a, dict_a, dict_b)
    return DctcReport(dev_a, dev_b, dictionary.ids)


def solve_classical_dctc(tau: Operation, w_a: AtomicMeasure, w_b0: AtomicMeasure, cfg: SolverConfig):
    """Run the averaged construction until the B-condition deviation is within ``cfg.tol``.

    Deviations are measured at checkpoints ``N = 1, record_every, 2*record_every, ...``
    and ``n_max``; the first checkpoint meeting the tolerance stops the run.
    The report also carries the tightness profile of the B-marginals of
    ``tau^n(w_A x w_B0)``, sampled at the same checkpoints.

    Returns ``(w, report)``; ``report.converged`` is False if ``n_max`` was reached.
    """
    _factor_check(w_a, w_b0)
    dict_a, dict_b = _split_dictionary(cfg.dictionary)
    checkpoints = _checkpoints(cfg.n_max, cfg.record_every)

    phis = [product_measure(w_a, w_b0, cfg.max_atoms)]
    curve = []
    w = None
    dev_a = dev_b = math.inf
    for n_ck in checkpoints:
        while len(phis) < n_ck:
            nxt_b = marginal_b(tau.apply(phis[-1]), cfg.merge_radius)
            phis.append(product_measure(w_a, nxt_b, cfg.max_atoms))
        w = cesaro_state(phis, cfg.merge_radius, cfg.max_atoms)
        dev_a, dev_b = _deviations(w, tau.apply(w), w_a, dict_a, dict_b)
        curve.append((n_ck, dev_a, dev_b, cesaro_bound(n_ck)))
        if dev_b <= cfg.tol:
            break
    n_used = curve[-1][0]

    center = cfg.tightness_center
    if center is None:
        center = np.zeros(w_b0.space.dim)
    steps = [c[0] for c in curve]
    iterates = iterate(tau, phis[0], n_used)
    b_marginals = [marginal_b(iterates[n], cfg.merge_radius) for n in steps]
    table = tightness_profile(b_marginals, cfg.tightness_radii, center)

    report = DctcReport(
        condition_a_deviation=dev_a,
        condition_b_deviation=dev_b,
        dictionary_ids=cfg.dictionary.ids,
        n_used=n_used,
        cesaro_bound=cesaro_bound(n_used),
        converged=dev_b <= cfg.tol,
        tol=cfg.tol,
        tightness_radii=[float(r) for r in cfg.tightness_radii],
        tightness_steps=steps,
        tightness_table=table,
        curve=curve,
    )
    return w, report


def _checkpoints(n_max: int, every: int) -> list:
    pts = sorted({1, n_max, *range(every, n_max + 1, every)})
    return pts


# ---- the satellite example

@dataclass(frozen=True)
class CaseClassification:
    kind: str  # "integer_multiple" | "rational" | "irrational"
    k: int | None
    l: int | None
    residual: float

    def to_dict(self):
        return {"kind": self.kind, "k": self.k, "l": self.l, "residual": self.residual}


def classify_time_ratio(t: float, T: float, max_denominator: int = 10**6, tol: float = 1e-12) -> CaseClassification:
    """Classify ``t / T`` as an integer, a reduced fraction ``k/l``, or irrational within tolerance.

    A float never certifies irrationality: "irrational" means no fraction with
    denominator ``<= max_denominator`` lies within ``tol``.
    """
    if not T > 0:
        raise ValueError("T must be positive")
    if isinstance(t, Fraction) and isinstance(T, (Fraction, int)):
        ratio = Fraction(t) / Fraction(T)
    else:
        ratio = Fraction(float(t) / float(T))
    approx = ratio.limit_denominator(max_denominator)
    residual = float(abs(ratio - approx))
    if residual <= tol:
        if approx.denominator == 1:
            return CaseClassification("integer_multiple", approx.numerator, 1, residual)
        return CaseClassification("rational", approx.numerator, approx.denominator, residual)
    return CaseClassification("irrational", None, None, residual)


def equidistribution_stats(angles, max_harmonic: int = 5):
    """Weyl sums ``|mean(exp(i m theta))|`` for ``m = 1..max_harmonic`` and the star discrepancy.

    The star discrepancy of ``u = theta / 2π mod 1`` uses the sorted-points formula
    ``1/(2N) + max_i |u_(i) - (2i - 1)/(2N)|``.
    """
    theta = np.asarray(angles, dtype=float).reshape(-1)
    if theta.size == 0:
        raise ValueError("need at least one angle")
    m = np.arange(1, max_harmonic + 1)[:, None]
    weyl = np.abs(np.exp(1j * m * theta[None, :]).mean(axis=1))
    u = np.sort(np.remainder(theta / TWO_PI, 1.0))
    n = u.size
    i = np.arange(1, n + 1)
    star = 1.0 / (2 * n) + np.max(np.abs(u - (2 * i - 1) / (2 * n)))
    return weyl, float(star)


def satellite_case(t_over_T, n: int, theta0: float = 0.0, merge_radius: float = 1e-9,
                   max_atoms: int = DEFAULT_MAX_ATOMS):
    """Averaged state for the reduced satellite model after ``n`` steps.

    A is a fixed 1-D placeholder point (the planet at rest); B is the satellite's
    orbital angle. Returns ``(w_N, tau, w_A)``.
    """
    w_a = dirac([0.0], FactorSpace(1, "A", "planet"))
    w_b0 = dirac([float(np.remainder(theta0, TWO_PI))], FactorSpace(1, "B", "satellite angle", (TWO_PI,)))
    tau = Pushforward(reduced_satellite_map(t_over_T), on="B")
    phis = phi_sequence(tau, w_a, w_b0, n, merge_radius, max_atoms)
    return cesaro_state(phis, merge_radius, max_atoms), tau, w_a
