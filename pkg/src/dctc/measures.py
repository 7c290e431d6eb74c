"""Finitely supported probability measures on (product) phase spaces.

An :class:`AtomicMeasure` is a list of weighted points. On a
:class:`ProductSpace` the first ``dim_a`` coordinates of every point belong to
factor A and the remaining ``dim_b`` to factor B.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .errors import DimensionError, ResourceLimitError

NORMALIZATION_TOL = 1e-12
DEFAULT_MAX_ATOMS = 1_000_000


def _norm_periods(periods, dim):
    if periods is None:
        return None
    periods = tuple(None if p is None else float(p) for p in periods)
    if len(periods) != dim:
        raise DimensionError(f"need {dim} period entries, got {len(periods)}")
    if any(p is not None and not p > 0 for p in periods):
        raise ValueError("periods must be positive")
    return periods if any(p is not None for p in periods) else None


@dataclass(frozen=True)
class ProductSpace:
    """``X_A x X_B``; ``periods`` optionally marks periodic coordinates (e.g. angles)."""

    dim_a: int
    dim_b: int
    label: str = ""
    periods: tuple | None = None

    def __post_init__(self):
        if self.dim_a < 1 or self.dim_b < 1:
            raise DimensionError("factor dimensions must be positive")
        object.__setattr__(self, "periods", _norm_periods(self.periods, self.dim))

    @property
    def dim(self) -> int:
        return self.dim_a + self.dim_b

    def factor_periods(self, factor):
        if self.periods is None:
            return None
        return self.periods[: self.dim_a] if factor == "A" else self.periods[self.dim_a:]

    def to_dict(self) -> dict:
        d = {"dim_A": self.dim_a, "dim_B": self.dim_b, "label": self.label}
        if self.periods is not None:
            d["periods"] = list(self.periods)
        return d


@dataclass(frozen=True)
class FactorSpace:
    """A single factor. ``factor`` is ``"A"``, ``"B"`` or ``None`` (unlabelled)."""

    dim: int
    factor: str | None = None
    label: str = ""
    periods: tuple | None = None

    def __post_init__(self):
        if self.dim < 1:
            raise DimensionError("dimension must be positive")
        if self.factor not in (None, "A", "B"):
            raise ValueError(f"factor must be 'A', 'B' or None, got {self.factor!r}")
        object.__setattr__(self, "periods", _norm_periods(self.periods, self.dim))

    def to_dict(self) -> dict:
        d = {"dim": self.dim, "factor": self.factor, "label": self.label}
        if self.periods is not None:
            d["periods"] = list(self.periods)
        return d


def same_geometry(s, t) -> bool:
    """Spaces agree up to their labels."""
    if type(s) is not type(t) or s.periods != t.periods:
        return False
    if isinstance(s, ProductSpace):
        return (s.dim_a, s.dim_b) == (t.dim_a, t.dim_b)
    return (s.dim, s.factor) == (t.dim, t.factor)


def space_from_dict(d: dict):
    periods = d.get("periods")
    if "dim_A" in d or "dim_B" in d:
        return ProductSpace(int(d["dim_A"]), int(d["dim_B"]), d.get("label", ""), periods)
    return FactorSpace(int(d["dim"]), d.get("factor"), d.get("label", ""), periods)


class AtomicMeasure:
    """Immutable weighted point cloud with total weight one.

    Parameters
    ----------
    space : ProductSpace or FactorSpace
    weights : (n,) array_like of nonnegative reals summing to 1
    points : (n, dim) array_like of finite reals
    """

    __slots__ = ("space", "weights", "points")

    def __init__(self, space, weights, points):
        weights = np.array(weights, dtype=float).reshape(-1)
        points = np.array(points, dtype=float)
        if points.ndim == 1:
            points = points.reshape(len(weights), -1) if len(weights) else points.reshape(0, space.dim)
        if points.shape != (len(weights), space.dim):
            raise DimensionError(
                f"points have shape {points.shape}, expected ({len(weights)}, {space.dim})"
            )
        if len(weights) == 0:
            raise ValueError("a probability measure needs at least one atom")
        if not np.all(np.isfinite(points)):
            raise ValueError("atom coordinates must be finite")
        if not np.all(np.isfinite(weights)) or np.any(weights < 0):
            raise ValueError("atom weights must be finite and nonnegative")
        total = weights.sum()
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise ValueError(f"atom weights sum to {total!r}, expected 1")
        weights.setflags(write=False)
        points.setflags(write=False)
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "points", points)

    def __setattr__(self, name, value):
        raise AttributeError("AtomicMeasure is immutable")

    def __len__(self):
        return len(self.weights)

    def __repr__(self):
        return f"AtomicMeasure({self.space!r}, n_atoms={len(self)})"

    @property
    def is_product(self) -> bool:
        return isinstance(self.space, ProductSpace)

    def coords(self, factor: str | None) -> np.ndarray:
        """Coordinates read by a function on ``factor`` ('A', 'B', 'full' or None)."""
        if factor in (None, "full"):
            return self.points
        if self.is_product:
            if factor == "A":
                return self.points[:, : self.space.dim_a]
            if factor == "B":
                return self.points[:, self.space.dim_a:]
        elif self.space.factor in (None, factor):
            return self.points
        raise DimensionError(f"a function on factor {factor!r} cannot be integrated on {self.space}")

    def to_dict(self) -> dict:
        return {
            "space": self.space.to_dict(),
            "atoms": [{"w": float(w), "x": [float(c) for c in x]} for w, x in zip(self.weights, self.points)],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AtomicMeasure":
        space = space_from_dict(d["space"])
        atoms = d["atoms"]
        weights = [a["w"] for a in atoms]
        points = np.array([a["x"] for a in atoms], dtype=float).reshape(len(atoms), -1)
        return cls(space, weights, points)

    def write_csv(self, path, columns: Sequence[str] | None = None) -> None:
        """One row per atom: weight followed by the coordinates."""
        if columns is None:
            columns = [f"x{i}" for i in range(self.space.dim)]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["w", *columns])
            for w, x in zip(self.weights, self.points):
                writer.writerow([repr(float(w)), *(repr(float(c)) for c in x)])


def _normalized(space, weights, points) -> AtomicMeasure:
    weights = np.asarray(weights, dtype=float)
    return AtomicMeasure(space, weights / weights.sum(), points)


def _check_cap(n: int, max_atoms: int) -> None:
    if n > max_atoms:
        raise ResourceLimitError(f"measure would have {n} atoms, cap is {max_atoms}")


def dirac(point, space) -> AtomicMeasure:
    point = np.asarray(point, dtype=float).reshape(-1)
    if point.shape[0] != space.dim:
        raise DimensionError(f"point has dimension {point.shape[0]}, space has {space.dim}")
    return AtomicMeasure(space, [1.0], point.reshape(1, -1))


def uniform(points, space) -> AtomicMeasure:
    points = np.asarray(points, dtype=float).reshape(-1, space.dim)
    n = len(points)
    return AtomicMeasure(space, np.full(n, 1.0 / n), points)


def product_measure(mu_a: AtomicMeasure, mu_b: AtomicMeasure, max_atoms: int = DEFAULT_MAX_ATOMS,
                    label: str = "") -> AtomicMeasure:
    """Product of two single-factor measures; atoms ordered A-major."""
    for mu, name in ((mu_a, "mu_A"), (mu_b, "mu_B")):
        if mu.is_product:
            raise DimensionError(f"{name} must live on a single factor")
    if mu_a.space.factor == "B" or mu_b.space.factor == "A":
        raise DimensionError("factor labels are swapped")
    na, nb = len(mu_a), len(mu_b)
    _check_cap(na * nb, max_atoms)
    pa = mu_a.space.periods or (None,) * mu_a.space.dim
    pb = mu_b.space.periods or (None,) * mu_b.space.dim
    space = ProductSpace(mu_a.space.dim, mu_b.space.dim, label, pa + pb)
    weights = np.outer(mu_a.weights, mu_b.weights).reshape(-1)
    points = np.hstack([np.repeat(mu_a.points, nb, axis=0), np.tile(mu_b.points, (na, 1))])
    return _normalized(space, weights, points)


def merge_atoms(mu: AtomicMeasure, radius: float = 0.0) -> AtomicMeasure:
    """Merge atoms closer than ``radius`` (coincident atoms when ``radius == 0``).

    Groups are connected components of the "within radius" graph, with
    distances taken modulo the period on periodic coordinates. Each group
    becomes one atom at its weight-averaged location; groups keep the order of
    their first member.
    """
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    n = len(mu)
    if n == 1:
        return mu
    periods = mu.space.periods
    if radius == 0:
        _, first, labels = np.unique(mu.points, axis=0, return_index=True, return_inverse=True)
        labels = labels.reshape(-1)
    else:
        # collapse exact duplicates first; large coincident clusters would flood the pair list
        uniq, inv = np.unique(mu.points, axis=0, return_inverse=True)
        inv = inv.reshape(-1)
        data, box = uniq, None
        if periods is not None:
            data, box = _periodic_box(uniq, periods, radius)
        m = len(uniq)
        pairs = cKDTree(data, boxsize=box).query_pairs(radius, output_type="ndarray")
        graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(m, m))
        _, comp = connected_components(graph, directed=False)
        labels = comp[inv]
        first = np.full(labels.max() + 1, n)
        np.minimum.at(first, labels, np.arange(n))
    n_groups = len(first)
    if n_groups == n:
        return mu
    # relabel by first occurrence so merging is order-stable
    order = np.argsort(first, kind="stable")
    rank = np.empty(n_groups, dtype=int)
    rank[order] = np.arange(n_groups)
    labels = rank[labels]
    reps = mu.points[first[order]]

    w = np.bincount(labels, weights=mu.weights, minlength=n_groups)
    if radius == 0:
        # coincident members: keep the exact representative
        return AtomicMeasure(mu.space, w / w.sum(), reps)

    offsets = mu.points - reps[labels]
    if periods is not None:
        for j, p in enumerate(periods):
            if p is not None:
                offsets[:, j] = (offsets[:, j] + 0.5 * p) % p - 0.5 * p
    shift = np.zeros((n_groups, mu.space.dim))
    heavy = w > 0
    np.add.at(shift, labels, mu.weights[:, None] * offsets)
    shift[heavy] /= w[heavy, None]
    if not np.all(heavy):
        counts = np.bincount(labels, minlength=n_groups)
        plain = np.zeros_like(shift)
        np.add.at(plain, labels, offsets)
        shift[~heavy] = plain[~heavy] / counts[~heavy, None]
    pts = reps + shift
    if periods is not None:
        for j, p in enumerate(periods):
            if p is not None:
                pts[:, j] = np.remainder(pts[:, j], p)
                pts[pts[:, j] >= p, j] = 0.0
    return AtomicMeasure(mu.space, w / w.sum(), pts)


def _periodic_box(points, periods, radius):
    """Shifted coordinates and a ``boxsize`` for ``cKDTree`` that wraps only periodic axes."""
    data = np.array(points, dtype=float)
    box = np.empty(data.shape[1])
    for j, p in enumerate(periods):
        if p is None:
            lo = data[:, j].min()
            data[:, j] -= lo
            box[j] = 2.0 * (data[:, j].max() + radius) + 1.0
        else:
            data[:, j] = np.remainder(data[:, j], p)
            data[data[:, j] >= p, j] = 0.0
            box[j] = p
    return data, box


def _project(mu: AtomicMeasure, factor: str, merge_radius: float) -> AtomicMeasure:
    if not mu.is_product:
        raise DimensionError("marginals require a measure on a product space")
    space = FactorSpace(mu.space.dim_a if factor == "A" else mu.space.dim_b, factor, mu.space.label,
                        mu.space.factor_periods(factor))
    projected = _normalized(space, mu.weights, mu.coords(factor))
    return merge_atoms(projected, merge_radius)


def marginal_a(mu: AtomicMeasure, merge_radius: float = 0.0) -> AtomicMeasure:
    return _project(mu, "A", merge_radius)


def marginal_b(mu: AtomicMeasure, merge_radius: float = 0.0) -> AtomicMeasure:
    return _project(mu, "B", merge_radius)


# ---- test functions

@dataclass(frozen=True)
class BoundedFunction:
    """A bounded continuous function on one factor (or the full space).

    ``fn`` is vectorized: it receives an ``(n, d)`` array of coordinates of the
    relevant factor and returns ``n`` values with ``|value| <= bound``.
    """

    id: str
    bound: float
    fn: Callable[[np.ndarray], np.ndarray]
    factor: str = "full"

    def __call__(self, coords) -> np.ndarray:
        return np.asarray(self.fn(np.atleast_2d(coords)), dtype=float)


class FunctionDictionary(tuple):
    """Finite family of :class:`BoundedFunction` used to probe weak convergence."""

    def __new__(cls, entries: Iterable[BoundedFunction] = ()):
        entries = tuple(entries)
        ids = [e.id for e in entries]
        if len(set(ids)) != len(ids):
            raise ValueError("dictionary ids must be unique")
        return super().__new__(cls, entries)

    @property
    def ids(self) -> list:
        return [e.id for e in self]

    def for_factor(self, factor: str) -> "FunctionDictionary":
        return FunctionDictionary(e for e in self if e.factor == factor)

    def __add__(self, other):
        return FunctionDictionary(tuple(self) + tuple(other))

    def check_bounds(self, mu: AtomicMeasure, slack: float = 1e-12) -> None:
        for e in self:
            vals = e(mu.coords(e.factor))
            if np.any(np.abs(vals) > e.bound * (1 + slack)):
                raise ValueError(f"function {e.id!r} exceeds its declared bound on the atoms")


def integrate(mu: AtomicMeasure, f) -> float:
    """``sum_i w_i f(x_i)``; ``f`` is a :class:`BoundedFunction` or a vectorized callable."""
    if isinstance(f, BoundedFunction):
        vals = f(mu.coords(f.factor))
    else:
        vals = np.asarray(f(mu.points), dtype=float)
    vals = vals.reshape(-1)
    if vals.shape[0] != len(mu):
        raise DimensionError("function returned the wrong number of values")
    return float(np.dot(mu.weights, vals))


def convex_combine(weights: Sequence[float], measures: Sequence[AtomicMeasure], merge_radius: float = 0.0,
                   max_atoms: int = DEFAULT_MAX_ATOMS) -> AtomicMeasure:
    """``sum_k weights[k] * measures[k]`` with coincident atoms merged."""
    lam = np.asarray(weights, dtype=float).reshape(-1)
    if len(lam) != len(measures) or len(lam) == 0:
        raise ValueError("need one weight per measure and at least one measure")
    if np.any(lam < 0) or abs(lam.sum() - 1.0) > 1e-9:
        raise ValueError(f"mixing weights must be nonnegative and sum to 1 (sum {lam.sum()!r})")
    space = measures[0].space
    if any(not same_geometry(m.space, space) for m in measures):
        raise DimensionError("all measures must live on the same space")
    keep = [k for k in range(len(lam)) if lam[k] > 0]
    _check_cap(sum(len(measures[k]) for k in keep), max_atoms)
    w = np.concatenate([lam[k] * measures[k].weights for k in keep])
    pts = np.vstack([measures[k].points for k in keep])
    return merge_atoms(_normalized(space, w, pts), merge_radius)


def bl_discrepancy(mu: AtomicMeasure, nu: AtomicMeasure, dictionary: FunctionDictionary) -> float:
    """``max_f |∫f dmu - ∫f dnu| / bound(f)`` over the dictionary."""
    if len(dictionary) == 0:
        raise ValueError("dictionary is empty")
    if mu.space.dim != nu.space.dim:
        raise DimensionError("measures live on different spaces")
    return max(abs(integrate(mu, f) - integrate(nu, f)) / f.bound for f in dictionary)


def tightness_profile(measures: Sequence[AtomicMeasure], radii, center) -> np.ndarray:
    """Mass outside closed balls: ``table[n, j] = mu_n({x : |x - center| > radii[j]})``."""
    radii = np.asarray(radii, dtype=float).reshape(-1)
    if len(radii) == 0 or np.any(radii <= 0) or np.any(np.diff(radii) <= 0):
        raise ValueError("radii must be positive and strictly increasing")
    center = np.asarray(center, dtype=float).reshape(-1)
    table = np.empty((len(measures), len(radii)))
    for n, mu in enumerate(measures):
        if center.shape[0] != mu.space.dim:
            raise DimensionError("center dimension does not match the measure")
        dist = np.linalg.norm(mu.points - center, axis=1)
        table[n] = [mu.weights[dist > r].sum() for r in radii]
    return table


# ---- stock dictionaries

def clamp_functions(dim: int, factor: str = "full", scale: float = 1.0, prefix: str | None = None):
    """``clip(x_i / scale, -1, 1)`` for each coordinate."""
    prefix = prefix or f"clamp{factor}"

    def make(i):
        return BoundedFunction(f"{prefix}[{i}]", 1.0, lambda x: np.clip(x[:, i] / scale, -1.0, 1.0), factor)

    return FunctionDictionary(make(i) for i in range(dim))


def gaussian_functions(centers, width: float, factor: str = "full", prefix: str | None = None):
    """Gaussian bumps ``exp(-|x - c|^2 / (2 width^2))`` at the given centers."""
    prefix = prefix or f"gauss{factor}"
    centers = np.atleast_2d(np.asarray(centers, dtype=float))

    def make(k, c):
        return BoundedFunction(
            f"{prefix}[{k}]", 1.0,
            lambda x: np.exp(-np.sum((x - c) ** 2, axis=1) / (2 * width ** 2)), factor,
        )

    return FunctionDictionary(make(k, c) for k, c in enumerate(centers))


def angular_functions(max_harmonic: int = 5, factor: str = "B", coord: int = 0, prefix: str | None = None):
    """``cos(m theta)`` and ``sin(m theta)`` of one angular coordinate, ``m = 1..max_harmonic``."""
    prefix = prefix or f"ang{factor}"
    entries = []
    for m in range(1, max_harmonic + 1):
        entries.append(BoundedFunction(f"{prefix}cos{m}", 1.0, lambda x, m=m: np.cos(m * x[:, coord]), factor))
        entries.append(BoundedFunction(f"{prefix}sin{m}", 1.0, lambda x, m=m: np.sin(m * x[:, coord]), factor))
    return FunctionDictionary(entries)
