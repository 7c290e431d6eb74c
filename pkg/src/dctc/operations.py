"""Convexity-preserving operations on atomic measures.

Three kinds are built in:

* :class:`Pushforward` moves every atom by a :class:`PhaseMap` (optionally
  acting on only the A or B coordinates of a product measure),
* :class:`MixWithFixed` returns ``lam * w0 + (1 - lam) * mu``,
* :class:`Compose` applies a sequence of operations left to right.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .errors import DimensionError
from .measures import (
    DEFAULT_MAX_ATOMS,
    AtomicMeasure,
    FunctionDictionary,
    bl_discrepancy,
    convex_combine,
)

TWO_PI = 2.0 * math.pi
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class PhaseMap:
    """A point transform on ``dim``-dimensional coordinates.

    ``forward`` is vectorized over rows of an ``(n, dim)`` array and must be pure.
    """

    id: str
    dim: int
    forward: Callable[[np.ndarray], np.ndarray]
    invertible: bool = True
    metadata: dict = field(default_factory=dict)

    def __call__(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != self.dim:
            raise DimensionError(f"map {self.id!r} expects dimension {self.dim}, got {pts.shape[1]}")
        return np.asarray(self.forward(pts), dtype=float).reshape(pts.shape)


def identity_map(dim: int) -> PhaseMap:
    return PhaseMap("identity", dim, lambda x: x.copy())


def translation(v) -> PhaseMap:
    v = np.asarray(v, dtype=float).reshape(-1)
    return PhaseMap("translation", len(v), lambda x: x + v, metadata={"v": v.tolist()})


def wrap_angle(theta):
    """Reduce angles to ``[0, 2π)``."""
    out = np.remainder(theta, TWO_PI)
    return np.where(out >= TWO_PI, 0.0, out)


def circle_rotation(angle: float) -> PhaseMap:
    """``theta -> theta + angle (mod 2π)`` on a 1-D angular coordinate."""
    angle = float(angle)
    return PhaseMap(
        "rotation", 1, lambda x: wrap_angle(x + angle), metadata={"angle": angle}
    )


def parse_angle(spec) -> float:
    """Rotation angle from ``"k/l"`` (multiple of 2π), ``"golden"``, or radians."""
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        return float(spec)
    if isinstance(spec, Fraction):
        return TWO_PI * float(spec)
    text = str(spec).strip().lower()
    if text == "golden":
        return TWO_PI * GOLDEN
    if "/" in text:
        return TWO_PI * float(Fraction(text.replace(" ", "")))
    return float(text)


class Operation:
    """Base class; subclasses implement :meth:`apply`."""

    def apply(self, mu: AtomicMeasure) -> AtomicMeasure:
        raise NotImplementedError

    def __call__(self, mu):
        return self.apply(mu)


@dataclass(frozen=True)
class Pushforward(Operation):
    """Move atoms by ``phase_map``; ``on`` selects the coordinates it acts on."""

    phase_map: PhaseMap
    on: str = "full"

    def apply(self, mu):
        pts = mu.points
        if self.on == "full":
            new = self.phase_map(pts)
        else:
            if not mu.is_product:
                if mu.space.factor not in (None, self.on):
                    raise DimensionError(f"cannot act on factor {self.on} of {mu.space}")
                new = self.phase_map(pts)
            else:
                split = mu.space.dim_a
                new = pts.copy()
                if self.on == "A":
                    new[:, :split] = self.phase_map(pts[:, :split])
                elif self.on == "B":
                    new[:, split:] = self.phase_map(pts[:, split:])
                else:
                    raise ValueError(f"unknown target {self.on!r}")
        if not np.all(np.isfinite(new)):
            raise ValueError(f"map {self.phase_map.id!r} produced non-finite image points")
        return AtomicMeasure(mu.space, mu.weights, new)


@dataclass(frozen=True)
class MixWithFixed(Operation):
    """``mu -> lam * w0 + (1 - lam) * mu``."""

    w0: AtomicMeasure
    lam: float
    merge_radius: float = 0.0
    max_atoms: int = DEFAULT_MAX_ATOMS

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError("mixing coefficient must lie in [0, 1]")

    def apply(self, mu):
        if mu.space.dim != self.w0.space.dim:
            raise DimensionError("w0 and mu live on different spaces")
        if self.lam == 0.0:
            return mu
        return convex_combine([self.lam, 1.0 - self.lam], [self.w0, mu],
                              self.merge_radius, self.max_atoms)


@dataclass(frozen=True)
class Compose(Operation):
    ops: tuple

    def __init__(self, ops: Sequence[Operation]):
        object.__setattr__(self, "ops", tuple(ops))

    def apply(self, mu):
        for op in self.ops:
            mu = op.apply(mu)
        return mu


def apply(op: Operation, mu: AtomicMeasure) -> AtomicMeasure:
    return op.apply(mu)


def iterate(op: Operation, mu: AtomicMeasure, n: int) -> list:
    """``[mu, op(mu), ..., op^n(mu)]``."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    out = [mu]
    for _ in range(n):
        mu = op.apply(mu)
        out.append(mu)
    return out


def convexity_check(op: Operation, samples: Sequence[AtomicMeasure], lam: float,
                    dictionary: FunctionDictionary) -> float:
    """Largest discrepancy between ``op(lam mu + (1-lam) nu)`` and ``lam op(mu) + (1-lam) op(nu)``.

    Checked over consecutive pairs of ``samples``.
    """
    worst = 0.0
    for mu, nu in zip(samples[:-1], samples[1:]):
        lhs = op.apply(convex_combine([lam, 1 - lam], [mu, nu]))
        rhs = convex_combine([lam, 1 - lam], [op.apply(mu), op.apply(nu)])
        worst = max(worst, bl_discrepancy(lhs, rhs, dictionary))
    return worst
