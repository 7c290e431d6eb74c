"""Two-body Hamiltonian system with an optional external central field.

Phase points are 12-vectors ``(q_A, p_A, q_B, p_B)``. The energy is::

    H = |p_A|^2/(2 m_A) + |p_B|^2/(2 m_B) + V(|q_A - q_B|) + lam * V_ex(q_A, q_B)
    V(r)  = -alpha / sqrt(r^2 + eps^2)
    V_ex  = -beta_A / sqrt(|q_A|^2 + eps^2) - beta_B / sqrt(|q_B|^2 + eps^2)

Units are nondimensional (gravitational constants absorbed into alpha, beta).
Time stepping uses the position-Verlet (drift-kick-drift) leapfrog scheme.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np

from .errors import ExcludedConfigurationError, ResourceLimitError
from .operations import PhaseMap, circle_rotation

_FLOOR = 10 * np.finfo(float).eps


@dataclass(frozen=True)
class TwoBodyParams:
    m_a: float = 1.0
    m_b: float = 1.0
    alpha: float = 1.0
    beta_a: float = 0.0
    beta_b: float = 0.0
    lam: float = 0.0
    softening: float = 0.0

    def __post_init__(self):
        if self.m_a <= 0 or self.m_b <= 0:
            raise ValueError("masses must be positive")
        if self.softening < 0:
            raise ValueError("softening must be nonnegative")
        if self.alpha < 0 or self.beta_a < 0 or self.beta_b < 0:
            raise ValueError("coupling strengths must be nonnegative")
        if self.lam < 0:
            raise ValueError("lam must be nonnegative")

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class PhaseState:
    q_a: tuple
    p_a: tuple
    q_b: tuple
    p_b: tuple

    def to_array(self) -> np.ndarray:
        return np.concatenate([self.q_a, self.p_a, self.q_b, self.p_b]).astype(float)

    @classmethod
    def from_array(cls, x) -> "PhaseState":
        x = np.asarray(x, dtype=float).reshape(12)
        if not np.all(np.isfinite(x)):
            raise ValueError("phase state must be finite")
        return cls(*(tuple(x[i:i + 3]) for i in range(0, 12, 3)))


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float
    max_steps: int = 10_000_000

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")

    def n_steps(self, t: float) -> int:
        n = int(round(abs(t) / self.dt))
        if n > self.max_steps:
            raise ResourceLimitError(f"{n} steps requested, budget is {self.max_steps}")
        return n


def _split(x):
    return x[:, 0:3], x[:, 3:6], x[:, 6:9], x[:, 9:12]


def _excluded(params, qa, qb):
    """Rows whose configuration makes an unsoftened potential singular."""
    if params.softening > 0:
        return np.zeros(len(qa), dtype=bool)
    scale = np.maximum(1.0, np.maximum(np.linalg.norm(qa, axis=1), np.linalg.norm(qb, axis=1)))
    floor = _FLOOR * scale
    bad = np.zeros(len(qa), dtype=bool)
    if params.alpha > 0:
        bad |= np.linalg.norm(qa - qb, axis=1) < floor
    if params.lam > 0:
        if params.beta_a > 0:
            bad |= np.linalg.norm(qa, axis=1) < floor
        if params.beta_b > 0:
            bad |= np.linalg.norm(qb, axis=1) < floor
    return bad


def hamiltonian(params: TwoBodyParams, state) -> np.ndarray | float:
    """Energy of one state (returns a float) or of rows of an ``(n, 12)`` array."""
    if isinstance(state, PhaseState):
        state = state.to_array()
    x = np.asarray(state, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    qa, pa, qb, pb = _split(x)
    bad = _excluded(params, qa, qb)
    if np.any(bad):
        raise ExcludedConfigurationError("energy undefined at an excluded configuration",
                                         np.flatnonzero(bad))
    eps2 = params.softening ** 2
    kin = np.sum(pa ** 2, axis=1) / (2 * params.m_a) + np.sum(pb ** 2, axis=1) / (2 * params.m_b)
    pot = -params.alpha / np.sqrt(np.sum((qa - qb) ** 2, axis=1) + eps2)
    if params.lam:
        ext = np.zeros(len(x))
        if params.beta_a:
            ext -= params.beta_a / np.sqrt(np.sum(qa ** 2, axis=1) + eps2)
        if params.beta_b:
            ext -= params.beta_b / np.sqrt(np.sum(qb ** 2, axis=1) + eps2)
        pot = pot + params.lam * ext
    e = kin + pot
    return float(e[0]) if single else e


def _forces(params, qa, qb):
    eps2 = params.softening ** 2
    d = qa - qb
    s2 = np.sum(d ** 2, axis=1, keepdims=True) + eps2
    fa = -params.alpha * d / s2 ** 1.5
    fb = -fa
    if params.lam:
        if params.beta_a:
            fa = fa - params.lam * params.beta_a * qa / (np.sum(qa ** 2, axis=1, keepdims=True) + eps2) ** 1.5
        if params.beta_b:
            fb = fb - params.lam * params.beta_b * qb / (np.sum(qb ** 2, axis=1, keepdims=True) + eps2) ** 1.5
    return fa, fb


def _step(params, x, h):
    qa, pa, qb, pb = (a.copy() for a in _split(x))
    half = 0.5 * h
    qa += (half / params.m_a) * pa
    qb += (half / params.m_b) * pb
    bad = _excluded(params, qa, qb)
    with np.errstate(divide="ignore", invalid="ignore"):
        fa, fb = _forces(params, qa, qb)
    pa += h * fa
    pb += h * fb
    qa += (half / params.m_a) * pa
    qb += (half / params.m_b) * pb
    bad |= _excluded(params, qa, qb)
    return np.hstack([qa, pa, qb, pb]), bad


def leapfrog(params: TwoBodyParams, states, h: float, n_steps: int):
    """Advance rows of ``states`` by ``n_steps`` drift-kick-drift steps of size ``h``.

    Returns ``(final_states, excluded)``. Rows that reach an excluded
    configuration are frozen at their last admissible state and flagged.
    """
    x = np.array(np.atleast_2d(states), dtype=float)
    excluded = _excluded(params, x[:, 0:3], x[:, 6:9])
    for _ in range(n_steps):
        if not excluded.any():
            new, bad = _step(params, x, h)
            if bad.any():
                x[~bad] = new[~bad]
                excluded = bad
            else:
                x = new
        else:
            live = np.flatnonzero(~excluded)
            if len(live) == 0:
                break
            new, bad = _step(params, x[live], h)
            x[live[~bad]] = new[~bad]
            excluded[live[bad]] = True
    return x, excluded


def flow_map(params: TwoBodyParams, t: float, config: IntegratorConfig) -> PhaseMap:
    """Time-``t`` map of the leapfrog flow on 12-D phase points.

    Uses ``round(|t|/dt)`` steps of size ``t / n`` so the elapsed time is exactly
    ``t``; negative ``t`` runs the scheme backwards, which inverts it.
    """
    n = config.n_steps(t)
    h = t / n if n else 0.0

    def forward(x):
        if n == 0:
            return x.copy()
        out, bad = leapfrog(params, x, h, n)
        if np.any(bad):
            raise ExcludedConfigurationError(
                f"{int(bad.sum())} trajectories reached an excluded configuration",
                np.flatnonzero(bad),
            )
        return out

    return PhaseMap("flow", 12, forward, metadata={"params": params.to_dict(), "t": t,
                                                    "dt": config.dt, "steps": n})


def trajectory(params: TwoBodyParams, state, dt: float, n_steps: int, record_every: int = 1):
    """Sample one trajectory; returns ``(times, states, energies)``."""
    x = state.to_array() if isinstance(state, PhaseState) else np.asarray(state, dtype=float)
    x = x.reshape(1, 12)
    times, rows = [0.0], [x[0].copy()]
    done = 0
    while done < n_steps:
        k = min(record_every, n_steps - done)
        x, bad = leapfrog(params, x, dt, k)
        done += k
        times.append(done * dt)
        rows.append(x[0].copy())
        if bad[0]:
            break
    states = np.array(rows)
    return np.array(times), states, hamiltonian(params, states)


def write_trajectory_csv(path, times, states, energies) -> None:
    cols = ["t"] + [f"{name}{ax}" for name in ("qA", "pA", "qB", "pB") for ax in "xyz"] + ["E"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for t, s, e in zip(times, states, energies):
            w.writerow([repr(float(t)), *(repr(float(c)) for c in s), repr(float(e))])


def circular_orbit_ic(params: TwoBodyParams, r: float, heavy_a: bool = True):
    """Initial data for a circular orbit of separation ``r`` in the xy-plane.

    With ``heavy_a`` the A body sits at rest at the origin and B moves with
    ``v = sqrt(alpha / (m_B r))``; the returned period is ``2π r / v``. Without
    it both bodies circle their common center of mass (at rest at the origin)
    and the period uses the reduced mass. The external field is ignored.
    """
    if r <= 0:
        raise ValueError("radius must be positive")
    if params.alpha <= 0:
        raise ValueError("a circular orbit needs alpha > 0")
    m_a, m_b = params.m_a, params.m_b
    if heavy_a:
        if m_a < 100 * m_b:
            warnings.warn("heavy-A approximation used with m_A < 100 m_B", stacklevel=2)
        v = math.sqrt(params.alpha / (m_b * r))
        state = PhaseState((0.0, 0.0, 0.0), (0.0, 0.0, 0.0), (r, 0.0, 0.0), (0.0, m_b * v, 0.0))
        return state, 2 * math.pi * r / v
    mu = m_a * m_b / (m_a + m_b)
    v_rel = math.sqrt(params.alpha / (mu * r))
    p = mu * v_rel
    ra, rb = -r * m_b / (m_a + m_b), r * m_a / (m_a + m_b)
    state = PhaseState((ra, 0.0, 0.0), (0.0, -p, 0.0), (rb, 0.0, 0.0), (0.0, p, 0.0))
    return state, 2 * math.pi * math.sqrt(mu * r ** 3 / params.alpha)


def reduced_satellite_map(t_over_T) -> PhaseMap:
    """Exact angular model of the circular satellite orbit: advance θ by ``2π t/T``.

    Whole periods are removed before converting to radians, so integer ratios
    give the identity exactly.
    """
    if isinstance(t_over_T, Fraction):
        frac = float(t_over_T % 1)
    else:
        frac = math.fmod(float(t_over_T), 1.0)
    m = circle_rotation(2 * math.pi * frac)
    return PhaseMap("satellite", 1, m.forward, metadata={"t_over_T": str(t_over_T), "angle": 2 * math.pi * frac})


def satellite_phase_point(theta, r: float = 1.0, m_b: float = 1.0, alpha: float = 1.0) -> np.ndarray:
    """Planar position and momentum of the satellite at angle ``theta``: rows ``(x, y, px, py)``."""
    theta = np.asarray(theta, dtype=float).reshape(-1)
    p = m_b * math.sqrt(alpha / (m_b * r))
    return np.column_stack([r * np.cos(theta), r * np.sin(theta), -p * np.sin(theta), p * np.cos(theta)])
