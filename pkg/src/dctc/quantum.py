"""Bipartite density matrices, partial traces and the Deutsch map.

Matrices are plain complex ``numpy`` arrays. Functions validate their inputs
with :func:`check_density_matrix` / :func:`check_unitary` and never mutate them.

The Deutsch map for an interaction ``U`` and a fixed A-state ``rho_a`` is::

    S(rho_b) = tr_A( U (rho_a ⊗ rho_b) U^* )

and a D-CTC solution is a product state ``rho_a ⊗ rho_b`` with ``S(rho_b) = rho_b``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, NotConvergedWarning, ResourceLimitError

VALIDATION_TOL = 1e-9
MAX_DIM = 64


@dataclass(frozen=True)
class BipartiteDims:
    d_a: int
    d_b: int

    def __post_init__(self):
        if int(self.d_a) < 1 or int(self.d_b) < 1:
            raise DimensionError(f"factor dimensions must be positive, got {self.d_a}, {self.d_b}")

    @property
    def total(self) -> int:
        return self.d_a * self.d_b


def _square(m, name="matrix") -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {m.shape}")
    return m


def check_density_matrix(rho, tol: float = VALIDATION_TOL, name: str = "rho") -> np.ndarray:
    """Return ``rho`` as a complex array, raising ``ValueError`` unless it is a state.

    Checks hermiticity (max-entry), unit trace and smallest eigenvalue ``>= -tol``.
    """
    rho = _square(rho, name)
    if not np.all(np.isfinite(rho)):
        raise ValueError(f"{name} has non-finite entries")
    herm_err = np.max(np.abs(rho - rho.conj().T))
    if herm_err > tol:
        raise ValueError(f"{name} is not Hermitian (max deviation {herm_err:.3g})")
    tr_err = abs(np.trace(rho) - 1.0)
    if tr_err > tol:
        raise ValueError(f"{name} does not have unit trace (|tr - 1| = {tr_err:.3g})")
    lam_min = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0]
    if lam_min < -tol:
        raise ValueError(f"{name} is not positive semi-definite (min eigenvalue {lam_min:.3g})")
    return rho


def check_unitary(u, tol: float = VALIDATION_TOL) -> np.ndarray:
    u = _square(u, "U")
    err = np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0])))
    if err > tol:
        raise ValueError(f"U is not unitary (max |U*U - I| = {err:.3g})")
    return u


def is_density_matrix(rho, tol: float = VALIDATION_TOL) -> bool:
    try:
        check_density_matrix(rho, tol)
    except (ValueError, DimensionError):
        return False
    return True


def _dims_for(rho: np.ndarray, dims: BipartiteDims) -> None:
    if rho.shape[0] != dims.total:
        raise DimensionError(
            f"matrix dimension {rho.shape[0]} does not match d_A*d_B = {dims.d_a}*{dims.d_b}"
        )


def tensor_product(a, b, max_dim: int = MAX_DIM) -> np.ndarray:
    """Kronecker product ``a ⊗ b`` of two density matrices."""
    a = check_density_matrix(a, name="a")
    b = check_density_matrix(b, name="b")
    d = a.shape[0] * b.shape[0]
    if d > max_dim:
        raise ResourceLimitError(f"product dimension {d} exceeds the cap {max_dim}")
    return np.kron(a, b)


def partial_trace_a(rho, dims: BipartiteDims) -> np.ndarray:
    """Trace out the A factor; returns a ``d_B x d_B`` matrix."""
    rho = _square(rho)
    _dims_for(rho, dims)
    return np.einsum("ijik->jk", rho.reshape(dims.d_a, dims.d_b, dims.d_a, dims.d_b))


def partial_trace_b(rho, dims: BipartiteDims) -> np.ndarray:
    """Trace out the B factor; returns a ``d_A x d_A`` matrix."""
    rho = _square(rho)
    _dims_for(rho, dims)
    return np.einsum("ijkj->ik", rho.reshape(dims.d_a, dims.d_b, dims.d_a, dims.d_b))


def trace_norm(x) -> float:
    """Trace norm of a Hermitian matrix (sum of absolute eigenvalues)."""
    x = np.asarray(x, dtype=complex)
    return float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (x + x.conj().T)))))


def deutsch_map(u, rho_a, rho_b, dims: BipartiteDims) -> np.ndarray:
    u = check_unitary(u)
    rho_a = check_density_matrix(rho_a, name="rho_A")
    rho_b = check_density_matrix(rho_b, name="rho_B")
    if rho_a.shape[0] != dims.d_a or rho_b.shape[0] != dims.d_b:
        raise DimensionError("rho_A / rho_B do not match the factor dimensions")
    _dims_for(u, dims)
    return _apply_s(u, rho_a, rho_b, dims)


def _apply_s(u, rho_a, rho_b, dims):
    if np.array_equal(u, np.eye(len(u))):
        # tr_A(rho_A (x) rho_B) = rho_B for unit-trace rho_A; skip the rounding of the sum
        return rho_b.copy()
    full = u @ np.kron(rho_a, rho_b) @ u.conj().T
    return partial_trace_a(full, dims)


@dataclass
class FixedPointDiagnostics:
    """Outcome of :func:`solve_deutsch_fixed_point`.

    ``residuals[k]`` is the trace-norm residual of the running average after
    ``k + 1`` applications of the Deutsch map.
    """

    converged: bool
    n_used: int
    residual: float
    residuals: list = field(default_factory=list)
    restarts: int = 0


def solve_deutsch_fixed_point(
    u,
    rho_a,
    rho_b0,
    dims: BipartiteDims,
    max_iter: int = 10_000,
    tol: float = 1e-10,
    restart_every: int | None = 8,
):
    """Find ``rho_b`` with ``||S(rho_b) - rho_b||_tr <= tol`` by Cesàro averaging.

    Within an epoch the running average ``(1/m) sum_{n=1..m} S^n(x)`` is kept;
    its residual equals ``||S^{m+1}(x) - S(x)||_tr / m`` because ``S`` is affine,
    so it is monitored at no extra cost. With ``restart_every=None`` this is the
    plain running average of the orbit of ``rho_b0`` (residual decays like 1/N).
    Otherwise every ``restart_every`` steps the next epoch starts from the current
    average, which damps peripheral eigenvalues and the contracting part alike.

    Returns ``(rho_b_star, diagnostics)``. If ``max_iter`` is exhausted the best
    average is returned with ``diagnostics.converged = False`` and a
    :class:`NotConvergedWarning` is emitted.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be positive")
    u = check_unitary(u)
    _dims_for(u, dims)
    rho_a = check_density_matrix(rho_a, name="rho_A")
    x = check_density_matrix(rho_b0, name="rho_B0")
    if rho_a.shape[0] != dims.d_a or x.shape[0] != dims.d_b:
        raise DimensionError("rho_A / rho_B0 do not match the factor dimensions")

    residuals = []
    best, best_res = x, np.inf
    n = 0
    restarts = 0
    while n < max_iter:
        first = _apply_s(u, rho_a, x, dims)
        it = first
        acc = np.zeros_like(x)
        m = 0
        while n < max_iter:
            acc += it
            m += 1
            n += 1
            nxt = _apply_s(u, rho_a, it, dims)
            res = trace_norm(nxt - first) / m
            residuals.append(res)
            avg = acc / m
            if res < best_res:
                best, best_res = avg, res
            if res <= tol:
                # confirm directly rather than through the telescoping identity
                direct = trace_norm(_apply_s(u, rho_a, avg, dims) - avg)
                if direct <= tol:
                    return avg, FixedPointDiagnostics(True, n, direct, residuals, restarts)
            it = nxt
            if restart_every is not None and m >= restart_every:
                break
        x = acc / m
        if n < max_iter:
            restarts += 1

    final = trace_norm(_apply_s(u, rho_a, best, dims) - best)
    warnings.warn(
        f"Deutsch fixed point not reached within {max_iter} maps (residual {final:.3g})",
        NotConvergedWarning,
        stacklevel=2,
    )
    return best, FixedPointDiagnostics(False, n, final, residuals, restarts)


@dataclass(frozen=True)
class QuantumDctcReport:
    delta_1: float
    delta_2: float
    tol: float

    @property
    def condition_1(self) -> bool:
        return self.delta_1 <= self.tol

    @property
    def condition_2(self) -> bool:
        return self.delta_2 <= self.tol

    @property
    def passed(self) -> bool:
        return self.condition_1 and self.condition_2

    def to_dict(self) -> dict:
        return {
            "delta_1": self.delta_1,
            "delta_2": self.delta_2,
            "tol": self.tol,
            "condition_1": self.condition_1,
            "condition_2": self.condition_2,
        }


def verify_dctc_quantum(rho_full, u, rho_a, dims: BipartiteDims, tol: float = 1e-9) -> QuantumDctcReport:
    """Measure both D-CTC conditions for a candidate state on the full system.

    ``delta_1 = ||tr_B(rho) - rho_A||_tr`` and
    ``delta_2 = ||tr_A(U rho U*) - tr_A(rho)||_tr``.
    """
    rho_full = check_density_matrix(rho_full, name="rho_full")
    u = check_unitary(u)
    rho_a = check_density_matrix(rho_a, name="rho_A")
    _dims_for(rho_full, dims)
    _dims_for(u, dims)
    if rho_a.shape[0] != dims.d_a:
        raise DimensionError("rho_A does not match d_A")
    delta_1 = trace_norm(partial_trace_b(rho_full, dims) - rho_a)
    after = partial_trace_a(u @ rho_full @ u.conj().T, dims)
    delta_2 = trace_norm(after - partial_trace_a(rho_full, dims))
    return QuantumDctcReport(delta_1, delta_2, tol)


# ---- standard gates and random sampling

def swap(d: int) -> np.ndarray:
    """SWAP on ``C^d ⊗ C^d``."""
    u = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            u[j * d + i, i * d + j] = 1.0
    return u


def cnot() -> np.ndarray:
    """CNOT with A as control, B as target."""
    return np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
    )


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR of a complex Ginibre matrix, phases fixed."""
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    diag = np.diag(r)
    return q * (diag / np.abs(diag))


def random_density_matrix(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random full-rank (or given-rank) state ``G G^* / tr(G G^*)``."""
    k = d if rank is None else rank
    g = rng.standard_normal((d, k)) + 1j * rng.standard_normal((d, k))
    m = g @ g.conj().T
    m = m / np.trace(m).real
    return 0.5 * (m + m.conj().T)
