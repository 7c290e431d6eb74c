import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dctc import quantum as Q
from dctc.errors import DimensionError, NotConvergedWarning, ResourceLimitError

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def _ptrace_a_loops(rho, da, db):
    out = np.zeros((db, db), dtype=complex)
    for j in range(db):
        for k in range(db):
            out[j, k] = sum(rho[i * db + j, i * db + k] for i in range(da))
    return out


def _ptrace_b_loops(rho, da, db):
    out = np.zeros((da, da), dtype=complex)
    for i in range(da):
        for k in range(da):
            out[i, k] = sum(rho[i * db + j, k * db + j] for j in range(db))
    return out


@given(seeds, st.integers(1, 4), st.integers(1, 4))
@settings(max_examples=30, deadline=None)
def test_partial_traces_match_index_loops(seed, da, db):
    rng = np.random.default_rng(seed)
    rho = Q.random_density_matrix(da * db, rng)
    dims = Q.BipartiteDims(da, db)
    np.testing.assert_allclose(Q.partial_trace_a(rho, dims), _ptrace_a_loops(rho, da, db), atol=1e-14)
    np.testing.assert_allclose(Q.partial_trace_b(rho, dims), _ptrace_b_loops(rho, da, db), atol=1e-14)


@given(seeds)
@settings(max_examples=30, deadline=None)
def test_partial_traces_of_product(seed):
    rng = np.random.default_rng(seed)
    a, b = Q.random_density_matrix(2, rng), Q.random_density_matrix(3, rng)
    dims = Q.BipartiteDims(2, 3)
    ab = Q.tensor_product(a, b)
    np.testing.assert_allclose(Q.partial_trace_a(ab, dims), b, atol=1e-14)
    np.testing.assert_allclose(Q.partial_trace_b(ab, dims), a, atol=1e-14)


def test_trace_norm_known_values():
    assert Q.trace_norm(np.diag([1.0, -2.0])) == pytest.approx(3.0)
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    assert Q.trace_norm(x) == pytest.approx(2.0)


def test_tensor_product_cap():
    with pytest.raises(ResourceLimitError):
        Q.tensor_product(np.eye(8) / 8, np.eye(16) / 16)


def test_density_matrix_validation():
    with pytest.raises(ValueError):
        Q.check_density_matrix(np.array([[0.5, 0.1], [0.2, 0.5]]))
    with pytest.raises(ValueError):
        Q.check_density_matrix(np.diag([1.5, -0.5]))
    with pytest.raises(ValueError):
        Q.check_density_matrix(np.diag([0.5, 0.4]))
    assert Q.is_density_matrix(np.diag([0.25, 0.75]))


def test_unitary_validation():
    with pytest.raises(ValueError):
        Q.check_unitary(np.array([[1.0, 1.0], [0.0, 1.0]]))
    Q.check_unitary(Q.swap(3))


def test_dimension_mismatch():
    rho = np.eye(4) / 4
    with pytest.raises(DimensionError):
        Q.deutsch_map(np.eye(6), np.eye(2) / 2, np.eye(2) / 2, Q.BipartiteDims(2, 2))
    with pytest.raises(DimensionError):
        Q.partial_trace_a(rho, Q.BipartiteDims(2, 3))


@given(seeds)
@settings(max_examples=30, deadline=None)
def test_deutsch_map_returns_density_matrix(seed):
    rng = np.random.default_rng(seed)
    dims = Q.BipartiteDims(2, 3)
    u = Q.random_unitary(6, rng)
    out = Q.deutsch_map(u, Q.random_density_matrix(2, rng), Q.random_density_matrix(3, rng), dims)
    assert Q.is_density_matrix(out)


@given(seeds)
@settings(max_examples=30, deadline=None)
def test_cnot_closed_form(seed):
    # A controls X on B: S(rho) = a rho + (1 - a) X rho X with a = <0|rho_A|0>
    rng = np.random.default_rng(seed)
    rho_a, rho_b = Q.random_density_matrix(2, rng), Q.random_density_matrix(2, rng)
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    a = rho_a[0, 0].real
    expected = a * rho_b + (1 - a) * x @ rho_b @ x
    got = Q.deutsch_map(Q.cnot(), rho_a, rho_b, Q.BipartiteDims(2, 2))
    np.testing.assert_allclose(got, expected, atol=1e-14)


def test_swap_fixed_point_is_rho_a():
    rng = np.random.default_rng(3)
    rho_a, rho_b0 = Q.random_density_matrix(3, rng), Q.random_density_matrix(3, rng)
    rho, diag = Q.solve_deutsch_fixed_point(Q.swap(3), rho_a, rho_b0, Q.BipartiteDims(3, 3))
    assert diag.converged
    assert Q.trace_norm(rho - rho_a) <= 1e-12


def test_identity_leaves_rho_b0():
    rng = np.random.default_rng(4)
    rho_a, rho_b0 = Q.random_density_matrix(2, rng), Q.random_density_matrix(2, rng)
    rho, diag = Q.solve_deutsch_fixed_point(np.eye(4), rho_a, rho_b0, Q.BipartiteDims(2, 2))
    assert diag.converged and diag.n_used == 1
    assert np.array_equal(rho, rho_b0)


def test_cnot_fixed_point_commutes_with_x():
    rho_a = np.diag([0.3, 0.7]).astype(complex)
    rho_b0 = np.diag([1.0, 0.0]).astype(complex)
    rho, diag = Q.solve_deutsch_fixed_point(Q.cnot(), rho_a, rho_b0, Q.BipartiteDims(2, 2))
    assert diag.converged
    np.testing.assert_allclose(rho, np.eye(2) / 2, atol=1e-10)


@given(seeds)
@settings(max_examples=25, deadline=None)
def test_random_unitaries_converge_and_verify(seed):
    rng = np.random.default_rng(seed)
    dims = Q.BipartiteDims(2, 2)
    u = Q.random_unitary(4, rng)
    rho_a = Q.random_density_matrix(2, rng)
    rho, diag = Q.solve_deutsch_fixed_point(u, rho_a, np.eye(2) / 2, dims)
    assert diag.converged and diag.residual <= 1e-10
    assert Q.is_density_matrix(rho)
    rep = Q.verify_dctc_quantum(Q.tensor_product(rho_a, rho), u, rho_a, dims)
    assert rep.passed


def test_plain_average_residual_obeys_two_over_n():
    # U = I (x) V rotates B unitarily; plain Cesàro residual is ||S^{m+1}x - Sx|| / m <= 2/m
    theta = 2 * np.pi * (np.sqrt(5) - 1) / 2
    v = np.diag([1, np.exp(1j * theta)])
    u = np.kron(np.eye(2), v)
    rho_b0 = np.full((2, 2), 0.5, dtype=complex)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NotConvergedWarning)
        _, diag = Q.solve_deutsch_fixed_point(u, np.eye(2) / 2, rho_b0, Q.BipartiteDims(2, 2),
                                              max_iter=500, restart_every=None)
    m = np.arange(1, len(diag.residuals) + 1)
    assert np.all(np.asarray(diag.residuals) <= 2.0 / m + 1e-14)
    assert diag.restarts == 0


def test_not_converged_warns_and_reports():
    theta = 1.0
    u = np.kron(np.eye(2), np.diag([1, np.exp(1j * theta)]))
    rho_b0 = np.full((2, 2), 0.5, dtype=complex)
    with pytest.warns(NotConvergedWarning):
        rho, diag = Q.solve_deutsch_fixed_point(u, np.eye(2) / 2, rho_b0, Q.BipartiteDims(2, 2),
                                                max_iter=5, restart_every=None)
    assert not diag.converged
    assert Q.is_density_matrix(rho)


def test_verify_detects_non_fixed_point():
    dims = Q.BipartiteDims(2, 2)
    rho_a = np.diag([1.0, 0.0]).astype(complex)
    rho_b = np.diag([0.0, 1.0]).astype(complex)
    rep = Q.verify_dctc_quantum(Q.tensor_product(rho_a, rho_b), Q.swap(2), rho_a, dims)
    assert rep.condition_1
    assert not rep.condition_2
    assert rep.delta_2 == pytest.approx(2.0)


def test_random_helpers():
    rng = np.random.default_rng(0)
    u = Q.random_unitary(5, rng)
    np.testing.assert_allclose(u.conj().T @ u, np.eye(5), atol=1e-12)
    rho = Q.random_density_matrix(4, rng, rank=1)
    assert Q.is_density_matrix(rho)
    assert np.linalg.matrix_rank(rho, tol=1e-10) == 1
