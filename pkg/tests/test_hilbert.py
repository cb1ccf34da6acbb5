from __future__ import annotations

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from twomech import hilbert as h
from twomech.errors import DegenerateSteadyStateError, InvalidDimensionError, NonHermitianError
from twomech.gaussian import Drive, LinearModel, Mode
from twomech.units import TWO_PI, drive_rate


def test_annihilation_small():
    assert np.array_equal(h.annihilation_op(2), np.array([[0, 1], [0, 0]]))
    assert h.annihilation_op(3)[1, 2] == pytest.approx(np.sqrt(2))


def test_number_operator():
    a = h.annihilation_op(4)
    assert np.allclose(a.conj().T @ a, np.diag([0, 1, 2, 3]))


@pytest.mark.parametrize("dim", [0, 1])
def test_annihilation_rejects_small_dims(dim):
    with pytest.raises(InvalidDimensionError):
        h.annihilation_op(dim)


def test_embed_operator():
    space = h.FockSpace((2, 2))
    a = h.annihilation_op(2)
    assert np.allclose(h.embed_operator(space, 0, a).toarray(), np.kron(a, np.eye(2)))
    assert np.allclose(h.embed_operator(space, 1, a).toarray(), np.kron(np.eye(2), a))
    single = h.FockSpace((2,))
    assert np.allclose(h.embed_operator(single, 0, np.eye(2)).toarray(), np.eye(2))


def test_embed_shape_mismatch():
    with pytest.raises(InvalidDimensionError):
        h.embed_operator(h.FockSpace((2, 3)), 1, np.eye(2))


def test_pure_decay_gives_vacuum():
    space = h.FockSpace((2,))
    L = h.build_liouvillian(np.zeros((2, 2)), [h.CollapseChannel(space.annihilation(0), 1.0)])
    rho = h.steady_state_density(L, space)
    assert np.allclose(rho.data, np.diag([1, 0]), atol=1e-12)
    assert h.expectation(rho, (space.annihilation(0).T @ space.annihilation(0))) == pytest.approx(0)


@pytest.mark.parametrize("n_th", [0.2, 1.0])
def test_thermal_detailed_balance(n_th):
    dim, gamma = 14, 0.022
    space = h.FockSpace((dim,))
    b = space.annihilation(0)
    bd = b.conj().T
    H = 0.7 * (bd @ b)
    L = h.build_liouvillian(H, [h.CollapseChannel(b, gamma * (n_th + 1)), h.CollapseChannel(bd, gamma * n_th)])
    rho = h.steady_state_density(L, space)
    # the truncated thermal distribution is the exact fixed point
    assert np.allclose(rho.data, h.thermal_state(dim, n_th), atol=1e-10)
    if n_th == 0.2:
        assert h.expectation(rho, bd @ b).real == pytest.approx(0.2, rel=1e-9)


def test_thermal_state_expectation():
    rho = h.DensityMatrix(h.FockSpace((25,)), h.thermal_state(25, 0.2)).check()
    n = np.diag(np.arange(25)).astype(complex)
    assert h.expectation(rho, n).real == pytest.approx(0.2, rel=1e-12)


def test_driven_cavity_is_coherent():
    kappa, kappa_in, eps = 15.0, 7.5, 0.1
    model = LinearModel((Mode("a", 0.0, kappa, kappa_in),), drives=(Drive(0, drive_rate(kappa_in, eps) / TWO_PI),))
    rho = h.solve_model(model, (8,))
    alpha = 2 * np.sqrt(TWO_PI * kappa_in) * eps / (TWO_PI * kappa)
    m = h.moments_from_density(rho)
    assert m.first[0] == pytest.approx(alpha, rel=1e-9)
    assert h.ordered_moment(rho, [(0, True), (0, True), (0, False), (0, False)]).real == pytest.approx(abs(alpha) ** 4, rel=1e-8)


def test_direct_and_iterative_agree():
    model = LinearModel(
        (Mode("a", 0.1, 2.0, 1.0), Mode("b", -0.3, 0.5, 0.0, 0.3)),
        drives=(Drive(0, 0.2),),
    )
    r1 = h.solve_model(model, (4, 5), method="direct")
    r2 = h.solve_model(model, (4, 5), method="iterative")
    assert np.allclose(r1.data, r2.data, atol=1e-10)


def test_degenerate_kernel_detected():
    # no dissipation: every diagonal state is stationary
    L = h.build_liouvillian(np.diag([0.0, 1.0, 2.0]), [])
    with pytest.raises(DegenerateSteadyStateError):
        h.steady_state_density(L)


def _two_mode_liouvillian(gamma_b):
    space = h.FockSpace((6, 6))
    a, b = space.annihilation(0), space.annihilation(1)
    H = 0.3 * (b.conj().T @ b) + 0.2 * (a.conj().T @ b + b.conj().T @ a) + 0.5 * (a + a.conj().T)
    jumps = [h.CollapseChannel(a, 1.5), h.CollapseChannel(b, gamma_b)]
    return space, h.build_liouvillian(H, jumps)


@pytest.mark.parametrize("method", ["direct", "iterative"])
def test_large_solvers_match_dense(method):
    # 1296 unknowns: above the dense-check size, so the condition estimate runs
    space, L = _two_mode_liouvillian(0.4)
    rho = h.steady_state_density(L, space, method=method)
    dense = np.linalg.svd(L.toarray())[2][-1].conj().reshape((36, 36), order="F")
    dense /= np.trace(dense)
    assert np.allclose(rho.data, dense, atol=1e-9)


@pytest.mark.parametrize("method", ["direct", "iterative"])
def test_large_degenerate_kernel_detected(method):
    # b is closed and uncoupled, so its number distribution is conserved
    space = h.FockSpace((6, 6))
    a, b = space.annihilation(0), space.annihilation(1)
    H = 0.3 * (b.conj().T @ b) + 0.5 * (a + a.conj().T)
    L = h.build_liouvillian(H, [h.CollapseChannel(a, 1.5)])
    with pytest.raises(DegenerateSteadyStateError):
        h.steady_state_density(L, space, method=method)


def test_non_hermitian_hamiltonian_rejected():
    with pytest.raises(NonHermitianError):
        h.build_liouvillian(np.array([[0, 1], [0, 0]]), [])


def _random_problem(seed, dim):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    H = X + X.conj().T
    A = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    Y = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = Y @ Y.conj().T
    rho /= np.trace(rho)
    return H, A, rho


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 5), st.floats(0.01, 3))
def test_liouvillian_preserves_trace_and_hermiticity(seed, dim, rate):
    H, A, rho = _random_problem(seed, dim)
    L = h.build_liouvillian(H, [h.CollapseChannel(sp.csr_matrix(A), rate)])
    out = (L @ rho.reshape(-1, order="F")).reshape(dim, dim, order="F")
    scale = np.abs(out).max()
    assert abs(np.trace(out)) <= 1e-10 * max(scale, 1)
    assert np.abs(out - out.conj().T).max() <= 1e-10 * max(scale, 1)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 4), st.floats(0.05, 3))
def test_steady_states_are_valid(seed, dim, rate):
    H, A, _ = _random_problem(seed, dim)
    L = h.build_liouvillian(H, [h.CollapseChannel(sp.csr_matrix(A), rate)])
    rho = h.steady_state_density(L)
    assert abs(np.trace(rho.data) - 1) < 1e-10
    obs = H  # any Hermitian operator
    assert abs(h.expectation(rho, obs).imag) <= 1e-10
