from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cgl_lab.errors import DomainError, NotPositiveDefinite, SingularWeight
from cgl_lab.quasilinear import plane_wave_matrix
from cgl_lab.sampling import random_hyperbolic, random_rational, random_states
from cgl_lab.state import PlasmaState
from cgl_lab.symmetrizer import (a0_batch, a0_closed_form, a0_positive_definite, assemble_sym,
                                 assemble_sym_batch, bcal, change_matrix, change_matrix_inverse,
                                 char_speeds, char_speeds_batch, cholesky_pd_batch,
                                 consistency_identity)


def test_change_matrix_linear_examples():
    U0 = PlasmaState(1.0, [0, 0, 0], [1, 1, 0], 2.0, 1.0)
    J = change_matrix(U0)
    assert np.all(J @ np.zeros(9) == 0)
    dU = np.zeros(9)
    dU[8], dU[7] = 2.0, 1.0
    V = J @ dU
    assert V[7] == 0.0  # P = p_perp/2 - p_par with H = 0
    assert V[0] == 2.0


def test_change_matrix_inverse(rng):
    for u in random_hyperbolic(rng, 1000):
        U0 = PlasmaState.from_vector(u)
        assert np.max(np.abs(change_matrix(U0) @ change_matrix_inverse(U0) - np.eye(9))) < 1e-13


def test_change_matrix_inverse_exact(rng):
    for U0 in random_rational(rng, 5):
        prod = change_matrix(U0).dot(change_matrix_inverse(U0))
        assert all(prod[i, j] == (1 if i == j else 0) for i in range(9) for j in range(9))


def test_exact_symmetry(rng):
    for u in random_states(rng, 200):
        if 6 * u[7] == u[8]:
            continue
        sym = assemble_sym(PlasmaState.from_vector(u))
        for A in (sym.A0,) + sym.A:
            assert np.array_equal(A, A.T)


def test_block_layout():
    U0 = PlasmaState(2.0, [0.5, -1.0, 0.25], [1.0, 2.0, 2.0], 1.5, 0.9)
    sym = assemble_sym(U0)
    tau = (1.5 - 0.9) / 9.0
    b = np.array([1.0, 2.0, 2.0]) / 3.0
    Bc = (1 - tau) * np.eye(3) + tau * np.outer(b, b)
    assert np.allclose(sym.A0, np.block([
        [np.array([[1 / 1.8]]), np.zeros((1, 8))],
        [np.zeros((3, 1)), 2.0 * np.eye(3), np.zeros((3, 5))],
        [np.zeros((3, 4)), Bc, np.zeros((3, 2))],
        [np.zeros((1, 7)), np.array([[2 / (9.0 - 0.9)]]), np.zeros((1, 1))],
        [np.zeros((1, 8)), np.ones((1, 1))],
    ]))
    A2 = sym.A[1]
    e = np.array([0, 1.0, 0])
    assert A2[0, 0] == pytest.approx(-1.0 / 1.8)
    assert np.allclose(A2[0, 1:4], e - 0.5 * b[1] * b)
    assert np.allclose(A2[1:4, 4:7], np.outer(e, U0.H) - 2.0 * Bc)
    assert np.allclose(A2[1:4, 7], -b[1] * b)
    assert A2[7, 7] == pytest.approx(-2.0 / 8.1)
    assert A2[8, 8] == -1.0


def test_singular_weight():
    with pytest.raises(SingularWeight):
        assemble_sym(PlasmaState(1.0, [0, 0, 0], [1, 0, 0], 1.0, 6.0))


def test_bcal_isotropic(iso):
    assert np.array_equal(bcal(iso), np.eye(3))


def test_bcal_spectrum(rng):
    for u in random_states(rng, 100):
        U0 = PlasmaState.from_vector(u)
        tau = (U0.p_par - U0.p_perp) / U0.H2
        w = np.linalg.eigvalsh(bcal(U0))
        assert np.allclose(np.sort(w), np.sort([1.0, 1 - tau, 1 - tau]), rtol=1e-12, atol=1e-12)
        b = U0.H / U0.Hnorm
        assert np.allclose(bcal(U0) @ b, b, atol=1e-12)


def test_pd_examples(iso, firehose):
    assert a0_positive_definite(iso)
    assert not a0_positive_definite(firehose)
    assert not a0_positive_definite(PlasmaState(1.0, [0, 0, 0], [3, 0, 0], 1.0, 7.0))


def test_pd_agreement_boundary_adjacent(rng):
    u = random_states(rng, 20_000)
    H2 = np.sum(u[:, 4:7] ** 2, 1)
    # push a third of the states next to each boundary of the PD region
    m = len(u) // 3
    u[:m, 7] = u[:m, 8] + H2[:m] * (1 + rng.uniform(-1e-6, 1e-6, m))
    u[m:2 * m, 8] = 6 * u[m:2 * m, 7] * (1 + rng.uniform(-1e-6, 1e-6, m))
    A0 = a0_batch(u[:, 0], u[:, 7], u[:, 8], u[:, 4:7])
    w = 6 * u[:, 7] - u[:, 8]
    numeric = np.where(w > 0, cholesky_pd_batch(np.where((w > 0)[:, None, None], A0, np.eye(9))), False)
    closed = ((u[:, 7] - u[:, 8]) / H2 < 1) & (w > 0)
    assert np.array_equal(numeric, closed)


def test_consistency_random(rng):
    for u in random_hyperbolic(rng, 300):
        res, scales = consistency_identity(PlasmaState.from_vector(u), with_scale=True)
        assert all(r <= 1e-12 * s for r, s in zip(res, scales))


def test_consistency_isotropic(rng):
    for u in random_hyperbolic(rng, 50):
        u[7] = u[8]
        res, scales = consistency_identity(PlasmaState.from_vector(u), with_scale=True)
        assert all(r <= 1e-12 * s for r, s in zip(res, scales))


def test_consistency_exact(rng):
    for U0 in random_rational(rng, 10):
        assert consistency_identity(U0) == [0, 0, 0]
    aligned = PlasmaState(Fraction(3), [0, 0, 0], [Fraction(2), 0, 0], Fraction(5, 2), Fraction(1))
    assert consistency_identity(aligned) == [0, 0, 0]


def test_alfven_pair(rng):
    for u in random_hyperbolic(rng, 50):
        u[1:4] = 0.0
        U0 = PlasmaState.from_vector(u)
        tau = (U0.p_par - U0.p_perp) / U0.H2
        cA = np.sqrt(U0.H2 * (1 - tau) / U0.rho)
        s = char_speeds(U0, U0.H / U0.Hnorm)
        assert np.min(np.abs(s - cA)) <= 1e-8 * cA
        assert np.min(np.abs(s + cA)) <= 1e-8 * cA


def test_speeds_shift_with_velocity(rng):
    for u in random_hyperbolic(rng, 20):
        n = rng.normal(size=3)
        n /= np.linalg.norm(n)
        c = rng.normal()
        ub = u.copy()
        ub[1:4] += c * n
        s = char_speeds(PlasmaState.from_vector(u), n)
        sb = char_speeds(PlasmaState.from_vector(ub), n)
        assert np.allclose(sb, s + c, atol=1e-10 * (1 + np.max(np.abs(s))))


def test_speeds_equal_B_eigenvalues(rng):
    for u in random_hyperbolic(rng, 100):
        n = rng.normal(size=3)
        n /= np.linalg.norm(n)
        U0 = PlasmaState.from_vector(u)
        s = char_speeds(U0, n)
        w = np.linalg.eigvals(plane_wave_matrix(U0, n))
        assert np.max(np.abs(w.imag)) <= 1e-6 * (1 + np.max(np.abs(s)))
        assert np.allclose(np.sort(w.real), s, atol=1e-6 * (1 + np.max(np.abs(s))))


def test_speeds_errors(firehose, iso):
    with pytest.raises(NotPositiveDefinite):
        char_speeds(firehose, [1, 0, 0])
    with pytest.raises(DomainError):
        char_speeds(iso, [1, 1, 0])


def test_batch_agrees(rng):
    u = random_hyperbolic(rng, 100)
    A0, mats = assemble_sym_batch(u)
    sb = char_speeds_batch(u, 2)
    for i in range(100):
        U0 = PlasmaState.from_vector(u[i])
        sym = assemble_sym(U0)
        assert np.allclose(A0[i], sym.A0, rtol=1e-15, atol=0)
        for j in range(3):
            assert np.allclose(mats[j][i], sym.A[j], rtol=1e-15, atol=1e-15)
        assert np.allclose(sb[i], char_speeds(U0, [0, 0, 1]), rtol=1e-12, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_speeds_rotation_equivariant(seed):
    r = np.random.default_rng(seed)
    u = random_hyperbolic(r, 1)[0]
    Q, _ = np.linalg.qr(r.normal(size=(3, 3)))
    n = r.normal(size=3)
    n /= np.linalg.norm(n)
    ur = u.copy()
    ur[1:4], ur[4:7] = Q @ u[1:4], Q @ u[4:7]
    Qn = Q @ n
    Qn /= np.linalg.norm(Qn)
    s = char_speeds(PlasmaState.from_vector(u), n)
    sr = char_speeds(PlasmaState.from_vector(ur), Qn)
    assert np.allclose(s, sr, atol=1e-9 * (1 + np.max(np.abs(s))))


def test_closed_form_matches_factorization(rng):
    for u in random_states(rng, 500):
        U0 = PlasmaState.from_vector(u)
        assert a0_positive_definite(U0) == a0_closed_form(U0)
