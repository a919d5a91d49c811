"""Algebraic symmetrization of the linearized CGL equations.

The perturbation ``U = (rho, v, H, p_par, p_perp)`` is mapped to
``V = (p_perp, v, H, P, s_par)`` with

    P     = p_perp/2 - p_par + tau0 (H0 . H)
    s_par = p_par/(3 p_par0) - rho/rho0 + 2 (H0 . H)/(3 |H0|^2)

after which the system reads ``A0 dV/dt + sum_j A_j dV/dx_j + ... = 0`` with
symmetric ``A0, A_j``.  Everything here except the eigen/Cholesky routines
is rational in the background and runs exactly on Fraction input.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import NotPositiveDefinite, SingularWeight, DomainError
from .quasilinear import _eye, _unit, assemble_B
from .state import PlasmaState

# indices in V-ordering
V_PPERP = 0
V_V = slice(1, 4)
V_H = slice(4, 7)
V_P = 7
V_S = 8


@dataclass(frozen=True)
class SymmetricSystem:
    A0: np.ndarray
    A: tuple  # (A1, A2, A3)
    Bcal: np.ndarray

    def Aj(self, j: int) -> np.ndarray:
        return self.A[j]

    def directional(self, n) -> np.ndarray:
        return sum(n[j] * self.A[j] for j in range(3))


def _dt(U):
    return object if U.exact else float


def bcal(U0: PlasmaState) -> np.ndarray:
    """(1 - tau) I + tau b b^T, the left multiplier of the induction equation."""
    dt = _dt(U0)
    H2 = U0.H2
    tau = (U0.p_par - U0.p_perp) / H2
    return (1 - tau) * _eye(3, dt) + tau * np.outer(U0.H, U0.H) / H2


def change_matrix(U0: PlasmaState) -> np.ndarray:
    """J with V = J U."""
    dt = _dt(U0)
    H = U0.H
    H2 = U0.H2
    tau = (U0.p_par - U0.p_perp) / H2
    J = np.zeros((9, 9), dtype=dt)
    J[0, 8] = 1
    for i in range(1, 7):
        J[i, i] = 1
    J[7, 8] = Fraction(1, 2) if U0.exact else 0.5
    J[7, 7] = -1
    J[7, 4:7] = tau * H
    J[8, 7] = 1 / (3 * U0.p_par)
    J[8, 0] = -1 / U0.rho
    J[8, 4:7] = 2 * H / (3 * H2)
    return J


def change_matrix_inverse(U0: PlasmaState) -> np.ndarray:
    """Closed-form J^{-1}: p_par from the P row, rho from the s_par row."""
    dt = _dt(U0)
    H = U0.H
    H2 = U0.H2
    rho, pp = U0.rho, U0.p_par
    tau = (pp - U0.p_perp) / H2
    half = Fraction(1, 2) if U0.exact else 0.5
    K = np.zeros((9, 9), dtype=dt)
    for i in range(1, 7):
        K[i, i] = 1
    K[8, 0] = 1                      # p_perp
    # p_par = p_perp/2 + tau H0.H - P
    K[7, 0] = half
    K[7, 4:7] = tau * H
    K[7, 7] = -1
    # rho = rho0 (p_par/(3 p_par0) + 2 H0.H/(3|H0|^2) - s)
    c = rho / (3 * pp)
    K[0, :] = c * K[7, :]
    K[0, 4:7] = K[0, 4:7] + rho * 2 * H / (3 * H2)
    K[0, 8] = -rho
    return K


def assemble_sym(U0: PlasmaState) -> SymmetricSystem:
    """Symmetric A0, A1, A2, A3 at the frozen background."""
    dt = _dt(U0)
    rho, v, H = U0.rho, U0.v, U0.H
    pp, pt = U0.p_par, U0.p_perp
    H2 = U0.H2
    w = 6 * pp - pt
    if w == 0:
        raise SingularWeight("6 p_par == p_perp: P-weight undefined")
    Bc = bcal(U0)
    one = Fraction(1) if U0.exact else 1.0
    half = one / 2
    I3 = _eye(3, dt)

    A0 = np.zeros((9, 9), dtype=dt)
    A0[0, 0] = one / (2 * pt)
    A0[1:4, 1:4] = rho * I3
    A0[4:7, 4:7] = Bc
    A0[7, 7] = 2 * one / w
    A0[8, 8] = one

    mats = []
    for j in range(3):
        e = _unit(j, dt)
        bjb = H[j] * H / H2
        A = np.zeros((9, 9), dtype=dt)
        A[0, 0] = v[j] / (2 * pt)
        row = e - half * bjb
        A[0, 1:4] = row
        A[1:4, 0] = row
        A[1:4, 1:4] = rho * v[j] * I3
        cvh = np.outer(e, H) - H[j] * Bc
        A[1:4, 4:7] = cvh
        A[4:7, 1:4] = cvh.T
        A[1:4, 7] = -bjb
        A[7, 1:4] = -bjb
        A[4:7, 4:7] = v[j] * Bc
        A[7, 7] = 2 * v[j] / w
        A[8, 8] = v[j]
        mats.append(A)
    return SymmetricSystem(A0=A0, A=tuple(mats), Bcal=Bc)


def a0_closed_form(U0: PlasmaState) -> bool:
    tau = (U0.p_par - U0.p_perp) / U0.H2
    return bool(tau < 1 and 6 * U0.p_par - U0.p_perp > 0)


def cholesky_pd_batch(A: np.ndarray, rtol: float = 64 * np.finfo(float).eps) -> np.ndarray:
    """Vectorized Cholesky attempt on ``A[n, m, m]``; True where every pivot is positive.

    A pivot counts as positive only above ``rtol * max|diag|`` so matrices
    singular in exact arithmetic are not accepted on rounding noise.
    """
    A = np.asarray(A, dtype=float)
    n, m, _ = A.shape
    scale = np.max(np.abs(np.diagonal(A, axis1=1, axis2=2)), axis=1)
    L = np.zeros_like(A)
    ok = np.ones(n, dtype=bool)
    for k in range(m):
        piv = A[:, k, k] - np.einsum("ij,ij->i", L[:, k, :k], L[:, k, :k])
        good = piv > rtol * scale
        ok &= good
        d = np.sqrt(np.where(good, piv, 1.0))
        L[:, k, k] = d
        if k + 1 < m:
            s = A[:, k + 1:, k] - np.einsum("irj,ij->ir", L[:, k + 1:, :k], L[:, k, :k])
            L[:, k + 1:, k] = s / d[:, None]
    return ok


def a0_batch(rho, p_par, p_perp, H) -> np.ndarray:
    """A0 for many backgrounds at once; H has shape (n, 3)."""
    rho = np.asarray(rho, float)
    n = rho.shape[0]
    H = np.asarray(H, float)
    H2 = np.sum(H * H, axis=1)
    tau = (p_par - p_perp) / H2
    A0 = np.zeros((n, 9, 9))
    A0[:, 0, 0] = 1.0 / (2.0 * p_perp)
    for i in range(1, 4):
        A0[:, i, i] = rho
    A0[:, 4:7, 4:7] = (1.0 - tau)[:, None, None] * np.eye(3) + (tau / H2)[:, None, None] * (
        H[:, :, None] * H[:, None, :]
    )
    A0[:, 7, 7] = 2.0 / (6.0 * p_par - p_perp)
    A0[:, 8, 8] = 1.0
    return A0


def a0_positive_definite(U0: PlasmaState) -> bool:
    """Closed-form criterion cross-checked by a numerical factorization.

    Raises AssertionError if the two routes disagree.
    """
    closed = a0_closed_form(U0)
    U = U0.to_float()
    w = 6.0 * U.p_par - U.p_perp
    if w <= 0:
        numeric = False  # weight 2/w is non-positive or undefined
    else:
        A0 = a0_batch(np.array([U.rho]), np.array([U.p_par]), np.array([U.p_perp]),
                      U.H[None, :].astype(float))
        numeric = bool(cholesky_pd_batch(A0)[0])
    if closed != numeric:
        raise AssertionError(
            f"A0 definiteness disagreement: closed form {closed}, factorization {numeric}"
        )
    return closed


def consistency_identity(U0: PlasmaState, with_scale: bool = False):
    """Residuals ||A_j J - A0 J B_j||_inf for j = 1, 2, 3.

    With ``with_scale`` also returns the entrywise magnitude scale
    ``max(|A_j| |J| + |A0| |J| |B_j|)`` against which float residuals are judged.
    Exact (Fraction) backgrounds give exact residuals.
    """
    sym = assemble_sym(U0)
    J = change_matrix(U0)
    res, scales = [], []
    for j in range(3):
        Bj = assemble_B(U0, j)
        lhs = sym.A[j].dot(J)
        rhs = sym.A0.dot(J).dot(Bj)
        diff = lhs - rhs
        if U0.exact:
            res.append(max(abs(x) for x in diff.ravel()))
            scales.append(1)
        else:
            res.append(float(np.max(np.abs(diff))))
            sc = np.abs(sym.A[j]) @ np.abs(J) + np.abs(sym.A0) @ np.abs(J) @ np.abs(Bj)
            scales.append(float(np.max(sc)))
    if with_scale:
        return res, scales
    return res


def _sym_inv_sqrt_a0(A0: np.ndarray) -> np.ndarray:
    L = np.linalg.cholesky(A0)
    return np.linalg.inv(L)


def char_speeds(U0: PlasmaState, n) -> np.ndarray:
    """Sorted characteristic speeds: roots of det(sum n_j A_j - lam A0) = 0."""
    n = np.asarray(n, dtype=float)
    if n.shape != (3,):
        raise DomainError("direction must be a 3-vector")
    if abs(np.linalg.norm(n) - 1.0) > 1e-12:
        raise DomainError("direction must be a unit vector")
    if not a0_closed_form(U0):
        raise NotPositiveDefinite("A0 is not positive definite at this background")
    U = U0.to_float()
    sym = assemble_sym(U)
    An = sym.directional(n)
    Linv = _sym_inv_sqrt_a0(sym.A0)
    C = Linv @ An @ Linv.T
    C = 0.5 * (C + C.T)
    return np.linalg.eigvalsh(C)


def assemble_sym_batch(u: np.ndarray):
    """A0 and (A1, A2, A3) for many float backgrounds ``u[n, 9]``."""
    u = np.asarray(u, float)
    rho = u[:, 0]
    v = u[:, 1:4]
    H = u[:, 4:7]
    pp = u[:, 7]
    pt = u[:, 8]
    H2 = np.sum(H * H, axis=1)
    A0 = a0_batch(rho, pp, pt, H)
    Bc = A0[:, 4:7, 4:7]
    w = 6.0 * pp - pt
    mats = []
    for j in range(3):
        e = np.zeros(3)
        e[j] = 1.0
        bjb = (H[:, j] / H2)[:, None] * H
        vj = v[:, j]
        A = np.zeros_like(A0)
        A[:, 0, 0] = vj / (2.0 * pt)
        row = e[None, :] - 0.5 * bjb
        A[:, 0, 1:4] = row
        A[:, 1:4, 0] = row
        A[:, 1:4, 1:4] = (rho * vj)[:, None, None] * np.eye(3)
        cvh = e[None, :, None] * H[:, None, :] - H[:, j, None, None] * Bc
        A[:, 1:4, 4:7] = cvh
        A[:, 4:7, 1:4] = np.transpose(cvh, (0, 2, 1))
        A[:, 1:4, 7] = -bjb
        A[:, 7, 1:4] = -bjb
        A[:, 4:7, 4:7] = vj[:, None, None] * Bc
        A[:, 7, 7] = 2.0 * vj / w
        A[:, 8, 8] = vj
        mats.append(A)
    return A0, tuple(mats)


def char_speeds_batch(u: np.ndarray, j: int = 0) -> np.ndarray:
    """Speeds along e_j for many float backgrounds ``u[n, 9]`` (assumes A0 > 0)."""
    A0, mats = assemble_sym_batch(u)
    L = np.linalg.cholesky(A0)
    Linv = np.linalg.inv(L)
    C = Linv @ mats[j] @ np.transpose(Linv, (0, 2, 1))
    C = 0.5 * (C + np.transpose(C, (0, 2, 1)))
    return np.linalg.eigvalsh(C)
