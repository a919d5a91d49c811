"""Conservative fluxes, energy, and frozen-coefficient matrices B_j.

``B_j`` is the principal part of the linearized CGL system in primary
variables: ``dU/dt + sum_j B_j dU/dx_j + (zero-order terms) = 0``.  The
divergence constraint is built in (no ``v div H`` term).  Every entry is a
rational function of ``(rho, v, H, p_par, p_perp)`` and ``|H|^2``, so the
assembly is exact for Fraction inputs.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError
from .state import PlasmaState, entropy_par, entropy_perp

NVAR = 9


def _dtype(U: PlasmaState):
    return object if U.exact else float


def _eye(n, dtype):
    m = np.zeros((n, n), dtype=dtype)
    for i in range(n):
        m[i, i] = 1
    return m


def _unit(j, dtype):
    e = np.zeros(3, dtype=dtype)
    e[j] = 1
    return e


def _check_dir(j: int) -> int:
    if j not in (0, 1, 2):
        raise DomainError(f"direction index must be 0, 1 or 2, got {j}")
    return j


def assemble_B(U0: PlasmaState, j: int) -> np.ndarray:
    """Coefficient matrix of d/dx_j (direction index 0-based)."""
    _check_dir(j)
    dt = _dtype(U0)
    rho, v, H = U0.rho, U0.v, U0.H
    pp, pt = U0.p_par, U0.p_perp
    H2 = U0.H2
    tau = (pp - pt) / H2
    e = _unit(j, dt)
    I3 = _eye(3, dt)
    bjb = H[j] * H / H2          # b_j b
    bbT = np.outer(H, H) / H2    # b b^T

    B = _eye(NVAR, dt) * v[j]
    B[0, 1:4] += rho * e
    B[1:4, 7] += bjb / rho
    B[1:4, 8] += (e - bjb) / rho
    B[1:4, 4:7] += (-2 * tau * H[j] * bbT + (tau - 1) * H[j] * I3 + np.outer(e, H)) / rho
    B[4:7, 1:4] += -H[j] * I3 + np.outer(H, e)
    B[7, 1:4] += pp * e + 2 * pp * bjb
    B[8, 1:4] += 2 * pt * e - pt * bjb
    return B


def plane_wave_matrix(U0: PlasmaState, k) -> np.ndarray:
    """sum_j k_j B_j."""
    k = np.asarray(k)
    M = sum(k[j] * assemble_B(U0, j) for j in range(3))
    return np.asarray(M)


def flux_batch(u: np.ndarray, j: int) -> np.ndarray:
    """Conservative flux in direction j for primary states ``u[..., 9]``.

    Components follow the conserved ordering ``(rho, rho v, H, rho s_par,
    rho s_perp)``.
    """
    _check_dir(j)
    u = np.asarray(u, dtype=float)
    rho = u[..., 0]
    v = u[..., 1:4]
    H = u[..., 4:7]
    pp = u[..., 7]
    pt = u[..., 8]
    H2 = np.sum(H * H, axis=-1)
    tau = (pp - pt) / H2
    q = pt + 0.5 * H2
    vj = v[..., j]
    Hj = H[..., j]
    F = np.empty_like(u)
    F[..., 0] = rho * vj
    F[..., 1:4] = (rho * vj)[..., None] * v + ((tau - 1.0) * Hj)[..., None] * H
    F[..., 1 + j] += q
    F[..., 4:7] = vj[..., None] * H - Hj[..., None] * v
    F[..., 4 + j] = 0.0  # v_j H_j - H_j v_j, kept exactly zero
    F[..., 7] = rho * entropy_par(rho, pp, H2) * vj
    F[..., 8] = rho * entropy_perp(rho, pt, H2) * vj
    return F


def flux(U: PlasmaState, j: int) -> np.ndarray:
    """Flux 9-vector of the nine conservation laws in direction j (0-based)."""
    return flux_batch(U.to_float().as_vector(), j)


def energy_batch(u: np.ndarray):
    """Energy density and flux for primary states ``u[..., 9]``.

    Returns ``(density[...], flux[..., 3])``.
    """
    u = np.asarray(u, dtype=float)
    rho = u[..., 0]
    v = u[..., 1:4]
    H = u[..., 4:7]
    pp = u[..., 7]
    pt = u[..., 8]
    H2 = np.sum(H * H, axis=-1)
    tau = (pp - pt) / H2
    v2 = np.sum(v * v, axis=-1)
    rhoE = pt + 0.5 * pp + 0.5 * rho * v2
    density = rhoE + 0.5 * H2
    vH = np.sum(v * H, axis=-1)
    # H x (v x H) = v |H|^2 - H (v.H)
    fl = (
        (rhoE + pt)[..., None] * v
        + H2[..., None] * v
        - vH[..., None] * H
        + (tau * vH)[..., None] * H
    )
    return density, fl


def energy(U: PlasmaState):
    d, f = energy_batch(U.to_float().as_vector())
    return float(d), f
