"""Plane-wave analysis of the frozen-coefficient linearized system.

A perturbation ``U_hat exp(i(k.x - omega t))`` solves the principal part iff
``omega`` is an eigenvalue of ``sum_j k_j B_j``.  Complex ``omega`` with
positive imaginary part is exponential growth.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DefectivePencil
from .quasilinear import plane_wave_matrix
from .state import PlasmaState

EIG_RTOL = 1e-10
COND_LIMIT = 1e12


@dataclass(frozen=True)
class DispersionResult:
    k: np.ndarray
    eigenvalues: np.ndarray  # sorted by real part, then imaginary part
    growth_rate: float


def dispersion(U0: PlasmaState, k) -> DispersionResult:
    k = np.asarray(k, dtype=float)
    M = plane_wave_matrix(U0.to_float(), k)
    w = np.linalg.eigvals(M)
    w = w[np.lexsort((w.imag, w.real))]
    return DispersionResult(k=k, eigenvalues=w, growth_rate=float(np.max(w.imag)))


def fibonacci_sphere(n: int) -> np.ndarray:
    """n nearly uniform unit vectors."""
    i = np.arange(n) + 0.5
    polar = np.arccos(1.0 - 2.0 * i / n)
    azim = np.pi * (1.0 + 5.0**0.5) * i
    return np.stack(
        [np.cos(azim) * np.sin(polar), np.sin(azim) * np.sin(polar), np.cos(polar)], axis=1
    )


def _threads() -> int:
    import os

    try:
        return max(1, int(os.environ.get("CGL_LAB_THREADS", "1")))
    except ValueError:
        return 1


def growth_scan(U0: PlasmaState, directions) -> np.ndarray:
    """Growth rate per direction at |k| = 1; order of evaluation is irrelevant."""
    dirs = np.asarray(directions, dtype=float)
    dirs = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
    U = U0.to_float()
    threads = _threads()
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            rates = list(pool.map(lambda d: dispersion(U, d).growth_rate, dirs))
    else:
        rates = [dispersion(U, d).growth_rate for d in dirs]
    return np.array(rates)


def growth_scan_batch(u: np.ndarray, directions) -> np.ndarray:
    """Max growth over ``directions`` for many backgrounds ``u[n, 9]``."""
    u = np.asarray(u, float)
    dirs = np.asarray(directions, dtype=float)
    out = np.full(u.shape[0], -np.inf)
    for d in dirs:
        M = plane_wave_batch(u, d)
        g = np.linalg.eigvals(M).imag.max(axis=1)
        out = np.maximum(out, g)
    return out


def plane_wave_batch(u: np.ndarray, k) -> np.ndarray:
    """sum_j k_j B_j for float backgrounds ``u[n, 9]``."""
    u = np.asarray(u, float)
    k = np.asarray(k, float)
    n = u.shape[0]
    rho = u[:, 0]
    v = u[:, 1:4]
    H = u[:, 4:7]
    pp = u[:, 7]
    pt = u[:, 8]
    H2 = np.sum(H * H, axis=1)
    tau = (pp - pt) / H2
    vk = v @ k
    Hk = H @ k
    bkb = (Hk / H2)[:, None] * H
    bbT = H[:, :, None] * H[:, None, :] / H2[:, None, None]
    M = np.zeros((n, 9, 9))
    M[:, range(9), range(9)] = vk[:, None]
    M[:, 0, 1:4] += rho[:, None] * k
    M[:, 1:4, 7] += bkb / rho[:, None]
    M[:, 1:4, 8] += (k[None, :] - bkb) / rho[:, None]
    M[:, 1:4, 4:7] += (
        (-2.0 * tau * Hk)[:, None, None] * bbT
        + ((tau - 1.0) * Hk)[:, None, None] * np.eye(3)
        + k[None, :, None] * H[:, None, :]
    ) / rho[:, None, None]
    M[:, 4:7, 1:4] += -Hk[:, None, None] * np.eye(3) + H[:, :, None] * k[None, None, :]
    M[:, 7, 1:4] += pp[:, None] * k + 2.0 * pp[:, None] * bkb
    M[:, 8, 1:4] += 2.0 * pt[:, None] * k - pt[:, None] * bkb
    return M


def evolve_modal(U0: PlasmaState, k, V_hat0, t: float) -> np.ndarray:
    """exp(-i t sum_j k_j B_j) V_hat0 via eigendecomposition."""
    k = np.asarray(k, dtype=float)
    M = plane_wave_matrix(U0.to_float(), k)
    w, R = np.linalg.eig(M)
    cond = np.linalg.cond(R)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise DefectivePencil(f"eigenvector matrix condition number {cond:.3e}")
    c = np.linalg.solve(R, np.asarray(V_hat0, dtype=complex))
    return R @ (np.exp(-1j * t * w) * c)
