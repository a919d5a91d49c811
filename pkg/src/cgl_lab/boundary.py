"""Interface boundary operator, its effective linearization and the boundary matrix.

All fields are traces on the periodic x' grid with shape ``(n2, n3, ...)``.
Tangential derivatives are spectral, so trigonometric test data is
differentiated exactly.  On the interface the cut-off equals 1 with zero
slope, hence ``Psi = psi`` and ``d1 Phi = 1`` there, while ``Psi = 0`` on
both outer walls.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import BasicStateViolation, GridMismatch
from .hyperbolicity import Thresholds
from .state import PlasmaState
from .symmetrizer import assemble_sym, assemble_sym_batch

ROWS = ("kinematic", "pressure", "h_normal", "v1", "hxe1_1", "hxe1_2", "hxe1_3")
CONSTRAINT_TOL = 1e-10
QF_TOL = 1e-13


def tangential_derivative(f: np.ndarray, axis: int) -> np.ndarray:
    """Spectral d/dx2 (axis 0) or d/dx3 (axis 1) on the unit periodic grid."""
    f = np.asarray(f, dtype=float)
    n = f.shape[axis]
    k = 2.0 * np.pi * np.fft.fftfreq(n) * n
    if n % 2 == 0:
        k[n // 2] = 0.0
    shape = [1] * f.ndim
    shape[axis] = n
    F = np.fft.fft(f, axis=axis)
    return np.real(np.fft.ifft(1j * k.reshape(shape) * F, axis=axis))


def normal_of(phi: np.ndarray) -> np.ndarray:
    """N = (1, -d2 phi, -d3 phi)."""
    return np.stack([np.ones_like(phi), -tangential_derivative(phi, 0),
                     -tangential_derivative(phi, 1)], axis=-1)


def _hxe1(h):
    return np.stack([np.zeros_like(h[..., 0]), h[..., 2], -h[..., 1]], axis=-1)


def _check_shapes(ref, **fields):
    for name, (arr, tail) in fields.items():
        if arr is None:
            continue
        if np.shape(arr) != ref + tail:
            raise GridMismatch(f"{name} has shape {np.shape(arr)}, expected {ref + tail}")


# ---------------------------------------------------------------------------
# nonlinear operator

@dataclass
class BoundaryData:
    """Traces entering the nonlinear boundary operator.

    ``U_sigma`` and ``h_sigma`` live on the interface, ``v1_plus`` (and
    optionally ``H1_plus``) on the upper wall, ``h_minus`` and ``jc`` on the
    lower wall.
    """

    U_sigma: np.ndarray
    h_sigma: np.ndarray
    v1_plus: np.ndarray
    h_minus: np.ndarray
    phi: np.ndarray
    phi_t: np.ndarray
    jc: np.ndarray
    H1_plus: Optional[np.ndarray] = None

    def __post_init__(self):
        self.phi = np.asarray(self.phi, dtype=float)
        ref = self.phi.shape
        _check_shapes(ref, U_sigma=(self.U_sigma, (9,)), h_sigma=(self.h_sigma, (3,)),
                      v1_plus=(self.v1_plus, ()), h_minus=(self.h_minus, (3,)),
                      phi_t=(self.phi_t, ()), jc=(self.jc, (3,)), H1_plus=(self.H1_plus, ()))

    @property
    def N(self) -> np.ndarray:
        return normal_of(self.phi)


def nonlinear_residual(bd: BoundaryData) -> dict:
    """The boundary rows as separate fields, keyed by :data:`ROWS`."""
    U = np.asarray(bd.U_sigma, dtype=float)
    h = np.asarray(bd.h_sigma, dtype=float)
    N = bd.N
    v = U[..., 1:4]
    H = U[..., 4:7]
    q = U[..., 8] + 0.5 * np.sum(H * H, axis=-1)
    tang = _hxe1(np.asarray(bd.h_minus, dtype=float)) - bd.jc
    return {
        "kinematic": bd.phi_t - np.sum(v * N, axis=-1),
        "pressure": q - 0.5 * np.sum(h * h, axis=-1),
        "h_normal": np.sum(h * N, axis=-1),
        "v1": np.asarray(bd.v1_plus, dtype=float),
        "hxe1_1": tang[..., 0],
        "hxe1_2": tang[..., 1],
        "hxe1_3": tang[..., 2],
    }


# ---------------------------------------------------------------------------
# basic state

@dataclass
class BasicState:
    """Basic-state traces plus the one-sided x1-derivatives on the interface."""

    U: np.ndarray        # (n2, n3, 9) on Sigma
    dU1: np.ndarray      # d1 U on Sigma
    h: np.ndarray        # (n2, n3, 3) on Sigma
    dh1: np.ndarray      # d1 h on Sigma
    phi: np.ndarray
    phi_t: np.ndarray
    v1_plus: np.ndarray  # v1 on Sigma^+
    H1_plus: np.ndarray  # H1 on Sigma^+
    h_minus: np.ndarray  # h on Sigma^-
    jc: np.ndarray

    def __post_init__(self):
        self.phi = np.asarray(self.phi, dtype=float)
        ref = self.phi.shape
        _check_shapes(ref, U=(self.U, (9,)), dU1=(self.dU1, (9,)), h=(self.h, (3,)),
                      dh1=(self.dh1, (3,)), phi_t=(self.phi_t, ()), v1_plus=(self.v1_plus, ()),
                      H1_plus=(self.H1_plus, ()), h_minus=(self.h_minus, (3,)), jc=(self.jc, (3,)))

    @property
    def N(self) -> np.ndarray:
        return normal_of(self.phi)

    @property
    def b1(self) -> np.ndarray:
        return -np.sum(self.dU1[..., 1:4] * self.N, axis=-1)

    @property
    def b2(self) -> np.ndarray:
        return (self.dU1[..., 8] + np.sum(self.U[..., 4:7] * self.dU1[..., 4:7], axis=-1)
                - np.sum(self.h * self.dh1, axis=-1))

    @property
    def m(self) -> np.ndarray:
        """v.N - d_t phi on the interface."""
        return np.sum(self.U[..., 1:4] * self.N, axis=-1) - self.phi_t

    def divergence_trace(self) -> np.ndarray:
        """d1 h.N + d2 h2 + d3 h3 on the interface."""
        return (np.sum(self.dh1 * self.N, axis=-1) + tangential_derivative(self.h[..., 1], 0)
                + tangential_derivative(self.h[..., 2], 1))

    def constraint_report(self, thr: Optional[Thresholds] = None) -> dict:
        """Max violation per constraint; margins use half the thresholds."""
        thr = thr or Thresholds()
        d = thr.delta
        U = self.U
        rho, pp, pt = U[..., 0], U[..., 7], U[..., 8]
        H = U[..., 4:7]
        H2 = np.sum(H * H, axis=-1)
        N = self.N

        def sup(x):
            return float(np.max(np.abs(x))) if np.size(x) else 0.0

        def short(x, bound):
            return float(max(0.0, np.max(bound - x)))

        return {
            "kinematic": sup(self.m),
            "h_normal": sup(np.sum(self.h * N, axis=-1)),
            "h_divergence_trace": sup(self.divergence_trace()),
            "v1_wall": sup(self.v1_plus),
            "jc_wall": sup(_hxe1(self.h_minus) - self.jc),
            "H_normal": sup(np.sum(H * N, axis=-1)),
            "H1_wall": sup(self.H1_plus),
            "rho_margin": short(rho, d[1] / 2),
            "tau_margin": short((pt - pp) / H2 + 1.0, d[2] / 2),
            "p_margin": short(pp + pt * (pp - pt) / H2, d[3] / 2),
            "weight_margin": short(6.0 - pt / pp, d[4] / 2),
            "p_par_margin": short(pp, d[5] / 2),
            "p_perp_margin": short(pt, d[6] / 2),
            "H_margin": short(np.sqrt(H2), d[7] / 2),
        }

    def verify(self, tol: float = CONSTRAINT_TOL, thr: Optional[Thresholds] = None) -> dict:
        """Raise :class:`BasicStateViolation` listing every failed constraint."""
        rep = self.constraint_report(thr)
        scale = max(1.0, float(np.max(np.abs(self.U))), float(np.max(np.abs(self.h))),
                    float(np.max(np.abs(self.dh1))))
        bad = {k: v for k, v in rep.items()
               if (v > tol * scale if not k.endswith("_margin") else v > 0.0)}
        if bad:
            listing = ", ".join(f"{k}={v:.3e}" for k, v in bad.items())
            raise BasicStateViolation(f"basic state violates: {listing}", bad)
        return rep


def random_basic_state(rng: np.random.Generator, n2: int = 8, n3: int = 8,
                       amp: float = 0.1) -> BasicState:
    """A smooth basic state satisfying every interface constraint by construction."""
    x2, x3 = np.meshgrid(np.arange(n2) / n2, np.arange(n3) / n3, indexing="ij")

    def trig():
        a, b, c = rng.normal(size=3)
        return a * np.sin(2 * np.pi * (x2 + rng.random())) + b * np.cos(2 * np.pi * (x3 + rng.random())) \
            + c * np.sin(2 * np.pi * (x2 + x3))

    phi = amp * trig()
    d2, d3 = tangential_derivative(phi, 0), tangential_derivative(phi, 1)
    phi_t = amp * trig()
    v = np.stack([np.zeros_like(phi), amp * trig(), amp * trig()], axis=-1)
    v[..., 0] = phi_t + v[..., 1] * d2 + v[..., 2] * d3
    H = np.stack([np.zeros_like(phi), 1.0 + amp * trig(), 0.5 + amp * trig()], axis=-1)
    H[..., 0] = H[..., 1] * d2 + H[..., 2] * d3
    rho = 1.0 + amp * np.abs(trig())
    p_par = 1.0 + amp * np.abs(trig())
    p_perp = 0.9 + amp * np.abs(trig())
    U = np.concatenate([rho[..., None], v, H, p_par[..., None], p_perp[..., None]], axis=-1)
    h = np.stack([np.zeros_like(phi), -0.5 + amp * trig(), 1.0 + amp * trig()], axis=-1)
    h[..., 0] = h[..., 1] * d2 + h[..., 2] * d3
    dU1 = rng.normal(size=U.shape) * amp
    dh1 = rng.normal(size=h.shape) * amp
    # fix d1 h1 from the divergence-trace constraint
    dh1[..., 0] = (dh1[..., 1] * d2 + dh1[..., 2] * d3
                   - tangential_derivative(h[..., 1], 0) - tangential_derivative(h[..., 2], 1))
    h_minus = np.stack([amp * trig(), amp * trig(), amp * trig()], axis=-1)
    return BasicState(U=U, dU1=dU1, h=h, dh1=dh1, phi=phi, phi_t=phi_t,
                      v1_plus=np.zeros_like(phi), H1_plus=np.zeros_like(phi),
                      h_minus=h_minus, jc=_hxe1(h_minus))


# ---------------------------------------------------------------------------
# effective linearized operator

@dataclass
class BoundaryPerturbation:
    """Good-unknown traces and the front perturbation."""

    U_sigma: np.ndarray   # (n2, n3, 9)
    h_sigma: np.ndarray   # (n2, n3, 3)
    v1_plus: np.ndarray
    h_minus: np.ndarray
    psi: np.ndarray
    psi_t: np.ndarray


def linearized_residual(bs: BasicState, pert: BoundaryPerturbation, verify: bool = True) -> dict:
    """Rows of the effective linearized boundary operator, keyed by :data:`ROWS`."""
    if verify:
        bs.verify()
    ref = bs.phi.shape
    _check_shapes(ref, U_sigma=(pert.U_sigma, (9,)), h_sigma=(pert.h_sigma, (3,)),
                  v1_plus=(pert.v1_plus, ()), h_minus=(pert.h_minus, (3,)),
                  psi=(pert.psi, ()), psi_t=(pert.psi_t, ()))
    N = bs.N
    psi = np.asarray(pert.psi, dtype=float)
    Ud = np.asarray(pert.U_sigma, dtype=float)
    hd = np.asarray(pert.h_sigma, dtype=float)
    v0 = bs.U[..., 1:4]
    D2psi, D3psi = tangential_derivative(psi, 0), tangential_derivative(psi, 1)
    tang = _hxe1(np.asarray(pert.h_minus, dtype=float))
    return {
        "kinematic": pert.psi_t + v0[..., 1] * D2psi + v0[..., 2] * D3psi + bs.b1 * psi
        - np.sum(Ud[..., 1:4] * N, axis=-1),
        "pressure": Ud[..., 8] + np.sum(bs.U[..., 4:7] * Ud[..., 4:7], axis=-1)
        - np.sum(bs.h * hd, axis=-1) + bs.b2 * psi,
        "h_normal": np.sum(hd * N, axis=-1) - tangential_derivative(bs.h[..., 1] * psi, 0)
        - tangential_derivative(bs.h[..., 2] * psi, 1),
        "v1": np.asarray(pert.v1_plus, dtype=float),
        "hxe1_1": tang[..., 0],
        "hxe1_2": tang[..., 1],
        "hxe1_3": tang[..., 2],
    }


def random_perturbation(rng: np.random.Generator, shape: tuple) -> BoundaryPerturbation:
    return BoundaryPerturbation(
        U_sigma=rng.normal(size=shape + (9,)), h_sigma=rng.normal(size=shape + (3,)),
        v1_plus=rng.normal(size=shape), h_minus=rng.normal(size=shape + (3,)),
        psi=np.real(np.fft.ifft2(np.fft.fft2(rng.normal(size=shape))
                                 * (np.add.outer(np.abs(np.fft.fftfreq(shape[0])), np.abs(np.fft.fftfreq(shape[1]))) < 0.3))),
        psi_t=rng.normal(size=shape),
    )


def linearization_check(bs: BasicState, pert: BoundaryPerturbation, theta: float = 1e-3,
                        verify: bool = True) -> dict:
    """Compare d/dtheta of the nonlinear rows with the effective linearized rows.

    The perturbation in original unknowns is rebuilt from the good unknowns
    (``U = U_dot + psi d1 U0`` on the interface, unchanged on the walls).  The
    derivative is a Richardson extrapolated central difference.  Returns per
    row the raw mismatch, and for ``h_normal`` also the mismatch after removing
    ``psi`` times the divergence-trace constraint residual.
    """
    psi = np.asarray(pert.psi, dtype=float)
    U = pert.U_sigma + psi[..., None] * bs.dU1
    h = pert.h_sigma + psi[..., None] * bs.dh1

    def B(th):
        return nonlinear_residual(BoundaryData(
            U_sigma=bs.U + th * U, h_sigma=bs.h + th * h, v1_plus=bs.v1_plus + th * pert.v1_plus,
            h_minus=bs.h_minus + th * pert.h_minus, phi=bs.phi + th * psi,
            phi_t=bs.phi_t + th * pert.psi_t, jc=bs.jc))

    def central(th):
        p, m = B(th), B(-th)
        return {k: (p[k] - m[k]) / (2.0 * th) for k in ROWS}

    c1, c2 = central(theta), central(theta / 2.0)
    fd = {k: (4.0 * c2[k] - c1[k]) / 3.0 for k in ROWS}
    lin = linearized_residual(bs, pert, verify=verify)
    out = {k: float(np.max(np.abs(fd[k] - lin[k]))) for k in ROWS}
    corr = fd["h_normal"] - lin["h_normal"] - psi * bs.divergence_trace()
    out["h_normal_corrected"] = float(np.max(np.abs(corr)))
    return out


# ---------------------------------------------------------------------------
# boundary matrix and its quadratic form

def boundary_matrix_point(U0: PlasmaState, N, phi_t):
    """Full and reduced boundary matrices at one interface point (exact on Fractions)."""
    sym = assemble_sym(U0)
    full = sym.directional(N) - phi_t * sym.A0
    red = np.zeros((9, 9), dtype=full.dtype)
    red[0, 1:4] = N
    red[1:4, 0] = N
    red[1:4, 4:7] = np.outer(N, U0.H)
    red[4:7, 1:4] = np.outer(U0.H, N)
    return full, red


def boundary_matrix(bs: BasicState, verify: bool = True):
    """Full ``A1~`` and reduced matrices on the interface, shapes ``(n2, n3, 9, 9)``."""
    if verify:
        bs.verify()
    ref = bs.phi.shape
    u = bs.U.reshape(-1, 9)
    N = bs.N.reshape(-1, 3)
    A0, A = assemble_sym_batch(u)
    full = sum(N[:, j, None, None] * A[j] for j in range(3)) - bs.phi_t.reshape(-1)[:, None, None] * A0
    H = u[:, 4:7]
    red = np.zeros_like(full)
    red[:, 0, 1:4] = N
    red[:, 1:4, 0] = N
    red[:, 1:4, 4:7] = N[:, :, None] * H[:, None, :]
    red[:, 4:7, 1:4] = H[:, :, None] * N[:, None, :]
    return full.reshape(ref + (9, 9)), red.reshape(ref + (9, 9))


def quadratic_form(bs: BasicState, dotV: np.ndarray, verify: bool = True, tol: float = QF_TOL):
    """``(A1~ V.V, 2 q_dot (v_dot.N))`` pointwise; asserts they agree within ``tol * scale``."""
    full, _ = boundary_matrix(bs, verify)
    V = np.asarray(dotV, dtype=float)
    if V.shape != bs.phi.shape + (9,):
        raise GridMismatch(f"dotV has shape {V.shape}, expected {bs.phi.shape + (9,)}")
    form = np.einsum("...i,...ij,...j->...", V, full, V)
    qdot = V[..., 0] + np.sum(bs.U[..., 4:7] * V[..., 4:7], axis=-1)
    ref = 2.0 * qdot * np.sum(V[..., 1:4] * bs.N, axis=-1)
    scale = np.einsum("...i,...ij,...j->...", np.abs(V), np.abs(full), np.abs(V))
    if np.any(np.abs(form - ref) > tol * np.maximum(scale, 1e-300)):
        err = float(np.max(np.abs(form - ref) / np.maximum(scale, 1e-300)))
        raise AssertionError(f"quadratic-form identity violated: relative error {err:.3e}")
    return form, ref
