"""Interface geometry on the slab: cut-off, lifting, and the d^Phi operators.

The moving interface ``x1 = phi(t, x')`` is flattened by
``Phi(t, x) = x1 + chi(x1) phi(t, x')``.  Slabs are ``(0, 1) x T^2`` (plasma,
``side="+"``) and ``(-1, 0) x T^2`` (vacuum, ``side="-"``); ``T^2`` is the unit
periodic square.  Field arrays are indexed ``[i1, i2, i3, ...]`` with the x1
nodes including both walls.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DegenerateLift, DomainError, GridMismatch, InfeasibleCutoff
from .modes import plane_wave_batch

DEGENERATE_LIFT_TOL = 1e-6


# ---------------------------------------------------------------------------
# cut-off

def _smooth(y):
    return y * y * y * (10.0 + y * (-15.0 + 6.0 * y))


def _smooth_d(y):
    return 30.0 * y * y * (1.0 - y) ** 2


def _smooth_int(y):
    return y**4 * (2.5 + y * (-3.0 + y))


@dataclass(frozen=True)
class CutOff:
    """Even plateau-bump: 1 on |x| <= plateau, 0 on |x| >= support.

    Between the two the slope magnitude rises from 0 to ``slope`` over a
    transition of width ``ramp`` (quintic smoothstep), stays constant, and
    falls back to 0.  The function is C^3; ``slope`` is the exact sup-norm of
    the derivative.
    """

    plateau: float
    support: float
    ramp: float

    def __post_init__(self):
        L = self.support - self.plateau
        if not (0 < self.plateau < self.support < 1) or not (0 < 2 * self.ramp <= L):
            raise InfeasibleCutoff("inconsistent cut-off parameters")

    @property
    def slope(self) -> float:
        return 1.0 / (self.support - self.plateau - self.ramp)

    @property
    def deriv_sup(self) -> float:
        return self.slope

    def _pieces(self, x):
        x = np.asarray(x, dtype=float)
        u = np.abs(x) - self.plateau
        L = self.support - self.plateau
        w = self.ramp
        return x, u, L, w

    def __call__(self, x):
        x, u, L, w = self._pieces(x)
        s = self.slope
        out = np.ones_like(x)
        m1 = (u > 0) & (u <= w)
        m2 = (u > w) & (u < L - w)
        m3 = (u >= L - w) & (u < L)
        out[m1] = 1.0 - s * w * _smooth_int(u[m1] / w)
        out[m2] = 1.0 - s * (0.5 * w + (u[m2] - w))
        out[m3] = s * w * _smooth_int((L - u[m3]) / w)
        out[u >= L] = 0.0
        return out

    def d1(self, x):
        x, u, L, w = self._pieces(x)
        s = self.slope
        g = np.zeros_like(x)
        m1 = (u > 0) & (u <= w)
        m2 = (u > w) & (u < L - w)
        m3 = (u >= L - w) & (u < L)
        g[m1] = s * _smooth(u[m1] / w)
        g[m2] = s
        g[m3] = s * _smooth((L - u[m3]) / w)
        return -np.sign(x) * g

    def d2(self, x):
        x, u, L, w = self._pieces(x)
        s = self.slope
        gp = np.zeros_like(x)
        m1 = (u > 0) & (u <= w)
        m3 = (u >= L - w) & (u < L)
        gp[m1] = s * _smooth_d(u[m1] / w) / w
        gp[m3] = -s * _smooth_d((L - u[m3]) / w) / w
        return -gp

    @staticmethod
    def bound(phi0_sup: float) -> float:
        return 4.0 / (phi0_sup + 3.0)


def build_cutoff(phi0_sup: float) -> CutOff:
    """Cut-off whose derivative sup-norm is below 4/(phi0_sup + 3).

    With slack ``g = (1 - phi0_sup)/4`` (the bound is ``1/(1 - g)``) the slope
    is ``min(1.2, 1/(1 - 3g/4))``; the plateau and the zero band near the
    walls get ``g/8`` each and everything left goes into wide slope
    shoulders, which keeps the higher derivatives of chi small.
    """
    phi0_sup = float(phi0_sup)
    if not 0.0 <= phi0_sup < 1.0:
        raise DomainError(f"need 0 <= sup|phi0| < 1, got {phi0_sup}")
    g = 0.25 * (1.0 - phi0_sup)
    slope = min(1.2, 1.0 / (1.0 - 0.75 * g))
    plateau = g / 8.0
    support = 1.0 - g / 8.0
    ramp = (support - plateau) - 1.0 / slope
    chi = CutOff(plateau=plateau, support=support, ramp=ramp)
    if not chi.deriv_sup < CutOff.bound(phi0_sup):
        raise InfeasibleCutoff("derivative bound not met")  # unreachable by construction
    return chi


# ---------------------------------------------------------------------------
# grids and fields

@dataclass(frozen=True)
class SlabGrid:
    """Uniform tensor grid; x1 nodes include both walls, x' periodic."""

    n1: int
    n2: int
    n3: int
    side: str = "+"

    def __post_init__(self):
        if self.side not in "+-" or len(self.side) != 1:
            raise ValueError("side must be '+' or '-'")
        if min(self.n1, self.n2, self.n3) < 2:
            raise ValueError("need at least two cells per direction")

    @property
    def x1(self) -> np.ndarray:
        lo, hi = (0.0, 1.0) if self.side == "+" else (-1.0, 0.0)
        return np.linspace(lo, hi, self.n1 + 1)

    @property
    def x2(self) -> np.ndarray:
        return np.arange(self.n2) / self.n2

    @property
    def x3(self) -> np.ndarray:
        return np.arange(self.n3) / self.n3

    @property
    def spacing(self) -> tuple:
        return (1.0 / self.n1, 1.0 / self.n2, 1.0 / self.n3)

    @property
    def shape(self) -> tuple:
        return (self.n1 + 1, self.n2, self.n3)

    @property
    def interface_index(self) -> int:
        """x1 index of Sigma = {x1 = 0}."""
        return 0 if self.side == "+" else self.n1

    @property
    def wall_index(self) -> int:
        """x1 index of the outer wall (Sigma^+ or Sigma^-)."""
        return self.n1 if self.side == "+" else 0

    def mesh(self):
        return np.meshgrid(self.x1, self.x2, self.x3, indexing="ij")


@dataclass
class SlabField:
    """Grid values ``data[i1, i2, i3, ...]`` of a scalar or vector field."""

    grid: SlabGrid
    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data)
        if self.data.shape[:3] != self.grid.shape:
            raise GridMismatch(
                f"data shape {self.data.shape[:3]} does not match grid {self.grid.shape}"
            )

    def like(self, data) -> "SlabField":
        return SlabField(self.grid, data)

    def trace(self, index: int) -> np.ndarray:
        return self.data[index]


def d1_nodes(f: np.ndarray, dx: float) -> np.ndarray:
    """Second-order d/dx1 along axis 0: central inside, one-sided at the walls."""
    out = np.empty_like(f, dtype=np.result_type(f, float))
    out[1:-1] = (f[2:] - f[:-2]) / (2.0 * dx)
    out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * dx)
    out[-1] = (3.0 * f[-1] - 4.0 * f[-2] + f[-3]) / (2.0 * dx)
    return out


def d_periodic(f: np.ndarray, dx: float, axis: int) -> np.ndarray:
    """Second-order central difference along a periodic axis."""
    return (np.roll(f, -1, axis=axis) - np.roll(f, 1, axis=axis)) / (2.0 * dx)


# ---------------------------------------------------------------------------
# interface geometry

@dataclass
class InterfaceGeometry:
    """Height field phi(x') on the periodic grid plus the cut-off.

    ``phi_t`` (time derivative of phi) is optional and only needed for
    ``d_t^Phi`` and the kinematic boundary row.
    """

    phi: np.ndarray
    chi: CutOff
    phi_t: Optional[np.ndarray] = None
    dphi: Optional[tuple] = None  # (d2 phi, d3 phi); central differences if omitted
    d1Phi_min: float = field(init=False)

    def __post_init__(self):
        self.phi = np.asarray(self.phi, dtype=float)
        if self.phi.ndim != 2:
            raise GridMismatch("phi must be a 2D array over (x2, x3)")
        n2, n3 = self.phi.shape
        if self.dphi is None:
            self.dphi = (
                d_periodic(self.phi, 1.0 / n2, 0),
                d_periodic(self.phi, 1.0 / n3, 1),
            )
        if self.phi_t is not None:
            self.phi_t = np.asarray(self.phi_t, dtype=float)
            if self.phi_t.shape != self.phi.shape:
                raise GridMismatch("phi_t shape differs from phi")
        peak = float(np.max(np.abs(self.phi))) if self.phi.size else 0.0
        self.d1Phi_min = 1.0 - self.chi.deriv_sup * peak

    @property
    def n2(self) -> int:
        return self.phi.shape[0]

    @property
    def n3(self) -> int:
        return self.phi.shape[1]

    @property
    def N(self) -> np.ndarray:
        """Interface normal (1, -d2 phi, -d3 phi), shape (n2, n3, 3)."""
        return np.stack([np.ones_like(self.phi), -self.dphi[0], -self.dphi[1]], axis=-1)

    def check_grid(self, grid: SlabGrid) -> None:
        if (grid.n2, grid.n3) != self.phi.shape:
            raise GridMismatch(
                f"geometry x'-grid {self.phi.shape} vs field grid {(grid.n2, grid.n3)}"
            )

    def metrics(self, x1) -> dict:
        """Phi and its derivatives at x1 nodes (any 1D array), shape (len(x1), n2, n3)."""
        x1 = np.asarray(x1, dtype=float)[:, None, None]
        c = self.chi(x1)
        cp = self.chi.d1(x1)
        out = {
            "Phi": x1 + c * self.phi,
            "d1Phi": 1.0 + cp * self.phi,
            "d2Phi": c * self.dphi[0],
            "d3Phi": c * self.dphi[1],
        }
        if self.phi_t is not None:
            out["dtPhi"] = c * self.phi_t
        return out


def lift(phi, chi: CutOff, phi_t=None, dphi=None) -> InterfaceGeometry:
    """Lifted geometry; rejects |phi| >= 1 and nearly singular d1 Phi."""
    phi = np.asarray(phi, dtype=float)
    if phi.size and not np.max(np.abs(phi)) < 1.0:
        raise DomainError("interface height must satisfy sup|phi| < 1")
    g = InterfaceGeometry(phi=phi, chi=chi, phi_t=phi_t, dphi=dphi)
    if g.d1Phi_min <= DEGENERATE_LIFT_TOL:
        raise DegenerateLift(f"min d1 Phi = {g.d1Phi_min:.3e}")
    return g


def dphi_apply(g: InterfaceGeometry, f: SlabField, which, df_dt=None) -> SlabField:
    """Apply d_t^Phi or d_j^Phi (j = 1, 2, 3) to a slab field.

    ``which="t"`` needs ``df_dt`` (the plain time derivative of f on the same
    grid) and a geometry with ``phi_t``.
    """
    grid = f.grid
    g.check_grid(grid)
    dx1, dx2, dx3 = grid.spacing
    m = g.metrics(grid.x1)
    data = f.data
    extra = data.ndim - 3

    def expand(a):
        return a.reshape(a.shape + (1,) * extra)

    d1f = d1_nodes(data, dx1)
    if which in (1, "1"):
        return f.like(d1f / expand(m["d1Phi"]))
    if which in (2, "2"):
        return f.like(d_periodic(data, dx2, 1) - expand(m["d2Phi"] / m["d1Phi"]) * d1f)
    if which in (3, "3"):
        return f.like(d_periodic(data, dx3, 2) - expand(m["d3Phi"] / m["d1Phi"]) * d1f)
    if which == "t":
        if df_dt is None or "dtPhi" not in m:
            raise GridMismatch("d_t^Phi needs df_dt and a geometry with phi_t")
        df_dt = np.asarray(df_dt.data if isinstance(df_dt, SlabField) else df_dt)
        if df_dt.shape != data.shape:
            raise GridMismatch("df_dt shape differs from f")
        return f.like(df_dt - expand(m["dtPhi"] / m["d1Phi"]) * d1f)
    raise ValueError(f"unknown derivative {which!r}")


def constraint_residuals(H: SlabField, g: InterfaceGeometry) -> tuple:
    """(L_inf of div^Phi H inside, L_inf of H.N on Sigma, L_inf of H1 on Sigma^+)."""
    grid = H.grid
    if grid.side != "+":
        raise GridMismatch("plasma magnetic field lives on the '+' slab")
    if H.data.shape[3:] != (3,):
        raise GridMismatch("H must be a 3-vector field")
    div = sum(dphi_apply(g, H.like(H.data[..., k]), k + 1).data for k in range(3))
    interior = float(np.max(np.abs(div[1:-1])))
    HN = np.sum(H.data[grid.interface_index] * g.N, axis=-1)
    H1 = H.data[grid.wall_index, :, :, 0]
    return interior, float(np.max(np.abs(HN))), float(np.max(np.abs(H1)))


def good_unknown(U: SlabField, psi, g0: InterfaceGeometry, U0: SlabField) -> SlabField:
    """Alinhac good unknown U - (Psi / d1 Phi0) d1 U0 with Psi = chi(x1) psi(x')."""
    if U.grid != U0.grid or U.data.shape != U0.data.shape:
        raise GridMismatch("perturbation and background grids differ")
    g0.check_grid(U.grid)
    if g0.d1Phi_min <= DEGENERATE_LIFT_TOL:
        raise DegenerateLift(f"min d1 Phi = {g0.d1Phi_min:.3e}")
    psi = np.asarray(psi, dtype=float)
    grid = U.grid
    m = g0.metrics(grid.x1)
    Psi = g0.chi(grid.x1)[:, None, None] * psi
    factor = Psi / m["d1Phi"]
    extra = U.data.ndim - 3
    d1U0 = d1_nodes(U0.data, grid.spacing[0])
    return U.like(U.data - factor.reshape(factor.shape + (1,) * extra) * d1U0)


# ---------------------------------------------------------------------------
# pointwise nonlinear operator for linearization checks

_C8 = np.array([1 / 280, -4 / 105, 1 / 5, -4 / 5, 0.0, 4 / 5, -1 / 5, 4 / 105, -1 / 280])


def stencil_derivative(fn: Callable, t, x, axis: int, h: float = 1e-2):
    """Eighth-order central derivative of ``fn(t, x)`` along t (axis 0) or x_axis.

    ``x`` has shape (m, 3).  Accurate to roundoff for the smooth analytic fields
    used in the linearization checks.
    """
    acc = 0.0
    for k, c in zip(range(-4, 5), _C8):
        if c == 0.0:
            continue
        if axis == 0:
            val = fn(t + k * h, x)
        else:
            xs = np.array(x, dtype=float, copy=True)
            xs[:, axis - 1] += k * h
            val = fn(t, xs)
        acc = acc + c * np.asarray(val)
    return acc / h


def quasilinear_operator(U_fn: Callable, Phi_fn: Callable, t, x, h: float = 1e-2):
    """d_t^Phi U + sum_j B_j(U) d_j^Phi U at points x (shape (m, 3)).

    ``U_fn(t, x)`` returns (m, 9) primary states, ``Phi_fn(t, x)`` returns (m,).
    This is the plasma operator in the frozen-coefficient (non-symmetrized)
    form with A0 = I.
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(U_fn(t, x))
    dU = [stencil_derivative(U_fn, t, x, a, h) for a in range(4)]
    dP = [stencil_derivative(Phi_fn, t, x, a, h) for a in range(4)]
    d1Phi = dP[1]
    out = dU[0] - (dP[0] / d1Phi)[:, None] * dU[1]
    for j in range(3):
        if j == 0:
            dj = dU[1] / d1Phi[:, None]
        else:
            dj = dU[j + 1] - (dP[j + 1] / d1Phi)[:, None] * dU[1]
        e = np.zeros(3)
        e[j] = 1.0
        Bj = plane_wave_batch(u, e)
        out = out + np.einsum("nij,nj->ni", Bj, dj)
    return out


def alinhac_identity_check(U0_fn, Phi0_fn, psi_fn, chi: CutOff, t, x,
                           theta: float = 1e-3, h: float = 1e-2):
    """Directional derivative of the nonlinear operator along the interface shift.

    With ``Psi = chi(x1) psi(t, x')`` and ``U = (Psi / d1 Phi0) d1 U0`` (good
    unknown zero), returns ``(lhs, rhs)`` where ``lhs`` is the Richardson
    extrapolated central difference in theta of L(U0 + theta U, Phi0 + theta Psi)
    and ``rhs = (Psi / d1 Phi0) d1 L(U0, Phi0)``.
    """
    def Psi_fn(tt, xx):
        return chi(xx[:, 0]) * psi_fn(tt, xx)

    def U_fn(tt, xx):
        d1U0 = stencil_derivative(U0_fn, tt, xx, 1, h)
        d1P0 = stencil_derivative(Phi0_fn, tt, xx, 1, h)
        return (Psi_fn(tt, xx) / d1P0)[:, None] * d1U0

    def L_theta(th):
        return quasilinear_operator(
            lambda tt, xx: U0_fn(tt, xx) + th * U_fn(tt, xx),
            lambda tt, xx: Phi0_fn(tt, xx) + th * Psi_fn(tt, xx),
            t, x, h,
        )

    def central(th):
        return (L_theta(th) - L_theta(-th)) / (2.0 * th)

    lhs = (4.0 * central(theta / 2.0) - central(theta)) / 3.0

    def L0(tt, xx):
        return quasilinear_operator(U0_fn, Phi0_fn, tt, xx, h)

    d1L = stencil_derivative(L0, t, x, 1, h)
    d1P0 = stencil_derivative(Phi0_fn, t, x, 1, h)
    rhs = (Psi_fn(t, x) / d1P0)[:, None] * d1L
    return lhs, rhs
