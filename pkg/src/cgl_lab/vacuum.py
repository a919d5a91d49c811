"""Vacuum div-curl problem in the lower slab and the interface diagnostics.

The vacuum field solves ``curl h = 0, div h = 0`` in ``(-1, 0) x T^2`` with
``h . N = 0`` on the interface and ``h x e1 = jc`` on the outer wall.  Note
``h x e1 = (0, h3, -h2)``.

Surface currents are stored as Fourier modes: ``jc(x') = Re sum_m c_m
exp(2 pi i m . x')`` with integer ``m = (m2, m3)`` and complex 3-vectors
``c_m``.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np
import scipy.sparse as sp

from .errors import GridMismatch, IncompatibleCurrent, SolverFailure
from .geometry import InterfaceGeometry, SlabField, SlabGrid, dphi_apply

COMPAT_TOL = 1e-10
FFT_DROP = 1e-13


# ---------------------------------------------------------------------------
# surface current

@dataclass(frozen=True)
class SurfaceCurrent:
    modes: Mapping  # (m2, m3) -> complex 3-vector

    def __post_init__(self):
        clean = {}
        for key, c in dict(self.modes).items():
            m2, m3 = (int(key[0]), int(key[1]))
            c = np.asarray(c, dtype=complex).reshape(3)
            prev = clean.get((m2, m3))
            clean[(m2, m3)] = c if prev is None else prev + c
        object.__setattr__(self, "modes", clean)
        self.validate()

    def validate(self, tol: float = COMPAT_TOL) -> None:
        for (m2, m3), c in self.modes.items():
            scale = max(1.0, float(np.max(np.abs(c))))
            if abs(c[0]) > tol * scale:
                raise IncompatibleCurrent(f"mode {(m2, m3)}: component 1 is {abs(c[0]):.3e}, must vanish")
            kn = np.hypot(m2, m3)
            if kn > 0 and abs(m2 * c[1] + m3 * c[2]) / kn > tol * scale:
                raise IncompatibleCurrent(
                    f"mode {(m2, m3)}: tangential divergence {abs(m2 * c[1] + m3 * c[2]) / kn:.3e}"
                )

    @classmethod
    def zero(cls) -> "SurfaceCurrent":
        return cls({})

    @classmethod
    def constant(cls, c2: float, c3: float) -> "SurfaceCurrent":
        return cls({(0, 0): [0.0, c2, c3]})

    @classmethod
    def from_grid(cls, jc: np.ndarray, tol: float = COMPAT_TOL) -> "SurfaceCurrent":
        """Modes of grid values ``jc[n2, n3, 3]`` on the periodic x' grid."""
        jc = np.asarray(jc, dtype=float)
        if jc.ndim != 3 or jc.shape[2] != 3:
            raise GridMismatch("surface current grid must have shape (n2, n3, 3)")
        n2, n3, _ = jc.shape
        F = np.fft.fft2(jc, axes=(0, 1)) / (n2 * n3)
        f2 = np.rint(np.fft.fftfreq(n2) * n2).astype(int)
        f3 = np.rint(np.fft.fftfreq(n3) * n3).astype(int)
        cut = FFT_DROP * max(1.0, float(np.max(np.abs(F))))
        modes = {}
        for a in range(n2):
            for b in range(n3):
                c = F[a, b]
                if np.max(np.abs(c)) > cut:
                    c = c.copy()
                    if abs(c[0]) <= cut:
                        c[0] = 0.0
                    modes[(int(f2[a]), int(f3[b]))] = c
        out = cls.__new__(cls)
        object.__setattr__(out, "modes", modes)
        out.validate(tol)
        return out

    def is_zero(self) -> bool:
        return all(not np.any(c) for c in self.modes.values())

    def max_mode(self) -> int:
        return max((max(abs(m2), abs(m3)) for m2, m3 in self.modes), default=0)

    def evaluate(self, x2, x3) -> np.ndarray:
        x2 = np.asarray(x2, dtype=float)
        x3 = np.asarray(x3, dtype=float)
        out = np.zeros(np.broadcast(x2, x3).shape + (3,))
        for (m2, m3), c in self.modes.items():
            E = np.exp(2j * np.pi * (m2 * x2 + m3 * x3))
            out += np.real(E[..., None] * c)
        return out

    def to_grid(self, n2: int, n3: int) -> np.ndarray:
        x2, x3 = np.meshgrid(np.arange(n2) / n2, np.arange(n3) / n3, indexing="ij")
        return self.evaluate(x2, x3)

    def scaled(self, alpha: float) -> "SurfaceCurrent":
        return SurfaceCurrent({k: alpha * c for k, c in self.modes.items()})

    def to_dict(self) -> dict:
        return {"modes": [
            {"k2": m2, "k3": m3, "re": [float(x) for x in c.real], "im": [float(x) for x in c.imag]}
            for (m2, m3), c in sorted(self.modes.items())
        ]}

    @classmethod
    def from_dict(cls, d: Mapping) -> "SurfaceCurrent":
        modes = {}
        for item in d.get("modes", []):
            re = np.asarray(item["re"], dtype=float)
            im = np.asarray(item.get("im", [0.0, 0.0, 0.0]), dtype=float)
            key = (int(item["k2"]), int(item["k3"]))
            modes[key] = modes.get(key, 0) + re + 1j * im
        return cls(modes)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "SurfaceCurrent":
        return cls.from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# vacuum field

@dataclass(frozen=True)
class VacuumField:
    """Grid values ``h[i1, i2, i3, 3]`` on a '-' slab grid plus solver report.

    ``current`` is set for modal (flat) solutions, which can then be evaluated
    anywhere through :meth:`evaluate`.
    """

    grid: SlabGrid
    h: np.ndarray
    report: dict = field(default_factory=dict)
    current: Optional[SurfaceCurrent] = None

    @property
    def sigma_trace(self) -> np.ndarray:
        return self.h[self.grid.interface_index]

    @property
    def wall_trace(self) -> np.ndarray:
        return self.h[self.grid.wall_index]

    def as_slab_field(self) -> SlabField:
        return SlabField(self.grid, self.h)

    def evaluate(self, x1, x2, x3) -> np.ndarray:
        if self.current is None:
            raise ValueError("pointwise evaluation needs a modal (flat) solution")
        return _modal_eval(self.current, x1, x2, x3)[0]


def _profiles(kap: float, x1):
    """cosh(kap x1)/cosh(kap) and sinh(kap x1)/cosh(kap) on x1 in [-1, 0], overflow-free."""
    a = np.abs(x1)
    den = 1.0 + np.exp(-2.0 * kap)
    up = np.exp(kap * (a - 1.0))
    dn = np.exp(-kap * (a + 1.0))
    return (up + dn) / den, np.sign(x1) * (up - dn) / den


def _modal_eval(jc: SurfaceCurrent, x1, x2, x3):
    """h and its Jacobian ``dh[..., i, j] = d_j h_i`` from the closed-form modal solution."""
    x1, x2, x3 = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (x1, x2, x3)))
    h = np.zeros(x1.shape + (3,))
    dh = np.zeros(x1.shape + (3, 3))
    for (m2, m3), c in jc.modes.items():
        if m2 == 0 and m3 == 0:
            h += np.real(np.array([0.0, -c[2], c[1]]))
            continue
        k2, k3 = 2.0 * np.pi * m2, 2.0 * np.pi * m3
        kap = np.hypot(k2, k3)
        D = (k3 * c[1] - k2 * c[2]) / (1j * kap * kap)
        Cr, Sr = _profiles(kap, x1)
        E = np.exp(1j * (k2 * x2 + k3 * x3))
        hm = np.stack([D * kap * Sr * E, 1j * k2 * D * Cr * E, 1j * k3 * D * Cr * E], axis=-1)
        d1 = np.stack([D * kap * kap * Cr * E, 1j * k2 * D * kap * Sr * E,
                       1j * k3 * D * kap * Sr * E], axis=-1)
        h += hm.real
        dh[..., :, 0] += d1.real
        dh[..., :, 1] += (1j * k2 * hm).real
        dh[..., :, 2] += (1j * k3 * hm).real
    return h, dh


def flat_residuals(jc: SurfaceCurrent, n_sample: int = 16) -> dict:
    """Relative residuals of the four field equations and both boundary rows."""
    s = np.arange(n_sample) / n_sample
    x1 = np.linspace(-1.0, 0.0, n_sample + 1)
    X1, X2, X3 = np.meshgrid(x1, s, s, indexing="ij")
    h, dh = _modal_eval(jc, X1, X2, X3)
    scale = max(1.0, float(np.max(np.abs(h))), float(np.max(np.abs(dh))))
    curl = np.stack([dh[..., 2, 1] - dh[..., 1, 2],
                     dh[..., 0, 2] - dh[..., 2, 0],
                     dh[..., 1, 0] - dh[..., 0, 1]], axis=-1)
    div = dh[..., 0, 0] + dh[..., 1, 1] + dh[..., 2, 2]
    jgrid = jc.evaluate(X2[0], X3[0])
    wall = h[0]
    tang = np.stack([wall[..., 2] - jgrid[..., 1], -wall[..., 1] - jgrid[..., 2]], axis=-1)
    return {
        "curl1": float(np.max(np.abs(curl[..., 0]))) / scale,
        "curl2": float(np.max(np.abs(curl[..., 1]))) / scale,
        "curl3": float(np.max(np.abs(curl[..., 2]))) / scale,
        "div": float(np.max(np.abs(div))) / scale,
        "normal_trace": float(np.max(np.abs(h[-1, ..., 0]))) / scale,
        "tangential_trace": float(np.max(np.abs(tang))) / scale,
    }


def solve_flat(jc: SurfaceCurrent, grid: Optional[SlabGrid] = None,
               max_mode: Optional[int] = None) -> VacuumField:
    """Closed-form modal solution for the flat interface.

    Mode m != 0 is the gradient of ``C cosh(|k| x1) exp(i k.x')``; the mean mode
    is the constant ``(0, -c3, c2)``.  Modes beyond ``max_mode`` are dropped.
    """
    jc.validate()
    if max_mode is not None:
        jc = SurfaceCurrent({m: c for m, c in jc.modes.items() if max(abs(m[0]), abs(m[1])) <= max_mode})
    grid = grid or SlabGrid(16, 16, 16, side="-")
    if grid.side != "-":
        raise GridMismatch("the vacuum lives on the '-' slab")
    X1, X2, X3 = grid.mesh()
    h = _modal_eval(jc, X1, X2, X3)[0]
    return VacuumField(grid=grid, h=h, report=flat_residuals(jc), current=jc)


# ---------------------------------------------------------------------------
# curved interface: least squares on the box scheme

def _assemble_curved(g: InterfaceGeometry, grid: SlabGrid, jc_grid: np.ndarray, gn):
    """Sparse ``A`` and ``b`` of the overdetermined discrete system.

    Field rows sit at x1 half-nodes: x1 differences between neighbouring nodes,
    x' central differences averaged over the two nodes, metrics evaluated at
    the half-node.  Boundary rows are scaled by 1/dx1 to match.
    """
    n1, n2, n3 = grid.n1, grid.n2, grid.n3
    d1, d2, d3 = grid.spacing
    x1 = grid.x1
    m = g.metrics(0.5 * (x1[:-1] + x1[1:]))
    a1 = 1.0 / m["d1Phi"]
    a2 = m["d2Phi"] / m["d1Phi"]
    a3 = m["d3Phi"] / m["d1Phi"]
    I, I2, I3 = np.meshgrid(np.arange(n1), np.arange(n2), np.arange(n3), indexing="ij")
    ones = np.ones(I.shape)

    def idx(i, i2, i3, c):
        return ((i * n2 + i2) * n3 + i3) * 3 + c

    def D1(c, coef):
        return [(idx(I + 1, I2, I3, c), coef / d1), (idx(I, I2, I3, c), -coef / d1)]

    def Dt(c, ax):
        out = []
        for ii in (I, I + 1):
            if ax == 2:
                out += [(idx(ii, (I2 + 1) % n2, I3, c), ones * (0.25 / d2)),
                        (idx(ii, (I2 - 1) % n2, I3, c), ones * (-0.25 / d2))]
            else:
                out += [(idx(ii, I2, (I3 + 1) % n3, c), ones * (0.25 / d3)),
                        (idx(ii, I2, (I3 - 1) % n3, c), ones * (-0.25 / d3))]
        return out

    def dphi(j, c, sign=1.0):
        if j == 1:
            return D1(c, sign * a1)
        a = a2 if j == 2 else a3
        return [(ci, sign * co) for ci, co in Dt(c, j)] + D1(c, -sign * a)

    eqs = [
        dphi(2, 2) + dphi(3, 1, -1.0),
        dphi(3, 0) + dphi(1, 2, -1.0),
        dphi(1, 1) + dphi(2, 0, -1.0),
        dphi(1, 0) + dphi(2, 1) + dphi(3, 2),
    ]
    nh = n1 * n2 * n3
    rowid = np.arange(nh).reshape(I.shape)
    rows, cols, vals = [], [], []
    for e, terms in enumerate(eqs):
        for ci, co in terms:
            rows.append((e * nh + rowid).ravel())
            cols.append(ci.ravel())
            vals.append(co.ravel())
    nrow = 4 * nh
    ns = n2 * n3
    b = np.zeros(4 * nh + 3 * ns)
    w = 1.0 / d1
    J2, J3 = np.meshgrid(np.arange(n2), np.arange(n3), indexing="ij")
    rid = np.arange(ns).reshape(n2, n3)
    top = grid.interface_index
    N = g.N
    for c in range(3):
        rows.append((nrow + rid).ravel())
        cols.append(idx(top, J2, J3, c).ravel())
        vals.append((w * N[..., c]).ravel())
    if gn is not None:
        b[nrow:nrow + ns] = w * np.asarray(gn, dtype=float).ravel()
    nrow += ns
    # h3 = jc2 and -h2 = jc3 on the outer wall
    rows.append((nrow + rid).ravel())
    cols.append(idx(0, J2, J3, 2).ravel())
    vals.append(np.full(ns, w))
    b[nrow:nrow + ns] = w * jc_grid[..., 1].ravel()
    nrow += ns
    rows.append((nrow + rid).ravel())
    cols.append(idx(0, J2, J3, 1).ravel())
    vals.append(np.full(ns, -w))
    b[nrow:nrow + ns] = w * jc_grid[..., 2].ravel()
    nrow += ns
    A = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(nrow, 3 * (n1 + 1) * ns),
    )
    return A, b


def solve_curved(g: InterfaceGeometry, jc, grid: SlabGrid, gn=None,
                 tol: float = 1e-12, maxiter: int = 1000) -> VacuumField:
    """Second-order least-squares solve of ``L_-(Phi) h = 0`` with boundary rows.

    ``jc`` is a :class:`SurfaceCurrent` or grid values ``(n2, n3, 3)``.  ``gn``
    optionally replaces the homogeneous interface row ``h.N = 0`` by
    ``h.N = gn`` (manufactured-solution studies).  The normal equations are
    solved by smoothed-aggregation AMG preconditioned CG.
    """
    import pyamg

    if grid.side != "-":
        raise GridMismatch("the vacuum lives on the '-' slab")
    g.check_grid(grid)
    if isinstance(jc, SurfaceCurrent):
        jc.validate()
        jc_grid = jc.to_grid(grid.n2, grid.n3)
    else:
        jc_grid = np.asarray(jc, dtype=float)
        if jc_grid.shape != (grid.n2, grid.n3, 3):
            raise GridMismatch(f"surface current shape {jc_grid.shape} vs x' grid {(grid.n2, grid.n3)}")
        SurfaceCurrent.from_grid(jc_grid)
    if gn is not None and np.shape(gn) != (grid.n2, grid.n3):
        raise GridMismatch("normal data must live on the x' grid")

    t0 = time.perf_counter()
    A, b = _assemble_curved(g, grid, jc_grid, gn)
    report = {"unknowns": int(A.shape[1]), "rows": int(A.shape[0])}
    if not np.any(b):
        x = np.zeros(A.shape[1])
        report.update(iterations=0, normal_residual=0.0, ls_residual=0.0)
    else:
        AtA = (A.T @ A).tocsr()
        rhs = A.T @ b
        ml = pyamg.smoothed_aggregation_solver(AtA, symmetry="symmetric")
        hist = []
        x = ml.solve(rhs, tol=tol, accel="cg", residuals=hist, maxiter=maxiter)
        normal_res = float(np.linalg.norm(rhs - AtA @ x) / np.linalg.norm(rhs))
        ls_res = float(np.linalg.norm(A @ x - b) / np.sqrt(b.size))
        # truncation error of the box scheme: dx^2 times the third derivatives of
        # the data, estimated from its largest wavenumber
        kmax = 2.0 * np.pi * max(1, SurfaceCurrent.from_grid(jc_grid, tol=np.inf).max_mode())
        data_scale = max(float(np.max(np.abs(jc_grid))),
                         float(np.max(np.abs(gn))) if gn is not None else 0.0)
        predicted = max(grid.spacing) ** 2 * kmax ** 2 * data_scale
        report.update(iterations=len(hist) - 1, normal_residual=normal_res,
                      ls_residual=ls_res, predicted_level=predicted)
        if not normal_res <= max(1e3 * tol, 1e-6):
            raise SolverFailure(f"normal equations not solved: relative residual {normal_res:.3e}")
        if ls_res > 10.0 * predicted:
            raise SolverFailure(
                f"least-squares residual {ls_res:.3e} exceeds 10x predicted level {predicted:.3e}"
            )
    report["seconds"] = time.perf_counter() - t0
    h = x.reshape(grid.shape + (3,))
    return VacuumField(grid=grid, h=h, report=report)


# ---------------------------------------------------------------------------
# interface diagnostics

@dataclass(frozen=True)
class ExtremumResult:
    value: float
    location: tuple  # (i2, i3) on the interface grid

    def satisfied(self, threshold: float, kind: str = "min") -> bool:
        if kind == "min":
            return self.value >= threshold
        return self.value <= threshold


def non_collinearity(Htrace, htrace) -> ExtremumResult:
    """Minimum over the interface of |H x h| and where it occurs."""
    H = np.asarray(Htrace, dtype=float)
    h = np.asarray(htrace, dtype=float)
    if H.shape != h.shape or H.shape[-1] != 3:
        raise GridMismatch(f"trace shapes {H.shape} and {h.shape} differ or are not 3-vectors")
    mag = np.linalg.norm(np.cross(H, h), axis=-1)
    loc = np.unravel_index(int(np.argmin(mag)), mag.shape)
    return ExtremumResult(float(mag[loc]), tuple(int(i) for i in loc))


def rt_sign(q: SlabField, h, g: InterfaceGeometry) -> ExtremumResult:
    """max over the interface of n . grad(q - |h|^2/2), with n = -N/|N|.

    ``q`` lives on the '+' slab and ``h`` (a :class:`VacuumField` or '-' slab
    field) on the vacuum side; normal derivatives are one-sided from each side.
    Condition (RT) holds with constant kappa iff ``value <= -kappa``.
    """
    hf = h.as_slab_field() if isinstance(h, VacuumField) else h
    if q.grid.side != "+" or hf.grid.side != "-":
        raise GridMismatch("q must live on the '+' slab and h on the '-' slab")
    if (q.grid.n2, q.grid.n3) != (hf.grid.n2, hf.grid.n3):
        raise GridMismatch("plasma and vacuum x' grids differ")
    g.check_grid(q.grid)
    N = g.N
    n = -N / np.linalg.norm(N, axis=-1, keepdims=True)
    half_h2 = hf.like(0.5 * np.sum(hf.data**2, axis=-1))
    val = np.zeros(g.phi.shape)
    for j in range(3):
        dq = dphi_apply(g, q, j + 1).data[q.grid.interface_index]
        dh = dphi_apply(g, half_h2, j + 1).data[hf.grid.interface_index]
        val += n[..., j] * (dq - dh)
    loc = np.unravel_index(int(np.argmax(val)), val.shape)
    return ExtremumResult(float(val[loc]), tuple(int(i) for i in loc))
