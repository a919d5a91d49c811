"""First-order finite volumes for the 1D (x1-only) nonlinear CGL equations.

Periodic grid on [0, 1), conserved variables ``(rho, rho v, H, rho s_par,
rho s_perp)`` per cell, local Lax-Friedrichs (Rusanov) fluxes with wave-speed
bound from the symmetrized characteristic speeds.  ``H1`` has identically
zero flux, so the 1D divergence constraint is kept bit for bit.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional

import numpy as np

from .errors import HyperbolicityLoss
from .quasilinear import energy_batch, flux_batch, plane_wave_matrix
from .state import PlasmaState, conserved_to_primitive, primitive_to_conserved
from .symmetrizer import char_speeds_batch

CFL_DEFAULT = 0.45
FAMILIES = ("rho", "mom1", "mom2", "mom3", "H1", "H2", "H3", "rho_s_par", "rho_s_perp")


@dataclass(frozen=True)
class Grid1D:
    W: np.ndarray  # (n, 9) cell averages of the conserved variables
    t: float = 0.0

    def __post_init__(self):
        W = np.array(self.W, dtype=float)
        if W.ndim != 2 or W.shape[1] != 9 or W.shape[0] < 3:
            raise ValueError("W must have shape (n, 9) with n >= 3")
        W.setflags(write=False)
        object.__setattr__(self, "W", W)

    @property
    def n(self) -> int:
        return self.W.shape[0]

    @property
    def dx(self) -> float:
        return 1.0 / self.n

    @property
    def x(self) -> np.ndarray:
        return (np.arange(self.n) + 0.5) * self.dx

    @property
    def H1(self) -> float:
        return float(self.W[0, 4])

    def primitive(self) -> np.ndarray:
        return conserved_to_primitive(self.W)

    @classmethod
    def from_primitive(cls, u, t: float = 0.0) -> "Grid1D":
        return cls(primitive_to_conserved(np.asarray(u, dtype=float)), t)

    def totals(self) -> np.ndarray:
        return self.W.sum(axis=0) * self.dx

    def energy(self) -> float:
        return float(energy_batch(self.primitive())[0].sum() * self.dx)


def _check_cells(u: np.ndarray, t: float, hyperbolic: bool) -> None:
    rho, pp, pt = u[:, 0], u[:, 7], u[:, 8]
    H2 = np.sum(u[:, 4:7] ** 2, axis=1)
    ok = np.isfinite(u).all(axis=1) & (rho > 0) & (pp > 0) & (pt > 0) & (H2 > 0)
    what = "invalid state (rho, p_par, p_perp > 0)"
    if hyperbolic and ok.all():
        tau = (pp - pt) / H2
        ok = (tau < 1.0) & (tau > -pp / pt) & (6.0 * pp > pt)
        what = "loss of hyperbolicity"
    if not ok.all():
        cell = int(np.flatnonzero(~ok)[0])
        raise HyperbolicityLoss(f"{what} in cell {cell} at t = {t:.6g}", cell=cell, time=t)


def max_speeds(u: np.ndarray) -> np.ndarray:
    """Per-cell max |characteristic speed| along e1."""
    return np.max(np.abs(char_speeds_batch(u, 0)), axis=1)


def rusanov_flux(u: np.ndarray, W: np.ndarray, speeds: np.ndarray) -> np.ndarray:
    """Interface fluxes F[i] at x_{i+1/2} (periodic)."""
    F = flux_batch(u, 0)
    Fr = np.roll(F, -1, axis=0)
    Wr = np.roll(W, -1, axis=0)
    a = np.maximum(speeds, np.roll(speeds, -1))
    out = 0.5 * (F + Fr) - 0.5 * a[:, None] * (Wr - W)
    out[:, 4] = 0.0
    return out


def step(grid: Grid1D, cfl: float = CFL_DEFAULT, dt_max: float = np.inf):
    """One Rusanov update; returns ``(new_grid, dt, max_speed)``."""
    if not 0.0 < cfl <= 1.0:
        raise ValueError("cfl must lie in (0, 1]")
    u = grid.primitive()
    _check_cells(u, grid.t, hyperbolic=True)
    s = max_speeds(u)
    smax = float(np.max(s))
    dt = min(cfl * grid.dx / smax, dt_max) if smax > 0 else dt_max
    if not np.isfinite(dt):
        raise ValueError("no finite time step: zero wave speed and no dt_max")
    F = rusanov_flux(u, grid.W, s)
    W = grid.W - (dt / grid.dx) * (F - np.roll(F, 1, axis=0))
    W[:, 4] = grid.W[:, 4]
    new = Grid1D(W, grid.t + dt)
    _check_cells(new.primitive(), new.t, hyperbolic=False)
    return new, dt, smax


# ---------------------------------------------------------------------------
# initial data

def _background(ic: Mapping) -> PlasmaState:
    return PlasmaState.from_dict(ic["state"] if "state" in ic else ic["background"])


def eigenvector_1d(U0: PlasmaState, family: int) -> tuple:
    """(speed, right eigenvector) of B1 at U0, family index in ascending speed order."""
    M = np.asarray(plane_wave_matrix(U0.to_float(), np.array([1.0, 0.0, 0.0])), dtype=float)
    w, R = np.linalg.eig(M)
    order = np.argsort(w.real)
    lam = float(w[order[family]].real)
    r = np.real(R[:, order[family]])
    r = r / np.max(np.abs(r))
    return lam, r


def initial_condition(ic: Mapping, n: int) -> Grid1D:
    """Cell values for ``{"type": "constant" | "sine" | "file", ...}``.

    ``sine``: background ``state`` plus ``amplitude * sin(2 pi mode x) * r``
    where ``r`` is either ``perturbation`` (9 primary components) or the
    right eigenvector of ``B1`` for ``family``.  Values are point samples at
    cell centers.  ``file``: CSV with the nine primary columns per cell.
    """
    kind = ic.get("type")
    x = (np.arange(n) + 0.5) / n
    if kind == "constant":
        u0 = _background(ic).to_float().as_vector().astype(float)
        return Grid1D.from_primitive(np.tile(u0, (n, 1)))
    if kind == "sine":
        U0 = _background(ic).to_float()
        u0 = U0.as_vector().astype(float)
        if "perturbation" in ic:
            r = np.asarray(ic["perturbation"], dtype=float)
        else:
            r = eigenvector_1d(U0, int(ic.get("family", 0)))[1]
        if r.shape != (9,):
            raise ValueError("perturbation needs nine components")
        r = r.copy()
        r[4] = 0.0  # H1 stays constant in 1D
        amp = float(ic.get("amplitude", 1e-3))
        mode = int(ic.get("mode", 1))
        u = u0 + amp * np.sin(2.0 * np.pi * mode * x)[:, None] * r
        return Grid1D.from_primitive(u)
    if kind == "file":
        from .fields_io import read_table

        cols, rows = read_table(ic["path"])
        u = np.asarray(rows, dtype=float)
        if u.shape != (n, 9):
            raise ValueError(f"file holds {u.shape} values, expected ({n}, 9)")
        return Grid1D.from_primitive(u)
    raise ValueError(f"unknown initial condition type {kind!r}")


# ---------------------------------------------------------------------------
# runs

@dataclass
class RunDiagnostics:
    times: list = field(default_factory=list)
    totals: list = field(default_factory=list)  # per record, 9 conserved totals
    energy: list = field(default_factory=list)
    dt: list = field(default_factory=list)
    max_speed: list = field(default_factory=list)
    cfl: float = CFL_DEFAULT

    @property
    def steps(self) -> int:
        return len(self.dt)

    def drifts(self) -> np.ndarray:
        T = np.asarray(self.totals)
        return np.max(np.abs(T - T[0]), axis=0)

    def energy_drift(self) -> float:
        E = np.asarray(self.energy)
        return float(np.max(np.abs(E - E[0])))

    def scale(self) -> float:
        return float(max(1.0, np.max(np.abs(np.asarray(self.totals)))))

    def conservation_ok(self, factor: float = 1e-11) -> bool:
        """Drifts of all families within ``factor * steps * scale``."""
        bound = factor * max(1, self.steps) * self.scale()
        return bool(np.all(self.drifts() <= bound))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "t", "dt", "max_speed", *FAMILIES, "energy"])
        for i, (t, tot, e) in enumerate(zip(self.times, self.totals, self.energy)):
            dt = self.dt[i - 1] if i > 0 else 0.0
            sp = self.max_speed[i - 1] if i > 0 else 0.0
            w.writerow([i, repr(t), repr(dt), repr(sp), *(repr(float(x)) for x in tot), repr(e)])
        return buf.getvalue()


@dataclass(frozen=True)
class RunConfig:
    n: int
    T: float
    ic: Mapping
    cfl: float = CFL_DEFAULT
    max_steps: Optional[int] = None

    def __post_init__(self):
        if int(self.n) < 3:
            raise ValueError("n must be at least 3")
        if not 0.0 < float(self.cfl) <= 1.0:
            raise ValueError("cfl must lie in (0, 1]")
        if not float(self.T) >= 0.0:
            raise ValueError("T must be non-negative")
        if not isinstance(self.ic, Mapping) or "type" not in self.ic:
            raise ValueError("ic must be a mapping with a 'type'")

    @classmethod
    def from_dict(cls, d: Mapping) -> "RunConfig":
        unknown = set(d) - {"n", "cfl", "T", "ic", "max_steps"}
        if unknown:
            raise ValueError(f"unknown config keys {sorted(unknown)}")
        return cls(n=int(d["n"]), T=float(d["T"]), ic=dict(d["ic"]),
                   cfl=float(d.get("cfl", CFL_DEFAULT)),
                   max_steps=None if d.get("max_steps") is None else int(d["max_steps"]))


def run(config, grid: Optional[Grid1D] = None, tracker: Optional["ParticleTracker"] = None):
    """Integrate to ``config.T`` (or ``max_steps``); returns ``(diagnostics, final_grid)``."""
    if isinstance(config, Mapping):
        config = RunConfig.from_dict(config)
    g = grid if grid is not None else initial_condition(config.ic, config.n)
    diag = RunDiagnostics(cfl=config.cfl)

    def record(gr):
        diag.times.append(gr.t)
        diag.totals.append(gr.totals())
        diag.energy.append(gr.energy())

    record(g)
    steps = 0
    while g.t < config.T and (config.max_steps is None or steps < config.max_steps):
        remaining = config.T - g.t
        new, dt, smax = step(g, config.cfl, dt_max=remaining)
        if tracker is not None:
            tracker.advance(g, new, dt)
        if dt >= remaining:
            new = replace(new, t=config.T)
        g = new
        steps += 1
        diag.dt.append(dt)
        diag.max_speed.append(smax)
        record(g)
    return diag, g


def run_steps(grid: Grid1D, steps: int, dt: float):
    """``steps`` updates with time step ``min(dt, CFL-1 limit)``."""
    diag = RunDiagnostics(cfl=1.0)
    g = grid
    diag.times.append(g.t)
    diag.totals.append(g.totals())
    diag.energy.append(g.energy())
    for _ in range(steps):
        g, d, smax = step(g, 1.0, dt_max=dt)
        diag.dt.append(d)
        diag.max_speed.append(smax)
        diag.times.append(g.t)
        diag.totals.append(g.totals())
        diag.energy.append(g.energy())
    return diag, g


def restrict(u: np.ndarray, factor: int) -> np.ndarray:
    """Average groups of ``factor`` neighbouring cells."""
    n = u.shape[0] // factor
    return u[: n * factor].reshape(n, factor, *u.shape[1:]).mean(axis=1)


def self_convergence(config, ns=(128, 256, 512)):
    """Observed L1 order from the (n, 2n, 4n) triplet on conserved variables."""
    if isinstance(config, Mapping):
        config = RunConfig.from_dict(config)
    finals = []
    for n in ns:
        finals.append(run(replace(config, n=n))[1].W)
    e1 = np.sum(np.abs(restrict(finals[1], 2) - finals[0])) / ns[0]
    e2 = np.sum(np.abs(restrict(finals[2], 2) - finals[1])) / ns[1]
    return float(np.log2(e1 / e2)), (float(e1), float(e2))


# ---------------------------------------------------------------------------
# adiabatic invariants along approximate particle paths

def invariants(u: np.ndarray) -> np.ndarray:
    """``(p_par |H|^2 / rho^3, p_perp / (rho |H|))`` per row."""
    rho = u[..., 0]
    H2 = np.sum(u[..., 4:7] ** 2, axis=-1)
    return np.stack([u[..., 7] * H2 / rho**3, u[..., 8] / (rho * np.sqrt(H2))], axis=-1)


def _interp_periodic(x, values, n):
    """Linear interpolation from cell centers at positions ``x`` in [0, 1)."""
    s = np.mod(x, 1.0) * n - 0.5
    i0 = np.floor(s).astype(int)
    w = s - i0
    i0 %= n
    i1 = (i0 + 1) % n
    if values.ndim > 1:
        w = w[:, None]
    return (1.0 - w) * values[i0] + w * values[i1]


class ParticleTracker:
    """Semi-Lagrangian tracer: Heun-integrated particles sampling the invariants."""

    def __init__(self, grid: Grid1D, positions=None):
        self.x = np.array((grid.x if positions is None else positions), dtype=float)
        u = grid.primitive()
        self.initial = _interp_periodic(self.x, invariants(u), grid.n)
        self.current = self.initial.copy()

    def advance(self, old: Grid1D, new: Grid1D, dt: float) -> None:
        v_old = old.primitive()[:, 1]
        u_new = new.primitive()
        k1 = _interp_periodic(self.x, v_old, old.n)
        k2 = _interp_periodic(self.x + dt * k1, u_new[:, 1], new.n)
        self.x = np.mod(self.x + 0.5 * dt * (k1 + k2), 1.0)
        self.current = _interp_periodic(self.x, invariants(u_new), new.n)

    def drift(self) -> np.ndarray:
        """Max relative change of each invariant over the particles."""
        return np.max(np.abs(self.current - self.initial) / np.abs(self.initial), axis=0)


# ---------------------------------------------------------------------------
# linear modal reference

def modal_reference(U0: PlasmaState, r, amplitude: float, mode: int, x, t: float) -> np.ndarray:
    """Linearized solution for ``u0 + amplitude sin(2 pi mode x) r`` at time t."""
    from .modes import evolve_modal

    k = np.array([2.0 * np.pi * mode, 0.0, 0.0])
    hat = evolve_modal(U0.to_float(), k, -1j * amplitude * np.asarray(r, dtype=complex), t)
    phase = np.exp(1j * k[0] * np.asarray(x))
    return U0.to_float().as_vector().astype(float) + np.real(phase[:, None] * hat[None, :])
