"""Plasma state, constitutive quantities and conserved-variable conversion.

Unknown ordering throughout the package is ``(rho, v1, v2, v3, H1, H2, H3,
p_par, p_perp)``.  All quantities are dimensionless code units with the
magnetic permeability absorbed into ``H``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Mapping

import numpy as np

from .errors import DomainError

H_FLOOR = 1e-300

IDX_RHO = 0
SL_V = slice(1, 4)
SL_H = slice(4, 7)
IDX_PPAR = 7
IDX_PPERP = 8


def _as_vec(x) -> np.ndarray:
    arr = np.asarray(x)
    if arr.dtype == object or any(isinstance(c, Fraction) for c in np.ravel(arr)):
        arr = np.array([Fraction(c) for c in np.ravel(arr)], dtype=object)
    else:
        arr = np.asarray(arr, dtype=float).ravel()
    if arr.shape != (3,):
        raise DomainError(f"expected a 3-vector, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class PlasmaState:
    """Pointwise primary unknowns of the CGL system.

    Scalars may be floats or :class:`fractions.Fraction`; the latter keeps
    every rational-only assembly (``J``, ``A_j``, ``B_j``) exact.
    """

    rho: Any
    v: np.ndarray
    H: np.ndarray
    p_par: Any
    p_perp: Any
    exact: bool = field(default=False, compare=False)

    def __post_init__(self):
        exact = self.exact or any(
            isinstance(x, Fraction) for x in (self.rho, self.p_par, self.p_perp)
        )
        v = _as_vec(self.v)
        H = _as_vec(self.H)
        exact = exact or v.dtype == object or H.dtype == object
        if exact:
            conv = Fraction
            v = np.array([Fraction(c) for c in v], dtype=object)
            H = np.array([Fraction(c) for c in H], dtype=object)
        else:
            conv = float
        object.__setattr__(self, "rho", conv(self.rho))
        object.__setattr__(self, "p_par", conv(self.p_par))
        object.__setattr__(self, "p_perp", conv(self.p_perp))
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "exact", exact)
        v.flags.writeable = False
        H.flags.writeable = False
        validate(self.rho, self.p_par, self.p_perp, self.H2, Hn=self.Hnorm)

    def __eq__(self, other):
        if not isinstance(other, PlasmaState):
            return NotImplemented
        return bool(np.all(self.as_vector() == other.as_vector()))

    def __hash__(self):
        return hash(tuple(self.as_vector().tolist()))

    @property
    def H2(self):
        return sum(c * c for c in self.H)

    @property
    def Hnorm(self) -> float:
        # hypot avoids underflow of |H|^2 for tiny fields
        return math.hypot(*(float(c) for c in self.H))

    def as_vector(self) -> np.ndarray:
        """Primary unknowns as a 9-vector in the package ordering."""
        dtype = object if self.exact else float
        return np.array(
            [self.rho, *self.v, *self.H, self.p_par, self.p_perp], dtype=dtype
        )

    @classmethod
    def from_vector(cls, u) -> "PlasmaState":
        u = list(u)
        if len(u) != 9:
            raise DomainError(f"expected 9 components, got {len(u)}")
        return cls(u[0], u[1:4], u[4:7], u[7], u[8])

    def to_float(self) -> "PlasmaState":
        if not self.exact:
            return self
        return PlasmaState(
            float(self.rho),
            [float(c) for c in self.v],
            [float(c) for c in self.H],
            float(self.p_par),
            float(self.p_perp),
        )

    def to_dict(self) -> dict:
        return {
            "rho": float(self.rho),
            "v": [float(c) for c in self.v],
            "H": [float(c) for c in self.H],
            "p_par": float(self.p_par),
            "p_perp": float(self.p_perp),
        }

    @classmethod
    def from_dict(cls, d: Mapping, exact: bool = False) -> "PlasmaState":
        """Build from the JSON state object.

        With ``exact=True`` numbers (or strings such as ``"3/2"``) are read as
        Fractions.
        """
        try:
            keys = ("rho", "v", "H", "p_par", "p_perp")
            missing = [k for k in keys if k not in d]
            if missing:
                raise DomainError(f"state is missing fields: {missing}")
            conv = (lambda x: Fraction(str(x))) if exact else float
            return cls(
                conv(d["rho"]),
                [conv(c) for c in d["v"]],
                [conv(c) for c in d["H"]],
                conv(d["p_par"]),
                conv(d["p_perp"]),
            )
        except (TypeError, ValueError) as exc:
            if isinstance(exc, DomainError):
                raise
            raise DomainError(f"malformed state: {exc}") from exc

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str, exact: bool = False) -> "PlasmaState":
        return cls.from_dict(json.loads(text), exact=exact)


@dataclass(frozen=True)
class DerivedQuantities:
    tau: float
    q: float
    b: np.ndarray
    a_p: float
    beta_perp: float
    s_par: float
    s_perp: float
    e: float
    E: float


@dataclass(frozen=True)
class ConservedState:
    rho: float
    mom: np.ndarray
    H: np.ndarray
    rho_s_par: float
    rho_s_perp: float

    def as_vector(self) -> np.ndarray:
        return np.array(
            [self.rho, *self.mom, *self.H, self.rho_s_par, self.rho_s_perp], dtype=float
        )

    @classmethod
    def from_vector(cls, w) -> "ConservedState":
        w = np.asarray(w, dtype=float)
        return cls(w[0], w[1:4].copy(), w[4:7].copy(), w[7], w[8])


def validate(rho, p_par, p_perp, H2, Hn=None) -> None:
    """Raise DomainError unless rho, p_par, p_perp > 0 and |H| >= H_FLOOR."""
    if Hn is None:
        Hn = math.sqrt(float(H2))
    if not rho > 0:
        raise DomainError(f"density must be positive, got {rho}")
    if not p_par > 0:
        raise DomainError(f"parallel pressure must be positive, got {p_par}")
    if not p_perp > 0:
        raise DomainError(f"perpendicular pressure must be positive, got {p_perp}")
    if not Hn >= H_FLOOR or not math.isfinite(Hn):
        raise DomainError("magnetic field must be nonzero")


# Vectorized constitutive relations.  Arguments broadcast; H2 = |H|^2.

def anisotropy(p_par, p_perp, H2):
    return (p_par - p_perp) / H2


def total_pressure(p_perp, H2):
    return p_perp + 0.5 * H2


def entropy_par(rho, p_par, H2):
    return np.log(p_par * H2 / rho**3) / 3.0


def entropy_perp(rho, p_perp, H2):
    return 2.0 * np.log(p_perp / (rho * np.sqrt(H2))) / 3.0


def derive(U: PlasmaState) -> DerivedQuantities:
    """Anisotropy, total pressure, field direction, betas, entropies, energies."""
    U = U.to_float()
    H2 = float(U.H2)
    validate(U.rho, U.p_par, U.p_perp, H2, Hn=U.Hnorm)
    e = U.p_perp / U.rho + U.p_par / (2.0 * U.rho)
    return DerivedQuantities(
        tau=anisotropy(U.p_par, U.p_perp, H2),
        q=total_pressure(U.p_perp, H2),
        b=U.H / np.sqrt(H2),
        a_p=U.p_perp / U.p_par,
        beta_perp=2.0 * U.p_perp / H2,
        s_par=float(entropy_par(U.rho, U.p_par, H2)),
        s_perp=float(entropy_perp(U.rho, U.p_perp, H2)),
        e=e,
        E=e + 0.5 * float(U.v @ U.v),
    )


def primitive_to_conserved(u: np.ndarray) -> np.ndarray:
    """Batch conversion; ``u[..., 9]`` primary to ``w[..., 9]`` conserved."""
    u = np.asarray(u, dtype=float)
    rho = u[..., 0]
    H2 = np.sum(u[..., 4:7] ** 2, axis=-1)
    w = np.empty_like(u)
    w[..., 0] = rho
    w[..., 1:4] = rho[..., None] * u[..., 1:4]
    w[..., 4:7] = u[..., 4:7]
    w[..., 7] = rho * entropy_par(rho, u[..., 7], H2)
    w[..., 8] = rho * entropy_perp(rho, u[..., 8], H2)
    return w


def conserved_to_primitive(w: np.ndarray) -> np.ndarray:
    """Inverse of :func:`primitive_to_conserved`; no validity checks."""
    w = np.asarray(w, dtype=float)
    rho = w[..., 0]
    H2 = np.sum(w[..., 4:7] ** 2, axis=-1)
    u = np.empty_like(w)
    u[..., 0] = rho
    u[..., 1:4] = w[..., 1:4] / rho[..., None]
    u[..., 4:7] = w[..., 4:7]
    s_par = w[..., 7] / rho
    s_perp = w[..., 8] / rho
    u[..., 7] = rho**3 * np.exp(3.0 * s_par) / H2
    u[..., 8] = rho * np.sqrt(H2) * np.exp(1.5 * s_perp)
    return u


def to_conserved(U: PlasmaState) -> ConservedState:
    U = U.to_float()
    return ConservedState.from_vector(primitive_to_conserved(U.as_vector()))


def from_conserved(W: ConservedState) -> PlasmaState:
    if not W.rho > 0:
        raise DomainError(f"density must be positive, got {W.rho}")
    if not math.hypot(*(float(c) for c in W.H)) >= H_FLOOR:
        raise DomainError("magnetic field must be nonzero")
    return PlasmaState.from_vector(conserved_to_primitive(W.as_vector()))
