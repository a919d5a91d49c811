"""Hyperbolicity certificates and firehose/mirror classification.

Margins are absolute.  :func:`certify` never raises on a failed condition;
the report carries the verdict so instability regimes can be studied.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import PreconditionError
from .state import PlasmaState

DEFAULT_DELTA = 1e-8


@dataclass(frozen=True)
class Thresholds:
    """Positive margins ``delta[0..7]``; ``delta[0]`` is the non-collinearity bound."""

    delta: tuple = (DEFAULT_DELTA,) * 8

    def __post_init__(self):
        d = tuple(float(x) for x in self.delta)
        if len(d) != 8:
            raise ValueError("need exactly eight margins delta_0..delta_7")
        if any(not x > 0 for x in d):
            raise ValueError("all margins must be positive")
        object.__setattr__(self, "delta", d)

    @classmethod
    def uniform(cls, value: float) -> "Thresholds":
        return cls((value,) * 8)


@dataclass(frozen=True)
class Condition:
    name: str
    value: float
    threshold: float

    @property
    def margin(self) -> float:
        return self.value - self.threshold

    @property
    def passed(self) -> bool:
        return self.value >= self.threshold


@dataclass
class HyperbolicityReport:
    cond_hypcond: dict
    cond_hyp: list
    cond_hyp_lin: dict
    cond_default: list
    firehose: bool
    mirror: bool
    symmetrizer_pd: bool
    tau: float
    a_p: float
    beta_perp: float
    conditions: list = field(default_factory=list, repr=False)

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.conditions) and self.cond_hypcond["passed"]

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("conditions")
        d["all_passed"] = self.all_passed
        return d


def _cond_dict(c: Condition) -> dict:
    return {"name": c.name, "value": c.value, "threshold": c.threshold,
            "margin": c.margin, "passed": c.passed}


def certify(U: PlasmaState, thr: Thresholds | None = None) -> HyperbolicityReport:
    """Evaluate every hyperbolicity condition with explicit margins."""
    thr = thr or Thresholds()
    U = U.to_float()
    d = thr.delta
    rho, pp, pt = U.rho, U.p_par, U.p_perp
    H2 = float(U.H2)
    Hn = np.sqrt(H2)
    tau = (pp - pt) / H2
    a_p = pt / pp
    beta = 2.0 * pt / H2

    c_rho = Condition("rho", rho, d[1])
    c_two = Condition("(p_perp-p_par)/|H|^2+1", (pt - pp) / H2 + 1.0, d[2])
    c_three = Condition("p_par+p_perp(p_par-p_perp)/|H|^2", pp + pt * (pp - pt) / H2, d[3])
    c_lin = Condition("6p_par-p_perp", 6.0 * pp - pt, d[4])
    c_pp = Condition("p_par", pp, d[5])
    c_pt = Condition("p_perp", pt, d[6])
    c_H = Condition("|H|", Hn, d[7])

    lower = -1.0 / a_p
    hypcond = {
        "rho_positive": rho > 0,
        "tau_upper_margin": 1.0 - tau,
        "tau_lower_margin": tau - lower,
        "passed": bool(rho > 0 and lower < tau < 1.0),
    }
    conditions = [c_rho, c_two, c_three, c_lin, c_pp, c_pt, c_H]
    return HyperbolicityReport(
        cond_hypcond=hypcond,
        cond_hyp=[_cond_dict(c) for c in (c_rho, c_two, c_three)],
        cond_hyp_lin=_cond_dict(c_lin),
        cond_default=[_cond_dict(c) for c in (c_pp, c_pt, c_H)],
        firehose=bool(tau > 1.0),
        mirror=bool(a_p > 6.0 * (1.0 + 1.0 / beta)),
        symmetrizer_pd=bool(tau < 1.0 and 6.0 * pp > pt),
        tau=tau,
        a_p=a_p,
        beta_perp=beta,
        conditions=conditions,
    )


# Vectorized predicates used by the sampling sweeps.

def hypcond_strict(rho, p_par, p_perp, H2):
    """rho > 0 and -1/a_p < tau < 1."""
    tau = (p_par - p_perp) / H2
    return (rho > 0) & (tau < 1.0) & (tau > -p_par / p_perp)


def hyp_strict(rho, p_par, p_perp, H2):
    """Theorem-hypothesis form with every margin sent to zero."""
    return (
        (rho > 0)
        & ((p_perp - p_par) / H2 + 1.0 > 0)
        & (p_par + p_perp * (p_par - p_perp) / H2 > 0)
    )


def firehose_flag(p_par, p_perp, H2):
    return (p_par - p_perp) / H2 > 1.0


def mirror_flag(p_par, p_perp, H2):
    beta = 2.0 * p_perp / H2
    return p_perp / p_par > 6.0 * (1.0 + 1.0 / beta)


def hyp_equivalence(U: PlasmaState) -> bool:
    """True iff the two hyperbolicity formulations give the same verdict."""
    U = U.to_float()
    H2 = float(U.H2)
    a = bool(hypcond_strict(U.rho, U.p_par, U.p_perp, H2))
    b = bool(hyp_strict(U.rho, U.p_par, U.p_perp, H2))
    return a == b


def remark2_implication(U: PlasmaState) -> bool:
    """For hyperbolic states with beta_perp > 2/5, return whether a_p < 6."""
    U = U.to_float()
    H2 = float(U.H2)
    if not hypcond_strict(U.rho, U.p_par, U.p_perp, H2):
        raise PreconditionError("state does not satisfy -1/a_p < tau < 1")
    beta = 2.0 * U.p_perp / H2
    if not beta > 0.4:
        raise PreconditionError(f"beta_perp = {beta:.6g} is not above 2/5")
    return bool(U.p_perp / U.p_par < 6.0)
