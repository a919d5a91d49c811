"""Seeded random backgrounds for the property sweeps.

Every sampler returns primary states ``u[n, 9]``.  Magnitudes are log-uniform
so that both weak and strong fields, and both pressure orderings, show up.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .hyperbolicity import DEFAULT_DELTA
from .state import PlasmaState


def _loguniform(rng, lo, hi, n):
    return np.exp(rng.uniform(np.log(lo), np.log(hi), n))


def _field(rng, n, lo=0.2, hi=5.0):
    H = rng.normal(size=(n, 3))
    H /= np.linalg.norm(H, axis=1, keepdims=True)
    return H * _loguniform(rng, lo, hi, n)[:, None]


def random_states(rng: np.random.Generator, n: int) -> np.ndarray:
    """Unconstrained positive states; roughly half are outside the hyperbolic region."""
    u = np.empty((n, 9))
    u[:, 0] = _loguniform(rng, 0.1, 10.0, n)
    u[:, 1:4] = rng.normal(size=(n, 3))
    u[:, 4:7] = _field(rng, n)
    u[:, 7] = _loguniform(rng, 0.01, 100.0, n)
    u[:, 8] = _loguniform(rng, 0.01, 100.0, n)
    return u


def certified(u: np.ndarray, delta: float = DEFAULT_DELTA) -> np.ndarray:
    """States passing every hyperbolicity margin including 6 p_par - p_perp."""
    rho, pp, pt = u[:, 0], u[:, 7], u[:, 8]
    H2 = np.sum(u[:, 4:7] ** 2, axis=1)
    return ((rho >= delta) & ((pt - pp) / H2 + 1.0 >= delta)
            & (pp + pt * (pp - pt) / H2 >= delta) & (6.0 * pp - pt >= delta)
            & (pp >= delta) & (pt >= delta) & (np.sqrt(H2) >= delta))


def random_hyperbolic(rng: np.random.Generator, n: int) -> np.ndarray:
    """Certified-hyperbolic states by rejection."""
    out = []
    have = 0
    while have < n:
        u = random_states(rng, 2 * n)
        u = u[certified(u)]
        out.append(u)
        have += len(u)
    return np.concatenate(out)[:n]


def random_firehose(rng: np.random.Generator, n: int) -> np.ndarray:
    """States with tau in (1.05, 4)."""
    u = random_states(rng, n)
    H2 = np.sum(u[:, 4:7] ** 2, axis=1)
    tau = rng.uniform(1.05, 4.0, n)
    u[:, 7] = u[:, 8] + tau * H2
    return u


def random_mirror(rng: np.random.Generator, n: int, margin: float = 1.05) -> np.ndarray:
    """States with a_p between ``margin`` and 3 times the mirror threshold."""
    u = random_states(rng, n)
    H2 = np.sum(u[:, 4:7] ** 2, axis=1)
    u[:, 8] = _loguniform(rng, 0.1, 10.0, n)
    beta = 2.0 * u[:, 8] / H2
    a_p = 6.0 * (1.0 + 1.0 / beta) * rng.uniform(margin, 3.0, n)
    u[:, 7] = u[:, 8] / a_p
    return u


def random_rational(rng: np.random.Generator, n: int, hyperbolic: bool = True) -> list:
    """Exact PlasmaStates with small-denominator rational entries."""
    out = []
    while len(out) < n:
        def q():
            return Fraction(int(rng.integers(-20, 21)), int(rng.integers(1, 8)))

        def pos():
            return Fraction(int(rng.integers(1, 30)), int(rng.integers(1, 8)))

        H = [q(), q(), q()]
        if all(h == 0 for h in H):
            continue
        U = PlasmaState(pos(), [q(), q(), q()], H, pos(), pos(), exact=True)
        if hyperbolic:
            tau = (U.p_par - U.p_perp) / U.H2
            if not (tau < 1 and 6 * U.p_par > U.p_perp and tau > -U.p_par / U.p_perp):
                continue
        out.append(U)
    return out
