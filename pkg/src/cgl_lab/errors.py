"""Exception hierarchy shared by every module."""


class CGLError(Exception):
    """Base class for all errors raised by cgl_lab."""


class DomainError(CGLError, ValueError):
    """State outside the model's validity region (rho, pressures, |H|)."""


class PreconditionError(CGLError, ValueError):
    """Input violates the stated hypothesis of an operation."""


class SingularWeight(CGLError, ZeroDivisionError):
    """The P-weight 2/(6 p_par - p_perp) is undefined (6 p_par == p_perp)."""


class NotPositiveDefinite(CGLError, ValueError):
    """The symmetrizer A0 is not positive definite at the background."""


class DefectivePencil(CGLError, ArithmeticError):
    """Plane-wave matrix is numerically non-diagonalizable."""


class InfeasibleCutoff(CGLError, ValueError):
    """No cut-off function meets the derivative bound."""


class DegenerateLift(CGLError, ValueError):
    """The lifted map x1 -> Phi is (nearly) non-invertible."""


class GridMismatch(CGLError, ValueError):
    """Fields live on incompatible grids."""


class IncompatibleCurrent(CGLError, ValueError):
    """Surface current violates jc.e1 = 0 or the tangential-divergence condition."""


class SolverFailure(CGLError, RuntimeError):
    """Linear solve failed to reach the expected residual level."""


class HyperbolicityLoss(CGLError, RuntimeError):
    """A finite-volume cell left the valid state region."""

    def __init__(self, message, cell=None, time=None):
        super().__init__(message)
        self.cell = cell
        self.time = time


class BasicStateViolation(CGLError, ValueError):
    """Basic state fails one of the interface constraints."""

    def __init__(self, message, violations=None):
        super().__init__(message)
        self.violations = dict(violations or {})
