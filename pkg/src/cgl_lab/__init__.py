"""Verification toolkit for the anisotropic (CGL) plasma-vacuum interface model."""

from .errors import (BasicStateViolation, CGLError, DefectivePencil, DegenerateLift,
                     DomainError, GridMismatch, HyperbolicityLoss, IncompatibleCurrent,
                     InfeasibleCutoff, NotPositiveDefinite, PreconditionError,
                     SingularWeight, SolverFailure)
from .hyperbolicity import HyperbolicityReport, Thresholds, certify
from .state import ConservedState, PlasmaState, derive, from_conserved, to_conserved
from .symmetrizer import (SymmetricSystem, a0_positive_definite, assemble_sym, change_matrix,
                          char_speeds, consistency_identity)

__version__ = "0.1.0"

__all__ = [
    "BasicStateViolation", "CGLError", "DefectivePencil", "DegenerateLift", "DomainError",
    "GridMismatch", "HyperbolicityLoss", "IncompatibleCurrent", "InfeasibleCutoff",
    "NotPositiveDefinite", "PreconditionError", "SingularWeight", "SolverFailure",
    "HyperbolicityReport", "Thresholds", "certify", "ConservedState", "PlasmaState", "derive",
    "from_conserved", "to_conserved", "SymmetricSystem", "a0_positive_definite", "assemble_sym",
    "change_matrix", "char_speeds", "consistency_identity",
]
