"""Certified L2-gain bounds and passivity for linear ODEs coupled to 1-D PDEs.

Operators on ``R^m x L2^q`` are represented by polynomial PQRS tuples
(:mod:`piegain.pqrs`); storage functions are searched over a cone of provably
positive operators (:mod:`piegain.positivity`) and the dissipation inequality
is reduced to a semidefinite program (:mod:`piegain.analysis`).
"""
from .analysis import Certificate, check_passivity, min_gain, verify_certificate
from .document import dump_document, load_document, parse_document
from .errors import (BilinearProduct, DimMismatch, DomainMismatch, ExportRejected, Infeasible,
                     InvalidBound, ParseError, PiegainError, ShapeMismatch, SingularBT, SolverFailure,
                     UnassignedVariable, UnstableDiscretization)
from .pqrs import PqrsOperator, adjoint, compose
from .symbolic import AffineScalar, MatPoly
from .system_model import OdePdeSystem, build_operators, delay_system, ode_system, validate

__version__ = "0.1.0"
