"""Numerical toolkit for (alpha, beta)-norms and general (alpha, beta)-metrics.

Modules
-------
jets        truncated Taylor arithmetic (dual / hyper-dual numbers)
phi         profile families phi(s)
norm        Minkowski (alpha, beta)-norms, validity, derivative oracles
invariants  closed-form g, h, A, eta, u, v, w, q and det g
riccati     the q = 1 Riccati family: closed forms, singularities, phi
indicatrix  centroaffine cubic/Tchebychev forms and Gauss curvature
transport   sprays, nonlinear parallel transport, Berwald detection
config      JSON configs and canonical report serialization
cli         command-line front end
"""

__version__ = "0.1.0"

from .errors import (ConfigError, DegeneracyError, DegenerateBetaError, DimensionError,
                     DomainError, FinslerError, IntegrationBlockedError, QuadratureError,
                     SingularityError, ValidityError)
from .norm import NormSpec, check_validity, eval_norm
from .phi import ConstantOne, Polynomial, QuadraticRoot, Randers, RiccatiPhi, TablePhi

__all__ = [
    "__version__",
    "NormSpec",
    "check_validity",
    "eval_norm",
    "ConstantOne",
    "Polynomial",
    "QuadraticRoot",
    "Randers",
    "RiccatiPhi",
    "TablePhi",
    "FinslerError",
    "DomainError",
    "SingularityError",
    "DimensionError",
    "DegenerateBetaError",
    "ValidityError",
    "IntegrationBlockedError",
    "QuadratureError",
    "DegeneracyError",
    "ConfigError",
]
