"""Free-energy model of a supply chain under uncertainty.

Modules: ``ahp`` (pairwise-comparison weights), ``model`` (free energy,
Lagrangian, gradient), ``dynamics`` (linearized system matrices), ``bvp``
(two-point boundary value solver), ``scenario`` (case studies) and ``cli``.
"""

from .errors import (
    ConvergenceError,
    NumericalError,
    ParseError,
    ScnError,
    SingularPointError,
    ValidationError,
)

__version__ = "0.1.0"

__all__ = [
    "ConvergenceError",
    "NumericalError",
    "ParseError",
    "ScnError",
    "SingularPointError",
    "ValidationError",
]
