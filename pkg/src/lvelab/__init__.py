"""Exact and numerical tools for the quartic complex matrix model.

The package covers Weingarten calculus, ciliated ribbon graph enumeration,
loop vertex expansion structures, perturbative and genus-stratified
coefficients, the planar Schwinger-Dyson series, analyticity-domain bounds,
Borel-Laplace resummation and Monte Carlo / quadrature cross-checks.
"""

__version__ = "0.1.0"

from lvelab.errors import (  # noqa: F401
    CapacityError,
    DomainError,
    InvariantError,
    LveLabError,
    QuadratureError,
    ResummationError,
)
