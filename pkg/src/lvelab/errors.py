"""Exception hierarchy shared by all modules.

Each class carries the process exit code used by the command line front end.
"""


class LveLabError(Exception):
    exit_code = 1


class DomainError(LveLabError, ValueError):
    """Input outside the mathematical domain of an operation."""

    exit_code = 2


class CapacityError(LveLabError):
    """Request exceeds a configured enumeration or algebra limit."""

    exit_code = 3


class ResummationError(LveLabError):
    """Borel-Pade resummation or numerical quadrature failed."""

    exit_code = 4


class InvariantError(LveLabError, AssertionError):
    """An internal consistency check failed (corrupted structure)."""

    exit_code = 1


class QuadratureError(ResummationError):
    """A numerical integral did not converge."""
