"""Shared exception taxonomy.

Exit-code mapping in the CLI: input problems -> 2, internal invariant
failures -> 3.
"""


class InputError(ValueError):
    """Malformed or out-of-domain user input."""


class ExactArithmeticError(ArithmeticError):
    """Arithmetic request with no exact answer (sqrt of negative, etc.)."""


class DegenerateInputError(ValueError):
    """Geometric constructor fed coincident/collinear input it cannot use."""


class IncidenceError(ValueError):
    """Operation requires a point to lie exactly on a curve and it does not."""


class IdenticalCurvesError(ValueError):
    """Intersection of a curve with itself (infinite point set)."""


class InternalOrderingError(RuntimeError):
    """Construction-phase bookkeeping violated (a bug, not a data problem)."""
