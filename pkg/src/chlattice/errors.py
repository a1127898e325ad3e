"""Exception hierarchy for chlattice."""


class ChLatticeError(Exception):
    """Base class for every error raised by chlattice."""


class DomainError(ChLatticeError, ValueError):
    """Input lies outside the domain of an operation."""


class DegenerateConnectionError(DomainError):
    """The 1/z connection formula needs a - b non-integer."""


class NumericalError(ChLatticeError, ArithmeticError):
    """A quadrature, series or extrapolation failed to meet its tolerance."""


class InputError(ChLatticeError):
    """A group or spectral input file is malformed."""
