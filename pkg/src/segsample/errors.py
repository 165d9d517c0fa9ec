"""Exception hierarchy.

``ValidationError`` subclasses signal bad inputs (the CLI maps them to exit
code 1); ``SolverError`` subclasses signal numerical failure.
"""


class SegsampleError(Exception):
    """Base class for every error raised by the package."""


class ValidationError(SegsampleError):
    pass


class OutOfRangeCoordinate(ValidationError):
    pass


class SelfLoop(ValidationError):
    pass


class BadIndex(ValidationError):
    pass


class DegenerateEdge(ValidationError):
    pass


class DomainViolation(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class BadPermutation(ValidationError):
    pass


class EmptyEdgeSet(ValidationError):
    pass


class UnsupportedDimension(ValidationError):
    pass


class LengthMismatch(ValidationError):
    pass


class BadData(ValidationError):
    pass


class SingularDesign(ValidationError):
    pass


class SizeLimit(ValidationError):
    pass


class SolverError(SegsampleError):
    pass


class Infeasible(SolverError):
    pass


class InconsistentConstraints(SolverError):
    pass


class MaxIterations(SolverError):
    pass
