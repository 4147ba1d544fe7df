"""Exception classes raised across the package.

Each class carries the CLI exit code returned by the ``isaacs-fd`` command.
"""


class IsaacsError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ConfigError(IsaacsError, ValueError):
    exit_code = 2


class UnknownControl(IsaacsError, KeyError):
    exit_code = 2

    def __str__(self):
        return Exception.__str__(self)


class EmptyInterior(IsaacsError):
    exit_code = 2


class UnclassifiedPoint(IsaacsError, KeyError):
    exit_code = 2

    def __str__(self):
        return Exception.__str__(self)


class MissingNeighbor(IsaacsError):
    exit_code = 2


class DecompositionInfeasible(IsaacsError):
    """No nonnegative stencil decomposition reaches the requested floor.

    ``matrix`` holds the offending matrix, ``best`` the largest attainable
    minimum coefficient.
    """

    exit_code = 3

    def __init__(self, message, matrix=None, best=None):
        super().__init__(message)
        self.matrix = matrix
        self.best = best


class NoConvergence(IsaacsError):
    exit_code = 4


class OrderingViolation(IsaacsError):
    exit_code = 5


class BarrierInvalid(IsaacsError):
    exit_code = 6


class SaddleValueNonzero(IsaacsError, ValueError):
    exit_code = 2


class SupportEscapesRegion(IsaacsError, ValueError):
    exit_code = 2
