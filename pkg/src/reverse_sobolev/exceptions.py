"""Exception hierarchy. The CLI maps each family to an exit code."""


class ReverseSobolevError(Exception):
    exit_code = 1


class InvalidParameterError(ReverseSobolevError, ValueError):
    """Bad (n, s), grid, degree or schema input."""

    exit_code = 2


class PositivityError(InvalidParameterError):
    """A field required to be positive is not, at some quadrature node."""

    def __init__(self, message, node=None, value=None):
        super().__init__(message)
        self.node = node
        self.value = value


class OnManifoldError(InvalidParameterError):
    """The input lies on the optimizer manifold; the distance is undefined.

    Its own exit code so scripts can tell it apart from malformed input.
    """

    exit_code = 5


class TruncationError(ReverseSobolevError, ArithmeticError):
    """The spherical-harmonic tail did not converge before the maximal degree."""

    exit_code = 3

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics


class ConvergenceError(ReverseSobolevError, ArithmeticError):
    """A nonlinear solve or quadrature failed."""

    exit_code = 3


class InvariantError(ReverseSobolevError, AssertionError):
    exit_code = 4
