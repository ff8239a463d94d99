"""Exception hierarchy shared by all compmod modules."""


class CompModError(Exception):
    """Base class for every error raised by compmod."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class MalformedInput(CompModError):
    """A structure refers to elements or types outside its declared carriers."""


class TypeMismatch(CompModError):
    """Two functions or simulations are not composable as typed."""


class InvalidSimulation(CompModError):
    """A simulation failed validation where a valid one was required."""


class LeftRegularityFailure(CompModError):
    pass


class FunctorialityFailure(CompModError):
    pass


class PullbackPreservationFailure(CompModError):
    pass


class RectangleViolation(CompModError):
    """A forcing/tracking modulus pair does not commute on some (f, x)."""


class SquareDoesNotCommute(CompModError):
    pass


class FiberMembershipViolation(CompModError):
    pass


class BoundExceeded(CompModError):
    """An exhaustive enumeration was refused because the instance is too large."""


class DocumentError(CompModError):
    """A document could not be parsed or resolved.

    ``location`` holds the line, column and JSON path; the message already
    starts with them.
    """

    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location
