"""Exception hierarchy.

Every error raised by the toolkit derives from :class:`WulffkitError`. The
CLI maps :class:`PreconditionFailure` subclasses to exit code 3 and
:class:`ParseError` to exit code 2.
"""


class WulffkitError(Exception):
    pass


class ParseError(WulffkitError):
    pass


class PreconditionFailure(WulffkitError):
    pass


# gauge
class ZeroVector(PreconditionFailure, ValueError):
    pass


class NonUnitInput(PreconditionFailure, ValueError):
    pass


class InadmissibleGauge(PreconditionFailure, ValueError):
    pass


class ConvergenceFailure(WulffkitError, RuntimeError):
    pass


class NotOnGeodesic(PreconditionFailure, ValueError):
    pass


# surface
class DegenerateImmersion(PreconditionFailure):
    pass


class ClosedSurface(PreconditionFailure):
    pass


class NotClosed(PreconditionFailure):
    pass


class NotMeanConvex(PreconditionFailure):
    def __init__(self, message, index=None, value=None):
        super().__init__(message)
        self.index = index
        self.value = value


# domain
class SingularBoundaryContact(PreconditionFailure):
    pass


class AnisotropicOnEdge(PreconditionFailure):
    pass


class BoundaryOffContainer(PreconditionFailure):
    pass


class InadmissibleSurface(PreconditionFailure):
    """Raised when a hypothesis of the inequality (contact-angle condition) fails."""


class InvalidContainer(PreconditionFailure, ValueError):
    pass


# wulff
class EmptyCap(PreconditionFailure):
    pass


class NoTrim(PreconditionFailure):
    pass


class NotInside(PreconditionFailure):
    pass


class SamplingFailure(WulffkitError, RuntimeError):
    pass


# oracle2d
class SelfIntersecting(PreconditionFailure):
    pass
