"""Exception hierarchy shared by all filigeo modules."""


class FiligeoError(Exception):
    """Base class for every error raised by filigeo."""


class BadParameter(FiligeoError, ValueError):
    pass


class OutsideDomain(FiligeoError, ValueError):
    pass


class SignatureViolation(FiligeoError):
    pass


class SingularMetric(FiligeoError):
    pass


class NotSliding(FiligeoError):
    pass


class StepFailure(FiligeoError):
    pass


class QuadratureFailure(FiligeoError):
    pass


class NoConvergence(FiligeoError):
    pass


class NonCausalSegment(FiligeoError):
    pass


class InterfaceOnCurve(FiligeoError):
    pass


class ResolutionTooCoarse(FiligeoError):
    pass


class NotCausallyRelated(FiligeoError):
    pass
