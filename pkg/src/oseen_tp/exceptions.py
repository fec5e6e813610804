"""Exception hierarchy for oseen_tp."""


class OseenError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameterError(OseenError, ValueError):
    """A physical or numerical parameter is outside the supported range."""


class DomainError(OseenError, ValueError):
    """An argument lies outside the domain of the function."""


class SingularityError(DomainError):
    """Evaluation was requested at (or too close to) a kernel singularity."""


class ShapeError(OseenError, ValueError):
    """Array shapes or grid metadata are inconsistent."""


class NyquistError(InvalidParameterError):
    """More time modes were requested than the time grid can resolve."""


class AccuracyError(OseenError, RuntimeError):
    """A quadrature did not reach the requested tolerance.

    The best available estimate is kept on ``achieved``.
    """

    def __init__(self, message, achieved=None, value=None):
        super().__init__(message)
        self.achieved = achieved
        self.value = value


class DivergenceError(OseenError, RuntimeError):
    """The fixed-point iteration stopped contracting."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history or [])


class RankError(OseenError, ValueError):
    """A least-squares design matrix is rank deficient."""
