"""Exception hierarchy shared across the package."""

from __future__ import annotations


class SampleCurveError(Exception):
    """Base class for all errors raised by samplecurve."""


class InvalidSpec(SampleCurveError, ValueError):
    pass


class NoBracket(SampleCurveError):
    """Bisection target lies outside the search interval."""


class TargetUnreachable(SampleCurveError):
    pass


class TuningFailed(SampleCurveError):
    pass


class DegenerateDesign(SampleCurveError):
    pass


class EmptyData(SampleCurveError, ValueError):
    pass


class DimensionMismatch(SampleCurveError, ValueError):
    pass


class NonConverged(SampleCurveError):
    pass


class OneClassOnly(SampleCurveError, ValueError):
    pass


class DegenerateLinearPredictor(SampleCurveError):
    pass


class ZeroVariance(SampleCurveError, ValueError):
    pass


class ValidationDegenerate(SampleCurveError):
    pass


class EmptyInput(SampleCurveError, ValueError):
    pass


class TooFewValues(SampleCurveError, ValueError):
    pass


class TooFewPoints(SampleCurveError, ValueError):
    pass


class NotPositiveDefinite(SampleCurveError):
    pass


class InvalidPrevalence(SampleCurveError, ValueError):
    pass


class ConfigError(SampleCurveError, ValueError):
    pass
