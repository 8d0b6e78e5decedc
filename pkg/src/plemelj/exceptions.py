from __future__ import annotations


class PlemeljError(Exception):
    """Base class for all errors raised by this package."""


class CurveError(PlemeljError, ValueError):
    """Invalid or degenerate curve geometry."""


class SelfIntersectionError(CurveError):
    pass


class NormalizationError(CurveError):
    pass


class SideError(CurveError):
    """A point lies outside the region where the local side is defined."""


class DensityError(PlemeljError, ValueError):
    pass


class QuadratureError(PlemeljError, RuntimeError):
    pass


class OnCurveError(PlemeljError, ValueError):
    """The Cauchy transform was requested at (or numerically on) the curve."""


class ConvergenceError(PlemeljError, RuntimeError):
    """A lateral-limit run did not settle, so no limit value can be reported."""


class ConfigError(PlemeljError, ValueError):
    pass
