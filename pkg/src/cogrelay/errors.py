"""Exception hierarchy shared across the package."""


class CogRelayError(Exception):
    """Base class for all package errors."""


class ConfigError(CogRelayError, ValueError):
    """A configuration value is outside its domain."""


class ZeroDistanceError(ConfigError):
    """Two nodes joined by a used link sit at the same coordinates."""


class DomainError(CogRelayError, ValueError):
    """A special function was called outside its domain."""


class DivergentIntegralError(DomainError):
    """The requested integral does not converge."""


class QuadratureFailure(CogRelayError, ArithmeticError):
    """Adaptive quadrature could not reach the requested tolerance."""


class NonMonotoneCdf(CogRelayError, ArithmeticError):
    """A function passed as a CDF decreased by more than the tolerance."""
