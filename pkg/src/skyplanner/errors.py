"""Exception types raised by the planner and its numerical kernels."""


class InvalidParameterError(ValueError):
    """A parameter block violates its invariants."""


class IntegrationError(RuntimeError):
    """Numerical quadrature did not reach the requested accuracy."""

    def __init__(self, message: str, *, estimate: float = float("nan"), error: float = float("nan")):
        super().__init__(f"{message} (estimate={estimate!r}, abs error={error!r})")
        self.estimate = estimate
        self.error = error


class InfeasibleTripError(RuntimeError):
    """Even the bare S -> D -> S trip does not fit in the battery."""


class NoRelayError(RuntimeError):
    """Data has to be forwarded but the scene has no TBS."""


class EnumerationCapError(ValueError):
    """Too many serving clusters for exhaustive route enumeration."""
