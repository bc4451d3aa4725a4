"""Exception hierarchy shared by the library and the command line."""
from __future__ import annotations


class RCMError(Exception):
    """Base class for every error raised by this package."""

    exit_code = 1
    kind = "error"

    def to_dict(self) -> dict:
        return {"error": self.kind, "message": str(self)}


class ParameterError(RCMError, ValueError):
    """A model or configuration value violates its constraints."""

    exit_code = 2
    kind = "validation"

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field

    def to_dict(self) -> dict:
        return {"error": self.kind, "field": self.field, "message": str(self)}


class DomainError(RCMError, ValueError):
    """An argument lies outside the domain of a function (e.g. weight < 1)."""

    exit_code = 2
    kind = "domain"


class RegimeError(RCMError):
    """The requested quantity does not exist for these parameters.

    Raised when min(alpha, tau*alpha) <= d, where the expected number of
    neighbours of a particle is infinite.
    """

    exit_code = 3
    kind = "regime"

    def __init__(self, message: str, regime: str | None = None):
        super().__init__(message)
        self.regime = regime

    def to_dict(self) -> dict:
        out = super().to_dict()
        if self.regime is not None:
            out["regime"] = self.regime
        return out


class CapacityError(RCMError):
    """A particle or pair budget would be exceeded."""

    exit_code = 4
    kind = "capacity"


class ConvergenceError(RCMError, ArithmeticError):
    """Numerical integration failed to meet its tolerance."""

    exit_code = 6
    kind = "convergence"


class DegeneratePairError(RCMError, ValueError):
    """Two particles share a position, so the connection probability is undefined."""

    exit_code = 2
    kind = "degenerate_pair"


class InsufficientTailError(RCMError, ValueError):
    exit_code = 2
    kind = "insufficient_tail"


class TrendUndefinedError(RCMError, ValueError):
    exit_code = 2
    kind = "trend_undefined"
