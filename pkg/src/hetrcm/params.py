"""Model parameters and the box the model is simulated in."""
from __future__ import annotations

import enum
import math
import os
from dataclasses import dataclass
from fractions import Fraction
from numbers import Real

from .errors import ParameterError

DEFAULT_MAX_PARTICLES = 10_000_000
DEFAULT_MAX_PAIRS = 500_000_000


def max_particles() -> int:
    """Particle budget, overridable through ``RCM_MAX_PARTICLES``."""
    raw = os.environ.get("RCM_MAX_PARTICLES")
    return int(raw) if raw else DEFAULT_MAX_PARTICLES


def max_pairs() -> int:
    raw = os.environ.get("RCM_MAX_PAIRS")
    return int(raw) if raw else DEFAULT_MAX_PAIRS


def _positive(name: str, value) -> None:
    if isinstance(value, bool) or not isinstance(value, Real):
        raise ParameterError(name, f"expected a real number, got {value!r}")
    if not math.isfinite(float(value)) or value <= 0:
        raise ParameterError(name, f"must be finite and > 0, got {value}")


@dataclass(frozen=True)
class ModelParams:
    """Parameters (d, nu, lambda, alpha, tau) of the heterogeneous RCM.

    ``lam`` is the connection scale (``lambda`` is a Python keyword).
    Real fields may be given as :class:`fractions.Fraction`; the regime
    classifier then compares thresholds exactly.
    """

    d: int
    nu: Real
    lam: Real
    alpha: Real
    tau: Real

    def __post_init__(self):
        if isinstance(self.d, bool) or not isinstance(self.d, int) or self.d < 1:
            raise ParameterError("d", f"must be an integer >= 1, got {self.d!r}")
        for name in ("nu", "lam", "alpha", "tau"):
            _positive(name, getattr(self, name))

    @property
    def finite_degree(self) -> bool:
        """True iff min(alpha, tau*alpha) > d."""
        from .analytic import _cmp

        return _cmp(min(self.alpha, self.tau * self.alpha), self.d) > 0

    @property
    def tail_index(self) -> float:
        """tau*alpha/d, the exponent of the degree survival function."""
        return float(self.tau) * float(self.alpha) / self.d

    def with_lambda(self, lam) -> "ModelParams":
        return ModelParams(self.d, self.nu, lam, self.alpha, self.tau)

    def as_dict(self) -> dict:
        return {
            "d": self.d,
            "nu": float(self.nu),
            "lambda": float(self.lam),
            "alpha": float(self.alpha),
            "tau": float(self.tau),
        }


class Boundary(str, enum.Enum):
    TORUS = "torus"
    FREE = "free"


@dataclass(frozen=True)
class BoxDomain:
    """The box [-L/2, L/2)^d, either periodic or with free faces."""

    d: int
    side: float
    boundary: Boundary = Boundary.TORUS

    def __post_init__(self):
        if isinstance(self.d, bool) or not isinstance(self.d, int) or self.d < 1:
            raise ParameterError("d", f"must be an integer >= 1, got {self.d!r}")
        _positive("L", self.side)
        object.__setattr__(self, "side", float(self.side))
        object.__setattr__(self, "boundary", Boundary(self.boundary))

    @property
    def volume(self) -> float:
        return self.side ** self.d


def as_exact(value) -> Fraction | None:
    """Exact rational view of ``value`` if it was supplied exactly."""
    if isinstance(value, (int, Fraction)) and not isinstance(value, bool):
        return Fraction(value)
    return None
