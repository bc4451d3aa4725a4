"""Run configuration: flat ``key = value`` files mirrored by long command-line flags."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .errors import ParameterError
from .params import Boundary, BoxDomain, ModelParams


class UnknownKeyError(ParameterError):
    kind = "unknown_key"


class TypeMismatchError(ParameterError):
    kind = "type_mismatch"


class ConstraintError(ParameterError):
    kind = "constraint"


EXPERIMENTS = ("analytic", "degree", "theta", "fss", "sitebond", "validate")


@dataclass
class RunConfig:
    d: int = 1
    nu: Fraction | float = Fraction(1)
    lam: Fraction | float = Fraction(1)
    alpha: Fraction | float = Fraction(2)
    tau: Fraction | float = Fraction(3)
    L: float = 100.0
    boundary: str | None = None  # experiment default when unset
    experiment: str | None = None
    R: int = 1000
    lambdas: list[float] = field(default_factory=list)
    sides: list[float] = field(default_factory=list)
    epsilon: float = 0.0
    n: float = 1.0
    extent: int = 32
    adjacency: str = "face"
    face_band: float = 1.0
    kmax: int = 20
    abs_tol: float = 1e-13
    rel_tol: float = 1e-11
    max_subdivisions: int = 200
    seed: int = 0
    out: str = "."
    workers: int = 1

    @property
    def params(self) -> ModelParams:
        return ModelParams(self.d, self.nu, self.lam, self.alpha, self.tau)

    def domain(self, default: Boundary) -> BoxDomain:
        return BoxDomain(self.d, self.L, Boundary(self.boundary or default))

    def provenance(self) -> dict:
        """Effective configuration minus execution-only knobs (out, workers)."""
        out = {}
        for f in dataclasses.fields(self):
            if f.name in ("out", "workers"):
                continue
            value = getattr(self, f.name)
            if isinstance(value, Fraction):
                value = float(value)
            out[_KEY_OF.get(f.name, f.name)] = value
        return out


# config key -> dataclass attribute
_ATTR = {"lambda": "lam"}
_KEY_OF = {v: k for k, v in _ATTR.items()}

_INT = {"d", "R", "extent", "kmax", "max_subdivisions", "seed", "workers"}
_EXACT = {"nu", "lambda", "alpha", "tau"}
_REAL = {"L", "epsilon", "n", "face_band", "abs_tol", "rel_tol"}
_LIST = {"lambdas", "sides"}
_STR = {"boundary", "experiment", "adjacency", "out"}
KEYS = _INT | _EXACT | _REAL | _LIST | _STR


def _real(key: str, raw: str) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise TypeMismatchError(key, f"expected a real number, got {raw!r}") from None
    return value


def _exact(key: str, raw: str) -> Fraction:
    try:
        return Fraction(raw.strip())
    except (ValueError, ZeroDivisionError):
        raise TypeMismatchError(key, f"expected a real number or p/q rational, got {raw!r}") from None


def _int(key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise TypeMismatchError(key, f"expected an integer, got {raw!r}") from None


def coerce(key: str, raw: str):
    """Parse one textual value for ``key``."""
    if key not in KEYS:
        raise UnknownKeyError(key, "unknown configuration key")
    raw = raw.strip()
    if key in _INT:
        return _int(key, raw)
    if key in _EXACT:
        return _exact(key, raw)
    if key in _REAL:
        return _real(key, raw)
    if key in _LIST:
        return [_real(key, x) for x in raw.split(",") if x.strip()]
    return raw


def read_config_file(path) -> dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise TypeMismatchError(f"line {lineno}", f"expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in KEYS:
            raise UnknownKeyError(key, f"unknown configuration key (line {lineno})")
        values[key] = raw
    return values


def validate(cfg: RunConfig) -> RunConfig:
    try:
        cfg.params  # noqa: B018 - raises on invalid model parameters
    except ParameterError as exc:
        raise ConstraintError(_KEY_OF.get(exc.field, exc.field), str(exc).split(": ", 1)[-1]) from None
    positive = {"L": cfg.L, "n": cfg.n, "face_band": cfg.face_band,
                "abs_tol": cfg.abs_tol, "rel_tol": cfg.rel_tol}
    for key, value in positive.items():
        if not value > 0:
            raise ConstraintError(key, f"must be > 0, got {value}")
    for key in ("R", "extent", "kmax", "max_subdivisions", "workers"):
        if getattr(cfg, key) < (0 if key == "kmax" else 1):
            raise ConstraintError(key, f"out of range: {getattr(cfg, key)}")
    if not 0 <= cfg.seed < 2**64:
        raise ConstraintError("seed", "must lie in [0, 2**64)")
    if not 0 <= cfg.epsilon < 1:
        raise ConstraintError("epsilon", f"must lie in [0, 1), got {cfg.epsilon}")
    if cfg.boundary is not None and cfg.boundary not in ("torus", "free"):
        raise ConstraintError("boundary", f"expected 'torus' or 'free', got {cfg.boundary!r}")
    if cfg.adjacency not in ("face", "moore"):
        raise ConstraintError("adjacency", f"expected 'face' or 'moore', got {cfg.adjacency!r}")
    if cfg.experiment is not None and cfg.experiment not in EXPERIMENTS:
        raise ConstraintError("experiment", f"expected one of {EXPERIMENTS}")
    if any(x <= 0 for x in cfg.lambdas):
        raise ConstraintError("lambdas", "values must be > 0")
    if any(b < a for a, b in zip(cfg.lambdas, cfg.lambdas[1:])):
        raise ConstraintError("lambdas", "grid must be ascending")
    if any(x <= 0 for x in cfg.sides):
        raise ConstraintError("sides", "values must be > 0")
    return cfg


def parse_config(path=None, overrides: dict[str, str] | None = None) -> RunConfig:
    """Build a validated RunConfig; ``overrides`` (from flags) beat file values."""
    raw: dict[str, str] = {}
    if path is not None:
        raw.update(read_config_file(path))
    for key, value in (overrides or {}).items():
        if value is not None:
            raw[key] = value
    cfg = RunConfig()
    for key, value in raw.items():
        setattr(cfg, _ATTR.get(key, key), coerce(key, value))
    return validate(cfg)
