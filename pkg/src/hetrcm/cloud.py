"""Marked Poisson clouds in a box, plain and Palm-conditioned.

Random keys (see :mod:`hetrcm.rng`):

* ``(seed, "count")`` gives the Poisson particle count by inversion;
* ``(seed, "cloud", i, c)`` for ``c < d`` gives coordinate ``c`` of the
  i-th generated particle, and ``c = d`` its weight;
* ``(seed, "palm")`` gives the weight of the extra particle at the origin.

A Palm cloud is the plain cloud of the same seed with the origin particle
prepended, so ``palm.positions[1:]`` equals ``plain.positions`` exactly.
"""
from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import stats

from . import rng
from .errors import CapacityError, DomainError
from .params import Boundary, BoxDomain, ModelParams, max_particles


def sample_pareto(tau: float, u):
    """Inverse-CDF draw from Pareto(1, tau): returns (1 - u)**(-1/tau)."""
    arr = np.asarray(u, dtype=float)
    if not np.all((arr > 0) & (arr < 1)):
        raise DomainError("uniform variates must lie strictly inside (0, 1)")
    w = np.exp(-np.log1p(-arr) / tau)
    return float(w) if w.ndim == 0 else w


@dataclass(frozen=True)
class Particle:
    id: int
    position: np.ndarray
    weight: float


@dataclass(frozen=True, eq=False)
class PointCloud:
    params: ModelParams
    domain: BoxDomain
    positions: np.ndarray  # (n, d)
    weights: np.ndarray  # (n,)
    seed: int
    palm: bool = False

    def __post_init__(self):
        self.positions.setflags(write=False)
        self.weights.setflags(write=False)

    def __len__(self) -> int:
        return self.weights.shape[0]

    def __getitem__(self, i: int) -> Particle:
        return Particle(int(i), self.positions[i], float(self.weights[i]))

    @property
    def particles(self) -> list[Particle]:
        return [self[i] for i in range(len(self))]

    def same_as(self, other: "PointCloud") -> bool:
        return (self.params == other.params and self.domain == other.domain
                and self.seed == other.seed and self.palm == other.palm
                and np.array_equal(self.positions, other.positions)
                and np.array_equal(self.weights, other.weights))


def poisson_count(mean: float, u) -> np.ndarray:
    """Poisson(mean) variates by inversion of the given uniforms."""
    return stats.poisson.ppf(u, mean).astype(np.int64)


def _check_budget(expected: float) -> None:
    budget = max_particles()
    if expected > budget:
        raise CapacityError(
            f"expected particle count nu*L^d = {expected:.6g} exceeds the budget of "
            f"{budget} (set RCM_MAX_PARTICLES to raise it)"
        )


def _particles(params: ModelParams, domain: BoxDomain, seed, n: int):
    d, side = domain.d, domain.side
    idx = np.arange(n, dtype=np.uint64)
    lanes = np.arange(d + 1, dtype=np.uint64)
    u = rng.uniform(np.uint64(seed), "cloud", idx[:, None], lanes[None, :])
    pos = side * (u[:, :d] - 0.5)
    # keep the half-open box [-L/2, L/2) under rounding
    np.minimum(pos, np.nextafter(side / 2, -np.inf), out=pos)
    weights = sample_pareto(float(params.tau), u[:, d]) if n else np.empty(0)
    return pos, np.atleast_1d(weights)


def sample_cloud(params: ModelParams, domain: BoxDomain, seed: int) -> PointCloud:
    """Homogeneous Poisson cloud of intensity nu with i.i.d. Pareto weights."""
    seed = rng.check_seed(seed)
    if domain.d != params.d:
        raise DomainError(f"domain dimension {domain.d} != model dimension {params.d}")
    mean = float(params.nu) * domain.volume
    _check_budget(mean)
    n = int(poisson_count(mean, rng.uniform(np.uint64(seed), "count")))
    if n > max_particles():
        raise CapacityError(f"sampled {n} particles, above the budget {max_particles()}")
    pos, w = _particles(params, domain, seed, n)
    return PointCloud(params, domain, pos, w, seed, palm=False)


def sample_palm_cloud(params: ModelParams, domain: BoxDomain, seed: int) -> PointCloud:
    """Plain cloud plus an independent-weight particle at the exact origin (index 0)."""
    base = sample_cloud(params, domain, seed)
    w0 = sample_pareto(float(params.tau), rng.uniform(np.uint64(base.seed), "palm"))
    pos = np.vstack([np.zeros((1, domain.d)), base.positions])
    w = np.concatenate([[w0], base.weights])
    return PointCloud(params, domain, pos, w, base.seed, palm=True)


def displacement(domain: BoxDomain, a, b) -> np.ndarray:
    """Componentwise b - a, using the minimum image on a torus."""
    diff = np.asarray(b, dtype=float) - np.asarray(a, dtype=float)
    if domain.boundary is Boundary.TORUS:
        side = domain.side
        diff = diff - side * np.round(diff / side)
    return diff


def distance(domain: BoxDomain, a, b):
    """Euclidean (free) or minimum-image (torus) distance; broadcasts over leading axes."""
    diff = displacement(domain, a, b)
    r = np.sqrt(np.sum(diff * diff, axis=-1))
    return float(r) if np.ndim(r) == 0 else r


# --- text serialization -------------------------------------------------------

def _fmt(x: float) -> str:
    return repr(float(x))


def write_cloud(cloud: PointCloud, dest) -> None:
    """Write ``d nu lambda alpha tau L boundary seed palm`` then ``id x_1 .. x_d weight`` rows."""
    p, dom = cloud.params, cloud.domain
    lines = [" ".join([str(p.d), _fmt(p.nu), _fmt(p.lam), _fmt(p.alpha), _fmt(p.tau),
                       _fmt(dom.side), dom.boundary.value, str(cloud.seed),
                       "1" if cloud.palm else "0"])]
    for i in range(len(cloud)):
        coords = " ".join(_fmt(x) for x in cloud.positions[i])
        lines.append(f"{i} {coords} {_fmt(cloud.weights[i])}")
    text = "\n".join(lines) + "\n"
    if isinstance(dest, (str, Path)):
        Path(dest).write_text(text, encoding="utf-8")
    else:
        dest.write(text)


def read_cloud(src) -> PointCloud:
    """Parse the format written by :func:`write_cloud` (path, file object or text)."""
    if isinstance(src, Path) or (isinstance(src, str) and "\n" not in src):
        text = Path(src).read_text(encoding="utf-8")
    elif isinstance(src, io.IOBase):
        text = src.read()
    else:
        text = src
    rows = text.strip("\n").split("\n")
    head = rows[0].split()
    if len(head) != 9:
        raise ValueError(f"cloud header needs 9 fields, got {len(head)}")
    d = int(head[0])
    params = ModelParams(d, float(head[1]), float(head[2]), float(head[3]), float(head[4]))
    domain = BoxDomain(d, float(head[5]), Boundary(head[6]))
    seed, palm = int(head[7]), head[8] == "1"
    n = len(rows) - 1
    pos = np.empty((n, d))
    w = np.empty(n)
    for k, row in enumerate(rows[1:]):
        fields = row.split()
        if len(fields) != d + 2 or int(fields[0]) != k:
            raise ValueError(f"malformed particle row {k}: {row!r}")
        pos[k] = [float(x) for x in fields[1:d + 1]]
        w[k] = float(fields[d + 1])
    return PointCloud(params, domain, pos, w, seed, palm)
