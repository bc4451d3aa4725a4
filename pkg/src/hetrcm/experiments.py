"""Monte Carlo drivers: degree laws, tail exponents, spanning scans, site-bond lattice.

Replica ``r`` of a run with seed ``s`` uses the child seed
``derive_seed(s, "replica", r)`` for both its cloud and its pair uniforms,
so every replica can be recomputed in isolation.  Replicas are processed
in fixed-size chunks whose boundaries do not depend on the worker count,
which keeps results bit-identical for any ``workers``.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import product

import numpy as np
from scipy import stats

from . import rng
from .analytic import Regime, classify_regime, degree_pmf_table
from .cloud import poisson_count, sample_palm_cloud, sample_pareto
from .errors import (CapacityError, InsufficientTailError, ParameterError, RegimeError,
                     TrendUndefinedError)
from .graph import UnionFind, _edge_probability, build_graph_family, components
from .params import Boundary, BoxDomain, ModelParams, max_particles

DEGREE_CHUNK = 1000
SCAN_CHUNK = 4


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _csv(header: list[str], rows) -> str:
    lines = [",".join(header)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def _map_chunks(fn, tasks: list[tuple], workers: int) -> list:
    if workers <= 1 or len(tasks) <= 1:
        return [fn(*t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
        return list(pool.map(fn, *zip(*tasks)))


def _chunks(total: int, size: int) -> list[tuple[int, int]]:
    return [(a, min(a + size, total)) for a in range(0, total, size)]


def replica_seeds(seed: int, r0: int, r1: int) -> np.ndarray:
    return rng.hash64(np.uint64(seed), "replica", np.arange(r0, r1, dtype=np.uint64))


# --- degree study -----------------------------------------------------------------

@dataclass
class DegreeStudyResult:
    params: ModelParams
    side: float
    replicas: int
    seed: int
    degrees: np.ndarray = field(repr=False)
    histogram: np.ndarray = field(repr=False)  # counts for k = 0..max degree
    analytic_pmf: np.ndarray = field(repr=False)
    tv_distance: float = 0.0
    mean: float = 0.0
    stderr: float = 0.0

    @property
    def empirical_pmf(self) -> np.ndarray:
        return self.histogram / self.replicas

    def csv(self) -> str:
        rows = [(k, int(c), c / self.replicas, a)
                for k, (c, a) in enumerate(zip(self.histogram, self.analytic_pmf))]
        return _csv(["k", "count", "empirical_p", "analytic_p"], rows)

    def summary(self) -> dict:
        return {"experiment": "degree", "params": self.params.as_dict(), "L": self.side,
                "R": self.replicas, "seed": self.seed, "mean": self.mean,
                "stderr": self.stderr, "tv_distance": self.tv_distance,
                "max_degree": len(self.histogram) - 1}


def _palm_degrees(params: ModelParams, side: float, seed: int, r0: int, r1: int) -> np.ndarray:
    """Origin degrees of replicas r0..r1-1 in one vectorised pass.

    Reproduces ``palm_degree(build_graph inputs)`` of each replica exactly:
    same keys, same arithmetic, same operation order.
    """
    d = params.d
    seeds = replica_seeds(seed, r0, r1)
    counts = poisson_count(float(params.nu) * side ** d, rng.uniform(seeds, "count"))
    if counts.max(initial=0) > max_particles():
        raise CapacityError(f"a replica drew {counts.max()} particles, above the budget")
    owner = np.repeat(np.arange(seeds.size), counts)
    ends = np.cumsum(counts)
    gen = np.arange(ends[-1] if ends.size else 0) - np.repeat(ends - counts, counts)
    gen = gen.astype(np.uint64)
    lanes = np.arange(d + 1, dtype=np.uint64)
    u = rng.uniform(seeds[owner][:, None], "cloud", gen[:, None], lanes[None, :])
    pos = side * (u[:, :d] - 0.5)
    np.minimum(pos, np.nextafter(side / 2, -np.inf), out=pos)
    w = sample_pareto(float(params.tau), u[:, d]) if u.shape[0] else np.empty(0)
    w0 = np.atleast_1d(sample_pareto(float(params.tau), rng.uniform(seeds, "palm")))
    r2 = None
    for c in range(d):
        diff = pos[:, c] - 0.0
        diff = diff - side * np.round(diff / side)
        r2 = diff * diff if r2 is None else r2 + diff * diff
    if r2 is None or r2.size == 0:
        return np.zeros(seeds.size, dtype=np.int64)
    p = _edge_probability(params, w0[owner], np.atleast_1d(w), r2)
    hit = rng.uniform(seeds[owner], "edge", np.uint64(0), gen + np.uint64(1)) < p
    return np.bincount(owner[hit], minlength=seeds.size).astype(np.int64)


def total_variation(empirical: np.ndarray, analytic: np.ndarray) -> float:
    """TV distance; analytic mass beyond the last empirical bin counts in full."""
    diff = np.abs(empirical - analytic[: empirical.size]).sum()
    rest = max(0.0, 1.0 - analytic[: empirical.size].sum())
    return float(min(1.0, 0.5 * (diff + rest)))


def run_degree_study(params: ModelParams, side: float, replicas: int, seed: int,
                     workers: int = 1) -> DegreeStudyResult:
    """Degree of the origin particle over ``replicas`` Palm clouds on a torus."""
    seed = rng.check_seed(seed)
    if classify_regime(params) is Regime.INFINITE_DEGREE:
        raise RegimeError(
            "degree study refused: min(alpha, tau*alpha) <= d, so the origin has infinitely "
            "many neighbours almost surely; a finite box would only show truncation artefacts",
            regime=Regime.INFINITE_DEGREE.value)
    if replicas < 1:
        raise ParameterError("R", "must be >= 1")
    BoxDomain(params.d, side, Boundary.TORUS)  # validates side
    tasks = [(params, float(side), seed, a, b) for a, b in _chunks(replicas, DEGREE_CHUNK)]
    degrees = np.concatenate(_map_chunks(_palm_degrees, tasks, workers))
    hist = np.bincount(degrees)
    pmf = degree_pmf_table(params, hist.size - 1)
    mean = float(degrees.mean())
    stderr = float(degrees.std(ddof=1) / math.sqrt(replicas)) if replicas > 1 else math.inf
    return DegreeStudyResult(params, float(side), replicas, seed, degrees, hist, pmf,
                             total_variation(hist / replicas, pmf), mean, stderr)


# --- tail exponent ----------------------------------------------------------------------

@dataclass
class TailFitResult:
    exponent: float
    n_min: int
    n_max: int
    stderr: float
    intercept: float
    target: float | None = None


def fit_tail_exponent(study, min_tail: int = 100, min_exceed: int = 30) -> TailFitResult:
    """Least-squares slope of log P[D > n] against log n.

    The window is fixed in advance: n_min is the empirical 90th percentile
    and n_max the largest n with at least ``min_exceed`` exceedances.
    Accepts a :class:`DegreeStudyResult` or a plain array of samples.
    """
    if isinstance(study, DegreeStudyResult):
        samples, target = study.degrees, study.params.tail_index
    else:
        samples, target = np.asarray(study), None
    samples = np.sort(samples.astype(np.int64))
    total = samples.size
    if total == 0:
        raise InsufficientTailError("no samples")
    n_min = max(1, int(np.quantile(samples, 0.9, method="inverted_cdf")))
    tail = total - np.searchsorted(samples, n_min, side="right")
    if tail < min_tail:
        raise InsufficientTailError(
            f"only {tail} samples exceed n_min = {n_min}; need at least {min_tail}")
    ns = np.arange(n_min, samples[-1] + 1)
    exceed = total - np.searchsorted(samples, ns, side="right")
    ok = ns[exceed >= min_exceed]
    n_max = int(ok.max()) if ok.size else n_min - 1
    if n_max <= n_min:
        raise InsufficientTailError(
            f"fit window [{n_min}, {n_max}] has fewer than two points")
    window = (ns >= n_min) & (ns <= n_max)
    fit = stats.linregress(np.log(ns[window]), np.log(exceed[window] / total))
    return TailFitResult(-float(fit.slope), n_min, n_max, float(fit.stderr),
                         float(fit.intercept), target)


# --- spanning scans -----------------------------------------------------------------------

@dataclass
class ThetaScanResult:
    params: ModelParams
    lambdas: list[float]
    side: float
    replicas: int
    seed: int
    spanning: np.ndarray = field(repr=False)  # (replicas, len(lambdas)) bool
    origin_sizes: np.ndarray = field(repr=False)  # (replicas, len(lambdas)) int
    nested: np.ndarray = field(repr=False)  # per replica: edge sets nested along the grid

    @property
    def spanning_freq(self) -> np.ndarray:
        return self.spanning.mean(axis=0)

    @property
    def origin_cluster_mean(self) -> np.ndarray:
        return self.origin_sizes.mean(axis=0)

    @property
    def monotone_per_replica(self) -> np.ndarray:
        span_ok = np.all(np.diff(self.spanning.astype(int), axis=1) >= 0, axis=1)
        size_ok = np.all(np.diff(self.origin_sizes, axis=1) >= 0, axis=1)
        return span_ok & size_ok & self.nested

    @property
    def monotone(self) -> bool:
        return bool(self.monotone_per_replica.all())

    def csv(self) -> str:
        rows = [(lam, f, m, self.replicas) for lam, f, m in
                zip(self.lambdas, self.spanning_freq, self.origin_cluster_mean)]
        return _csv(["lambda", "spanning_freq", "origin_cluster_mean", "replicas"], rows)

    def summary(self) -> dict:
        return {"experiment": "theta", "params": self.params.as_dict(), "L": self.side,
                "R": self.replicas, "seed": self.seed, "lambdas": self.lambdas,
                "monotone": self.monotone,
                "monotone_violations": int((~self.monotone_per_replica).sum())}


def _edges_nested(small: np.ndarray, big: np.ndarray, n: int) -> bool:
    a = small[:, 0] * n + small[:, 1]
    b = big[:, 0] * n + big[:, 1]
    return bool(np.isin(a, b).all())


def _scan_chunk(params, lambdas, side, seed, r0, r1, face_band, epsilon):
    domain = BoxDomain(params.d, side, Boundary.FREE)
    span = np.zeros((r1 - r0, len(lambdas)), dtype=bool)
    sizes = np.zeros((r1 - r0, len(lambdas)), dtype=np.int64)
    nested = np.ones(r1 - r0, dtype=bool)
    for k, s in enumerate(replica_seeds(seed, r0, r1)):
        cloud = sample_palm_cloud(params, domain, int(s))
        family = build_graph_family(params, cloud, int(s), lambdas, epsilon)
        for m, g in enumerate(family):
            st = components(g, face_band)
            span[k, m] = st.spanning
            sizes[k, m] = st.origin_cluster_size
            if m and not _edges_nested(family[m - 1].edges, g.edges, len(cloud)):
                nested[k] = False
    return span, sizes, nested


def run_theta_scan(params: ModelParams, lambdas, side: float, replicas: int, seed: int,
                   *, face_band: float = 1.0, epsilon: float = 0.0,
                   workers: int = 1) -> ThetaScanResult:
    """Spanning frequency of the origin cluster along an ascending lambda grid.

    Each replica draws one free-boundary Palm cloud and one set of pair
    uniforms, reused for every lambda, so per replica the graphs are nested
    and spanning can only switch on as lambda grows.
    """
    seed = rng.check_seed(seed)
    lambdas = [float(x) for x in lambdas]
    if not lambdas or any(b < a for a, b in zip(lambdas, lambdas[1:])):
        raise ParameterError("lambdas", "grid must be nonempty and ascending")
    if any(x <= 0 for x in lambdas):
        raise ParameterError("lambdas", "values must be > 0")
    if replicas < 1:
        raise ParameterError("R", "must be >= 1")
    tasks = [(params, lambdas, float(side), seed, a, b, face_band, epsilon)
             for a, b in _chunks(replicas, SCAN_CHUNK)]
    parts = _map_chunks(_scan_chunk, tasks, workers)
    span = np.concatenate([p[0] for p in parts])
    sizes = np.concatenate([p[1] for p in parts])
    nested = np.concatenate([p[2] for p in parts])
    return ThetaScanResult(params, lambdas, float(side), replicas, seed, span, sizes, nested)


@dataclass
class FiniteSizeReport:
    params: ModelParams
    lam: float
    sides: list[float]
    replicas: int
    seed: int
    spanning_freq: list[float]
    stderr: list[float]
    regime: Regime
    expected_trend: str | None  # "nondecreasing", "nonincreasing" or None

    @property
    def differences(self) -> list[tuple[float, float]]:
        """(freq[k+1] - freq[k], joint standard error) for consecutive sides."""
        out = []
        for k in range(len(self.sides) - 1):
            joint = math.hypot(self.stderr[k], self.stderr[k + 1])
            out.append((self.spanning_freq[k + 1] - self.spanning_freq[k], joint))
        return out

    @property
    def direction(self) -> str:
        diffs = [d for d, _ in self.differences]
        if all(d >= 0 for d in diffs):
            return "nondecreasing"
        if all(d <= 0 for d in diffs):
            return "nonincreasing"
        return "mixed"

    def consistent(self, n_se: float = 2.0) -> bool | None:
        """Whether every step agrees with the regime's expected trend within n_se joint SE."""
        if self.expected_trend is None:
            return None
        if self.expected_trend == "nondecreasing":
            return all(d >= -n_se * se for d, se in self.differences)
        return all(d <= n_se * se for d, se in self.differences)

    def csv(self) -> str:
        rows = [(L, self.lam, f, se) for L, f, se in zip(self.sides, self.spanning_freq, self.stderr)]
        return _csv(["L", "lambda", "spanning_freq", "stderr"], rows)

    def summary(self) -> dict:
        return {"experiment": "fss", "params": self.params.as_dict(), "lambda": self.lam,
                "sides": self.sides, "R": self.replicas, "seed": self.seed,
                "regime": self.regime.value, "direction": self.direction,
                "expected_trend": self.expected_trend, "consistent_2se": self.consistent()}


_EXPECTED_TREND = {
    Regime.LAMBDA_C_ZERO: "nondecreasing",
    Regime.LAMBDA_C_INFINITE: "nonincreasing",
}


def run_finite_size_contrast(params: ModelParams, lam: float, sides, replicas: int, seed: int,
                             *, face_band: float = 1.0, epsilon: float = 0.0,
                             workers: int = 1) -> FiniteSizeReport:
    """Spanning frequency at one lambda across box sides, with binomial standard errors.

    Sides use independent seeds ``derive_seed(seed, "side", k)``.
    """
    seed = rng.check_seed(seed)
    sides = [float(x) for x in sides]
    if len(sides) < 2:
        raise TrendUndefinedError("a finite-size trend needs at least two box sides")
    freqs, ses = [], []
    for k, side in enumerate(sides):
        scan = run_theta_scan(params, [lam], side, replicas, rng.derive_seed(seed, "side", k),
                              face_band=face_band, epsilon=epsilon, workers=workers)
        f = float(scan.spanning_freq[0])
        freqs.append(f)
        ses.append(math.sqrt(f * (1 - f) / replicas))
    regime = classify_regime(params)
    return FiniteSizeReport(params, float(lam), sides, replicas, seed, freqs, ses, regime,
                            _EXPECTED_TREND.get(regime))


# --- site-bond renormalisation ------------------------------------------------------------

ADJACENCIES = ("face", "moore")


def neighbour_cube_distance(n: float, d: int, adjacency: str = "face") -> float:
    """Largest distance between points of two neighbouring side-n cubes.

    Face-adjacent cubes span 2n along one axis and n along the others,
    giving n sqrt(d + 3); with diagonal (Moore) neighbours it is 2n sqrt(d).
    """
    if adjacency == "face":
        return n * math.sqrt(d + 3)
    if adjacency == "moore":
        return n * math.sqrt(4 * d)
    raise ParameterError("adjacency", f"expected one of {ADJACENCIES}, got {adjacency!r}")


@dataclass
class SiteBondReport:
    params: ModelParams
    cube_side: float
    extent: int
    adjacency: str
    r: float
    p_site: float
    p_bond: float
    replicas: int
    seed: int
    spanning_freq: float
    stderr: float

    def csv(self) -> str:
        row = (self.cube_side, self.extent, self.adjacency, self.p_site, self.p_bond,
               self.r, self.spanning_freq, self.stderr, self.replicas)
        header = ["n", "extent", "adjacency", "p_site", "p_bond", "r",
                  "spanning_freq", "stderr", "replicas"]
        return ",".join(header) + "\n" + ",".join(
            v if isinstance(v, str) else _fmt(v) for v in row) + "\n"

    def summary(self) -> dict:
        return {"experiment": "sitebond", "params": self.params.as_dict(), "n": self.cube_side,
                "extent": self.extent, "adjacency": self.adjacency, "r": self.r,
                "p_site": self.p_site, "p_bond": self.p_bond, "R": self.replicas,
                "seed": self.seed, "spanning_freq": self.spanning_freq, "stderr": self.stderr}


def _lattice_offsets(d: int, adjacency: str) -> np.ndarray:
    if adjacency == "face":
        return np.eye(d, dtype=np.int64)
    offs = [o for o in product((-1, 0, 1), repeat=d)
            if any(o) and next(x for x in o if x) > 0]
    return np.array(offs, dtype=np.int64)


def _site_bond_spans(d, extent, adjacency, p_site, p_bond, seed) -> bool:
    shape = (extent,) * d
    n_sites = extent ** d
    idx = np.arange(n_sites, dtype=np.uint64)
    open_site = rng.uniform(np.uint64(seed), "site", idx) < p_site
    coords = np.stack(np.unravel_index(np.arange(n_sites), shape), axis=1)
    uf = UnionFind(n_sites)
    for k, off in enumerate(_lattice_offsets(d, adjacency)):
        nb = coords + off
        inside = np.all((nb >= 0) & (nb < extent), axis=1)
        a = np.flatnonzero(inside)
        b = np.ravel_multi_index(nb[inside].T, shape)
        both = open_site[a] & open_site[b]
        bond = rng.uniform(np.uint64(seed), "bond", a.astype(np.uint64), np.uint64(k)) < p_bond
        for i, j in zip(a[both & bond].tolist(), b[both & bond].tolist()):
            uf.union(i, j)
    roots = uf.roots()
    left = roots[(coords[:, 0] == 0) & open_site]
    right = roots[(coords[:, 0] == extent - 1) & open_site]
    return bool(np.intersect1d(left, right).size)


def site_bond_renormalization(params: ModelParams, n: float, extent: int, seed: int,
                              replicas: int = 100, adjacency: str = "face") -> SiteBondReport:
    """Site-bond percolation on Z^d that the continuum graph dominates.

    Cubes of side n are open with probability 1 - exp(-nu n^d) (at least one
    particle); bonds between open neighbouring cubes are open with
    probability 1 - exp(-lambda r^-alpha), the minimum edge probability
    between particles of neighbouring cubes (all weights are >= 1).
    Spanning means an open cluster joins the two faces orthogonal to axis 0.
    """
    seed = rng.check_seed(seed)
    if not n > 0:
        raise ParameterError("n", "cube side must be > 0")
    if extent < 1:
        raise ParameterError("extent", "must be >= 1")
    d = params.d
    r = neighbour_cube_distance(n, d, adjacency)
    p_site = -math.expm1(-float(params.nu) * n ** d)
    p_bond = -math.expm1(-float(params.lam) * r ** (-float(params.alpha)))
    hits = [
        _site_bond_spans(d, extent, adjacency, p_site, p_bond, int(s))
        for s in replica_seeds(seed, 0, replicas)
    ]
    f = sum(hits) / replicas
    return SiteBondReport(params, float(n), extent, adjacency, r, p_site, p_bond, replicas,
                          seed, f, math.sqrt(f * (1 - f) / replicas))
