"""Realisation of the random graph on a cloud, degrees and clusters.

Each unordered pair {i, j} (i < j) carries the uniform ``U_ij`` keyed by
``(seed, "edge", i, j)`` and is an edge iff ``U_ij < p_ij``.  Because
``U_ij`` does not depend on lambda, graphs built at lambda_1 <= lambda_2
from the same cloud and seed are nested.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import rng
from .cloud import PointCloud
from .errors import CapacityError, DegeneratePairError, DomainError
from .params import Boundary, ModelParams, max_pairs

ROW_BLOCK = 256


class UnionFind:
    """Disjoint-set forest with path compression and union by size."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n
        self.n_components = n

    def find(self, x: int) -> int:
        parent = self.parent
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb] or (self.size[ra] == self.size[rb] and rb < ra):
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        self.n_components -= 1
        return True

    def roots(self) -> np.ndarray:
        return np.array([self.find(i) for i in range(len(self.parent))], dtype=np.int64)


def connection_probability(params: ModelParams, w_x, w_y, r):
    """1 - exp(-lambda w_x w_y r**-alpha); broadcasts over arrays."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise DegeneratePairError("connection probability undefined at distance 0")
    x = float(params.lam) * np.asarray(w_x, dtype=float) * np.asarray(w_y, dtype=float) \
        * r ** (-float(params.alpha))
    p = -np.expm1(-x)
    return float(p) if p.ndim == 0 else p


def _squared_distance(cloud: PointCloud, i, j) -> np.ndarray:
    """|x_j - x_i|^2 with broadcasting; the one distance routine all builders share."""
    pos, side = cloud.positions, cloud.domain.side
    torus = cloud.domain.boundary is Boundary.TORUS
    r2 = None
    for c in range(cloud.domain.d):
        diff = pos[j, c] - pos[i, c]
        if torus:
            diff = diff - side * np.round(diff / side)
        r2 = diff * diff if r2 is None else r2 + diff * diff
    return r2


def _edge_probability(params: ModelParams, wi, wj, r2) -> np.ndarray:
    x = float(params.lam) * wi * wj * r2 ** (-0.5 * float(params.alpha))
    return -np.expm1(-x)


def _pair_probability(params: ModelParams, cloud: PointCloud, i, j) -> np.ndarray:
    r2 = _squared_distance(cloud, i, j)
    if np.any(r2 == 0):
        k = int(np.flatnonzero(np.ravel(r2 == 0))[0])
        raise DegeneratePairError(
            f"particles {np.ravel(np.broadcast_to(i, r2.shape))[k]} and "
            f"{np.ravel(np.broadcast_to(j, r2.shape))[k]} coincide")
    return _edge_probability(params, cloud.weights[i], cloud.weights[j], r2)


def pair_uniforms(seed: int, i, j) -> np.ndarray:
    return rng.uniform(np.uint64(seed), "edge", i, j)


@dataclass
class Graph:
    cloud: PointCloud
    params: ModelParams
    seed: int
    edges: np.ndarray  # (m, 2) int64, i < j, sorted
    degree: np.ndarray
    dsf: UnionFind = field(repr=False)
    epsilon: float = 0.0
    pairs_tested: int = 0
    pairs_skipped: int = 0

    @property
    def n(self) -> int:
        return len(self.cloud)

    @property
    def missed_edge_bound(self) -> float:
        """Upper bound on the expected number of edges lost to pruning."""
        return self.epsilon * self.pairs_skipped

    def edge_set(self) -> set[tuple[int, int]]:
        return {(int(i), int(j)) for i, j in self.edges}


def _finish(params, cloud, seed, edges, epsilon=0.0, tested=0) -> Graph:
    n = len(cloud)
    if edges.size:
        order = np.lexsort((edges[:, 1], edges[:, 0]))
        edges = edges[order]
    degree = np.bincount(edges.ravel(), minlength=n).astype(np.int64)
    dsf = UnionFind(n)
    for i, j in edges.tolist():
        dsf.union(i, j)
    total = n * (n - 1) // 2
    return Graph(cloud, params, seed, edges, degree, dsf, epsilon, tested, total - tested)


def _check_pairs(n: int) -> None:
    pairs = n * (n - 1) // 2
    if pairs > max_pairs():
        raise CapacityError(f"{pairs} candidate pairs exceed the budget {max_pairs()} "
                            f"(set RCM_MAX_PAIRS to raise it)")


def build_graph(params: ModelParams, cloud: PointCloud, seed: int) -> Graph:
    """Exact O(n^2) realisation: every pair is tested."""
    seed = rng.check_seed(seed)
    n = len(cloud)
    _check_pairs(n)
    w = cloud.weights
    chunks = []
    for start in range(0, max(n - 1, 0), ROW_BLOCK):
        rows = np.arange(start, min(start + ROW_BLOCK, n - 1))
        cols = np.arange(start + 1, n)
        upper = cols[None, :] > rows[:, None]
        r2 = _squared_distance(cloud, rows[:, None], cols[None, :])
        if np.any(upper & (r2 == 0)):
            i, j = np.argwhere(upper & (r2 == 0))[0]
            raise DegeneratePairError(f"particles {rows[i]} and {cols[j]} coincide")
        r2[~upper] = 1.0
        p = _edge_probability(params, w[rows][:, None], w[cols][None, :], r2)
        hit = upper & (pair_uniforms(seed, rows[:, None], cols[None, :]) < p)
        r_idx, c_idx = np.nonzero(hit)
        chunks.append(np.stack([rows[r_idx], cols[c_idx]], axis=1))
    edges = np.concatenate(chunks) if chunks else np.empty((0, 2), dtype=np.int64)
    return _finish(params, cloud, seed, edges.astype(np.int64), 0.0, n * (n - 1) // 2)


def _grid(cloud: PointCloud, target_occupancy: float = 2.0) -> tuple[int, float, np.ndarray]:
    n, d, side = len(cloud), cloud.domain.d, cloud.domain.side
    m = int(math.floor((max(n, 1) / target_occupancy) ** (1.0 / d)))
    m = max(1, min(m, 512))
    h = side / m
    cell = np.floor((cloud.positions + side / 2) / h).astype(np.int64)
    np.clip(cell, 0, m - 1, out=cell)
    return m, h, cell


def _ragged_range(starts: np.ndarray, lengths: np.ndarray) -> np.ndarray:
    """Concatenation of arange(s, s + l) over the given (s, l) pairs."""
    ends = np.cumsum(lengths)
    return np.repeat(starts - ends + lengths, lengths) + np.arange(ends[-1] if ends.size else 0)


def build_graph_fast(params: ModelParams, cloud: PointCloud, seed: int,
                     epsilon: float = 0.0) -> Graph:
    """Cell-list realisation that skips pairs whose edge probability is provably < epsilon.

    Particles are binned into a uniform grid.  For a pair of cells with
    minimum separation g and maximum weights a, b, every particle pair
    satisfies p_ij <= lambda a b g**-alpha; the whole cell pair is skipped
    when that bound is below epsilon.  Tested pairs use the same uniforms as
    :func:`build_graph`, so ``epsilon = 0`` reproduces it exactly.
    """
    seed = rng.check_seed(seed)
    if not 0.0 <= epsilon < 1.0:
        raise DomainError(f"epsilon must lie in [0, 1), got {epsilon}")
    n, d = len(cloud), cloud.domain.d
    if n < 2:
        return _finish(params, cloud, seed, np.empty((0, 2), dtype=np.int64), epsilon, 0)
    m, h, cell = _grid(cloud)
    flat = np.ravel_multi_index(cell.T, (m,) * d)
    order = np.argsort(flat, kind="stable")
    n_cells = m ** d
    starts = np.searchsorted(flat[order], np.arange(n_cells + 1))
    wmax = np.zeros(n_cells)
    np.maximum.at(wmax, flat, cloud.weights)
    coords = np.stack(np.unravel_index(np.arange(n_cells), (m,) * d), axis=1)
    nonempty = np.flatnonzero(starts[1:] > starts[:-1])
    torus = cloud.domain.boundary is Boundary.TORUS
    lam, alpha = float(params.lam), float(params.alpha)

    chunks = []
    tested = 0
    budget = max_pairs()
    for a in nonempty:
        others = nonempty[nonempty >= a]
        steps = np.abs(coords[others] - coords[a])
        if torus:
            steps = np.minimum(steps, m - steps)
        gap = np.maximum(steps - 1, 0) * h
        g = np.sqrt(np.sum(gap * gap, axis=1))
        with np.errstate(divide="ignore"):
            bound = np.where(g > 0, lam * wmax[a] * wmax[others] * g ** (-alpha), np.inf)
        keep = others[bound >= epsilon] if epsilon > 0 else others
        ia = order[starts[a]:starts[a + 1]]
        r, c = np.triu_indices(ia.size, k=1)
        i_parts, j_parts = [ia[r]], [ia[c]]
        keep = keep[keep != a]
        if keep.size:
            jb = order[_ragged_range(starts[keep], starts[keep + 1] - starts[keep])]
            i_parts.append(np.repeat(ia, jb.size))
            j_parts.append(np.tile(jb, ia.size))
        i = np.concatenate(i_parts)
        j = np.concatenate(j_parts)
        if not i.size:
            continue
        i, j = np.minimum(i, j), np.maximum(i, j)
        tested += i.size
        if tested > budget:
            raise CapacityError(f"tested pair count exceeds the budget {budget}")
        hit = pair_uniforms(seed, i, j) < _pair_probability(params, cloud, i, j)
        chunks.append(np.stack([i[hit], j[hit]], axis=1))
    edges = np.concatenate(chunks) if chunks else np.empty((0, 2), dtype=np.int64)
    return _finish(params, cloud, seed, edges.astype(np.int64), epsilon, tested)


def build_graph_family(params: ModelParams, cloud: PointCloud, seed: int,
                       lambdas, epsilon: float = 0.0) -> list[Graph]:
    """Graphs for every lambda in ``lambdas`` sharing one set of pair uniforms.

    The largest-lambda graph is built once; each smaller lambda keeps the
    subset of its edges with U_ij < p_ij(lambda).  By the coupling this is
    exactly what :func:`build_graph` returns at that lambda.
    """
    lambdas = [float(x) for x in lambdas]
    top = params.with_lambda(max(lambdas))
    if epsilon > 0:
        big = build_graph_fast(top, cloud, seed, epsilon)
    else:
        big = build_graph(top, cloud, seed)
    i, j = big.edges[:, 0], big.edges[:, 1]
    r2 = _squared_distance(cloud, i, j)
    u = pair_uniforms(big.seed, i, j)
    out = []
    for lam in lambdas:
        sub = params.with_lambda(lam)
        p = _edge_probability(sub, cloud.weights[i], cloud.weights[j], r2)
        g = _finish(sub, cloud, big.seed, big.edges[u < p], big.epsilon, big.pairs_tested)
        out.append(g)
    return out


def palm_degree(params: ModelParams, cloud: PointCloud, seed: int) -> int:
    """Degree of particle 0 alone, identical to ``build_graph(...).degree[0]``."""
    n = len(cloud)
    if n < 2:
        return 0
    j = np.arange(1, n)
    p = _pair_probability(params, cloud, 0, j)
    return int(np.count_nonzero(pair_uniforms(seed, 0, j) < p))


def degree_of(graph: Graph, pid: int) -> int:
    if not 0 <= pid < graph.n:
        raise KeyError(f"unknown particle id {pid}")
    return int(graph.degree[pid])


@dataclass
class ClusterStats:
    sizes: list[int]  # descending
    roots: np.ndarray  # component root per particle id
    origin_cluster_size: int | None = None
    spanning: bool | None = None  # free boundary, palm clouds only

    @property
    def n_components(self) -> int:
        return len(self.sizes)


def components(graph: Graph, face_band: float = 1.0) -> ClusterStats:
    """Connected components from the disjoint-set forest.

    On a free-boundary palm cloud the origin's component spans if, along
    some axis, it has particles within ``face_band`` of both opposite faces.
    """
    roots = graph.dsf.roots()
    counts = np.bincount(roots, minlength=graph.n)
    sizes = sorted(counts[counts > 0].tolist(), reverse=True)
    stats = ClusterStats(sizes, roots)
    cloud = graph.cloud
    if cloud.palm:
        members = roots == roots[0]
        stats.origin_cluster_size = int(members.sum())
        if cloud.domain.boundary is Boundary.FREE:
            stats.spanning = touches_opposite_faces(
                cloud.positions[members], cloud.domain.side, face_band)
    return stats


def canonical_partition(roots: np.ndarray) -> np.ndarray:
    """Relabel components by their smallest member id."""
    roots = np.asarray(roots)
    smallest = np.full(roots.size, roots.size, dtype=np.int64)
    np.minimum.at(smallest, roots, np.arange(roots.size))
    return smallest[roots]


def touches_opposite_faces(positions: np.ndarray, side: float, face_band: float) -> bool:
    lo = positions < -side / 2 + face_band
    hi = positions >= side / 2 - face_band
    return bool(np.any(lo.any(axis=0) & hi.any(axis=0)))


# --- exports -------------------------------------------------------------------

def _write(dest, text: str) -> None:
    if isinstance(dest, (str, Path)):
        Path(dest).write_text(text, encoding="utf-8")
    else:
        dest.write(text)


def write_edges(graph: Graph, dest) -> None:
    """One ``i j`` line per edge, lexicographically sorted."""
    _write(dest, "".join(f"{i} {j}\n" for i, j in graph.edges.tolist()))


def write_components(graph: Graph, dest) -> None:
    """One ``id component_root`` line per particle."""
    roots = graph.dsf.roots()
    _write(dest, "".join(f"{i} {r}\n" for i, r in enumerate(roots.tolist())))
