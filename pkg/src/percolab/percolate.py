"""Bernoulli bond sampling and union-find cluster analysis.

Sampling is a pure function of (spec, p, seed, replicate): edge ``e`` of
replicate ``rep`` is open iff ``uniform(stream_key(seed, rep), e) < p``.
Large complete graphs (edge count above ``graphs.DENSE_EDGE_CAP``) are
sampled sparsely instead: a Binomial draw for the number of open edges
followed by a uniform distinct-index draw, consuming the same keyed stream.
Either way the configuration is independent of iteration order and worker
count.

Clustering uses union-find with path halving and union by size, processing
open edges in canonical edge order, so the parent array itself is
deterministic, not just the partition.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numba import njit
from scipy.stats import binom

from . import rng
from .graphs import DENSE_EDGE_CAP, EdgeTable, GraphSpec, edge_list

#: largest expected open-edge count accepted on the sparse sampling path
SPARSE_OPEN_CAP = 1 << 24


class InvalidProbability(ValueError):
    pass


class RankOutOfRange(ValueError):
    pass


# ---------------------------------------------------------------------------
# kernels


@njit(cache=True, nogil=True, inline="always")
def _find(parent, a):
    while parent[a] != a:
        parent[a] = parent[parent[a]]
        a = parent[a]
    return a


@njit(cache=True, nogil=True, inline="always")
def _union(parent, size, a, b):
    ra = _find(parent, a)
    rb = _find(parent, b)
    if ra != rb:
        if size[ra] < size[rb]:
            ra, rb = rb, ra
        parent[rb] = ra
        size[ra] += size[rb]


@njit(cache=True, nogil=True)
def _flatten(parent):
    for v in range(parent.shape[0]):
        r = v
        while parent[r] != r:
            r = parent[r]
        w = v
        while parent[w] != r:
            nxt = parent[w]
            parent[w] = r
            w = nxt


@njit(cache=True, nogil=True)
def _union_edges(n, eu, ev):
    parent = np.arange(n)
    size = np.ones(n, np.int64)
    for i in range(eu.shape[0]):
        _union(parent, size, eu[i], ev[i])
    _flatten(parent)
    return parent


@njit(cache=True, nogil=True)
def _open_mask(E, p, key):
    out = np.empty(E, np.uint8)
    for e in range(E):
        out[e] = rng._uniform(key, np.uint64(e)) < p
    return out


@njit(cache=True, nogil=True)
def _cluster_dense(V, eu, ev, p, key):
    """Fused sample-and-union over the full edge table (dense path)."""
    parent = np.arange(V)
    size = np.ones(V, np.int64)
    for e in range(eu.shape[0]):
        if rng._uniform(key, np.uint64(e)) < p:
            _union(parent, size, eu[e], ev[e])
    _flatten(parent)
    return parent


@njit(cache=True, nogil=True)
def _chi_batch_dense(V, eu, ev, p, seed, rep0, R):
    """Per-replicate susceptibility samples sum(|C|^2)/V, dense path."""
    out = np.empty(R, np.float64)
    for i in range(R):
        key = rng._stream_key(seed, np.uint64(rep0 + i))
        parent = np.arange(V)
        size = np.ones(V, np.int64)
        for e in range(eu.shape[0]):
            if rng._uniform(key, np.uint64(e)) < p:
                _union(parent, size, eu[e], ev[e])
        acc = 0.0
        for v in range(V):
            if parent[v] == v:
                acc += size[v] * float(size[v])
        out[i] = acc / V
    return out


@njit(cache=True, nogil=True)
def _stats_batch_small(V, eu, ev, p, seed, rep0, R):
    """All replicates of a small graph at once.

    Returns (sizes, parents): sizes[i] holds the component sizes of
    replicate rep0+i sorted descending and zero-padded to V; parents[i] is
    the flattened union-find parent array.
    """
    sizes = np.zeros((R, V), np.int64)
    parents = np.empty((R, V), np.int64)
    for i in range(R):
        key = rng._stream_key(seed, np.uint64(rep0 + i))
        parent = np.arange(V)
        size = np.ones(V, np.int64)
        for e in range(eu.shape[0]):
            if rng._uniform(key, np.uint64(e)) < p:
                _union(parent, size, eu[e], ev[e])
        _flatten(parent)
        parents[i] = parent
        m = 0
        for v in range(V):
            if parent[v] == v:
                sizes[i, m] = size[v]
                m += 1
        sizes[i, :m] = -np.sort(-sizes[i, :m])
    return sizes, parents


# ---------------------------------------------------------------------------
# sampling


def _validate_p(p: float) -> float:
    p = float(p)
    if not 0.0 <= p <= 1.0 or p != p:
        raise InvalidProbability(f"p={p} not in [0, 1]")
    return p


def _choose_distinct(key, start: int, m: int, bound: int) -> tuple[np.ndarray, int]:
    """First m distinct values of the keyed uniform-int stream (sorted)."""
    chunks: list[np.ndarray] = []
    count = m + (m >> 4) + 16
    while True:
        chunks.append(rng._bounded_block(key, start, count, bound))
        start += count
        draws = np.concatenate(chunks) if len(chunks) > 1 else chunks[0]
        vals, first = np.unique(draws, return_index=True)
        if vals.shape[0] >= m:
            cutoff = np.partition(first, m - 1)[m - 1]
            return np.sort(vals[first <= cutoff]), start
        count = max(16, m - vals.shape[0] + (m >> 4))


def _open_edges(spec: GraphSpec, table: EdgeTable, p: float, key) -> np.ndarray:
    E = table.count
    if p == 0.0:
        return np.empty(0, np.int64)
    if table.dense:
        if p == 1.0:
            return np.arange(E, dtype=np.int64)
        return np.flatnonzero(_open_mask(E, p, key)).astype(np.int64)
    if E * p > SPARSE_OPEN_CAP:
        raise InvalidProbability(
            f"expected open count {E * p:.3g} exceeds sparse sampling cap "
            f"{SPARSE_OPEN_CAP}; p is far above any critical value for this size"
        )
    u0 = rng._uniform_block(key, 0, 1)[0]
    m = int(binom.ppf(u0, E, p))
    if m <= 0:
        return np.empty(0, np.int64)
    idx, _ = _choose_distinct(key, 1, m, E)
    return idx


@dataclass(frozen=True)
class BondConfig:
    """One sampled bond configuration (sorted open-edge index array)."""

    spec: GraphSpec
    p: float
    seed: int
    replicate: int
    open: np.ndarray = field(repr=False)

    @property
    def open_count(self) -> int:
        return int(self.open.shape[0])

    def hex_mask(self) -> str:
        """Debug dump: bitset over edge ids as hex (bit e = byte e//8, bit e%8)."""
        E = edge_list(self.spec).count
        buf = np.zeros((E + 7) // 8, dtype=np.uint8)
        np.bitwise_or.at(buf, self.open // 8, np.uint8(1) << (self.open % 8).astype(np.uint8))
        return buf.tobytes().hex()


def sample_bonds(spec: GraphSpec, p: float, seed: int, replicate: int = 0) -> BondConfig:
    """Sample each edge open independently with probability p."""
    p = _validate_p(p)
    table = edge_list(spec)
    key = rng.stream_key(seed, replicate)
    return BondConfig(spec, p, seed, replicate, _open_edges(spec, table, p, key))


def sample_parent(spec: GraphSpec, p: float, seed: int, replicate: int = 0) -> np.ndarray:
    """Flattened union-find parent array of a sampled configuration.

    Identical to ``cluster(sample_bonds(...)).root`` but fused, skipping the
    intermediate open-edge array on the dense path.
    """
    p = _validate_p(p)
    table = edge_list(spec)
    key = rng.stream_key(seed, replicate)
    V = spec.vertex_count
    if table.dense:
        return _cluster_dense(V, table.endpoints[:, 0], table.endpoints[:, 1], p, key)
    idx = _open_edges(spec, table, p, key)
    eu, ev = table.endpoints_of(idx)
    return _union_edges(V, eu, ev)


def sizes_from_parent(parent: np.ndarray) -> np.ndarray:
    """Component sizes, descending."""
    counts = np.bincount(parent, minlength=parent.shape[0])
    sizes = counts[counts > 0]
    sizes[::-1].sort()
    return sizes


def zgeq_from_sizes(sizes_desc: np.ndarray, ks) -> np.ndarray:
    """Z_{>=k} = number of vertices in components of size >= k, vectorized."""
    ks = np.asarray(ks, dtype=np.int64)
    prefix = np.concatenate([[0], np.cumsum(sizes_desc)])
    n_ge = np.searchsorted(-sizes_desc, -ks, side="right")
    return prefix[n_ge]


# ---------------------------------------------------------------------------
# labelings and cluster subgraphs


@dataclass(frozen=True)
class ClusterLabeling:
    """Union-find output: per-vertex root, ordered sizes, rank lookup.

    Equal-size clusters are ranked by their smallest contained vertex, so
    rank-i extraction is deterministic.
    """

    root: np.ndarray = field(repr=False)
    sizes_sorted: np.ndarray = field(repr=False)
    ranked_roots: np.ndarray = field(repr=False)

    @property
    def vertex_count(self) -> int:
        return int(self.root.shape[0])

    @property
    def n_clusters(self) -> int:
        return int(self.sizes_sorted.shape[0])

    def size_of(self, v: int) -> int:
        """Size of the cluster containing vertex v."""
        return int(self._sizes_by_root[self.root[v]])

    @cached_property
    def _sizes_by_root(self) -> np.ndarray:
        out = np.zeros(self.vertex_count, np.int64)
        out[self.ranked_roots] = self.sizes_sorted
        return out

    @cached_property
    def _prefix(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.sizes_sorted)])

    def z_geq(self, k: int) -> int:
        if k < 1:
            raise ValueError("k must be >= 1")
        n_ge = int(np.searchsorted(-self.sizes_sorted, -k, side="right"))
        return int(self._prefix[n_ge])


def labeling_from_parent(parent: np.ndarray) -> ClusterLabeling:
    V = parent.shape[0]
    counts = np.bincount(parent, minlength=V)
    roots = np.flatnonzero(counts)
    root_sizes = counts[roots]
    first_vertex = np.full(V, V, np.int64)
    np.minimum.at(first_vertex, parent, np.arange(V))
    order = np.lexsort((first_vertex[roots], -root_sizes))
    return ClusterLabeling(parent, root_sizes[order], roots[order])


def cluster(config: BondConfig) -> ClusterLabeling:
    """Connected components of the open subgraph."""
    table = edge_list(config.spec)
    eu, ev = table.endpoints_of(config.open)
    return labeling_from_parent(_union_edges(config.spec.vertex_count, eu, ev))


def z_geq(labeling: ClusterLabeling, k: int) -> int:
    """Number of vertices lying in clusters of size at least k."""
    return labeling.z_geq(k)


@dataclass(frozen=True)
class ClusterSubgraph:
    """One cluster as a graph: global vertex/edge ids plus a local CSR."""

    spec: GraphSpec
    vertices: np.ndarray = field(repr=False)  # global ids, ascending
    edge_ids: np.ndarray = field(repr=False)  # open edges internal to cluster
    indptr: np.ndarray = field(repr=False)
    indices: np.ndarray = field(repr=False)

    @property
    def n_vertices(self) -> int:
        return int(self.vertices.shape[0])

    @property
    def n_edges(self) -> int:
        return int(self.edge_ids.shape[0])

    def local_of(self, v: int) -> int:
        i = int(np.searchsorted(self.vertices, v))
        if i >= self.n_vertices or self.vertices[i] != v:
            raise KeyError(f"vertex {v} not in cluster")
        return i

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)


def _csr(n: int, lu: np.ndarray, lv: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    src = np.concatenate([lu, lv])
    dst = np.concatenate([lv, lu])
    order = np.argsort(src, kind="stable")
    indptr = np.zeros(n + 1, np.int64)
    np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
    return indptr, dst[order]


def subgraph_of_root(
    config: BondConfig, labeling: ClusterLabeling, root: int
) -> ClusterSubgraph:
    vertices = np.flatnonzero(labeling.root == root)
    table = edge_list(config.spec)
    eu, ev = table.endpoints_of(config.open)
    mask = labeling.root[eu] == root
    edge_ids = config.open[mask]
    lu = np.searchsorted(vertices, eu[mask])
    lv = np.searchsorted(vertices, ev[mask])
    indptr, indices = _csr(vertices.shape[0], lu, lv)
    return ClusterSubgraph(config.spec, vertices, edge_ids, indptr, indices)


def extract_cluster(
    config: BondConfig,
    vertex: int | None = None,
    rank: int | None = None,
    labeling: ClusterLabeling | None = None,
) -> ClusterSubgraph:
    """The cluster C(vertex), or the rank-th largest cluster (rank >= 1).

    Exactly one of ``vertex``/``rank`` must be given.  ``labeling`` may be
    passed to reuse an existing clustering of the same config.
    """
    if (vertex is None) == (rank is None):
        raise ValueError("give exactly one of vertex= or rank=")
    if labeling is None:
        labeling = cluster(config)
    if rank is not None:
        if not 1 <= rank <= labeling.n_clusters:
            raise RankOutOfRange(f"rank {rank} of {labeling.n_clusters} clusters")
        root = int(labeling.ranked_roots[rank - 1])
    else:
        if not 0 <= vertex < labeling.vertex_count:
            raise RankOutOfRange(f"vertex {vertex} out of range")
        root = int(labeling.root[vertex])
    return subgraph_of_root(config, labeling, root)
