"""Intrinsic-metric computations on cluster subgraphs.

Distances are shortest paths over the cluster's open edges only.  Diameters
are exact (all-pairs BFS) up to a size threshold and otherwise fall back to
an iterated double-sweep lower bound, flagged ``exact=False``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .estimators import Estimate, _mean_se
from .graphs import GraphSpec
from .percolate import ClusterSubgraph, cluster, sample_bonds, subgraph_of_root


class VertexNotInCluster(ValueError):
    pass


@njit(cache=True, nogil=True)
def _bfs_fill(indptr, indices, src, dist, queue):
    dist[:] = -1
    dist[src] = 0
    queue[0] = src
    head, tail = 0, 1
    far = src
    while head < tail:
        u = queue[head]
        head += 1
        du = dist[u]
        for j in range(indptr[u], indptr[u + 1]):
            w = indices[j]
            if dist[w] < 0:
                dist[w] = du + 1
                queue[tail] = w
                tail += 1
                far = w
    return far  # last vertex dequeued lies at maximal distance


@njit(cache=True, nogil=True)
def _eccentricity_max(indptr, indices):
    n = indptr.shape[0] - 1
    dist = np.empty(n, np.int64)
    queue = np.empty(n, np.int64)
    best = 0
    for s in range(n):
        _bfs_fill(indptr, indices, s, dist, queue)
        ecc = dist.max()
        if ecc > best:
            best = ecc
    return best


@njit(cache=True, nogil=True)
def _double_sweep(indptr, indices, rounds):
    n = indptr.shape[0] - 1
    dist = np.empty(n, np.int64)
    queue = np.empty(n, np.int64)
    start = 0
    best = 0
    for _ in range(rounds):
        _bfs_fill(indptr, indices, start, dist, queue)
        far = 0
        fd = -1
        for v in range(n):
            if dist[v] > fd:
                fd = dist[v]
                far = v
        if fd > best:
            best = fd
        start = far
    return best


@dataclass(frozen=True)
class DistanceField:
    source: int  # global vertex id
    vertices: np.ndarray = field(repr=False)  # global ids, aligned with dist
    dist: np.ndarray = field(repr=False)

    def of(self, v: int) -> int:
        i = int(np.searchsorted(self.vertices, v))
        if i >= self.vertices.shape[0] or self.vertices[i] != v:
            raise VertexNotInCluster(f"vertex {v} not in cluster")
        return int(self.dist[i])

    def max(self) -> int:
        return int(self.dist.max())


def bfs(sub: ClusterSubgraph, source: int) -> DistanceField:
    """Shortest-path distances from a (global-id) source over open edges."""
    try:
        src = sub.local_of(source)
    except KeyError as exc:
        raise VertexNotInCluster(str(exc)) from None
    n = sub.n_vertices
    dist = np.empty(n, np.int64)
    queue = np.empty(n, np.int64)
    _bfs_fill(sub.indptr, sub.indices, src, dist, queue)
    return DistanceField(source, sub.vertices, dist)


@dataclass(frozen=True)
class DiameterResult:
    value: int
    exact: bool
    method: str  # 'all_pairs_bfs' | 'double_sweep_lower_bound'


def diameter(sub: ClusterSubgraph, exact_threshold: int = 5000) -> DiameterResult:
    """Cluster diameter: exact all-pairs BFS up to the threshold size."""
    if sub.n_vertices <= 1:
        return DiameterResult(0, True, "all_pairs_bfs")
    if sub.n_vertices <= exact_threshold:
        return DiameterResult(
            int(_eccentricity_max(sub.indptr, sub.indices)), True, "all_pairs_bfs"
        )
    return DiameterResult(
        int(_double_sweep(sub.indptr, sub.indices, 4)), False, "double_sweep_lower_bound"
    )


def ball_growth(sub: ClusterSubgraph, v: int, kmax: int) -> np.ndarray:
    """Open-edge count of the radius-k ball around v, for k = 0..kmax.

    An edge lies in the ball when both endpoints are within intrinsic
    distance k of v, i.e. when max of the endpoint distances is <= k.
    """
    fld = bfs(sub, v)
    src = np.repeat(np.arange(sub.n_vertices), sub.degrees())
    sel = src < sub.indices  # each undirected edge once
    radii = np.maximum(fld.dist[src[sel]], fld.dist[sub.indices[sel]])
    counts = np.bincount(np.minimum(radii, kmax + 1), minlength=kmax + 2)
    return np.cumsum(counts)[: kmax + 1]


def arm_probability(
    spec: GraphSpec, p: float, k: int, replicates: int, seed: int
) -> Estimate:
    """P(some vertex of C(0) sits at intrinsic distance exactly k from 0)."""
    if k < 0:
        raise ValueError("k must be >= 0")
    hits = np.empty(replicates, np.float64)
    for i in range(replicates):
        config = sample_bonds(spec, p, seed, i)
        labeling = cluster(config)
        sub = subgraph_of_root(config, labeling, int(labeling.root[0]))
        fld = bfs(sub, 0)
        hits[i] = bool(np.any(fld.dist == k))
    return _mean_se(hits)
