"""Exact ground truth on tiny graphs by exhaustive configuration enumeration.

Every statistic is accumulated as an integer count per open-edge total o
(one enumeration pass per spec, reused for every p), then combined with the
binomial weights p^o (1-p)^(E-o).  At p = 1/2 all weights are the same
dyadic 2^-E, so reported values are exact doubles; at other p the weights
themselves round, leaving errors at the 1e-15 level.

Identities that hold per configuration by vertex-transitivity, such as
E[Z_{>=k}] = V P(|C| >= k), therefore hold exactly at the integer-count
level for every p.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numba import njit

from .graphs import GraphSpec, edge_list
from .percolate import _find, _union

#: enumeration bound: 2^24 configurations
MAX_EDGES = 24


class TooManyEdges(ValueError):
    pass


@njit(cache=True, nogil=True)
def _enumerate_counts(V, eu, ev, m):
    E = eu.shape[0]
    c0_sum = np.zeros(E + 1, np.int64)
    c0_hist = np.zeros((E + 1, V + 1), np.int64)
    cmax_hist = np.zeros((E + 1, V + 1), np.int64)
    z1 = np.zeros((E + 1, V + 1), np.int64)
    z2 = np.zeros((E + 1, V + 1), np.int64)
    z3 = np.zeros((E + 1, V + 1), np.int64)
    two_pt = np.zeros((E + 1, V), np.int64)
    rank_sum = np.zeros((E + 1, m), np.int64)
    size_hist = np.zeros(V + 1, np.int64)
    zk = np.zeros(V + 1, np.int64)
    top = np.zeros(m, np.int64)

    for mask in range(1 << E):
        parent = np.arange(V)
        size = np.ones(V, np.int64)
        o = 0
        for e in range(E):
            if (mask >> e) & 1:
                o += 1
                _union(parent, size, eu[e], ev[e])
        root0 = _find(parent, 0)
        c0 = size[root0]
        c0_sum[o] += c0
        c0_hist[o, c0] += 1
        for x in range(V):
            if _find(parent, x) == root0:
                two_pt[o, x] += 1

        # size_hist[s] = s * (#components of size s); suffix-sum gives Z_{>=k}
        size_hist[:] = 0
        top[:] = 0
        cmax = 0
        for v in range(V):
            if parent[v] == v:
                s = size[v]
                size_hist[s] += s
                if s > cmax:
                    cmax = s
                # keep the m largest component sizes (insertion)
                j = m - 1
                if s > top[j]:
                    while j > 0 and top[j - 1] < s:
                        top[j] = top[j - 1]
                        j -= 1
                    top[j] = s
        cmax_hist[o, cmax] += 1
        for i in range(m):
            rank_sum[o, i] += top[i]
        acc = 0
        for k in range(V, 0, -1):
            acc += size_hist[k]
            zk[k] = acc
        for k in range(1, V + 1):
            z = zk[k]
            z1[o, k] += z
            z2[o, k] += z * z
            z3[o, k] += z * z * z
    return c0_sum, c0_hist, cmax_hist, z1, z2, z3, two_pt, rank_sum


@lru_cache(maxsize=16)
def _counts(spec: GraphSpec, m: int):
    table = edge_list(spec)
    if table.count > MAX_EDGES:
        raise TooManyEdges(
            f"{table.count} edges: enumeration is capped at {MAX_EDGES} (2^24 configs)"
        )
    return _enumerate_counts(
        spec.vertex_count, table.endpoints[:, 0], table.endpoints[:, 1], m
    )


@dataclass(frozen=True)
class ExactReport:
    """Exact expectations over all 2^E configurations at one p.

    Arrays indexed by cluster-size threshold k run over k = 1..V (entry 0
    unused).  ``two_point[x]`` is P(0 <-> x), with two_point[0] = 1.
    """

    spec: GraphSpec
    p: float
    chi: float
    e_cmax: float
    tail: np.ndarray = field(repr=False)
    z_mean: np.ndarray = field(repr=False)
    z_var: np.ndarray = field(repr=False)
    z_third: np.ndarray = field(repr=False)
    p_cmax_geq: np.ndarray = field(repr=False)
    two_point: np.ndarray = field(repr=False)
    ordered_means: np.ndarray = field(repr=False)  # E|C_(i)|, i = 1..len

    @property
    def vertex_count(self) -> int:
        return self.spec.vertex_count

    def to_json_dict(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "p": self.p,
            "V": self.vertex_count,
            "E": edge_list(self.spec).count,
            "chi": self.chi,
            "e_cmax": self.e_cmax,
            "tail": self.tail[1:].tolist(),
            "z_mean": self.z_mean[1:].tolist(),
            "z_var": self.z_var[1:].tolist(),
            "z_third": self.z_third[1:].tolist(),
            "p_cmax_geq": self.p_cmax_geq[1:].tolist(),
            "two_point": self.two_point.tolist(),
            "ordered_means": self.ordered_means.tolist(),
        }


def _weights(E: int, p: float) -> np.ndarray:
    o = np.arange(E + 1)
    if p == 0.5:
        return np.full(E + 1, 0.5**E)
    return p**o * (1.0 - p) ** (E - o)


def enumerate_exact(spec: GraphSpec, p: float, m_ranks: int = 3) -> ExactReport:
    """Exact report for a spec with at most MAX_EDGES edges."""
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p={p} not in [0, 1]")
    V = spec.vertex_count
    m = min(m_ranks, V)
    c0_sum, c0_hist, cmax_hist, z1, z2, z3, two_pt, rank_sum = _counts(spec, m)
    E = edge_list(spec).count
    w = _weights(E, p)

    chi = float(w @ c0_sum)
    # suffix sums over size: counts of configs with statistic >= k
    c0_ge = np.cumsum(c0_hist[:, ::-1], axis=1)[:, ::-1]
    cmax_ge = np.cumsum(cmax_hist[:, ::-1], axis=1)[:, ::-1]
    # probabilities only round through the binomial weights; clip the <=2ulp
    # residue and pin the entries that are 1 by definition
    tail = np.clip(w @ c0_ge, 0.0, 1.0)
    tail[1] = 1.0
    p_cmax = np.clip(w @ cmax_ge, 0.0, 1.0)
    p_cmax[1] = 1.0
    two_point = np.clip(w @ two_pt, 0.0, 1.0)
    two_point[0] = 1.0
    zm = w @ z1
    zv = np.maximum(w @ z2 - zm**2, 0.0)
    zt = w @ z3
    ordered = w @ rank_sum.astype(np.float64)
    e_cmax = float(ordered[0])
    return ExactReport(
        spec=spec,
        p=p,
        chi=chi,
        e_cmax=e_cmax,
        tail=tail,
        z_mean=zm,
        z_var=zv,
        z_third=zt,
        p_cmax_geq=p_cmax,
        two_point=two_point,
        ordered_means=ordered,
    )
