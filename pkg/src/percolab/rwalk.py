"""Lazy simple random walk on a cluster and its total-variation mixing time.

The walk stays put with probability 1/2 and otherwise moves to a uniform
open neighbor; its stationary law is pi(x) = deg(x) / (2|E|).  The mixing
time is the first step n at which the worst-start total-variation distance
to pi drops to 1/4.

``mixing_time_exact`` returns that exact n.  Stepwise iteration (one
distribution row per start, one kernel multiplication per step) is used when
a TV trace is requested; otherwise the same n is found with matrix powers by
repeated squaring plus a bisection over n, which is valid because the
worst-start TV distance is nonincreasing in n.  Both routes are
cross-checked in the test suite.

Singleton clusters have no edges and no stationary law; by convention their
mixing time is reported as 0 and flagged.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import log

import numpy as np
import scipy.sparse as sp

from . import rng
from .geometry import DiameterResult, diameter
from .percolate import ClusterSubgraph


class SingletonCluster(ValueError):
    pass


class NoConvergence(RuntimeError):
    pass


@dataclass(frozen=True)
class LazyKernel:
    cluster: ClusterSubgraph
    matrix: np.ndarray = field(repr=False)  # dense row-stochastic (n, n)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


def lazy_kernel(sub: ClusterSubgraph) -> LazyKernel:
    """Dense transition matrix: stay 1/2, move 1/(2 deg) to each neighbor."""
    if sub.n_edges == 0:
        raise SingletonCluster("cluster has no open edges")
    n = sub.n_vertices
    deg = sub.degrees()
    P = np.zeros((n, n))
    src = np.repeat(np.arange(n), deg)
    P[src, sub.indices] = 0.5 / deg[src]
    P[np.arange(n), np.arange(n)] += 0.5
    return LazyKernel(sub, P)


def stationary(sub: ClusterSubgraph) -> np.ndarray:
    """pi(x) = deg(x) / (2 |E|) over the cluster's local vertex order."""
    if sub.n_edges == 0:
        raise SingletonCluster("stationary law undefined without edges")
    return sub.degrees() / (2.0 * sub.n_edges)


@dataclass(frozen=True)
class MixingResult:
    t_mix: float
    exact: bool
    method: str  # 'exact_tv' | 'edge_diameter_upper' | 'spectral_estimate'
    tv_trace: np.ndarray | None = field(default=None, repr=False)
    bracket: tuple[float, float] | None = None
    flags: tuple[str, ...] = ()


def _worst_tv(M: np.ndarray, pi: np.ndarray) -> float:
    return float(0.5 * np.abs(M - pi).sum(axis=1).max())


def _power_from(powers: list[np.ndarray], m: int) -> np.ndarray:
    """P^m as a product of the stored binary powers (m < 2^len(powers))."""
    out = None
    for bit in range(m.bit_length()):
        if (m >> bit) & 1:
            out = powers[bit] if out is None else out @ powers[bit]
    return out


def mixing_time_exact(
    sub: ClusterSubgraph, max_steps: int = 1 << 22, trace: bool = False
) -> MixingResult:
    """Exact mixing time min{n : worst-start TV(p^n, pi) <= 1/4}.

    Exceeding ``max_steps`` returns that step count as a lower bound with
    ``exact=False`` and a 'step_budget_exceeded' flag.
    """
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")
    if sub.n_edges == 0:
        return MixingResult(0, True, "exact_tv", flags=("singleton",))
    P = lazy_kernel(sub).matrix
    pi = stationary(sub)

    if trace:
        M = P.copy()
        tvs = [_worst_tv(M, pi)]
        while tvs[-1] > 0.25:
            if len(tvs) >= max_steps:
                return MixingResult(
                    max_steps, False, "exact_tv",
                    tv_trace=np.array(tvs), flags=("step_budget_exceeded",),
                )
            M = M @ P
            tvs.append(_worst_tv(M, pi))
        return MixingResult(len(tvs), True, "exact_tv", tv_trace=np.array(tvs))

    # powers[j] = P^(2^j); find the first power with TV <= 1/4, then walk the
    # remaining bits down, exploiting that worst-start TV is nonincreasing in
    # the step count.
    if _worst_tv(P, pi) <= 0.25:
        return MixingResult(1, True, "exact_tv")
    powers = [P]
    hit = None
    while 2 ** len(powers) <= max_steps:
        powers.append(powers[-1] @ powers[-1])
        if _worst_tv(powers[-1], pi) <= 0.25:
            hit = len(powers) - 1
            break
    if hit is None:
        if _worst_tv(_power_from(powers, max_steps), pi) > 0.25:
            return MixingResult(
                max_steps, False, "exact_tv", flags=("step_budget_exceeded",)
            )
        lo, hi = 2 ** (len(powers) - 1), max_steps
    else:
        hi = 2**hit
        lo = hi // 2
    # invariant: TV(lo) > 1/4 >= TV(hi); find the largest n < hi with TV > 1/4
    exponent = lo
    current = powers[lo.bit_length() - 1]
    for m in range(len(powers) - 1, -1, -1):
        if exponent + 2**m >= hi:
            continue
        cand = current @ powers[m]
        if _worst_tv(cand, pi) > 0.25:
            current = cand
            exponent += 2**m
    return MixingResult(exponent + 1, True, "exact_tv")


def mixing_time_upper_edge_diam(
    sub: ClusterSubgraph,
    diam: DiameterResult | None = None,
    exact_threshold: int = 5000,
) -> MixingResult:
    """Upper bound 8 |E| diam, valid for any finite graph.

    A non-exact (double-sweep) diameter makes the bound non-certified; the
    result is flagged accordingly.
    """
    if diam is None:
        diam = diameter(sub, exact_threshold)
    flags = () if diam.exact else ("non_certified_diameter",)
    return MixingResult(
        8 * sub.n_edges * diam.value, False, "edge_diameter_upper", flags=flags
    )


_SPECTRAL_SEED = 0x5EED5EED


def mixing_time_spectral(
    sub: ClusterSubgraph, tolerance: float = 1e-13, max_iters: int = 100000
) -> MixingResult:
    """Relaxation-time bracket for the mixing time from the spectral gap.

    Estimates the second-largest eigenvalue beta2 of the lazy kernel by
    power iteration on the symmetrized kernel, deflating the known top
    eigenvector sqrt(deg).  Returns the reversible-chain sandwich
    [(t_rel - 1) ln 2, t_rel ln(4/pi_min)] as (lower, upper); ``t_mix``
    carries the upper end.  Eigenvalues of the lazy kernel are >= 0, so the
    second eigenvalue equals the second-largest modulus.
    """
    if sub.n_edges == 0:
        raise SingletonCluster("spectral estimate undefined without edges")
    n = sub.n_vertices
    deg = sub.degrees().astype(np.float64)
    inv_sqrt = 1.0 / np.sqrt(deg)
    src = np.repeat(np.arange(n), sub.degrees())
    S = sp.csr_matrix(
        (0.5 * inv_sqrt[src] * inv_sqrt[sub.indices], (src, sub.indices)),
        shape=(n, n),
    )
    S = S + sp.diags(np.full(n, 0.5))
    v1 = np.sqrt(deg)
    v1 /= np.linalg.norm(v1)

    x = rng.uniforms(_SPECTRAL_SEED, n, n) - 0.5
    x -= v1 * (v1 @ x)
    norm = np.linalg.norm(x)
    beta = 0.0
    if norm > 1e-14:
        x /= norm
        last = np.inf
        for it in range(max_iters):
            y = S @ x
            y -= v1 * (v1 @ y)
            beta = float(x @ y)
            norm = np.linalg.norm(y)
            if norm < 1e-14:
                beta = 0.0
                break
            x = y / norm
            if it >= 32 and abs(beta - last) <= tolerance:
                break
            last = beta
        else:
            raise NoConvergence(f"power iteration did not settle in {max_iters} iters")
    beta = min(max(beta, 0.0), 1.0 - 1e-15)
    # residual bound: once converged, the true eigenvalue sits within ||r||
    resid = float(np.linalg.norm(S @ x - beta * x - v1 * (v1 @ (S @ x))))
    beta_hi = min(beta + resid + 10 * tolerance, 1.0 - 1e-15)
    pi_min = float(deg.min()) / (2.0 * sub.n_edges)
    lower = max(0.0, (1.0 / (1.0 - beta) - 1.0) * log(2.0))
    upper = (1.0 / (1.0 - beta_hi)) * log(4.0 / pi_min)
    return MixingResult(upper, False, "spectral_estimate", bracket=(lower, upper))
