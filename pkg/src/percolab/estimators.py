"""Monte Carlo estimators for cluster statistics.

Per replicate, the susceptibility sample is the all-vertex average
(1/V) sum_clusters |C|^2 = (1/V) sum_v |C(v)|, which has the same
expectation as |C(0)| on vertex-transitive graphs but much lower variance.
Tail probabilities P(|C| >= k) are estimated by Z_{>=k}/V, unbiased through
the identity E[Z_{>=k}] = V P(|C| >= k).

Standard errors are replicate-level sample SD / sqrt(R); the variance and
third moment of Z_{>=k} carry jackknife standard errors.

All estimators sample replicates 0..R-1 of the keyed stream, so two
estimators called with the same (spec, p, seed) see the same configurations.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .graphs import GraphSpec, VertexOutOfRange, edge_list
from .percolate import (
    _stats_batch_small,
    _validate_p,
    sample_parent,
    sizes_from_parent,
    zgeq_from_sizes,
)

#: graphs at or below this size run all replicates inside one jit kernel
_BATCH_V = 256
_BATCH_E = 4096


@dataclass(frozen=True)
class Estimate:
    value: float
    std_error: float
    replicates: int

    def agrees_with(self, exact: float, n_se: float = 3.0, atol: float = 1e-12) -> bool:
        return abs(self.value - exact) <= n_se * self.std_error + atol


@dataclass(frozen=True)
class TailCurve:
    ks: np.ndarray
    probs: list[Estimate]
    samples: np.ndarray = field(repr=False)  # (R, K) per-replicate Z/V

    def values(self) -> np.ndarray:
        return np.array([e.value for e in self.probs])


@dataclass(frozen=True)
class ZgeqMoments:
    mean: Estimate
    variance: Estimate
    third_moment: Estimate


@dataclass(frozen=True)
class CmaxDistribution:
    samples: np.ndarray = field(repr=False)  # |C_max| V^(-2/3) per replicate
    quantiles: dict[int, float] = field(default_factory=dict)
    coefficient_of_variation: float = float("nan")


@dataclass
class ReplicateBatch:
    """Raw per-replicate outputs shared by the estimators."""

    replicates: int
    chi: np.ndarray  # (R,) sum |C|^2 / V
    cmax: np.ndarray  # (R,)
    z: np.ndarray | None = None  # (R, K)
    top: np.ndarray | None = None  # (R, m)
    same_root: np.ndarray | None = None  # (R,) bool, root(x) == root(0)


def collect_replicates(
    spec: GraphSpec,
    p: float,
    seed: int,
    replicates: int,
    ks=None,
    m: int = 0,
    pair_vertex: int | None = None,
    rep0: int = 0,
    workers: int = 1,
) -> ReplicateBatch:
    p = _validate_p(p)
    V = spec.vertex_count
    table = edge_list(spec)
    ks = None if ks is None else np.asarray(ks, dtype=np.int64)
    R = int(replicates)

    if table.dense and V <= _BATCH_V and table.count <= _BATCH_E:
        sizes, parents = _stats_batch_small(
            V,
            table.endpoints[:, 0],
            table.endpoints[:, 1],
            p,
            np.uint64(seed & 0xFFFFFFFFFFFFFFFF),
            rep0,
            R,
        )
        batch = ReplicateBatch(
            replicates=R,
            chi=(sizes.astype(np.float64) ** 2).sum(axis=1) / V,
            cmax=sizes[:, 0].copy(),
        )
        if ks is not None:
            batch.z = np.stack(
                [((sizes >= k) * sizes).sum(axis=1) for k in ks], axis=1
            )
        if m:
            batch.top = sizes[:, :m].copy()
        if pair_vertex is not None:
            batch.same_root = parents[:, pair_vertex] == parents[:, 0]
        return batch

    chi = np.empty(R)
    cmax = np.empty(R, np.int64)
    z = None if ks is None else np.empty((R, ks.shape[0]), np.int64)
    top = None if not m else np.zeros((R, m), np.int64)
    same = None if pair_vertex is None else np.empty(R, bool)

    def run(lo: int, hi: int) -> None:
        for i in range(lo, hi):
            parent = sample_parent(spec, p, seed, rep0 + i)
            sizes = sizes_from_parent(parent)
            chi[i] = float((sizes.astype(np.float64) ** 2).sum()) / V
            cmax[i] = sizes[0]
            if z is not None:
                z[i] = zgeq_from_sizes(sizes, ks)
            if top is not None:
                mm = min(m, sizes.shape[0])
                top[i, :mm] = sizes[:mm]
            if same is not None:
                same[i] = parent[pair_vertex] == parent[0]

    if workers <= 1 or R < 4:
        run(0, R)
    else:
        bounds = np.linspace(0, R, workers + 1).astype(int)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futs = [pool.submit(run, bounds[j], bounds[j + 1]) for j in range(workers)]
            for f in futs:
                f.result()
    return ReplicateBatch(R, chi, cmax, z, top, same)


# ---------------------------------------------------------------------------
# point estimators


def _mean_se(samples: np.ndarray) -> Estimate:
    samples = np.asarray(samples, dtype=np.float64)
    n = samples.shape[0]
    sd = samples.std(ddof=1) if n > 1 else 0.0
    return Estimate(float(samples.mean()), float(sd / np.sqrt(n)), n)


def estimate_chi(
    spec: GraphSpec, p: float, replicates: int, seed: int, workers: int = 1
) -> Estimate:
    """Monte Carlo estimate of chi(p) = E|C(0)|."""
    if replicates < 2:
        raise ValueError("replicates must be >= 2")
    batch = collect_replicates(spec, p, seed, replicates, workers=workers)
    return _mean_se(batch.chi)


def default_k_grid(V: int) -> np.ndarray:
    """Geometric grid {1, 2, 4, ...} capped at V."""
    ks = [1]
    while ks[-1] * 2 <= V:
        ks.append(ks[-1] * 2)
    return np.array(ks, dtype=np.int64)


def tail_probability(
    spec: GraphSpec, p: float, ks, replicates: int, seed: int, workers: int = 1
) -> TailCurve:
    """P(|C| >= k) on a k-grid, estimated as the replicate mean of Z_{>=k}/V."""
    ks = np.asarray(ks, dtype=np.int64)
    if ks.size == 0 or np.any(np.diff(ks) <= 0) or ks[0] < 1:
        raise ValueError("ks must be positive and strictly ascending")
    batch = collect_replicates(spec, p, seed, replicates, ks=ks, workers=workers)
    samples = batch.z.astype(np.float64) / spec.vertex_count
    probs = [_mean_se(samples[:, j]) for j in range(ks.shape[0])]
    return TailCurve(ks, probs, samples)


def two_point(
    spec: GraphSpec, p: float, x: int, replicates: int, seed: int, workers: int = 1
) -> Estimate:
    """P(0 <-> x) as the fraction of replicates sharing a root."""
    if not 0 <= x < spec.vertex_count:
        raise VertexOutOfRange(f"vertex {x} out of range")
    if x == 0:
        raise VertexOutOfRange("x must differ from the origin")
    batch = collect_replicates(spec, p, seed, replicates, pair_vertex=x, workers=workers)
    return _mean_se(batch.same_root.astype(np.float64))


def _jackknife_variance(z: np.ndarray) -> tuple[float, float]:
    z = z.astype(np.float64)
    n = z.shape[0]
    full = float(z.var(ddof=1))
    s1, s2 = z.sum(), (z**2).sum()
    loo = (s2 - z**2 - (s1 - z) ** 2 / (n - 1)) / (n - 2)
    se = np.sqrt((n - 1) / n * ((loo - loo.mean()) ** 2).sum())
    return full, float(se)


def _jackknife_third(z: np.ndarray) -> tuple[float, float]:
    z = z.astype(np.float64)
    n = z.shape[0]
    s3 = (z**3).sum()
    loo = (s3 - z**3) / (n - 1)
    se = np.sqrt((n - 1) / n * ((loo - loo.mean()) ** 2).sum())
    return float(s3 / n), float(se)


def zgeq_moments(
    spec: GraphSpec, p: float, k: int, replicates: int, seed: int, workers: int = 1
) -> ZgeqMoments:
    """Sample mean, variance, and raw third moment of Z_{>=k}."""
    if replicates < 10:
        raise ValueError("replicates must be >= 10")
    batch = collect_replicates(spec, p, seed, replicates, ks=[k], workers=workers)
    z = batch.z[:, 0].astype(np.float64)
    var, var_se = _jackknife_variance(z)
    third, third_se = _jackknife_third(z)
    return ZgeqMoments(
        mean=_mean_se(z),
        variance=Estimate(var, var_se, replicates),
        third_moment=Estimate(third, third_se, replicates),
    )


_QUANTILES = (1, 5, 25, 50, 75, 95, 99)


def cmax_distribution(
    spec: GraphSpec, p: float, replicates: int, seed: int, workers: int = 1
) -> CmaxDistribution:
    """Distribution of the rescaled largest cluster |C_max| V^(-2/3)."""
    if replicates < 100:
        raise ValueError("replicates must be >= 100")
    batch = collect_replicates(spec, p, seed, replicates, workers=workers)
    samples = batch.cmax.astype(np.float64) / spec.vertex_count ** (2.0 / 3.0)
    mean = samples.mean()
    cv = float(samples.std(ddof=1) / mean) if mean else float("nan")
    qs = {q: float(np.percentile(samples, q)) for q in _QUANTILES}
    return CmaxDistribution(samples, qs, cv)


# ---------------------------------------------------------------------------
# the five-inequality audit


@dataclass(frozen=True)
class InequalityCheck:
    name: str
    passed: bool
    n_checked: int
    worst_margin: float  # max over k of LHS - RHS (negative = comfortable)
    detail: str = ""


_REL_TOL = 1e-12


def _exact_check(name, lhs, rhs, detail="") -> InequalityCheck:
    lhs, rhs = np.atleast_1d(lhs), np.atleast_1d(rhs)
    if lhs.size == 0:
        return InequalityCheck(name, True, 0, float("-inf"), "vacuous")
    margin = lhs - rhs
    tol = _REL_TOL * np.maximum(1.0, np.abs(rhs))
    return InequalityCheck(
        name, bool(np.all(margin <= tol)), int(lhs.size), float(margin.max()), detail
    )


def inequality_audit_exact(report) -> list[InequalityCheck]:
    """The five moment/tail inequalities, checked exactly on an ExactReport."""
    V = report.vertex_count
    ks = np.arange(1, V + 1)
    chi, tail = report.chi, report.tail[1:]
    zm, zv, zt = report.z_mean[1:], report.z_var[1:], report.z_third[1:]
    checks = [
        _exact_check("var_upper", zv, np.full(V, V * chi)),
        _exact_check("var_lower", V * tail * (ks - V * tail), zv),
        _exact_check("third_moment", zt, V * chi**3 + 3 * zm * V * chi + zm**3),
        _exact_check("cmax_union", report.p_cmax_geq[1:], (V / ks) * tail),
    ]
    sel = ks >= chi**2
    checks.append(
        _exact_check(
            "aizenman_newman",
            tail[sel],
            np.sqrt(np.e / ks[sel]) * np.exp(-ks[sel] / (2 * chi**2)),
            detail=f"{int(sel.sum())} applicable k",
        )
    )
    return checks


def inequality_audit_mc(
    spec: GraphSpec,
    p: float,
    ks,
    replicates: int,
    seed: int,
    n_se: float = 3.0,
    workers: int = 1,
) -> list[InequalityCheck]:
    """Monte Carlo audit: each inequality must hold within n_se joint SEs."""
    ks = np.asarray(ks, dtype=np.int64)
    V = spec.vertex_count
    batch = collect_replicates(spec, p, seed, replicates, ks=ks, workers=workers)
    R = batch.replicates
    z = batch.z.astype(np.float64)
    chi_e = _mean_se(batch.chi)
    zm = z.mean(axis=0)
    zm_se = z.std(axis=0, ddof=1) / np.sqrt(R)
    var = np.empty(ks.shape[0])
    var_se = np.empty_like(var)
    third = np.empty_like(var)
    third_se = np.empty_like(var)
    for j in range(ks.shape[0]):
        var[j], var_se[j] = _jackknife_variance(z[:, j])
        third[j], third_se[j] = _jackknife_third(z[:, j])
    ptail = zm / V
    ptail_se = zm_se / V
    cmax_ind = batch.cmax[:, None] >= ks[None, :]
    pcm = cmax_ind.mean(axis=0)
    pcm_se = cmax_ind.std(axis=0, ddof=1) / np.sqrt(R)

    def soft(name, lhs, rhs, slack, detail="") -> InequalityCheck:
        lhs, rhs, slack = np.atleast_1d(lhs), np.atleast_1d(rhs), np.atleast_1d(slack)
        if lhs.size == 0:
            return InequalityCheck(name, True, 0, float("-inf"), "vacuous")
        margin = lhs - rhs - n_se * slack
        return InequalityCheck(
            name, bool(np.all(margin <= 0)), int(lhs.size), float(margin.max()), detail
        )

    checks = [
        soft(
            "var_upper",
            var,
            V * chi_e.value,
            np.sqrt(var_se**2 + (V * chi_e.std_error) ** 2),
        ),
        soft(
            "var_lower",
            V * ptail * (ks - V * ptail),
            var,
            np.sqrt(var_se**2 + (np.abs(V * ks - 2 * V**2 * ptail) * ptail_se) ** 2),
        ),
    ]
    rhs3 = V * chi_e.value**3 + 3 * zm * V * chi_e.value + zm**3
    d_chi = 3 * V * chi_e.value**2 + 3 * zm * V
    d_zm = 3 * V * chi_e.value + 3 * zm**2
    rhs3_se = np.sqrt((d_chi * chi_e.std_error) ** 2 + (d_zm * zm_se) ** 2)
    checks.append(soft("third_moment", third, rhs3, np.sqrt(third_se**2 + rhs3_se**2)))
    checks.append(
        soft(
            "cmax_union",
            pcm,
            (V / ks) * ptail,
            np.sqrt(pcm_se**2 + ((V / ks) * ptail_se) ** 2),
        )
    )
    chi_hi = chi_e.value + n_se * chi_e.std_error
    sel = ks >= chi_e.value**2
    checks.append(
        soft(
            "aizenman_newman",
            ptail[sel],
            np.sqrt(np.e / ks[sel]) * np.exp(-ks[sel] / (2 * chi_hi**2)),
            ptail_se[sel],
            detail=f"{int(sel.sum())} applicable k",
        )
    )
    return checks
