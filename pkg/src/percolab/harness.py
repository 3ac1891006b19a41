"""Sweep orchestration, scaling-exponent fits, and headline diagnostics.

A sweep runs one graph family over increasing sizes, resolves the bond
probability per size (fixed, 1/V, or by locating the critical point), and
collects per-replicate statistics: susceptibility samples, the ordered
cluster sizes, Z_{>=k} on a k-grid, and (optionally) the diameter and lazy
random-walk mixing time of the largest cluster.

Exponent fits are least squares on (log V, log y) where y is a per-size
summary (median by default: the scaling statements being tested are
in-probability bounds, and medians are robust to the heavy upper tails).
Confidence intervals come from a nonparametric bootstrap that resamples
replicate-level values within each size.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import geometry, rwalk
from .critical import CriticalPoint, find_pc
from .estimators import Estimate, TailCurve, _mean_se, collect_replicates, default_k_grid
from .graphs import GraphSpec
from .percolate import cluster, sample_bonds, subgraph_of_root, zgeq_from_sizes


class InsufficientPoints(ValueError):
    pass


class WindowTooNarrow(ValueError):
    pass


class InsufficientSamples(ValueError):
    pass


_STATISTICS = ("chi", "cmax", "ranks", "tail", "diameter", "mixing")


@dataclass(frozen=True)
class PPolicy:
    """Per-size bond probability policy.

    mode 'fixed' uses ``p`` as given; 'inverse_n' uses p = 1/V (the
    classical critical point of G(n, p)); 'find_pc' solves
    chi(p) = lambda V^(1/3) per size.
    """

    mode: str = "find_pc"
    p: float | None = None
    lam: float = 1.0
    tolerance: float | None = None
    budget: int = 20000

    def __post_init__(self):
        if self.mode not in ("fixed", "inverse_n", "find_pc"):
            raise ValueError(f"unknown p policy {self.mode!r}")
        if self.mode == "fixed" and self.p is None:
            raise ValueError("fixed policy requires p")


@dataclass(frozen=True)
class SweepPlan:
    specs: tuple[GraphSpec, ...]
    policy: PPolicy
    statistics: tuple[str, ...]
    replicates: int
    seed: int
    k_grid: tuple[int, ...] | None = None
    m_ranks: int = 3
    diameter_exact_threshold: int = 5000
    mixing_vertex_cap: int = 2000
    mixing_max_steps: int = 1 << 22
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "specs", tuple(self.specs))
        vs = [s.vertex_count for s in self.specs]
        if not vs or any(b <= a for a, b in zip(vs, vs[1:])):
            raise ValueError("spec sizes must be strictly increasing in V")
        unknown = set(self.statistics) - set(_STATISTICS)
        if unknown:
            raise ValueError(f"unknown statistics: {sorted(unknown)}")
        if "mixing" in self.statistics and "diameter" not in self.statistics:
            # the 8|E|diam sandwich audit needs diameters alongside t_mix
            object.__setattr__(
                self, "statistics", tuple(self.statistics) + ("diameter",)
            )
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")


@dataclass
class SizeResult:
    spec: GraphSpec
    p: float
    pc: CriticalPoint | None
    k_grid: np.ndarray
    chi: np.ndarray  # (R,)
    top: np.ndarray  # (R, m) ordered cluster sizes, zero-padded
    z: np.ndarray  # (R, K)
    diam: np.ndarray | None = None
    diam_exact: np.ndarray | None = None
    tmix: np.ndarray | None = None
    tmix_exact: np.ndarray | None = None
    cmax_edges: np.ndarray | None = None
    flags: tuple[str, ...] = ()

    @property
    def V(self) -> int:
        return self.spec.vertex_count

    @property
    def replicates(self) -> int:
        return int(self.chi.shape[0])

    def cmax_rescaled(self) -> np.ndarray:
        return self.top[:, 0] / self.V ** (2.0 / 3.0)


def _measure_size(
    spec: GraphSpec, p: float, plan: SweepPlan, rep0: int
) -> dict[str, np.ndarray]:
    R, m = plan.replicates, plan.m_ranks
    ks = (
        np.asarray(plan.k_grid, dtype=np.int64)
        if plan.k_grid is not None
        else default_k_grid(spec.vertex_count)
    )
    V = spec.vertex_count
    want_geometry = "diameter" in plan.statistics or "mixing" in plan.statistics
    want_mixing = "mixing" in plan.statistics

    if not want_geometry:
        batch = collect_replicates(
            spec, p, plan.seed, R, ks=ks, m=m, rep0=rep0, workers=plan.workers
        )
        return {"ks": ks, "chi": batch.chi, "top": batch.top, "z": batch.z}

    chi = np.empty(R)
    top = np.zeros((R, m), np.int64)
    z = np.empty((R, ks.shape[0]), np.int64)
    diam = np.empty(R, np.int64)
    diam_exact = np.empty(R, bool)
    tmix = np.full(R, np.nan)
    tmix_exact = np.zeros(R, bool)
    cmax_edges = np.empty(R, np.int64)

    def run(lo: int, hi: int) -> None:
        for i in range(lo, hi):
            config = sample_bonds(spec, p, plan.seed, rep0 + i)
            labeling = cluster(config)
            sizes = labeling.sizes_sorted
            chi[i] = float((sizes.astype(np.float64) ** 2).sum()) / V
            mm = min(m, sizes.shape[0])
            top[i, :mm] = sizes[:mm]
            z[i] = zgeq_from_sizes(sizes, ks)
            sub = subgraph_of_root(config, labeling, int(labeling.ranked_roots[0]))
            cmax_edges[i] = sub.n_edges
            d = geometry.diameter(sub, plan.diameter_exact_threshold)
            diam[i] = d.value
            diam_exact[i] = d.exact
            if want_mixing and sub.n_vertices <= plan.mixing_vertex_cap:
                mr = rwalk.mixing_time_exact(sub, plan.mixing_max_steps)
                tmix[i] = mr.t_mix
                tmix_exact[i] = mr.exact

    if plan.workers <= 1 or R < 4:
        run(0, R)
    else:
        bounds = np.linspace(0, R, plan.workers + 1).astype(int)
        with ThreadPoolExecutor(max_workers=plan.workers) as pool:
            futs = [
                pool.submit(run, bounds[j], bounds[j + 1]) for j in range(plan.workers)
            ]
            for f in futs:
                f.result()
    out = {"ks": ks, "chi": chi, "top": top, "z": z, "diam": diam,
           "diam_exact": diam_exact, "cmax_edges": cmax_edges}
    if want_mixing:
        out.update(tmix=tmix, tmix_exact=tmix_exact)
    return out


def run_sweep(plan: SweepPlan) -> "SweepResult":
    sizes: list[SizeResult] = []
    for spec in plan.specs:
        pc = None
        rep0 = 0
        flags = list(spec.flags())
        if plan.policy.mode == "fixed":
            p = float(plan.policy.p)
        elif plan.policy.mode == "inverse_n":
            p = 1.0 / spec.vertex_count
        else:
            pc = find_pc(
                spec,
                lam=plan.policy.lam,
                tolerance=plan.policy.tolerance,
                budget=plan.policy.budget,
                seed=plan.seed,
                workers=plan.workers,
            )
            p = pc.p_hat
            rep0 = pc.budget_used  # measurement replicates never reuse search ones
            flags.extend(pc.flags)
        data = _measure_size(spec, p, plan, rep0)
        if "tmix" in data and np.isnan(data["tmix"]).any():
            flags.append("mixing_skipped_large_clusters")
        sizes.append(
            SizeResult(
                spec=spec,
                p=p,
                pc=pc,
                k_grid=data["ks"],
                chi=data["chi"],
                top=data["top"],
                z=data["z"],
                diam=data.get("diam"),
                diam_exact=data.get("diam_exact"),
                tmix=data.get("tmix"),
                tmix_exact=data.get("tmix_exact"),
                cmax_edges=data.get("cmax_edges"),
                flags=tuple(flags),
            )
        )
    return SweepResult(plan, sizes)


# ---------------------------------------------------------------------------
# fits


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    r_squared: float
    slope_ci: tuple[float, float]
    points_used: int


def _loglog_fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    lx, ly = np.log(x), np.log(y)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(((ly - ly.mean()) ** 2).sum())
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - float((resid**2).sum()) / ss_tot
    return float(slope), float(intercept), r2


def _summary(samples: np.ndarray, kind: str) -> float:
    if kind == "median":
        return float(np.median(samples))
    if kind == "mean":
        return float(np.mean(samples))
    raise ValueError(f"unknown summary {kind!r}")


def fit_exponent(
    sizes_v,
    samples_per_size,
    summary: str = "median",
    n_boot: int = 1000,
    seed: int = 0,
) -> FitResult:
    """Log-log slope of a per-size summary statistic against V.

    The bootstrap CI resamples replicate-level values within each size and
    refits; sizes given as single values leave the CI degenerate.
    """
    sizes_v = np.asarray(sizes_v, dtype=np.float64)
    samples = [np.atleast_1d(np.asarray(s, dtype=np.float64)) for s in samples_per_size]
    if sizes_v.shape[0] != len(samples) or sizes_v.shape[0] < 3:
        raise InsufficientPoints("an exponent fit needs >= 3 sizes")
    y = np.array([_summary(s, summary) for s in samples])
    if np.any(y <= 0):
        raise ValueError("summary values must be positive for a log-log fit")
    slope, intercept, r2 = _loglog_fit(sizes_v, y)
    boot_rng = np.random.default_rng(seed)
    slopes = np.empty(n_boot)
    for b in range(n_boot):
        yb = np.array(
            [
                _summary(s[boot_rng.integers(0, s.shape[0], s.shape[0])], summary)
                for s in samples
            ]
        )
        if np.any(yb <= 0):
            slopes[b] = slope
        else:
            slopes[b] = _loglog_fit(sizes_v, yb)[0]
    ci = (float(np.percentile(slopes, 2.5)), float(np.percentile(slopes, 97.5)))
    return FitResult(slope, intercept, r2, ci, int(sizes_v.shape[0]))


_FIT_STATISTICS = ("cmax", "rank", "diam", "tmix", "chi")


def sweep_samples(result: "SweepResult", statistic: str, rank: int = 1) -> list[np.ndarray]:
    out = []
    for s in result.sizes:
        if statistic == "cmax":
            out.append(s.top[:, 0].astype(np.float64))
        elif statistic == "rank":
            out.append(s.top[:, rank - 1].astype(np.float64))
        elif statistic == "chi":
            out.append(s.chi)
        elif statistic == "diam":
            out.append(s.diam.astype(np.float64))
        elif statistic == "tmix":
            out.append(s.tmix[~np.isnan(s.tmix)])
        else:
            raise ValueError(f"unknown fit statistic {statistic!r}")
    return out


def fit_from_sweep(
    result: "SweepResult",
    statistic: str = "cmax",
    rank: int = 1,
    summary: str = "median",
    n_boot: int = 1000,
) -> FitResult:
    return fit_exponent(
        [s.V for s in result.sizes],
        sweep_samples(result, statistic, rank),
        summary=summary,
        n_boot=n_boot,
        seed=result.plan.seed,
    )


def tail_exponent(
    curve: TailCurve,
    k_window: tuple[float, float],
    min_span: float = 10.0,
    n_boot: int = 1000,
    seed: int = 0,
) -> FitResult:
    """Log-log slope of P(|C| >= k) over a k-window spanning >= one decade."""
    ks = curve.ks.astype(np.float64)
    sel = (ks >= k_window[0]) & (ks <= k_window[1])
    probs = curve.values()
    sel &= probs > 0
    if sel.sum() < 3 or ks[sel].max() / ks[sel].min() < min_span:
        raise WindowTooNarrow(
            f"window {k_window} keeps {int(sel.sum())} usable points; "
            f"need >= 3 spanning a factor {min_span}"
        )
    kk, pp = ks[sel], probs[sel]
    slope, intercept, r2 = _loglog_fit(kk, pp)
    samples = curve.samples[:, sel]
    boot_rng = np.random.default_rng(seed)
    R = samples.shape[0]
    slopes = np.empty(n_boot)
    for b in range(n_boot):
        mb = samples[boot_rng.integers(0, R, R)].mean(axis=0)
        slopes[b] = _loglog_fit(kk, mb)[0] if np.all(mb > 0) else slope
    ci = (float(np.percentile(slopes, 2.5)), float(np.percentile(slopes, 97.5)))
    return FitResult(slope, intercept, r2, ci, int(sel.sum()))


def tail_curve_of(size: SizeResult) -> TailCurve:
    samples = size.z.astype(np.float64) / size.V
    probs = [_mean_se(samples[:, j]) for j in range(size.k_grid.shape[0])]
    return TailCurve(size.k_grid, probs, samples)


# ---------------------------------------------------------------------------
# non-concentration and ordered clusters


def ks_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Two-sample Kolmogorov-Smirnov statistic."""
    a, b = np.sort(a), np.sort(b)
    grid = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, grid, side="right") / a.shape[0]
    cdf_b = np.searchsorted(b, grid, side="right") / b.shape[0]
    return float(np.abs(cdf_a - cdf_b).max())


@dataclass(frozen=True)
class NonconcentrationReport:
    rows: list[dict]
    ks_smallest_vs_largest: float
    cv_stability: bool  # CV at largest size >= 0.5 * CV at smallest
    median_tightness: bool  # rescaled medians within a factor 2 across sizes
    min_cv: float
    flags: tuple[str, ...] = ()

    @property
    def passed(self) -> bool:
        return self.cv_stability and self.median_tightness and "degenerate" not in self.flags


def nonconcentration_report(entries: list[tuple[int, np.ndarray]]) -> NonconcentrationReport:
    """Fluctuation diagnostics for |C_max| V^(-2/3) across >= 3 sizes."""
    if len(entries) < 3:
        raise InsufficientSamples("need >= 3 sizes")
    rows = []
    for V, samples in entries:
        samples = np.asarray(samples, dtype=np.float64)
        if samples.shape[0] < 200:
            raise InsufficientSamples("need >= 200 samples per size")
        mean = samples.mean()
        cv = float(samples.std(ddof=1) / mean) if mean else float("nan")
        q25, q50, q75 = np.percentile(samples, [25, 50, 75])
        rows.append(
            {"V": int(V), "cv": cv, "median": float(q50), "iqr": float(q75 - q25)}
        )
    cvs = [r["cv"] for r in rows]
    medians = [r["median"] for r in rows]
    flags = ("degenerate",) if min(cvs) == 0.0 else ()
    return NonconcentrationReport(
        rows=rows,
        ks_smallest_vs_largest=ks_distance(
            np.asarray(entries[0][1], dtype=np.float64),
            np.asarray(entries[-1][1], dtype=np.float64),
        ),
        cv_stability=cvs[-1] >= 0.5 * cvs[0],
        median_tightness=max(medians) <= 2.0 * min(medians),
        min_cv=float(min(cvs)),
        flags=flags,
    )


@dataclass(frozen=True)
class RankStats:
    rank: int
    mean: Estimate
    rescaled_median: float
    rescaled_quantiles: dict[int, float]
    zero_count: int
    samples: np.ndarray = field(repr=False)


def ordered_cluster_stats(
    spec: GraphSpec, p: float, m: int, replicates: int, seed: int, workers: int = 1
) -> list[RankStats]:
    """Distribution of |C_(i)| V^(-2/3) for ranks i = 1..m.

    Replicates with fewer than i clusters contribute |C_(i)| = 0; those are
    counted in ``zero_count`` rather than dropped.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    batch = collect_replicates(spec, p, seed, replicates, m=m, workers=workers)
    scale = spec.vertex_count ** (2.0 / 3.0)
    out = []
    for i in range(m):
        samples = batch.top[:, i].astype(np.float64)
        rescaled = samples / scale
        out.append(
            RankStats(
                rank=i + 1,
                mean=_mean_se(samples),
                rescaled_median=float(np.median(rescaled)),
                rescaled_quantiles={
                    q: float(np.percentile(rescaled, q)) for q in (5, 25, 50, 75, 95)
                },
                zero_count=int((samples == 0).sum()),
                samples=samples,
            )
        )
    return out


# ---------------------------------------------------------------------------
# record emission


@dataclass
class SweepResult:
    plan: SweepPlan
    sizes: list[SizeResult]

    def records(self) -> list[dict]:
        boot_rng = np.random.default_rng(self.plan.seed)
        out = []
        lam = self.plan.policy.lam if self.plan.policy.mode == "find_pc" else None

        def rec(size: SizeResult, statistic, value, se, record_type="estimate", **extra):
            row = {
                "record_type": record_type,
                "spec": size.spec.to_dict(),
                "p": size.p,
                "lambda": lam,
                "seed": self.plan.seed,
                "replicates": size.replicates,
                "statistic": statistic,
                "value": value,
                "std_error": se,
                "flags": list(size.flags),
            }
            row.update(extra)
            out.append(row)

        def boot_se(samples: np.ndarray, stat) -> float:
            samples = samples[~np.isnan(samples)]
            if samples.shape[0] < 2:
                return 0.0
            n = samples.shape[0]
            vals = [
                stat(samples[boot_rng.integers(0, n, n)]) for _ in range(200)
            ]
            return float(np.std(vals, ddof=1))

        for size in self.sizes:
            if size.pc is not None:
                lo, hi = size.pc.ci
                rec(
                    size, "p_hat", size.pc.p_hat, (hi - lo) / 2.0,
                    record_type="critical_point",
                )
            if "chi" in self.plan.statistics:
                est = _mean_se(size.chi)
                rec(size, "chi", est.value, est.std_error)
            if "cmax" in self.plan.statistics:
                cmax = size.top[:, 0].astype(np.float64)
                est = _mean_se(cmax)
                rec(size, "cmax_mean", est.value, est.std_error)
                rec(size, "cmax_median", float(np.median(cmax)), boot_se(cmax, np.median))
                rs = size.cmax_rescaled()
                cv = float(rs.std(ddof=1) / rs.mean()) if rs.mean() else None
                rec(size, "cmax_rescaled_cv", cv,
                    boot_se(rs, lambda x: x.std(ddof=1) / x.mean() if x.mean() else 0.0))
            if "ranks" in self.plan.statistics:
                scale = size.V ** (2.0 / 3.0)
                for i in range(self.plan.m_ranks):
                    vals = size.top[:, i].astype(np.float64)
                    est = _mean_se(vals)
                    rec(size, "rank_mean", est.value, est.std_error, rank=i + 1)
                    rec(size, "rank_median", float(np.median(vals)),
                        boot_se(vals, np.median), rank=i + 1)
                    rec(size, "rank_rescaled_median", float(np.median(vals / scale)),
                        boot_se(vals / scale, np.median), rank=i + 1)
            if "tail" in self.plan.statistics:
                zf = size.z.astype(np.float64)
                for j, k in enumerate(size.k_grid):
                    tail = _mean_se(zf[:, j] / size.V)
                    rec(size, "tail", tail.value, tail.std_error, k=int(k))
                    zm = _mean_se(zf[:, j])
                    rec(size, "zgeq_mean", zm.value, zm.std_error, k=int(k))
            if "diameter" in self.plan.statistics and size.diam is not None:
                dvals = size.diam.astype(np.float64)
                rec(size, "diam_median", float(np.median(dvals)), boot_se(dvals, np.median))
                rec(size, "diam_exact_fraction", float(size.diam_exact.mean()), 0.0)
            if "mixing" in self.plan.statistics and size.tmix is not None:
                tv = size.tmix[~np.isnan(size.tmix)]
                if tv.shape[0]:
                    rec(size, "tmix_median", float(np.median(tv)), boot_se(tv, np.median))
                rec(size, "tmix_exact_fraction", float(size.tmix_exact.mean()), 0.0)
                exact = size.tmix_exact & size.diam_exact
                bound = 8.0 * size.cmax_edges * size.diam
                violations = int(np.sum(size.tmix[exact] > bound[exact] + 1e-9))
                rec(size, "sandwich_violations", violations, 0.0,
                    record_type="audit")
        return out

    def samples_payload(self) -> dict:
        sizes = []
        for s in self.sizes:
            stats: dict = {
                "chi": s.chi.tolist(),
                "cmax": s.top[:, 0].tolist(),
            }
            for i in range(1, self.plan.m_ranks):
                stats[f"rank{i + 1}"] = s.top[:, i].tolist()
            stats["z"] = {str(int(k)): s.z[:, j].tolist() for j, k in enumerate(s.k_grid)}
            if s.diam is not None:
                stats["diam"] = s.diam.tolist()
                stats["diam_exact"] = s.diam_exact.astype(int).tolist()
            if s.tmix is not None:
                stats["tmix"] = [None if math.isnan(x) else x for x in s.tmix]
                stats["cmax_edges"] = s.cmax_edges.tolist()
            sizes.append(
                {"spec": s.spec.to_dict(), "p": s.p, "V": s.V, "statistics": stats}
            )
        return {"seed": self.plan.seed, "sizes": sizes}


def fit_record(fit: FitResult, result: SweepResult, statistic: str, **extra) -> dict:
    specs = [s.spec for s in result.sizes]
    desc = specs[0].to_dict()
    desc.pop("r", None)
    desc.pop("n", None)
    desc["sizes"] = [s.vertex_count for s in specs]
    row = {
        "record_type": "fit",
        "spec": desc,
        "p": None,
        "lambda": result.plan.policy.lam if result.plan.policy.mode == "find_pc" else None,
        "seed": result.plan.seed,
        "replicates": result.plan.replicates,
        "statistic": f"fit:{statistic}",
        "value": fit.slope,
        "std_error": (fit.slope_ci[1] - fit.slope_ci[0]) / 4.0,
        "flags": sorted({f for s in result.sizes for f in s.flags}),
    }
    row.update(extra)
    return row
