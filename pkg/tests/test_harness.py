import numpy as np
import pytest

from percolab.estimators import Estimate, TailCurve, cmax_distribution, estimate_chi
from percolab.graphs import Family, GraphSpec
from percolab.harness import (
    InsufficientPoints,
    InsufficientSamples,
    PPolicy,
    SweepPlan,
    WindowTooNarrow,
    fit_exponent,
    fit_from_sweep,
    ks_distance,
    nonconcentration_report,
    ordered_cluster_stats,
    run_sweep,
    tail_curve_of,
    tail_exponent,
)
from percolab.oracle import enumerate_exact
from percolab.records import canonical_json

TRI = GraphSpec(Family.TORUS_NN, d=1, r=3)


def test_fit_exponent_synthetic_power_laws():
    vs = [10, 100, 1000, 10000]
    fit = fit_exponent(vs, [[v ** (2 / 3)] for v in vs])
    assert fit.slope == pytest.approx(2 / 3, abs=1e-9)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
    assert fit.slope_ci[0] == pytest.approx(fit.slope_ci[1], abs=1e-9)

    fit = fit_exponent(vs, [[3.7 * v] for v in vs])
    assert fit.slope == pytest.approx(1.0, abs=1e-9)  # intercept absorbs the constant
    assert fit.intercept == pytest.approx(np.log(3.7), abs=1e-9)

    with pytest.raises(InsufficientPoints):
        fit_exponent([10, 100], [[1], [2]])


def _curve(ks, probs, replicates=40):
    ests = [Estimate(float(p), 0.0, replicates) for p in probs]
    return TailCurve(np.asarray(ks, dtype=np.int64), ests, np.tile(probs, (replicates, 1)))


def test_tail_exponent_synthetic():
    ks = np.array([16, 32, 64, 128, 256], dtype=np.int64)
    probs = ks.astype(float) ** -0.5
    fit = tail_exponent(_curve(ks, probs), (16, 256))
    assert fit.slope == pytest.approx(-0.5, abs=1e-9)
    fit = tail_exponent(_curve(ks, 3 * probs), (16, 256))  # prefactor is absorbed
    assert fit.slope == pytest.approx(-0.5, abs=1e-9)
    with pytest.raises(WindowTooNarrow):
        tail_exponent(_curve(ks, probs), (16, 64))


def test_ks_distance():
    a = np.array([1.0, 2.0, 3.0])
    assert ks_distance(a, a.copy()) == 0.0
    assert ks_distance(a, a + 10) == 1.0


def test_nonconcentration_report():
    rng = np.random.default_rng(0)
    entries = [(v, 0.5 + 0.2 * rng.random(300)) for v in (100, 1000, 10000)]
    rep = nonconcentration_report(entries)
    assert rep.passed and rep.min_cv > 0
    # deterministic samples: degenerate, flagged
    entries = [(v, np.full(300, 2.0)) for v in (100, 1000, 10000)]
    rep = nonconcentration_report(entries)
    assert "degenerate" in rep.flags and not rep.passed
    assert rep.ks_smallest_vs_largest == 0.0
    with pytest.raises(InsufficientSamples):
        nonconcentration_report(entries[:2])
    with pytest.raises(InsufficientSamples):
        nonconcentration_report([(v, np.ones(10)) for v in (1, 2, 3)])


def test_ordered_cluster_stats_triangle():
    exact = enumerate_exact(TRI, 0.5)
    stats = ordered_cluster_stats(TRI, 0.5, m=2, replicates=30000, seed=21)
    assert stats[0].mean.agrees_with(exact.e_cmax)
    assert stats[1].mean.agrees_with(exact.ordered_means[1])  # E|C_(2)| = 1/2
    assert stats[1].zero_count > 0  # single-cluster configs contribute zeros


def test_ordered_cluster_stats_degenerate_and_rank1():
    q3 = GraphSpec(Family.HYPERCUBE, d=3)
    stats = ordered_cluster_stats(q3, 1.0, m=2, replicates=200, seed=1)
    assert np.all(stats[1].samples == 0)
    stats = ordered_cluster_stats(q3, 0.5, m=1, replicates=300, seed=2)
    dist = cmax_distribution(q3, 0.5, replicates=300, seed=2)
    assert np.array_equal(stats[0].samples / q3.vertex_count ** (2 / 3), dist.samples)


def test_sweep_single_size_matches_direct_estimate():
    plan = SweepPlan(
        specs=(TRI,),
        policy=PPolicy(mode="fixed", p=0.5),
        statistics=("chi", "cmax"),
        replicates=400,
        seed=31,
    )
    result = run_sweep(plan)
    recs = result.records()
    chi_rec = next(r for r in recs if r["statistic"] == "chi")
    direct = estimate_chi(TRI, 0.5, 400, seed=31)
    assert chi_rec["value"] == direct.value
    assert chi_rec["std_error"] == direct.std_error


def test_sweep_triangle_matches_oracle():
    exact = enumerate_exact(TRI, 0.5)
    plan = SweepPlan(
        specs=(TRI,),
        policy=PPolicy(mode="fixed", p=0.5),
        statistics=("chi", "cmax", "ranks", "tail"),
        replicates=20000,
        seed=5,
    )
    result = run_sweep(plan)
    recs = result.records()

    def value(stat, **match):
        for r in recs:
            if r["statistic"] == stat and all(r.get(k) == v for k, v in match.items()):
                return r
        raise KeyError(stat)

    chi = value("chi")
    assert abs(chi["value"] - exact.chi) <= 3 * chi["std_error"]
    tail2 = value("tail", k=2)
    assert abs(tail2["value"] - exact.tail[2]) <= 3 * tail2["std_error"]
    zm = value("zgeq_mean", k=2)
    assert abs(zm["value"] - exact.z_mean[2]) <= 3 * zm["std_error"]
    r2 = value("rank_mean", rank=2)
    assert abs(r2["value"] - exact.ordered_means[1]) <= 3 * r2["std_error"]


def test_sweep_reproducible_and_worker_independent(tmp_path):
    specs = tuple(GraphSpec(Family.ERDOS_RENYI, n=n) for n in (128, 256, 512))
    outputs = []
    for workers in (1, 3):
        plan = SweepPlan(
            specs=specs,
            policy=PPolicy(mode="inverse_n"),
            statistics=("chi", "cmax", "ranks", "tail", "diameter"),
            replicates=60,
            seed=77,
            workers=workers,
        )
        result = run_sweep(plan)
        outputs.append(
            (canonical_json(result.records()), canonical_json(result.samples_payload()))
        )
    assert outputs[0] == outputs[1]


def test_er_cmax_median_scaling_spec_example():
    # medians of |C_max| at p = 1/n over n = 2^10..2^16
    specs = tuple(GraphSpec(Family.ERDOS_RENYI, n=2**k) for k in range(10, 17))
    plan = SweepPlan(
        specs=specs,
        policy=PPolicy(mode="inverse_n"),
        statistics=("cmax",),
        replicates=200,
        seed=3,
    )
    result = run_sweep(plan)
    recs = [r for r in result.records() if r["statistic"] == "cmax_median"]
    assert len(recs) == 7
    fit = fit_from_sweep(result, "cmax")
    assert 0.60 <= fit.slope <= 0.73


def test_sweep_plan_validation():
    with pytest.raises(ValueError):
        SweepPlan(
            specs=(TRI, TRI),
            policy=PPolicy(mode="fixed", p=0.5),
            statistics=("chi",),
            replicates=10,
            seed=0,
        )
    with pytest.raises(ValueError):
        SweepPlan(
            specs=(TRI,),
            policy=PPolicy(mode="fixed", p=0.5),
            statistics=("bogus",),
            replicates=10,
            seed=0,
        )
    with pytest.raises(ValueError):
        PPolicy(mode="fixed")
    # mixing implies diameter (needed for the sandwich audit)
    plan = SweepPlan(
        specs=(TRI,),
        policy=PPolicy(mode="fixed", p=0.5),
        statistics=("cmax", "mixing"),
        replicates=10,
        seed=0,
    )
    assert "diameter" in plan.statistics


def test_tail_curve_of_sweep():
    plan = SweepPlan(
        specs=(GraphSpec(Family.HYPERCUBE, d=3),),
        policy=PPolicy(mode="fixed", p=0.5),
        statistics=("tail",),
        replicates=500,
        seed=9,
    )
    result = run_sweep(plan)
    curve = tail_curve_of(result.sizes[0])
    assert curve.probs[0].value == 1.0
    assert np.all(np.diff(curve.values()) <= 0)
