import numpy as np
import pytest

from percolab.estimators import (
    cmax_distribution,
    default_k_grid,
    estimate_chi,
    inequality_audit_exact,
    inequality_audit_mc,
    tail_probability,
    two_point,
    zgeq_moments,
)
from percolab.graphs import Family, GraphSpec, VertexOutOfRange
from percolab.oracle import enumerate_exact

TRI = GraphSpec(Family.TORUS_NN, d=1, r=3)
C4 = GraphSpec(Family.TORUS_NN, d=1, r=4)
K4 = GraphSpec(Family.COMPLETE, n=4)
Q3 = GraphSpec(Family.HYPERCUBE, d=3)


def test_chi_degenerate_exact():
    est = estimate_chi(Q3, 0.0, replicates=50, seed=1)
    assert est.value == 1.0 and est.std_error == 0.0
    est = estimate_chi(Q3, 1.0, replicates=50, seed=1)
    assert est.value == 8.0 and est.std_error == 0.0
    with pytest.raises(ValueError):
        estimate_chi(Q3, 0.5, replicates=1, seed=1)


def test_chi_matches_oracle():
    exact = enumerate_exact(TRI, 0.5).chi
    est = estimate_chi(TRI, 0.5, replicates=30000, seed=4)
    assert est.agrees_with(exact)


def test_tail_examples():
    curve = tail_probability(TRI, 0.5, [1, 2, 3], replicates=30000, seed=9)
    assert curve.probs[0].value == 1.0 and curve.probs[0].std_error == 0.0
    assert curve.probs[1].agrees_with(3 / 4)
    assert curve.probs[2].agrees_with(1 / 2)
    values = curve.values()
    assert np.all(np.diff(values) <= 0)
    with pytest.raises(ValueError):
        tail_probability(TRI, 0.5, [2, 2], 100, 0)


def test_two_point():
    assert two_point(Q3, 1.0, 5, replicates=100, seed=0).value == 1.0
    assert two_point(Q3, 0.0, 5, replicates=100, seed=0).value == 0.0
    est = two_point(TRI, 0.5, 1, replicates=30000, seed=2)
    assert est.agrees_with(5 / 8)
    with pytest.raises(VertexOutOfRange):
        two_point(TRI, 0.5, 3, 100, 0)
    with pytest.raises(VertexOutOfRange):
        two_point(TRI, 0.5, 0, 100, 0)


def test_zgeq_moments():
    m = zgeq_moments(Q3, 0.5, k=1, replicates=200, seed=3)
    assert m.mean.value == 8.0 and m.mean.std_error == 0.0
    assert m.variance.value == 0.0 and m.variance.std_error == 0.0
    m = zgeq_moments(TRI, 0.5, k=2, replicates=30000, seed=5)
    assert m.mean.agrees_with(9 / 4)
    assert m.variance.agrees_with(15 / 16)
    assert m.third_moment.agrees_with(132 / 8)
    with pytest.raises(ValueError):
        zgeq_moments(TRI, 0.5, 2, replicates=5, seed=0)


def test_cmax_distribution():
    d = cmax_distribution(Q3, 1.0, replicates=200, seed=1)
    assert np.all(d.samples == d.samples[0])
    assert d.samples[0] == pytest.approx(8 ** (1 / 3), rel=1e-15)
    assert d.coefficient_of_variation == 0.0
    d = cmax_distribution(Q3, 0.0, replicates=200, seed=1)
    assert np.all(d.samples == d.samples[0])
    assert d.samples[0] == pytest.approx(8 ** (-2 / 3), rel=1e-15)
    d = cmax_distribution(TRI, 0.5, replicates=30000, seed=8)
    mean_cmax = d.samples.mean() * 3 ** (2 / 3)
    se = d.samples.std(ddof=1) / np.sqrt(30000) * 3 ** (2 / 3)
    assert abs(mean_cmax - 19 / 8) <= 3 * se
    assert set(d.quantiles) == {1, 5, 25, 50, 75, 95, 99}
    with pytest.raises(ValueError):
        cmax_distribution(TRI, 0.5, replicates=50, seed=0)


def test_identity_tail_vs_zgeq_independent_seeds():
    """V * tail(k) and zgeq mean estimate the same quantity."""
    V = Q3.vertex_count
    for k in (2, 4):
        t = tail_probability(Q3, 0.45, [k], replicates=20000, seed=100)
        z = zgeq_moments(Q3, 0.45, k, replicates=20000, seed=200)
        gap = abs(V * t.probs[0].value - z.mean.value)
        se = np.hypot(V * t.probs[0].std_error, z.mean.std_error)
        assert gap <= 3 * se


def test_chi_monotone_in_p():
    ests = [estimate_chi(Q3, p, 4000, seed=6) for p in (0.2, 0.5, 0.8)]
    for a, b in zip(ests, ests[1:]):
        assert a.value + 3 * a.std_error < b.value - 3 * b.std_error


def test_default_k_grid():
    assert default_k_grid(8).tolist() == [1, 2, 4, 8]
    assert default_k_grid(100).tolist() == [1, 2, 4, 8, 16, 32, 64]


@pytest.mark.parametrize("spec", (TRI, C4, K4, Q3), ids=lambda s: s.family.value + str(s.vertex_count))
@pytest.mark.parametrize("p", (0.2, 0.5, 0.8))
def test_inequality_audit_exact_all(spec, p):
    checks = inequality_audit_exact(enumerate_exact(spec, p))
    assert len(checks) == 5
    for c in checks:
        assert c.passed, f"{c.name} violated: margin {c.worst_margin}"


def test_inequality_audit_mc():
    checks = inequality_audit_mc(Q3, 0.5, [1, 2, 4, 8], replicates=20000, seed=12)
    assert all(c.passed for c in checks)


def test_worker_pool_values_identical():
    spec = GraphSpec(Family.TORUS_NN, d=3, r=5)  # V=125, loop path
    a = estimate_chi(spec, 0.2, 64, seed=3, workers=1)
    b = estimate_chi(spec, 0.2, 64, seed=3, workers=4)
    assert a == b
