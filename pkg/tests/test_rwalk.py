import numpy as np
import pytest

from percolab.geometry import diameter
from percolab.graphs import Family, GraphSpec
from percolab.percolate import BondConfig, extract_cluster, sample_bonds
from percolab.rwalk import (
    SingletonCluster,
    lazy_kernel,
    mixing_time_exact,
    mixing_time_spectral,
    mixing_time_upper_edge_diam,
    stationary,
)

TRI = GraphSpec(Family.TORUS_NN, d=1, r=3)


def tri_cluster(open_edges, member=None, rank=1):
    config = BondConfig(TRI, 0.5, 0, 0, np.asarray(open_edges, dtype=np.int64))
    if member is not None:
        return extract_cluster(config, vertex=member)
    return extract_cluster(config, rank=rank)


def single_edge():
    return tri_cluster([0], rank=1)


def path3():
    return tri_cluster([0, 2])


def full_triangle():
    return extract_cluster(sample_bonds(TRI, 1.0, 0), rank=1)


def exact_tmix_by_matrix_power(sub, nmax=4096):
    """Independent oracle: dense matrix powers, same TV criterion."""
    P = lazy_kernel(sub).matrix
    pi = stationary(sub)
    for n in range(1, nmax):
        M = np.linalg.matrix_power(P, n)
        if 0.5 * np.abs(M - pi).sum(axis=1).max() <= 0.25:
            return n
    raise AssertionError("no mixing within nmax")


def test_stationary_examples():
    assert stationary(single_edge()).tolist() == [0.5, 0.5]
    assert stationary(path3()).tolist() == [0.25, 0.5, 0.25]
    assert stationary(full_triangle()).tolist() == pytest.approx([1 / 3] * 3)
    with pytest.raises(SingletonCluster):
        stationary(tri_cluster([0], member=2))


def test_kernel_rows_and_reversibility():
    for sub in (single_edge(), path3(), full_triangle()):
        P = lazy_kernel(sub).matrix
        pi = stationary(sub)
        assert np.allclose(P.sum(axis=1), 1.0, atol=1e-12)
        flux = pi[:, None] * P
        assert np.allclose(flux, flux.T, atol=1e-12)


def test_mixing_small_cases():
    assert mixing_time_exact(single_edge()).t_mix == 1
    assert mixing_time_exact(path3()).t_mix == 1
    res = mixing_time_exact(tri_cluster([0], member=2))
    assert res.t_mix == 0 and res.exact and "singleton" in res.flags


def test_mixing_matches_matrix_power_oracle():
    for sub in (single_edge(), path3(), full_triangle()):
        assert mixing_time_exact(sub).t_mix == exact_tmix_by_matrix_power(sub)
    spec = GraphSpec(Family.ERDOS_RENYI, n=96)
    for rep in range(6):
        sub = extract_cluster(sample_bonds(spec, 1.4 / 96, 5, rep), rank=1)
        if sub.n_edges == 0:
            continue
        assert mixing_time_exact(sub).t_mix == exact_tmix_by_matrix_power(sub)


def test_stepwise_trace_matches_doubling():
    spec = GraphSpec(Family.ERDOS_RENYI, n=128)
    for rep in range(8):
        sub = extract_cluster(sample_bonds(spec, 1.2 / 128, 7, rep), rank=1)
        if sub.n_edges == 0:
            continue
        traced = mixing_time_exact(sub, trace=True)
        fast = mixing_time_exact(sub)
        assert traced.t_mix == fast.t_mix
        assert np.all(np.diff(traced.tv_trace) <= 1e-12)  # TV nonincreasing
        assert traced.tv_trace[-1] <= 0.25
        if traced.t_mix > 1:
            assert traced.tv_trace[-2] > 0.25  # minimality of t_mix


def test_step_budget_lower_bound():
    spec = GraphSpec(Family.ERDOS_RENYI, n=512)
    sub = extract_cluster(sample_bonds(spec, 1.0 / 512, 3, 0), rank=1)
    full = mixing_time_exact(sub)
    capped = mixing_time_exact(sub, max_steps=4)
    assert not capped.exact
    assert "step_budget_exceeded" in capped.flags
    assert capped.t_mix == 4 <= full.t_mix


def test_edge_diameter_upper_bound():
    assert mixing_time_upper_edge_diam(single_edge()).t_mix == 8
    assert mixing_time_upper_edge_diam(full_triangle()).t_mix == 24
    assert mixing_time_upper_edge_diam(path3()).t_mix == 32
    spec = GraphSpec(Family.ERDOS_RENYI, n=512)
    for rep in range(6):
        sub = extract_cluster(sample_bonds(spec, 1.0 / 512, 13, rep), rank=1)
        if sub.n_edges == 0:
            continue
        exact = mixing_time_exact(sub)
        upper = mixing_time_upper_edge_diam(sub)
        assert exact.t_mix <= upper.t_mix


def test_spectral_estimates():
    res = mixing_time_spectral(single_edge())
    assert res.bracket[0] == 0.0  # rank-one kernel: beta2 = 0
    assert res.bracket[0] <= 1 <= res.bracket[1]

    res = mixing_time_spectral(full_triangle())
    # lazy kernel on K3 has beta2 = 1/4: lower end (t_rel - 1) ln 2
    assert res.bracket[0] == pytest.approx((4 / 3 - 1) * np.log(2), abs=1e-9)
    assert res.bracket[0] <= 1 <= res.bracket[1]

    with pytest.raises(SingletonCluster):
        mixing_time_spectral(tri_cluster([0], member=2))


def test_spectral_bracket_contains_exact():
    spec = GraphSpec(Family.ERDOS_RENYI, n=256)
    checked = 0
    for rep in range(8):
        sub = extract_cluster(sample_bonds(spec, 1.1 / 256, 29, rep), rank=1)
        if sub.n_edges == 0:
            continue
        exact = mixing_time_exact(sub)
        spectral = mixing_time_spectral(sub)
        assert spectral.bracket[0] <= exact.t_mix <= spectral.bracket[1]
        checked += 1
    assert checked >= 5
