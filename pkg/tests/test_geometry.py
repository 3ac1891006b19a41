import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from percolab.geometry import (
    VertexNotInCluster,
    arm_probability,
    ball_growth,
    bfs,
    diameter,
)
from percolab.graphs import Family, GraphSpec
from percolab.percolate import BondConfig, cluster, extract_cluster, sample_bonds, subgraph_of_root

TRI = GraphSpec(Family.TORUS_NN, d=1, r=3)
C6 = GraphSpec(Family.TORUS_NN, d=1, r=6)
Q3 = GraphSpec(Family.HYPERCUBE, d=3)


def path3():
    # triangle with edges {0,1} and {1,2} open: a path a-b-c
    return extract_cluster(BondConfig(TRI, 0.5, 0, 0, np.array([0, 2])), rank=1)


def test_bfs_cases():
    single = extract_cluster(BondConfig(TRI, 0.5, 0, 0, np.array([0])), vertex=2)
    fld = bfs(single, 2)
    assert fld.of(2) == 0 and fld.max() == 0

    ring = extract_cluster(sample_bonds(C6, 1.0, 0), rank=1)
    assert bfs(ring, 0).max() == 3

    fld = bfs(path3(), 0)
    assert [fld.of(v) for v in (0, 1, 2)] == [0, 1, 2]
    with pytest.raises(VertexNotInCluster):
        bfs(path3(), 5)


def test_diameter_cases():
    single = extract_cluster(BondConfig(TRI, 0.5, 0, 0, np.array([0])), vertex=2)
    assert diameter(single).value == 0 and diameter(single).exact

    ring = extract_cluster(sample_bonds(C6, 1.0, 0), rank=1)
    assert diameter(ring).value == 3

    full = extract_cluster(sample_bonds(GraphSpec(Family.TORUS_NN, d=2, r=4), 1.0, 0), rank=1)
    res = diameter(full)
    assert res.value == 4 and res.exact and res.method == "all_pairs_bfs"


def test_diameter_double_sweep_is_lower_bound():
    spec = GraphSpec(Family.ERDOS_RENYI, n=800)
    for rep in range(5):
        config = sample_bonds(spec, 1.0 / 800, 17, rep)
        sub = extract_cluster(config, rank=1)
        exact = diameter(sub, exact_threshold=10**6)
        sweep = diameter(sub, exact_threshold=1)
        assert sweep.method == "double_sweep_lower_bound"
        assert not sweep.exact
        assert sweep.value <= exact.value


def test_diameter_matches_brute_force_small_clusters():
    spec = GraphSpec(Family.TORUS_NN, d=2, r=5)
    for rep in range(10):
        config = sample_bonds(spec, 0.45, 23, rep)
        labeling = cluster(config)
        for rank in range(1, min(4, labeling.n_clusters) + 1):
            sub = extract_cluster(config, rank=rank, labeling=labeling)
            if sub.n_vertices > 200:
                continue
            brute = max(bfs(sub, int(v)).max() for v in sub.vertices)
            assert diameter(sub).value == brute


def test_ball_growth_path():
    sub = path3()
    growth = ball_growth(sub, 0, 3)
    assert growth.tolist() == [0, 1, 2, 2]
    assert ball_growth(sub, 1, 2).tolist() == [0, 2, 2]


def test_ball_growth_monotone_with_plateau():
    config = sample_bonds(Q3, 0.6, 5)
    sub = extract_cluster(config, rank=1)
    growth = ball_growth(sub, int(sub.vertices[0]), 10)
    assert np.all(np.diff(growth) >= 0)
    assert growth[-1] == sub.n_edges


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.floats(0.2, 0.8))
def test_bfs_lipschitz_across_edges(seed, p):
    config = sample_bonds(Q3, p, seed)
    labeling = cluster(config)
    sub = subgraph_of_root(config, labeling, int(labeling.ranked_roots[0]))
    fld = bfs(sub, int(sub.vertices[0]))
    src = np.repeat(np.arange(sub.n_vertices), sub.degrees())
    assert np.all(np.abs(fld.dist[src] - fld.dist[sub.indices]) <= 1)
    assert np.all(fld.dist >= 0)


def test_arm_probability():
    assert arm_probability(TRI, 0.5, 0, replicates=200, seed=1).value == 1.0
    assert arm_probability(TRI, 0.0, 1, replicates=200, seed=1).value == 0.0
    est = arm_probability(TRI, 0.5, 1, replicates=20000, seed=3)
    assert est.agrees_with(3 / 4)  # some edge at the origin is open
    with pytest.raises(ValueError):
        arm_probability(TRI, 0.5, -1, 10, 0)


def test_arm_decay_diagnostic():
    spec = GraphSpec(Family.TORUS_NN, d=7, r=3)
    ests = [arm_probability(spec, 0.0737, k, replicates=300, seed=9) for k in (2, 4, 8)]
    ks = np.array([2, 4, 8])
    bounded = ks * np.array([e.value for e in ests])
    assert np.all(bounded < 10)  # k * P(arm at k) stays bounded near criticality
