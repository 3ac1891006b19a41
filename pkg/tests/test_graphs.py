import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from percolab.graphs import (
    Family,
    GraphSpec,
    InvalidSpec,
    VertexOutOfRange,
    degree,
    edge_count,
    edge_list,
    neighbors,
    vertex_coords,
    vertex_index,
    window_scale,
)


def spec_strategy():
    return st.one_of(
        st.builds(
            lambda d, r: GraphSpec(Family.TORUS_NN, d=d, r=r),
            st.integers(1, 3),
            st.integers(3, 5),
        ),
        st.builds(
            lambda d, L: GraphSpec(Family.TORUS_SPREAD, d=d, r=2 * L + 1 + 2, L=L),
            st.integers(1, 2),
            st.integers(1, 2),
        ),
        st.builds(lambda d: GraphSpec(Family.HYPERCUBE, d=d), st.integers(1, 6)),
        st.builds(
            lambda d, r: GraphSpec(Family.HAMMING, d=d, r=r),
            st.integers(1, 2),
            st.integers(2, 5),
        ),
        st.builds(lambda n: GraphSpec(Family.COMPLETE, n=n), st.integers(2, 12)),
    )


def test_degree_formulas():
    assert degree(GraphSpec(Family.TORUS_NN, d=7, r=5)) == 14
    assert degree(GraphSpec(Family.TORUS_SPREAD, d=1, r=7, L=2)) == 4
    assert degree(GraphSpec(Family.COMPLETE, n=4)) == 3
    assert degree(GraphSpec(Family.HYPERCUBE, d=3)) == 3
    assert degree(GraphSpec(Family.HAMMING, d=2, r=4)) == 6
    with pytest.raises(InvalidSpec):
        degree(GraphSpec(Family.ERDOS_RENYI, n=10))


def test_neighbor_examples():
    tri = GraphSpec(Family.TORUS_NN, d=1, r=3)
    assert {vertex_coords(tri, v)[0] for v in neighbors(tri, 0)} == {-1, 1}

    spread = GraphSpec(Family.TORUS_SPREAD, d=1, r=7, L=2)
    assert {vertex_coords(spread, v)[0] for v in neighbors(spread, 0)} == {-2, -1, 1, 2}

    cube = GraphSpec(Family.HYPERCUBE, d=3)
    origin = vertex_index(cube, (0, 0, 0))
    flips = neighbors(cube, origin)
    assert len(flips) == 3
    for v in flips:
        coords = vertex_coords(cube, v)
        assert sum(c != 0 for c in coords) == 1


def test_edge_counts():
    assert edge_list(GraphSpec(Family.TORUS_NN, d=1, r=3)).count == 3
    assert edge_list(GraphSpec(Family.TORUS_NN, d=7, r=5)).count == 5**7 * 14 // 2
    assert edge_list(GraphSpec(Family.COMPLETE, n=4)).count == 6


def test_invalid_specs():
    with pytest.raises(InvalidSpec):
        GraphSpec(Family.TORUS_NN, d=2, r=2)
    with pytest.raises(InvalidSpec):
        GraphSpec(Family.TORUS_SPREAD, d=1, r=4, L=2)
    with pytest.raises(InvalidSpec):
        GraphSpec(Family.COMPLETE, n=4, r=3)
    with pytest.raises(InvalidSpec):
        GraphSpec(Family.HYPERCUBE, d=0)
    with pytest.raises(InvalidSpec):
        GraphSpec.from_dict({"family": "complete", "n": 4, "extra": 1})


def test_spec_flags():
    assert GraphSpec(Family.TORUS_NN, d=3, r=4).flags() == ("theory_out_of_range",)
    assert GraphSpec(Family.TORUS_NN, d=7, r=3).flags() == ()
    assert GraphSpec(Family.ERDOS_RENYI, n=8).flags() == ("calibration_only",)


@settings(max_examples=40, deadline=None)
@given(spec_strategy())
def test_adjacency_properties(spec):
    V = spec.vertex_count
    omega = degree(spec)
    nbrs = {v: set(neighbors(spec, v)) for v in range(V)}
    for v in range(V):
        assert len(nbrs[v]) == omega
        assert v not in nbrs[v]
        for u in nbrs[v]:
            assert v in nbrs[u]
    assert edge_count(spec) == V * omega // 2


@settings(max_examples=40, deadline=None)
@given(spec_strategy(), st.integers(0, 10**9))
def test_edge_table_canonical(spec, salt):
    table = edge_list(spec)
    e = table.endpoints
    assert e.shape == (table.count, 2)
    assert np.all(e[:, 0] < e[:, 1])
    keys = e[:, 0] * spec.vertex_count + e[:, 1]
    assert np.all(np.diff(keys) > 0)  # strictly sorted, hence unique
    # a random edge's endpoints are adjacent
    idx = salt % table.count
    u, v = table.endpoints_of(np.array([idx]))
    assert int(v[0]) in neighbors(spec, int(u[0]))


@settings(max_examples=30, deadline=None)
@given(spec_strategy(), st.integers(0, 10**9))
def test_coords_roundtrip(spec, salt):
    if spec.family in (Family.COMPLETE, Family.ERDOS_RENYI):
        with pytest.raises(InvalidSpec):
            vertex_coords(spec, 0)
        return
    rng = np.random.default_rng(salt)
    for v in rng.integers(0, spec.vertex_count, 50):
        coords = vertex_coords(spec, int(v))
        assert vertex_index(spec, coords) == v
        r = spec.side
        assert all(-(r // 2) <= c <= (r + 1) // 2 - 1 for c in coords)
    with pytest.raises(VertexOutOfRange):
        vertex_coords(spec, spec.vertex_count)


def test_complete_unranking_large():
    spec = GraphSpec(Family.COMPLETE, n=3000)
    table = edge_list(spec)
    assert not table.dense
    idx = np.array([0, 1, 2998, 2999, table.count - 1, 12345678 % table.count])
    u, v = table.endpoints_of(idx)
    # rank(i, j) must invert to the same index
    ranks = u * spec.n - u * (u + 1) // 2 + (v - u - 1)
    assert np.array_equal(ranks, idx)
    assert np.all(u < v)


def test_window_scale_uses_expected_er_degree():
    er = GraphSpec(Family.ERDOS_RENYI, n=1000)
    comp = GraphSpec(Family.COMPLETE, n=1000)
    assert window_scale(er) == window_scale(comp) == pytest.approx(
        1.0 / (999 * 1000 ** (1 / 3))
    )
