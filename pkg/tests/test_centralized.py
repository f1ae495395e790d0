import pytest

from congest_ftp.centralized import (
    DualFaultParams,
    SingleFaultParams,
    dual_ftmbfs_centralized,
    ftmbfs_centralized,
    last_edges_single,
)
from congest_ftp.graph_core import Graph
from congest_ftp.oracle import canonical_last_edges, verify_preserver

from conftest import connected_gnp, lollipop


@pytest.mark.parametrize("seed", range(4))
def test_single_fault_without_samples_is_exact(seed):
    g = connected_gnp(28, 0.18, seed)
    srcs = [0, 3]
    res = ftmbfs_centralized(g, srcs, seed, sample_prob=0.0)
    assert not res.samples["R"]
    assert verify_preserver(g, res.subgraph.edges, srcs, 1).passed


def test_unbounded_suffix_last_edges_are_canonical():
    g = connected_gnp(20, 0.2, 9)
    full = last_edges_single(g, [0], g.n)
    assert full <= canonical_last_edges(g, [0], 1)
    tree = canonical_last_edges(g, [0], 0)
    assert verify_preserver(g, full | tree, [0], 1).passed


def test_lollipop_with_and_without_samples():
    g = lollipop(40, 20)
    res = ftmbfs_centralized(g, [0], 0, sample_prob=0.0)
    assert verify_preserver(g, res.subgraph.edges, [0], 1).passed
    clamped = ftmbfs_centralized(g, [0], 0, sample_constant=10.0)
    assert verify_preserver(g, clamped.subgraph.edges, [0], 1).passed


@pytest.mark.parametrize("seed", range(3))
def test_dual_with_default_sampling(seed):
    g = connected_gnp(22, 0.25, seed)
    res = dual_ftmbfs_centralized(g, [0, 1], seed)
    assert verify_preserver(g, res.subgraph.edges, [0, 1], 2).passed
    assert sum(res.per_vertex_last_edges) > 0


def test_params_shapes():
    s = SingleFaultParams.for_graph(10_000, 4)
    d = DualFaultParams.for_graph(10_000, 4)
    assert d.sigma1 >= d.sigma2 >= 1 and s.sigma >= 1
    assert 0 < d.r1_prob <= d.r2_prob <= 1


def test_empty_sources_rejected():
    with pytest.raises(ValueError):
        ftmbfs_centralized(Graph(2, [(0, 1)]), [])
