import networkx as nx
import pytest

from congest_ftp.graph_core import Graph
from congest_ftp.harness import GraphSpec, generate


def connected_gnp(n: int, p: float, seed: int) -> Graph:
    """G(n, p) resampled until connected."""
    return generate(GraphSpec("erdos_renyi", n, p=p), seed)


def lollipop(n: int, ring: int) -> Graph:
    return generate(GraphSpec("lollipop", n, cycle_length=ring), 0)


def to_nx(g: Graph) -> nx.Graph:
    h = nx.Graph()
    h.add_nodes_from(range(g.n))
    h.add_edges_from(g.edges)
    return h


@pytest.fixture
def small_gnp():
    return connected_gnp(24, 0.25, 3)
