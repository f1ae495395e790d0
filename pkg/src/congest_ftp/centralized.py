"""Sequential reference constructions of single- and dual-failure FT-MBFS.

These mirror the distributed modules but compute replacement paths directly.
Their parameters are their own: the dual construction here uses
``sigma1 = sqrt(n/|S|)``, unlike the distributed dual construction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .graph_core import (
    Edge,
    FaultSet,
    Graph,
    PreserverSubgraph,
    ShortestPathTree,
    bfs_consistent,
    derive_seed,
    edge,
    sample,
    sample_probability,
    suffix,
)


@dataclass(frozen=True)
class SingleFaultParams:
    sigma: int
    sample_prob: float

    @classmethod
    def for_graph(cls, n: int, k: int, constant: float = 10.0, sample_prob: float | None = None):
        sigma = max(1, math.ceil(math.sqrt(n / k)))
        p = sample_probability(n, sigma, constant) if sample_prob is None else min(1.0, sample_prob)
        return cls(sigma, p)


@dataclass(frozen=True)
class DualFaultParams:
    sigma1: int
    sigma2: int
    r1_prob: float
    r2_prob: float

    @classmethod
    def for_graph(cls, n: int, k: int, constant: float = 10.0, sample_prob: float | None = None):
        ratio = n / k
        s1 = max(1, math.ceil(math.sqrt(ratio)))
        s2 = max(1, min(s1, math.ceil(ratio**0.25)))
        if sample_prob is not None:
            p = min(1.0, sample_prob)
            return cls(s1, s2, p, p)
        return cls(s1, s2, sample_probability(n, s1, constant), sample_probability(n, s2, constant))


@dataclass
class CentralizedResult:
    subgraph: PreserverSubgraph
    params: object
    samples: dict[str, frozenset[int]]
    per_vertex_last_edges: list[int] = field(default_factory=list)


def _sources(sources: Iterable[int]) -> list[int]:
    srcs = sorted(set(sources))
    if not srcs:
        raise ValueError("sources must be nonempty")
    return srcs


def _below(tree: ShortestPathTree, children: list[list[int]], y: int, limit: int) -> list[int]:
    """Vertices of the subtree at ``y`` within ``limit - 1`` levels of ``y``."""
    out, frontier = [], [y]
    for _ in range(limit):
        if not frontier:
            break
        out.extend(frontier)
        frontier = [c for v in frontier for c in children[v]]
    return out


def _tree_edge_targets(g: Graph, tree: ShortestPathTree, sigma: int):
    """Yield ``(e, targets)`` where targets are the ``t`` with ``e`` in the sigma-suffix of ``pi(s,t)``."""
    children = tree.children()
    for y in range(g.n):
        x = tree.parent[y]
        if x is not None:
            yield edge(x, y), _below(tree, children, y, sigma)


def last_edges_single(g: Graph, sources: Sequence[int], sigma: int) -> set[Edge]:
    """``LastE(P(s,t,e))`` for every ``s``, ``t`` and ``e`` among the last ``sigma`` edges of ``pi(s,t)``."""
    out: set[Edge] = set()
    for s in sources:
        tree = bfs_consistent(g, s)
        for e, targets in _tree_edge_targets(g, tree, sigma):
            alt = bfs_consistent(g, s, [e])
            for t in targets:
                p = alt.parent[t]
                if p is not None:
                    out.add(edge(p, t))
    return out


def ftmbfs_centralized(
    g: Graph,
    sources: Iterable[int],
    rng_seed: int = 0,
    *,
    sample_constant: float = 10.0,
    sample_prob: float | None = None,
) -> CentralizedResult:
    """BFS trees of ``S``, short-suffix last edges, and BFS trees of a random sample."""
    srcs = _sources(sources)
    params = SingleFaultParams.for_graph(g.n, len(srcs), sample_constant, sample_prob)
    r = sample(g, params.sample_prob, derive_seed(rng_seed, "centralized-R"))
    h = PreserverSubgraph(g)
    for s in srcs:
        h.add_all(bfs_consistent(g, s).tree_edges(), "tree_S")
    h.add_all(last_edges_single(g, srcs, params.sigma), "last_edge")
    for v in sorted(r):
        h.add_all(bfs_consistent(g, v).tree_edges(), "tree_R")
    return CentralizedResult(h, params, {"R": r})


def dual_ftmbfs_centralized(
    g: Graph,
    sources: Iterable[int],
    rng_seed: int = 0,
    *,
    sample_constant: float = 10.0,
    sample_prob: float | None = None,
) -> CentralizedResult:
    """Dual-failure FT-MBFS from a single-failure structure over ``R1``,
    BFS trees over ``R2``, trees of ``S`` and the explicit last edges ``E_t``.
    """
    srcs = _sources(sources)
    params = DualFaultParams.for_graph(g.n, len(srcs), sample_constant, sample_prob)
    r1 = sample(g, params.r1_prob, derive_seed(rng_seed, "centralized-R1"))
    r2 = sample(g, params.r2_prob, derive_seed(rng_seed, "centralized-R2"))
    h = PreserverSubgraph(g)
    if r1:
        inner = ftmbfs_centralized(g, r1, derive_seed(rng_seed, "inner"), sample_constant=sample_constant,
                                   sample_prob=sample_prob)
        h.update(inner.subgraph, "R1_")
    for v in sorted(r2):
        h.add_all(bfs_consistent(g, v).tree_edges(), "tree_R2")
    for s in srcs:
        h.add_all(bfs_consistent(g, s).tree_edges(), "tree_S")
    per_vertex = [0] * g.n
    for s in srcs:
        tree = bfs_consistent(g, s)
        cache: dict[FaultSet, ShortestPathTree] = {}
        for e1, targets in _tree_edge_targets(g, tree, params.sigma1):
            alt1 = bfs_consistent(g, s, [e1])
            for t in targets:
                p1 = alt1.path_to(t)
                if p1 is None:
                    continue
                for e2 in suffix(p1, params.sigma2):
                    fs = FaultSet([e1, e2])
                    alt = cache.get(fs)
                    if alt is None:
                        alt = cache[fs] = bfs_consistent(g, s, fs)
                    per_vertex[t] += 1
                    p = alt.parent[t]
                    if p is not None:
                        h.add(edge(p, t), "dual_last_edge")
    return CentralizedResult(h, params, {"R1": r1, "R2": r2}, per_vertex)
