"""+2 fault-tolerant additive spanners built on the FT-MBFS constructions.

Both keep every edge of low-degree vertices and add an FT-MBFS structure
w.r.t. a random source set that hits the neighborhood of every high-degree
vertex. The dual variant also wires each high-degree vertex to three sampled
neighbors, so one of them survives any two faults.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .congest_sim import NetworkConfig, StagedTrace
from .dist_dual import DualConfig, build_dual_ftmbfs
from .dist_ftmbfs import FtmbfsConfig, build_ftmbfs
from .graph_core import Graph, PreserverSubgraph, derive_seed, edge, sample, sample_probability


@dataclass
class SpannerConfig:
    network: NetworkConfig = field(default_factory=NetworkConfig)
    sample_constant: float = 10.0
    threshold_override: float | None = None
    source_prob: float | None = None
    ftmbfs: FtmbfsConfig | None = None
    dual: DualConfig | None = None


@dataclass(frozen=True)
class SpannerParams:
    threshold: float
    source_prob: float
    representatives: int

    @classmethod
    def single(cls, n: int, cfg: SpannerConfig) -> "SpannerParams":
        thr = cfg.threshold_override if cfg.threshold_override is not None else n ** (2 / 3)
        p = cfg.source_prob if cfg.source_prob is not None else sample_probability(n, n ** (2 / 3), cfg.sample_constant)
        return cls(max(1.0, thr), min(1.0, p), 2)

    @classmethod
    def dual(cls, n: int, cfg: SpannerConfig) -> "SpannerParams":
        thr = cfg.threshold_override if cfg.threshold_override is not None else 10 * n ** (8 / 9)
        p = cfg.source_prob if cfg.source_prob is not None else sample_probability(n, n ** (8 / 9), cfg.sample_constant)
        return cls(max(1.0, thr), min(1.0, p), 3)


@dataclass
class SpannerResult:
    subgraph: PreserverSubgraph
    params: SpannerParams
    sources: frozenset[int]
    high_degree: frozenset[int]
    representatives: dict[int, tuple[int, ...]]
    fallback: frozenset[int]
    trace: StagedTrace
    low_edges: int
    structure_edges: int

    def size_budget(self) -> int:
        extra = sum(self.subgraph.host.degree(v) for v in self.fallback)
        return self.low_edges + self.structure_edges + self.params.representatives * len(self.high_degree) + extra


def _common(g: Graph, params: SpannerParams, seed: int, strict_low: bool):
    if not g.is_connected():
        raise ValueError("spanner constructions need a connected graph")
    if strict_low:
        high = frozenset(v for v in range(g.n) if g.degree(v) >= params.threshold)
    else:
        high = frozenset(v for v in range(g.n) if g.degree(v) > params.threshold)
    h = PreserverSubgraph(g)
    low = 0
    for u, v in g.sorted_edges():
        if u not in high or v not in high:
            h.add((u, v), "low_degree")
            low += 1
    srcs = sample(g, params.source_prob, derive_seed(seed, "spanner-sources"))
    reps: dict[int, tuple[int, ...]] = {}
    fallback = set()
    for v in sorted(high):
        picked = tuple(u for u in g.adj[v] if u in srcs)[: params.representatives]
        if len(picked) < params.representatives:
            fallback.add(v)
            h.add_all((edge(v, u) for u in g.adj[v]), "fallback")
        reps[v] = picked
    return h, high, srcs, reps, frozenset(fallback), low


def ft_additive_spanner_single(g: Graph, config: SpannerConfig | None = None, seed: int = 0) -> SpannerResult:
    """Low-degree edges plus a single-failure FT-MBFS w.r.t. sampled sources."""
    cfg = config or SpannerConfig()
    params = SpannerParams.single(g.n, cfg)
    h, high, srcs, reps, fallback, low = _common(g, params, seed, strict_low=False)
    trace = StagedTrace()
    struct = 0
    if srcs and high:
        inner_cfg = cfg.ftmbfs or FtmbfsConfig(cfg.network, cfg.sample_constant)
        res = build_ftmbfs(g, sorted(srcs), inner_cfg, derive_seed(seed, "spanner-ftmbfs"))
        h.update(res.subgraph, "ftmbfs_")
        trace.extend(res.trace)
        struct = len(res.subgraph)
    # representative edges of the single-fault variant lie in the BFS trees of the sources
    return SpannerResult(h, params, srcs, high, reps, fallback, trace, low, struct)


def ft_additive_spanner_dual(g: Graph, config: SpannerConfig | None = None, seed: int = 0) -> SpannerResult:
    """Low-degree edges, three representative edges per high-degree vertex,
    and a dual-failure FT-MBFS w.r.t. sampled sources."""
    cfg = config or SpannerConfig()
    params = SpannerParams.dual(g.n, cfg)
    h, high, srcs, reps, fallback, low = _common(g, params, seed, strict_low=True)
    for v, us in reps.items():
        h.add_all((edge(v, u) for u in us), "representative")
    trace = StagedTrace()
    struct = 0
    if srcs and high:
        inner_cfg = cfg.dual or DualConfig(cfg.network, cfg.sample_constant)
        res = build_dual_ftmbfs(g, sorted(srcs), inner_cfg, derive_seed(seed, "spanner-dual"))
        h.update(res.subgraph, "dual_")
        trace.extend(res.trace)
        struct = len(res.subgraph)
    return SpannerResult(h, params, srcs, high, reps, fallback, trace, low, struct)
