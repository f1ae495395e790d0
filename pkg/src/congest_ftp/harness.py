"""Graph generators, algorithm dispatch and experiment sweeps."""
from __future__ import annotations

import csv
import io
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Iterable, Iterator, Sequence

import networkx as nx
import numpy as np

from .centralized import dual_ftmbfs_centralized, ftmbfs_centralized
from .congest_sim import NetworkConfig, StagedTrace
from .dist_dual import DualConfig, build_dual_ftmbfs
from .dist_ftmbfs import FtmbfsConfig, build_ftmbfs
from .graph_core import Graph, PreserverSubgraph, derive_seed
from .oracle import canonical_last_edges, verify_additive, verify_preserver
from .spanners import SpannerConfig, ft_additive_spanner_dual, ft_additive_spanner_single

GENERATORS = ("path", "cycle", "grid", "erdos_renyi", "lollipop", "random_geometric")
ALGORITHMS = ("ftmbfs", "dual-ftmbfs", "centralized", "centralized-dual", "spanner1", "spanner2", "canonical")
MAX_RESAMPLES = 200


@dataclass(frozen=True)
class GraphSpec:
    kind: str
    n: int = 0
    p: float | None = None
    avg_degree: float | None = None
    r: float | None = None
    rows: int | None = None
    cols: int | None = None
    cycle_length: int | None = None
    connect: str = "resample"

    def label(self) -> str:
        parts = [self.kind, f"n={self.n}"]
        for k in ("p", "avg_degree", "r", "rows", "cols", "cycle_length"):
            v = getattr(self, k)
            if v is not None:
                parts.append(f"{k}={v}")
        return ",".join(parts)


def _from_nx(h: nx.Graph) -> Graph:
    h = nx.convert_node_labels_to_integers(h, ordering="sorted")
    return Graph(h.number_of_nodes(), h.edges())


def _connected(build, spec: GraphSpec, seed: int) -> Graph:
    if spec.connect not in ("resample", "largest"):
        raise ValueError(f"unknown connectivity mode {spec.connect!r}")
    if spec.connect == "largest":
        h = build(derive_seed(seed, "graph", 0) % 2**32)
        comp = max(nx.connected_components(h), key=lambda c: (len(c), -min(c)))
        return _from_nx(h.subgraph(comp))
    for attempt in range(MAX_RESAMPLES):
        h = build(derive_seed(seed, "graph", attempt) % 2**32)
        if nx.is_connected(h):
            return _from_nx(h)
    raise ValueError(f"no connected sample of {spec.label()} after {MAX_RESAMPLES} attempts")


def generate(spec: GraphSpec, seed: int = 0) -> Graph:
    """Deterministic connected graph for ``(spec, seed)``."""
    n = spec.n
    if spec.kind == "path":
        if n < 1:
            raise ValueError("path needs n >= 1")
        return Graph(n, [(i, i + 1) for i in range(n - 1)])
    if spec.kind == "cycle":
        if n < 3:
            raise ValueError("cycle needs n >= 3")
        return Graph(n, [(i, (i + 1) % n) for i in range(n)])
    if spec.kind == "grid":
        rows, cols = spec.rows, spec.cols
        if rows is None or cols is None:
            rows = cols = max(1, round(n**0.5))
        if rows < 1 or cols < 1:
            raise ValueError("grid needs positive dimensions")
        return _from_nx(nx.grid_2d_graph(rows, cols))
    if spec.kind == "lollipop":
        length = spec.cycle_length if spec.cycle_length is not None else n // 2
        if not 3 <= length <= n:
            raise ValueError("lollipop needs 3 <= cycle_length <= n")
        stick = n - length
        edges = [(i, i + 1) for i in range(stick)]
        ring = [stick] + list(range(stick + 1, n))
        edges += [(ring[i], ring[(i + 1) % length]) for i in range(length)]
        return Graph(n, edges)
    if spec.kind == "erdos_renyi":
        p = spec.p if spec.p is not None else (spec.avg_degree / max(n - 1, 1) if spec.avg_degree else None)
        if p is None:
            raise ValueError("erdos_renyi needs p or avg_degree")
        if n > 1 and p <= 0:
            raise ValueError("p=0 cannot give a connected graph")
        return _connected(lambda s: nx.gnp_random_graph(n, min(p, 1.0), seed=s), spec, seed)
    if spec.kind == "random_geometric":
        if spec.r is None or spec.r <= 0:
            raise ValueError("random_geometric needs r > 0")
        return _connected(lambda s: nx.random_geometric_graph(n, spec.r, seed=s), spec, seed)
    raise ValueError(f"unknown generator {spec.kind!r}")


def choose_sources(g: Graph, k: int, seed: int) -> list[int]:
    if not 1 <= k <= g.n:
        raise ValueError(f"cannot pick {k} sources from {g.n} vertices")
    rng = np.random.default_rng(derive_seed(seed, "sources"))
    return sorted(int(v) for v in rng.choice(g.n, size=k, replace=False))


# ------------------------------------------------------------------ dispatch


@dataclass
class AlgorithmOptions:
    phase_constant: int = 4
    max_rounds: int = 5_000_000
    sample_constant: float = 10.0
    sample_prob: float | None = None
    sigma1: int | None = None
    sigma2: int | None = None
    threshold: float | None = None
    source_prob: float | None = None
    allow_large: bool = False

    def network(self) -> NetworkConfig:
        return NetworkConfig(phase_constant=self.phase_constant, max_rounds=self.max_rounds)

    def dual(self) -> DualConfig:
        p = self.sample_prob
        return DualConfig(self.network(), self.sample_constant, p, p, p, self.sigma1, self.sigma2)


@dataclass
class RunOutcome:
    subgraph: PreserverSubgraph
    trace: StagedTrace | None
    f: int
    beta: int | None
    sources: list[int]
    details: dict = field(default_factory=dict)


def run_algorithm(name: str, g: Graph, sources: Sequence[int], seed: int, opts: AlgorithmOptions) -> RunOutcome:
    srcs = sorted(set(sources))
    if name == "ftmbfs":
        res = build_ftmbfs(g, srcs, FtmbfsConfig(opts.network(), opts.sample_constant, opts.sample_prob), seed)
        p = res.params
        return RunOutcome(res.subgraph, res.trace, 1, None, srcs,
                          {"sigma": p.sigma, "sigma_prime": p.sigma_prime, "delay_range": p.delay_range,
                           "sample_prob": p.sample_prob, "sampled": len(res.sampled)})
    if name == "dual-ftmbfs":
        res = build_dual_ftmbfs(g, srcs, opts.dual(), seed)
        return RunOutcome(res.subgraph, res.trace, 2, None, srcs, asdict(res.params) | {"sampled": len(res.sampled)})
    if name == "centralized":
        res = ftmbfs_centralized(g, srcs, seed, sample_constant=opts.sample_constant, sample_prob=opts.sample_prob)
        return RunOutcome(res.subgraph, None, 1, None, srcs, asdict(res.params))
    if name == "centralized-dual":
        res = dual_ftmbfs_centralized(g, srcs, seed, sample_constant=opts.sample_constant, sample_prob=opts.sample_prob)
        return RunOutcome(res.subgraph, None, 2, None, srcs,
                          asdict(res.params) | {"max_last_edges_per_vertex": max(res.per_vertex_last_edges, default=0)})
    if name == "canonical":
        h = PreserverSubgraph(g)
        h.add_all(canonical_last_edges(g, srcs, 1), "last_edge")
        return RunOutcome(h, None, 1, None, srcs)
    if name in ("spanner1", "spanner2"):
        cfg = SpannerConfig(opts.network(), opts.sample_constant, opts.threshold, opts.source_prob,
                            FtmbfsConfig(opts.network(), opts.sample_constant, opts.sample_prob), opts.dual())
        fn = ft_additive_spanner_single if name == "spanner1" else ft_additive_spanner_dual
        res = fn(g, cfg, seed)
        return RunOutcome(res.subgraph, res.trace, 1 if name == "spanner1" else 2, 2, sorted(res.sources),
                          {"threshold": res.params.threshold, "source_prob": res.params.source_prob,
                           "high_degree": len(res.high_degree), "fallback": len(res.fallback)})
    raise ValueError(f"unknown algorithm {name!r}")


def verify_outcome(g: Graph, out: RunOutcome, allow_large: bool = False):
    if out.beta is not None:
        return verify_additive(g, out.subgraph.edges, out.f, out.beta, allow_large=allow_large)
    return verify_preserver(g, out.subgraph.edges, out.sources, out.f, allow_large=allow_large)


# ------------------------------------------------------------------ experiments


CSV_COLUMNS = ("graph", "n", "m", "D", "S", "algorithm", "seed", "edges_out", "rounds_used",
               "max_edge_phase_load", "slipped", "verify_pass", "wall_time")


@dataclass
class MetricsRecord:
    graph: str
    n: int
    m: int
    D: int
    S: int
    algorithm: str
    seed: int
    edges_out: int
    rounds_used: int | None
    max_edge_phase_load: int | None
    slipped: int | None
    verify_pass: bool | None
    violation: dict | None
    wall_time: float

    def to_dict(self, wall_time: bool = False) -> dict:
        d = asdict(self)
        if not wall_time:
            d.pop("wall_time")
        return d


@dataclass
class ExperimentSpec:
    generator: GraphSpec
    sizes: list[int] = field(default_factory=list)
    source_counts: list[int] = field(default_factory=lambda: [1])
    seeds: list[int] = field(default_factory=lambda: [0])
    algorithms: list[str] = field(default_factory=lambda: ["ftmbfs"])
    verify: bool = False
    fail_fast: bool = False
    options: AlgorithmOptions = field(default_factory=AlgorithmOptions)

    def __post_init__(self) -> None:
        if any(n <= 0 for n in self.sizes):
            raise ValueError("sizes must be positive")
        for a in self.algorithms:
            if a not in ALGORITHMS:
                raise ValueError(f"unknown algorithm {a!r}")

    def cells(self) -> list[tuple[int, int, int, str]]:
        return [(n, k, s, a) for n in self.sizes for k in self.source_counts for s in self.seeds for a in self.algorithms]

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        d = dict(d)
        gen = GraphSpec(**d.pop("generator"))
        opts = AlgorithmOptions(**d.pop("options", {}))
        return cls(gen, options=opts, **d)


class VerificationFailed(RuntimeError):
    def __init__(self, record: MetricsRecord):
        super().__init__(f"verification failed: {record.violation}")
        self.record = record


def run_cell(spec: ExperimentSpec, n: int, k: int, seed: int, algorithm: str) -> MetricsRecord:
    gspec = replace(spec.generator, n=n)
    g = generate(gspec, seed)
    srcs = choose_sources(g, min(k, g.n), seed)
    start = time.perf_counter()
    out = run_algorithm(algorithm, g, srcs, seed, spec.options)
    ok, viol = None, None
    if spec.verify:
        rep = verify_outcome(g, out, spec.options.allow_large)
        ok = rep.passed
        viol = rep.violations[0].as_dict() if rep.violations else None
    tr = out.trace
    return MetricsRecord(
        gspec.label(), g.n, g.m, g.diameter, len(srcs), algorithm, seed, len(out.subgraph),
        tr.rounds_used if tr else None, tr.max_edge_phase_load if tr else None, tr.slipped if tr else None,
        ok, viol, time.perf_counter() - start,
    )


def _cell(args):
    return run_cell(*args)


def run_experiment(spec: ExperimentSpec, threads: int | None = None) -> Iterator[MetricsRecord]:
    """Records in enumeration order; parallel cells when ``CONGEST_FTP_THREADS`` > 1."""
    if threads is None:
        threads = int(os.environ.get("CONGEST_FTP_THREADS", "1") or 1)
    jobs = [(spec, *c) for c in spec.cells()]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            for rec in pool.map(_cell, jobs):
                if spec.fail_fast and rec.verify_pass is False:
                    raise VerificationFailed(rec)
                yield rec
        return
    for job in jobs:
        rec = _cell(job)
        if spec.fail_fast and rec.verify_pass is False:
            raise VerificationFailed(rec)
        yield rec


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"


def records_json(records: Iterable[MetricsRecord], wall_time: bool = False) -> str:
    return canonical_json([r.to_dict(wall_time) for r in records])


def records_csv(records: Iterable[MetricsRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        d = r.to_dict(wall_time=True)
        w.writerow(["" if d[c] is None else d[c] for c in CSV_COLUMNS])
    return buf.getvalue()
