"""Distributed dual-failure FT-MBFS.

Pipeline:

(a) single-failure FT-MBFS w.r.t. ``S ∪ R`` for a random ``R``;
(b) per-vertex fault information: for every source ``s`` and every edge ``e``
    among the last ``2*sigma2`` edges of ``pi(s,t)``, the replacement distance
    and the last ``2*sigma2`` edges of ``P(s,t,e)``. Easy replacement paths come
    from suffix-carrying tokens; the rest from a sampled-pair formula over
    BFS trees of a second sample and LCA labels;
(c) each vertex derives its triple set ``Q_t`` from that information, shares
    it with its neighbors, and dual tokens for ``G - {e1, e2}`` run with
    random start phases.

Parameters here (``sigma1 = (n/|S|)^(5/8)``) are unrelated to the sequential
dual construction in :mod:`centralized`.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from . import congest_sim as sim
from .congest_sim import NetworkConfig, SharedSeed, SimTrace, StagedTrace
from .dist_ftmbfs import (
    FtmbfsConfig,
    FtmbfsResult,
    NodeKnowledge,
    TokenOutcome,
    build_ftmbfs,
    build_trees,
    exchange_lists,
    gather_knowledge,
    learn_suffixes,
    run_tokens,
)
from .graph_core import Edge, Graph, PreserverSubgraph, ShortestPathTree, derive_seed, edge, sample, sample_probability
from .lca import Label, ancestor_label, distributed_labels, is_ancestor, label_depth

Triple = tuple[int, Edge, Edge]


@dataclass(frozen=True)
class DualParams:
    sigma1: int
    sigma2: int
    dual_delay_range: int
    sample_prob: float
    hard_sample_prob: float
    hard_radius: int

    @classmethod
    def for_graph(
        cls,
        n: int,
        k: int,
        sample_constant: float = 10.0,
        *,
        sigma1: int | None = None,
        sigma2: int | None = None,
        sample_prob: float | None = None,
        hard_sample_prob: float | None = None,
        dual_delay_range: int | None = None,
        hard_radius: int | None = None,
    ) -> "DualParams":
        if k < 1:
            raise ValueError("need at least one source")
        ratio = n / k
        s1 = max(1, sigma1 if sigma1 is not None else math.ceil(ratio ** (5 / 8)))
        s2 = max(1, sigma2 if sigma2 is not None else math.ceil(ratio**0.25))
        if s2 > s1:
            raise ValueError("sigma2 must not exceed sigma1")
        p = sample_probability(n, s2, sample_constant) if sample_prob is None else min(1.0, sample_prob)
        ph = sample_probability(n, s1, sample_constant) if hard_sample_prob is None else min(1.0, hard_sample_prob)
        dr = dual_delay_range if dual_delay_range is not None else 2 * k * s2 * s2
        rad = hard_radius if hard_radius is not None else s1 // 16
        return cls(s1, s2, max(1, dr), p, ph, rad)


@dataclass
class DualConfig:
    network: NetworkConfig = field(default_factory=NetworkConfig)
    sample_constant: float = 10.0
    sample_prob: float | None = None
    inner_sample_prob: float | None = None
    hard_sample_prob: float | None = None
    sigma1: int | None = None
    sigma2: int | None = None
    dual_delay_range: int | None = None
    hard_radius: int | None = None

    def params(self, n: int, k: int) -> DualParams:
        return DualParams.for_graph(
            n, k, self.sample_constant, sigma1=self.sigma1, sigma2=self.sigma2, sample_prob=self.sample_prob,
            hard_sample_prob=self.hard_sample_prob, dual_delay_range=self.dual_delay_range,
            hard_radius=self.hard_radius,
        )


@dataclass(frozen=True)
class InfoEntry:
    """What ``t`` knows about ``P(s,t,e)``; ``dist`` is None when nothing was learned."""

    dist: int | None
    suffix: tuple[Edge, ...]
    status: str
    witness: tuple[int, int] | None = None


NodeInfo = dict[tuple[int, Edge], InfoEntry]


@dataclass
class TripleSet:
    q: frozenset[Triple]
    q_half: frozenset[Triple]


def triple(s: int, e1: Edge, e2: Edge) -> Triple:
    e1, e2 = edge(*e1), edge(*e2)
    return (s, e1, e2) if e1 < e2 else (s, e2, e1)


# ------------------------------------------------------------------ easy paths


@dataclass
class EasyStage:
    info: list[NodeInfo]
    q_tilde: list[frozenset[tuple[int, Edge]]]
    know: list[NodeKnowledge]
    tokens: TokenOutcome
    trace: StagedTrace


class _ShareSets:
    """Every vertex sends one set to every neighbor."""

    def __init__(self, g: Graph, sets: Sequence[frozenset], words_per_item: int):
        self.g = g
        self.sets = sets
        self.words = words_per_item
        self.got: list[dict[int, frozenset]] = [dict() for _ in range(g.n)]

    def init(self, net) -> None:
        for v in range(self.g.n):
            items = self.sets[v]
            if not items:
                continue
            payload = tuple(sorted(items))
            for u in self.g.adj[v]:
                net.send(v, u, payload, units=net.config.units(self.words * len(payload)))

    def on_round(self, v, rnd, inbox, net) -> None:
        for src, payload in inbox:
            self.got[v][src] = frozenset(payload)


def share_sets(g: Graph, sets: Sequence[frozenset], words_per_item: int, config: NetworkConfig):
    proto = _ShareSets(g, sets, words_per_item)
    tr = sim.run(g, proto, config)
    return [{u: proto.got[v].get(u, frozenset()) for u in g.adj[v]} for v in range(g.n)], tr


def _positions(lst) -> dict[Edge, int]:
    """Edge -> position counted from the owning vertex (its parent edge is 1)."""
    return {t.pair: len(lst) - i for i, t in enumerate(lst)}


def compute_info_easy(
    g: Graph,
    sources: Sequence[int],
    params: DualParams,
    config: NetworkConfig,
    seed: int = 0,
    *,
    trees: dict[int, ShortestPathTree] | None = None,
    shared: SharedSeed | None = None,
) -> EasyStage:
    """Suffix-carrying tokens with ``sigma = 8*sigma1``; one entry per received key."""
    srcs = sorted(set(sources))
    trace = StagedTrace()
    if trees is None:
        trees, _ = build_trees(g, srcs, config, trace)
    src_trees = {s: trees[s] for s in srcs}
    children = {s: src_trees[s].children() for s in srcs}
    sigma = 8 * params.sigma1
    sigma_prime = 3 * sigma
    lists = learn_suffixes(g, src_trees, children, sigma_prime, config, trace, {s: i for i, s in enumerate(srcs)})
    nbr = exchange_lists(g, lists, config, trace)
    if shared is None:
        shared, tr = sim.broadcast_seed(g, sim.seed_bits(derive_seed(seed, "shared-seed")), config)
        trace.add("seed", tr)
    know = gather_knowledge(g, srcs, src_trees, lists, nbr)
    carry = 2 * params.sigma2
    tok = run_tokens(g, srcs, know, sigma, sigma_prime, 2 * sigma_prime * len(srcs), shared, config,
                     carry_suffix=carry, salt="easy")
    trace.add("easy_tokens", tok.trace)
    info: list[NodeInfo] = []
    q_tilde = []
    for t in range(g.n):
        entries: NodeInfo = {}
        got = set()
        for s in srcs:
            lst = know[t].lists.get(s, ())
            for i, ent in enumerate(lst):
                pos = len(lst) - i
                key = (s, ent.num)
                if key not in tok.log[t]:
                    continue
                if pos <= sigma:
                    got.add((s, ent.pair))
                if pos <= carry:
                    phase, _ = tok.log[t][key]
                    entries[(s, ent.pair)] = InfoEntry(phase - tok.taus[key], tok.suffixes[t][key], "easy")
        info.append(entries)
        q_tilde.append(frozenset(got))
    _, tr = share_sets(g, q_tilde, 3, config)
    trace.add("q_tilde_exchange", tr)
    return EasyStage(info, q_tilde, know, tok, trace)


# ------------------------------------------------------------------ hard paths


class _TreeFlood:
    """Pipelined flooding of per-origin items along the edges of one spanning tree."""

    def __init__(self, g: Graph, tree: ShortestPathTree, items: dict[int, list[tuple[object, int]]]):
        self.g = g
        self.nbrs = [[] for _ in range(g.n)]
        for v, p in enumerate(tree.parent):
            if p is not None:
                self.nbrs[v].append(p)
                self.nbrs[p].append(v)
        self.items = items
        self.got: list[list[object]] = [[] for _ in range(g.n)]

    def init(self, net) -> None:
        for v, its in sorted(self.items.items()):
            for item, units in its:
                self.got[v].append(item)
                for u in self.nbrs[v]:
                    net.send(v, u, (item, units), units=units)

    def on_round(self, v, rnd, inbox, net) -> None:
        for src, (item, units) in inbox:
            self.got[v].append(item)
            for u in self.nbrs[v]:
                if u != src:
                    net.send(v, u, (item, units), units=units)


@dataclass
class HardStage:
    info: list[NodeInfo]
    sampled: frozenset[int]
    trace: StagedTrace


def hard_candidates(
    depth_t: int,
    label_t: Label,
    depth_y: int,
    r_labels: dict[int, Label],
    rr_dist: dict[int, dict[int, int]],
    t_dist: dict[int, int],
    radius: int,
):
    """Yield ``(value, r1, r2)`` for every admissible sampled pair.

    ``r2`` lies below ``y`` in ``T_s`` and ``r1`` does not. Two filters keep
    every candidate the length of a walk avoiding ``e = (x, y)``: no
    shortest ``r1``-``r2`` path can use ``e`` when ``dist(r1,r2)`` is at most
    ``depth(r2) - depth(y)``, and no shortest ``r2``-``t`` path can use it
    when ``dist(r2,t)`` is below ``depth(r2) + depth(t) - 2*depth(y) + 2``.
    """
    y_label = ancestor_label(label_t, depth_y)
    below = {r: is_ancestor(y_label, lab) for r, lab in r_labels.items()}
    for r2, lab2 in r_labels.items():
        if not below[r2] or r2 not in t_dist:
            continue
        d2 = t_dist[r2]
        dep2 = label_depth(lab2)
        if d2 > dep2 + depth_t - 2 * depth_y + 1:
            continue
        limit = min(radius, dep2 - depth_y)
        for r1, d12 in rr_dist[r2].items():
            if d12 > limit or below.get(r1, True):
                continue
            yield label_depth(r_labels[r1]) + d12 + d2, r1, r2


def compute_info_hard(
    g: Graph,
    sources: Sequence[int],
    params: DualParams,
    config: NetworkConfig,
    seed: int = 0,
    *,
    trees: dict[int, ShortestPathTree] | None = None,
    easy: EasyStage | None = None,
    pairs: Sequence[Iterable[tuple[int, Edge]]] | None = None,
) -> HardStage:
    """Sampled-pair distances for replacement paths the tokens did not settle.

    ``pairs[t]`` lists the ``(s, e)`` to evaluate at ``t``; by default all
    ``e`` among the last ``2*sigma2`` edges of ``pi(s,t)``. Results merge
    with ``easy`` by keeping the smaller distance, since both are lengths of
    walks that avoid ``e``.
    """
    srcs = sorted(set(sources))
    trace = StagedTrace()
    if trees is None:
        trees, _ = build_trees(g, srcs, config, trace)
    carry = 2 * params.sigma2
    r_h = sample(g, params.hard_sample_prob, derive_seed(seed, "hard-sample"))
    old = easy.info if easy is not None else [dict() for _ in range(g.n)]
    if pairs is None:
        pairs = []
        for t in range(g.n):
            want = []
            for s in srcs:
                tr_s = trees[s]
                v = t
                for _ in range(carry):
                    p = tr_s.parent[v]
                    if p is None:
                        break
                    want.append((s, edge(p, v)))
                    v = p
            pairs.append(want)
    if not r_h or not any(pairs):
        info = [dict(o) for o in old]
        for t in range(g.n):
            for key in pairs[t]:
                info[t].setdefault(key, InfoEntry(None, (), "unresolved"))
        return HardStage(info, r_h, trace)

    r_list = sorted(r_h)
    sub = StagedTrace()
    r_trees, r_children = build_trees(g, r_list, config, sub)
    r_lists = learn_suffixes(g, r_trees, r_children, carry, config, sub, {r: i for i, r in enumerate(r_list)})
    src_trees = {s: trees[s] for s in srcs}
    labels = distributed_labels(g, src_trees, {s: src_trees[s].children() for s in srcs}, config, sub)
    if 0 in trees:
        global_tree = trees[0]
    elif 0 in r_trees:
        global_tree = r_trees[0]
    else:
        gt, _ = build_trees(g, [0], config, sub)
        global_tree = gt[0]
    trace.extend(sub, "hard_")
    items: dict[int, list[tuple[object, int]]] = defaultdict(list)
    for r in r_list:
        dists = tuple(r_trees[q].depth[r] for q in r_list)
        items[r].append((("dist", r, dists), config.units(1 + len(dists))))
        for s in srcs:
            lab = labels[r][s]
            items[r].append((("label", r, s, lab), config.units(2 + 2 * len(lab))))
    flood = _TreeFlood(g, global_tree, items)
    trace.add("hard_broadcast", sim.run(g, flood, config))

    info: list[NodeInfo] = []
    for t in range(g.n):
        rr: dict[int, dict[int, int]] = {}
        r_labels: dict[int, dict[int, Label]] = defaultdict(dict)
        for item in flood.got[t]:
            if item[0] == "dist":
                _, r, dists = item
                rr[r] = {q: d for q, d in zip(r_list, dists) if d is not None and q != r}
            else:
                _, r, s, lab = item
                r_labels[s][r] = lab
        t_dist = {r: r_trees[r].depth[t] for r in r_list if r_trees[r].depth[t] is not None}
        entries = dict(old[t])
        for s, e in pairs[t]:
            tree = trees[s]
            y = e[0] if tree.parent[e[0]] == e[1] else e[1]
            best = None
            for cand in hard_candidates(tree.depth[t], labels[t][s], tree.depth[y], r_labels[s], rr, t_dist,
                                        params.hard_radius):
                if best is None or cand < best:
                    best = cand
            prev = entries.get((s, e))
            if best is None:
                if prev is None:
                    entries[(s, e)] = InfoEntry(None, (), "unresolved")
                continue
            if prev is not None and prev.dist is not None and prev.dist <= best[0]:
                continue
            value, r1, r2 = best
            suf = tuple(te.pair for te in r_lists[t].get(r2, ()))[-params.sigma2 * 2 :]
            entries[(s, e)] = InfoEntry(value, suf, "hard", (r1, r2))
        info.append(entries)
    return HardStage(info, r_h, trace)


# ------------------------------------------------------------------ triple sets


def compute_q_sets(
    info: NodeInfo, own_suffixes: dict[int, Sequence[Edge]], sigma: int
) -> TripleSet:
    """``Q_t`` and its half-radius version from ``t``'s own fault information.

    ``own_suffixes[s]`` is the end of ``pi(s,t)`` in path order (at least
    ``sigma`` edges when the path is that long).
    """
    return TripleSet(_triples(info, own_suffixes, sigma), _triples(info, own_suffixes, max(1, sigma // 2)))


def _triples(info: NodeInfo, own_suffixes: dict[int, Sequence[Edge]], sigma: int) -> frozenset[Triple]:
    out = set()
    for s, path in own_suffixes.items():
        pos_pi = {e: len(path) - i for i, e in enumerate(path)}
        for e1, p1 in pos_pi.items():
            if p1 > sigma:
                continue
            a = info.get((s, e1))
            if a is None or a.dist is None:
                continue
            for j, e2 in enumerate(a.suffix):
                if len(a.suffix) - j > sigma:
                    continue
                p2 = pos_pi.get(e2)
                if p2 is None:
                    out.add(triple(s, e1, e2))
                    continue
                b = info.get((s, e2))
                if b is None or b.dist is None:
                    continue
                pos = {e: len(b.suffix) - i for i, e in enumerate(b.suffix)}
                if pos.get(e1, sigma + 1) <= sigma:
                    out.add(triple(s, e1, e2))
    return frozenset(out)


# ------------------------------------------------------------------ dual tokens

SENSITIVE, NON_SENSITIVE, UNKNOWN = "sensitive", "non_sensitive", "unknown"


@dataclass
class DualTokenOutcome:
    log: list[dict[Triple, tuple[int, int]]]
    decisions: list[dict[Triple, tuple[str, int | None]]]
    added: list[tuple[Edge, Triple]]
    trace: SimTrace
    taus: dict[Triple, int]


def classify(
    info: NodeInfo, own_path: Sequence[Edge], depth: int | None, s: int, e1: Edge, e2: Edge, sigma2: int
) -> tuple[str, int | None]:
    """Decide from local information whether ``v`` is sensitive to ``(s, e1, e2)``.

    ``own_path`` is the known end of ``pi(s,v)`` in path order. Returns the
    status and, when not sensitive, ``dist(s, v, G - {e1, e2})``.
    """
    if depth is None:
        return UNKNOWN, None
    pos = {e: len(own_path) - i for i, e in enumerate(own_path)}
    complete_pi = len(own_path) == depth

    def view(e):
        p = pos.get(e)
        if p is None:
            return depth, tuple(own_path), complete_pi
        if p > 2 * sigma2:
            return None
        ent = info.get((s, e))
        if ent is None or ent.dist is None:
            return None
        return ent.dist, ent.suffix, len(ent.suffix) == ent.dist

    def contains(other, v):
        d, suf, complete = v
        if other in suf:
            return True
        if complete or len(suf) >= sigma2 + 1:
            return False
        return None

    a, b = view(e1), view(e2)
    if a is None or b is None:
        return UNKNOWN, None
    m21, m12 = contains(e2, a), contains(e1, b)
    if m21 is False or m12 is False:
        return NON_SENSITIVE, max(a[0], b[0])
    if m21 and m12:
        return SENSITIVE, None
    return UNKNOWN, None


class _DualTokens:
    def __init__(self, g, infos, own_paths, depths, nbr_q, sigma2, delay_range, seed, ell):
        self.g = g
        self.infos = infos
        self.own_paths = own_paths
        self.depths = depths
        self.nbr_q = nbr_q
        self.sigma2 = sigma2
        self.delay_range = delay_range
        self.seed = seed
        self.ell = ell
        self.taus: dict[Triple, int] = {}
        self.decisions: list[dict[Triple, tuple[str, int | None]]] = [dict() for _ in range(g.n)]
        self.log: list[dict[Triple, tuple[int, int]]] = [dict() for _ in range(g.n)]
        self.sched: list[dict[int, list]] = [defaultdict(list) for _ in range(g.n)]
        self.buf: list[dict[Triple, set[int]]] = [defaultdict(set) for _ in range(g.n)]
        self.added: list[tuple[Edge, Triple]] = []

    def tau(self, key: Triple) -> int:
        t = self.taus.get(key)
        if t is None:
            t = self.taus[key] = sim.delay_of(self.seed, ("dual",) + key, self.delay_range)
        return t

    def decide(self, v: int, key: Triple):
        d = self.decisions[v].get(key)
        if d is None:
            s, e1, e2 = key
            d = self.decisions[v][key] = classify(
                self.infos[v], self.own_paths[v].get(s, ()), self.depths[v].get(s), s, e1, e2, self.sigma2
            )
        return d

    def init(self, net) -> None:
        for v in range(self.g.n):
            for u in self.g.adj[v]:
                for key in sorted(self.nbr_q[v].get(u, ())):
                    if edge(v, u) in key[1:]:
                        continue
                    status, dist = self.decide(v, key)
                    if status == NON_SENSITIVE:
                        self.sched[v][dist + self.tau(key)].append((key, u))
            for phase in self.sched[v]:
                net.wake(v, phase * self.ell)

    def on_round(self, v, rnd, inbox, net) -> None:
        for src, key in inbox:
            self.buf[v][key].add(src)
        if rnd % self.ell:
            if inbox:
                net.wake(v, (rnd // self.ell + 1) * self.ell)
            return
        phase = rnd // self.ell
        deadline = (phase + 1) * self.ell - 1
        units = net.config.units(5)
        if self.buf[v]:
            buf, self.buf[v] = self.buf[v], defaultdict(set)
            for key in sorted(buf):
                if key in self.log[v]:
                    continue
                senders = buf[key]
                w = min(senders)
                self.log[v][key] = (phase, w)
                if self.decide(v, key)[0] == NON_SENSITIVE:
                    continue
                self.added.append((edge(w, v), key))
                for u in self.g.adj[v]:
                    if u in senders or edge(v, u) in key[1:] or key not in self.nbr_q[v].get(u, ()):
                        continue
                    net.send(v, u, key, units=units, deadline=deadline)
        for key, u in self.sched[v].pop(phase, ()):
            net.send(v, u, key, units=units, deadline=deadline)


def run_dual_tokens(
    g: Graph,
    infos: list[NodeInfo],
    own_paths: list[dict[int, tuple[Edge, ...]]],
    depths: list[dict[int, int]],
    nbr_q: list[dict[int, frozenset[Triple]]],
    params: DualParams,
    seed: SharedSeed,
    config: NetworkConfig,
) -> DualTokenOutcome:
    ell = config.ell(g.n) * config.units(5)
    proto = _DualTokens(g, infos, own_paths, depths, nbr_q, params.sigma2, params.dual_delay_range, seed, ell)
    tr = sim.run(g, proto, config, phase_length=ell)
    return DualTokenOutcome(proto.log, proto.decisions, proto.added, tr, proto.taus)


# ------------------------------------------------------------------ driver


@dataclass
class DualResult:
    subgraph: PreserverSubgraph
    trace: StagedTrace
    params: DualParams
    sources: tuple[int, ...]
    sampled: frozenset[int]
    inner: FtmbfsResult
    easy: EasyStage
    hard: HardStage
    q_sets: list[TripleSet]
    tokens: DualTokenOutcome

    @property
    def info(self) -> list[NodeInfo]:
        return self.hard.info


def build_dual_ftmbfs(g: Graph, sources: Sequence[int], config: DualConfig | None = None, seed: int = 0) -> DualResult:
    """Dual-failure FT-MBFS of ``g`` w.r.t. ``sources``, built in the simulator."""
    cfg = config or DualConfig()
    srcs = tuple(sorted(set(sources)))
    if not srcs:
        raise ValueError("sources must be nonempty")
    if not g.is_connected():
        raise ValueError("the distributed constructions need a connected graph")
    net = cfg.network
    params = cfg.params(g.n, len(srcs))
    r = sample(g, params.sample_prob, derive_seed(seed, "dual-sample"))
    inner_cfg = FtmbfsConfig(net, cfg.sample_constant, cfg.inner_sample_prob)
    inner = build_ftmbfs(g, sorted(set(srcs) | r), inner_cfg, derive_seed(seed, "inner"))
    trace = StagedTrace()
    trace.extend(inner.trace, "ftmbfs_")
    easy = compute_info_easy(g, srcs, params, net, seed, trees=inner.trees, shared=inner.seed)
    trace.extend(easy.trace, "info_")
    hard = compute_info_hard(g, srcs, params, net, seed, trees=inner.trees, easy=easy)
    trace.extend(hard.trace, "info_")

    own_paths = [{s: tuple(k.suffix_edges(s, 2 * params.sigma2)) for s in srcs} for k in easy.know]
    depths = [dict(k.depth) for k in easy.know]
    q_sets = [compute_q_sets(hard.info[t], own_paths[t], params.sigma2) for t in range(g.n)]
    nbr_q, tr = share_sets(g, [q.q for q in q_sets], 5, net)
    trace.add("q_exchange", tr)
    # the classifier needs the longer list to tell "e not on pi(s,v)" apart
    long_paths = [{s: tuple(k.suffix_edges(s, len(k.lists.get(s, ())))) for s in srcs} for k in easy.know]
    tok = run_dual_tokens(g, hard.info, long_paths, depths, nbr_q, params, inner.seed, net)
    trace.add("dual_tokens", tok.trace)

    h = PreserverSubgraph(g)
    h.update(inner.subgraph)
    for e, _ in tok.added:
        h.add(e, "dual_token")
    return DualResult(h, trace, params, srcs, r, inner, easy, hard, q_sets, tok)
