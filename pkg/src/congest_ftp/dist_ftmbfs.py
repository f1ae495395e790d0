"""Distributed single-failure FT-MBFS, executed stage by stage in the simulator.

Stages (each is its own simulator run; rounds add up):

1. sample ``R`` locally;
2. BFS trees of ``S ∪ R`` by Bellman-Ford flooding with min-ID parents,
   then one message per tree edge so parents learn their children;
3. tree edges get numbers derived from ``(source index, child ID)``;
4. each vertex learns the last ``sigma_prime`` edges of its tree path from
   every source (pipelined downward);
5. vertices swap those lists with their neighbors;
6. a shared random seed is flooded from vertex 0;
7. every key ``(s, e)`` gets a start phase from the seed;
8-9. truncated BFS tokens for ``G - e`` run in phases of ``ell`` rounds.

A token for key ``(s, e)`` transmitted in phase ``i`` is processed by its
receiver at the start of phase ``i + 1``; the receiver's arrival phase is
therefore ``i + 1``, which equals ``dist(s, v, G - e) + tau`` on time.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Any, NamedTuple, Sequence

from . import congest_sim as sim
from .congest_sim import NetworkConfig, SharedSeed, SimTrace, StagedTrace
from .graph_core import Edge, Graph, PreserverSubgraph, ShortestPathTree, derive_seed, edge, sample, sample_probability


class TreeEdge(NamedTuple):
    """A numbered edge of ``T_s``; ``parent`` is the endpoint closer to ``s``."""

    num: int
    parent: int
    child: int

    @property
    def pair(self) -> Edge:
        return edge(self.parent, self.child)


@dataclass(frozen=True)
class FtmbfsParams:
    sigma: int
    sigma_prime: int
    delay_range: int
    sample_prob: float

    @classmethod
    def for_graph(
        cls,
        n: int,
        num_sources: int,
        sample_constant: float = 10.0,
        sigma: int | None = None,
        sample_prob: float | None = None,
        delay_range: int | None = None,
    ) -> "FtmbfsParams":
        if num_sources < 1:
            raise ValueError("need at least one source")
        sg = sigma if sigma is not None else math.ceil(math.sqrt(n / num_sources))
        sg = max(1, sg)
        sp = 3 * sg
        prob = sample_probability(n, sg, sample_constant) if sample_prob is None else min(1.0, sample_prob)
        dr = delay_range if delay_range is not None else 2 * sp * num_sources
        return cls(sg, sp, max(1, dr), prob)


@dataclass
class FtmbfsConfig:
    network: NetworkConfig = field(default_factory=NetworkConfig)
    sample_constant: float = 10.0
    sample_prob: float | None = None
    sigma: int | None = None
    delay_range: int | None = None
    log_messages: bool = False


@dataclass
class NodeKnowledge:
    vertex: int
    depth: dict[int, int]
    lists: dict[int, tuple[TreeEdge, ...]]
    neighbor_lists: dict[int, dict[int, tuple[TreeEdge, ...]]]
    token_log: dict[tuple[int, int], tuple[int, int]] = field(default_factory=dict)

    def suffix_edges(self, s: int, sigma: int) -> list[Edge]:
        lst = self.lists.get(s, ())
        return [t.pair for t in lst[max(0, len(lst) - sigma) :]]


def edge_number(source_index: int, root: int, child: int, n: int) -> int:
    """Injective number for the tree edge above ``child`` in the tree of ``root``."""
    return source_index * (n - 1) + (child if child < root else child - 1) + 1


# ------------------------------------------------------------------ trees


class _MultiBfs:
    def __init__(self, g: Graph, roots: Sequence[int]):
        self.g = g
        self.roots = list(roots)
        self.depth: list[dict[int, int]] = [dict() for _ in range(g.n)]
        self.parent: list[dict[int, int]] = [dict() for _ in range(g.n)]

    def init(self, net) -> None:
        for r in self.roots:
            self.depth[r][r] = 0
            for u in self.g.adj[r]:
                net.send(r, u, (r, 0))

    def on_round(self, v, rnd, inbox, net) -> None:
        depth, parent = self.depth[v], self.parent[v]
        changed = []
        for src, (r, d) in inbox:
            nd = d + 1
            cur = depth.get(r)
            if cur is None or nd < cur:
                depth[r] = nd
                parent[r] = src
                changed.append(r)
            elif nd == cur and src < parent.get(r, src + 1):
                parent[r] = src
        for r in dict.fromkeys(changed):
            d = depth[r]
            for u in self.g.adj[v]:
                if u != parent[r]:
                    net.send(v, u, (r, d))


class _NotifyParents:
    def __init__(self, g: Graph, parent: list[dict[int, int]]):
        self.g = g
        self.parent = parent
        self.children: list[dict[int, list[int]]] = [defaultdict(list) for _ in range(g.n)]

    def init(self, net) -> None:
        for v in range(self.g.n):
            by_parent: dict[int, list[int]] = defaultdict(list)
            for r, p in sorted(self.parent[v].items()):
                by_parent[p].append(r)
            for p, rs in by_parent.items():
                net.send(v, p, tuple(rs), units=net.config.units(len(rs)))

    def on_round(self, v, rnd, inbox, net) -> None:
        for src, rs in inbox:
            for r in rs:
                self.children[v][r].append(src)


def build_trees(
    g: Graph, roots: Sequence[int], config: NetworkConfig, trace: StagedTrace | None = None
) -> tuple[dict[int, ShortestPathTree], dict[int, list[list[int]]]]:
    """Distributed BFS trees of all ``roots``; returns trees and child lists."""
    roots = sorted(set(roots))
    proto = _MultiBfs(g, roots)
    tr = sim.run(g, proto, config)
    notify = _NotifyParents(g, proto.parent)
    tr2 = sim.run(g, notify, config)
    if trace is not None:
        trace.add("bfs_trees", tr)
        trace.add("tree_children", tr2)
    trees, children = {}, {}
    for r in roots:
        par = tuple(proto.parent[v].get(r) for v in range(g.n))
        dep = tuple(proto.depth[v].get(r) for v in range(g.n))
        trees[r] = ShortestPathTree(r, par, dep)
        children[r] = [sorted(notify.children[v].get(r, ())) for v in range(g.n)]
    return trees, children


# ------------------------------------------------------------------ suffixes


class _Suffixes:
    def __init__(self, g, trees, children, index, sigma_prime):
        self.g = g
        self.trees = trees
        self.children = children
        self.index = index
        self.sigma_prime = sigma_prime
        self.got: list[dict[int, dict[int, TreeEdge]]] = [defaultdict(dict) for _ in range(g.n)]

    def _forward(self, net, v, r, ent, hop) -> None:
        if hop <= self.sigma_prime:
            for c in self.children[r][v]:
                net.send(v, c, (r, ent, hop))

    def init(self, net) -> None:
        if self.sigma_prime < 1:
            return
        for r, tree in self.trees.items():
            for v in range(self.g.n):
                p = tree.parent[v]
                if p is None:
                    continue
                ent = TreeEdge(edge_number(self.index[r], r, v, self.g.n), p, v)
                self.got[v][r][1] = ent
                self._forward(net, v, r, ent, 2)

    def on_round(self, v, rnd, inbox, net) -> None:
        for _, (r, ent, hop) in inbox:
            self.got[v][r][hop] = ent
            self._forward(net, v, r, ent, hop + 1)


def learn_suffixes(
    g: Graph,
    trees: dict[int, ShortestPathTree],
    children: dict[int, list[list[int]]],
    sigma_prime: int,
    config: NetworkConfig,
    trace: StagedTrace | None = None,
    index: dict[int, int] | None = None,
) -> list[dict[int, tuple[TreeEdge, ...]]]:
    """Every vertex learns the last ``sigma_prime`` numbered edges of each tree path.

    Lists are ordered from the edge farthest from the vertex to its own
    parent edge. ``index`` maps each root to the index used in edge numbers.
    """
    index = index or {r: i for i, r in enumerate(sorted(trees))}
    proto = _Suffixes(g, trees, children, index, sigma_prime)
    tr = sim.run(g, proto, config)
    if trace is not None:
        trace.add("suffixes", tr)
    out = []
    for v in range(g.n):
        out.append({r: tuple(h[k] for k in sorted(h, reverse=True)) for r, h in proto.got[v].items()})
    return out


class _Exchange:
    def __init__(self, g, lists):
        self.g = g
        self.lists = lists
        self.nbr: list[dict[int, dict[int, tuple]]] = [defaultdict(dict) for _ in range(g.n)]

    def init(self, net) -> None:
        for v in range(self.g.n):
            for r, lst in sorted(self.lists[v].items()):
                if not lst:
                    continue
                for u in self.g.adj[v]:
                    net.send(v, u, (r, lst), units=net.config.units(2 * len(lst)))

    def on_round(self, v, rnd, inbox, net) -> None:
        for src, (r, lst) in inbox:
            self.nbr[v][src][r] = lst


def exchange_lists(g: Graph, lists, config: NetworkConfig, trace: StagedTrace | None = None):
    proto = _Exchange(g, lists)
    tr = sim.run(g, proto, config)
    if trace is not None:
        trace.add("list_exchange", tr)
    return [dict(proto.nbr[v]) for v in range(g.n)]


def local_path_membership(k: NodeKnowledge, u: int, s: int, e: TreeEdge, sigma_prime: int) -> bool:
    """Whether ``e`` lies on ``pi(s, v)`` for ``v = k.vertex``, using only local lists.

    Requires ``e`` to be in the list ``v`` holds for its neighbor ``u``.
    """
    if e not in k.neighbor_lists.get(u, {}).get(s, ()):
        raise ValueError(f"edge {e.num} is not in the list of neighbor {u}")
    return _on_path(k.lists.get(s, ()), e, sigma_prime)


def _on_path(own: Sequence[TreeEdge], e: TreeEdge, sigma_prime: int) -> bool:
    if e in own:
        return True
    return len(own) == sigma_prime and e.child == own[0].parent


# ------------------------------------------------------------------ tokens


@dataclass
class TokenOutcome:
    log: list[dict[tuple[int, int], tuple[int, int]]]
    suffixes: list[dict[tuple[int, int], tuple[Edge, ...]]]
    added: list[tuple[Edge, tuple[int, int]]]
    initiations: int
    trace: SimTrace
    taus: dict[tuple[int, int], int]


class _Tokens:
    def __init__(self, g, sources, know, sigma, sigma_prime, delay_range, seed, ell, carry, config, salt=""):
        self.g = g
        self.salt = salt
        self.sources = sources
        self.know: list[NodeKnowledge] = know
        self.sigma = sigma
        self.sigma_prime = sigma_prime
        self.delay_range = delay_range
        self.seed = seed
        self.carry = carry
        self.unit_cap = config.units(2 + 2 * carry) if carry else 1
        self.ell = ell * self.unit_cap
        self.taus: dict[tuple[int, int], int] = {}
        self.sched: list[dict[int, list]] = [defaultdict(list) for _ in range(g.n)]
        self.buf: list[dict[tuple[int, int], dict[int, tuple]]] = [defaultdict(dict) for _ in range(g.n)]
        self.log: list[dict] = [dict() for _ in range(g.n)]
        self.suffix: list[dict] = [dict() for _ in range(g.n)]
        self.added: list[tuple[Edge, tuple[int, int]]] = []
        self.initiations = 0
        # per vertex, per source: num -> position counted from the vertex (1 = own parent edge)
        self.pos = [
            {s: {t.num: len(lst) - i for i, t in enumerate(lst)} for s, lst in k.lists.items()} for k in know
        ]
        self.nbr_entry = [
            {u: {s: {t.num: t for t in lst} for s, lst in d.items()} for u, d in k.neighbor_lists.items()}
            for k in know
        ]

    def tau(self, key) -> int:
        t = self.taus.get(key)
        if t is None:
            t = self.taus[key] = sim.delay_of(self.seed, (self.salt,) + key if self.salt else key, self.delay_range)
        return t

    def _payload(self, s, num, suf):
        return (s, num, suf) if self.carry else (s, num)

    def init(self, net) -> None:
        for v in range(self.g.n):
            k = self.know[v]
            for u in self.g.adj[v]:
                for s, ents in self.nbr_entry[v].get(u, {}).items():
                    own = k.lists.get(s, ())
                    dv = k.depth.get(s)
                    if dv is None:
                        continue
                    for num, ent in ents.items():
                        if ent.pair == edge(v, u) or _on_path(own, ent, self.sigma_prime):
                            continue
                        phase = dv + self.tau((s, num))
                        self.sched[v][phase].append((s, ent, u))
            for phase in self.sched[v]:
                net.wake(v, phase * self.ell)

    def _send(self, net, v, u, s, num, suf, phase) -> None:
        units = net.config.units(2 + 2 * len(suf)) if self.carry else 1
        net.send(v, u, self._payload(s, num, suf), units=units, deadline=(phase + 1) * self.ell - 1)

    def on_round(self, v, rnd, inbox, net) -> None:
        buf = self.buf[v]
        for src, payload in inbox:
            s, num = payload[0], payload[1]
            buf[(s, num)][src] = payload[2] if self.carry else ()
        if rnd % self.ell:
            if inbox:
                net.wake(v, (rnd // self.ell + 1) * self.ell)
            return
        phase = rnd // self.ell
        k = self.know[v]
        if buf:
            self.buf[v] = defaultdict(dict)
            for key in sorted(buf):
                senders = buf[key]
                if key in self.log[v]:
                    continue
                w = min(senders)
                self.log[v][key] = (phase, w)
                s, num = key
                p = self.pos[v].get(s, {}).get(num)
                suf = ()
                if self.carry:
                    suf = (tuple(senders[w]) + (edge(w, v),))[-self.carry :]
                    self.suffix[v][key] = suf
                if p is not None and p <= self.sigma:
                    self.added.append((edge(w, v), key))
                own = k.lists.get(s, ())
                for u in self.g.adj[v]:
                    if u in senders:
                        continue
                    ent = self.nbr_entry[v].get(u, {}).get(s, {}).get(num)
                    if ent is None or ent.pair == edge(v, u) or not _on_path(own, ent, self.sigma_prime):
                        continue
                    self._send(net, v, u, s, num, suf, phase)
        todo = self.sched[v].pop(phase, ())
        for s, ent, u in todo:
            suf = ()
            if self.carry:
                suf = tuple(k.suffix_edges(s, self.carry))
            self.initiations += 1
            self._send(net, v, u, s, ent.num, suf, phase)


def run_tokens(
    g: Graph,
    sources: Sequence[int],
    know: list[NodeKnowledge],
    sigma: int,
    sigma_prime: int,
    delay_range: int,
    seed: SharedSeed,
    config: NetworkConfig,
    *,
    carry_suffix: int = 0,
    salt: str = "",
    log: bool = False,
) -> TokenOutcome:
    """Truncated, randomly delayed BFS tokens for every ``(s, e)`` key.

    With ``carry_suffix > 0`` every token also carries the last
    ``carry_suffix`` edges of the path it travelled, and the phase length is
    stretched by the largest token size so that one phase still fits a
    token per hop.
    """
    proto = _Tokens(
        g, list(sources), know, sigma, sigma_prime, delay_range, seed, config.ell(g.n), carry_suffix, config, salt
    )
    tr = sim.run(g, proto, config, phase_length=proto.ell, log=log)
    for v in range(g.n):
        know[v].token_log = proto.log[v]
    return TokenOutcome(proto.log, proto.suffix, proto.added, proto.initiations, tr, proto.taus)


# ------------------------------------------------------------------ driver


@dataclass
class FtmbfsResult:
    subgraph: PreserverSubgraph
    trace: StagedTrace
    knowledge: list[NodeKnowledge]
    params: FtmbfsParams
    sources: tuple[int, ...]
    sampled: frozenset[int]
    trees: dict[int, ShortestPathTree]
    seed: SharedSeed
    tokens: TokenOutcome

    def tau(self, s: int, e: Edge) -> int:
        """Start phase of the token for ``(s, e)``; ``e`` must be an edge of ``T_s``."""
        x, y = e
        tree = self.trees[s]
        child = y if tree.parent[y] == x else x
        num = edge_number(self.sources.index(s), s, child, self.subgraph.host.n)
        return sim.delay_of(self.seed, (s, num), self.params.delay_range)


def gather_knowledge(g, sources, trees, lists, nbr_lists) -> list[NodeKnowledge]:
    know = []
    for v in range(g.n):
        depth = {s: trees[s].depth[v] for s in sources if trees[s].depth[v] is not None}
        own = {s: lists[v].get(s, ()) for s in sources}
        nb = {u: {s: nbr_lists[v].get(u, {}).get(s, ()) for s in sources} for u in g.adj[v]}
        know.append(NodeKnowledge(v, depth, own, nb))
    return know


def build_ftmbfs(g: Graph, sources: Sequence[int], config: FtmbfsConfig | None = None, seed: int = 0) -> FtmbfsResult:
    """Single-failure FT-MBFS of ``g`` w.r.t. ``sources``, built in the simulator."""
    cfg = config or FtmbfsConfig()
    srcs = tuple(sorted(set(sources)))
    if not srcs:
        raise ValueError("sources must be nonempty")
    if not g.is_connected():
        raise ValueError("the distributed constructions need a connected graph")
    net = cfg.network
    params = FtmbfsParams.for_graph(g.n, len(srcs), cfg.sample_constant, cfg.sigma, cfg.sample_prob, cfg.delay_range)
    sampled = sample(g, params.sample_prob, derive_seed(seed, "ftmbfs-sample"))
    trace = StagedTrace()
    trees, children = build_trees(g, set(srcs) | sampled, net, trace)
    src_trees = {s: trees[s] for s in srcs}
    index = {s: i for i, s in enumerate(srcs)}
    lists = learn_suffixes(g, src_trees, children, params.sigma_prime, net, trace, index)
    nbr = exchange_lists(g, lists, net, trace)
    shared, tr = sim.broadcast_seed(g, sim.seed_bits(derive_seed(seed, "shared-seed")), net)
    trace.add("seed", tr)
    know = gather_knowledge(g, srcs, trees, lists, nbr)
    tok = run_tokens(g, srcs, know, params.sigma, params.sigma_prime, params.delay_range, shared, net,
                     log=cfg.log_messages)
    trace.add("tokens", tok.trace)
    h = PreserverSubgraph(g)
    for s in srcs:
        h.add_all(trees[s].tree_edges(), "tree_S")
    for r in sorted(sampled):
        h.add_all(trees[r].tree_edges(), "tree_R")
    for e, _ in tok.added:
        h.add(e, "token")
    return FtmbfsResult(h, trace, know, params, srcs, sampled, trees, shared, tok)
