"""Graphs, tie-broken BFS trees, replacement paths and path suffixes.

Vertices are dense integers ``0..n-1``. Every shortest path in this package
is the one obtained from a BFS tree in which each vertex picks the
minimum-ID neighbor one level closer to the root as its parent.
"""
from __future__ import annotations

import hashlib
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

Edge = tuple[int, int]


def edge(u: int, v: int) -> Edge:
    """Canonical (min, max) form of an undirected edge."""
    return (u, v) if u < v else (v, u)


def derive_seed(seed: int, *labels: object) -> int:
    """Stable 64-bit sub-seed for a named stage of a seeded computation."""
    h = hashlib.sha256(repr((int(seed),) + labels).encode())
    return int.from_bytes(h.digest()[:8], "big")


def ceil_log(n: int) -> int:
    """``ceil(ln n)``, at least 1."""
    return max(1, math.ceil(math.log(max(n, 2))))


class Graph:
    """Immutable simple undirected graph on vertices ``0..n-1``."""

    __slots__ = ("n", "edges", "adj", "labels", "_adj_sets", "_diameter", "_matrix")

    def __init__(self, n: int, edges: Iterable[tuple[int, int]], labels: Sequence[str] | None = None):
        self.n = int(n)
        es: set[Edge] = set()
        for u, v in edges:
            if u == v:
                raise ValueError(f"self-loop at {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u},{v}) out of range for n={n}")
            es.add(edge(u, v))
        self.edges: frozenset[Edge] = frozenset(es)
        nbrs: list[list[int]] = [[] for _ in range(n)]
        for u, v in es:
            nbrs[u].append(v)
            nbrs[v].append(u)
        self.adj: tuple[tuple[int, ...], ...] = tuple(tuple(sorted(a)) for a in nbrs)
        self._adj_sets = tuple(frozenset(a) for a in self.adj)
        self.labels = tuple(labels) if labels is not None else tuple(str(i) for i in range(n))
        self._diameter: int | None = None
        self._matrix: np.ndarray | None = None

    @property
    def m(self) -> int:
        return len(self.edges)

    def has_edge(self, u: int, v: int) -> bool:
        return v in self._adj_sets[u]

    def degree(self, v: int) -> int:
        return len(self.adj[v])

    def sorted_edges(self) -> list[Edge]:
        return sorted(self.edges)

    def subgraph(self, edges: Iterable[Edge]) -> "Graph":
        es = [edge(*e) for e in edges]
        for e in es:
            if e not in self.edges:
                raise ValueError(f"edge {e} not in host graph")
        return Graph(self.n, es, self.labels)

    def adjacency_matrix(self) -> np.ndarray:
        if self._matrix is None:
            a = np.zeros((self.n, self.n), dtype=np.float32)
            for u, v in self.edges:
                a[u, v] = a[v, u] = 1.0
            a.setflags(write=False)
            self._matrix = a
        return self._matrix

    def is_connected(self) -> bool:
        if self.n <= 1:
            return True
        return all(d is not None for d in bfs_depths(self, 0))

    @property
    def diameter(self) -> int:
        """Largest finite eccentricity (per component if disconnected)."""
        if self._diameter is None:
            best = 0
            for s in range(self.n):
                for d in bfs_depths(self, s):
                    if d is not None and d > best:
                        best = d
            self._diameter = best
        return self._diameter

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.m})"

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Graph) and self.n == other.n and self.edges == other.edges

    def __hash__(self) -> int:
        return hash((self.n, self.edges))


class FaultSet(frozenset):
    """At most two failed edges, stored canonically."""

    def __new__(cls, edges: Iterable[tuple[int, int]] = ()):
        es = frozenset(edge(*e) for e in edges)
        if len(es) > 2:
            raise ValueError("at most two faults are supported")
        return super().__new__(cls, es)

    def check(self, g: Graph) -> "FaultSet":
        for e in self:
            if e not in g.edges:
                raise ValueError(f"fault {e} is not an edge of the graph")
        return self

    def key(self) -> tuple[Edge, ...]:
        return tuple(sorted(self))

    def __repr__(self) -> str:
        return f"FaultSet({list(self.key())})"


NO_FAULTS = FaultSet()


@dataclass(frozen=True)
class ShortestPathTree:
    source: int
    parent: tuple[int | None, ...]
    depth: tuple[int | None, ...]
    faults: FaultSet = field(default=NO_FAULTS)

    def reachable(self, v: int) -> bool:
        return self.depth[v] is not None

    def path_to(self, t: int) -> "Path | None":
        if self.depth[t] is None:
            return None
        out = [t]
        while out[-1] != self.source:
            out.append(self.parent[out[-1]])
        out.reverse()
        return Path(tuple(out))

    def tree_edges(self) -> set[Edge]:
        return {edge(p, v) for v, p in enumerate(self.parent) if p is not None}

    def children(self) -> list[list[int]]:
        ch: list[list[int]] = [[] for _ in self.parent]
        for v, p in enumerate(self.parent):
            if p is not None:
                ch[p].append(v)
        return ch


@dataclass(frozen=True)
class Path:
    vertices: tuple[int, ...]

    def __len__(self) -> int:
        """Number of edges."""
        return len(self.vertices) - 1

    @property
    def source(self) -> int:
        return self.vertices[0]

    @property
    def target(self) -> int:
        return self.vertices[-1]

    def edges(self) -> list[Edge]:
        vs = self.vertices
        return [edge(vs[i], vs[i + 1]) for i in range(len(vs) - 1)]

    def __contains__(self, item: object) -> bool:
        if isinstance(item, tuple) and len(item) == 2:
            return edge(*item) in set(self.edges())
        return item in self.vertices

    def segment(self, a: int, b: int) -> "Path":
        i, j = self.vertices.index(a), self.vertices.index(b)
        return Path(self.vertices[i : j + 1])


def bfs_depths(g: Graph, s: int, faults: Iterable[Edge] = ()) -> list[int | None]:
    dead = set(faults)
    depth: list[int | None] = [None] * g.n
    depth[s] = 0
    q = deque([s])
    adj = g.adj
    while q:
        u = q.popleft()
        du = depth[u] + 1
        for w in adj[u]:
            if depth[w] is None and (not dead or edge(u, w) not in dead):
                depth[w] = du
                q.append(w)
    return depth


def bfs_consistent(g: Graph, s: int, faults: Iterable[Edge] = NO_FAULTS) -> ShortestPathTree:
    """BFS tree of ``g - faults`` rooted at ``s`` with min-ID parents."""
    fs = faults if isinstance(faults, FaultSet) else FaultSet(faults)
    fs.check(g)
    depth = bfs_depths(g, s, fs)
    parent: list[int | None] = [None] * g.n
    for v in range(g.n):
        dv = depth[v]
        if not dv:
            continue
        for u in g.adj[v]:
            if depth[u] == dv - 1 and (not fs or edge(u, v) not in fs):
                parent[v] = u
                break
    return ShortestPathTree(s, tuple(parent), tuple(depth), fs)


def replacement_path(g: Graph, s: int, t: int, faults: Iterable[Edge] = NO_FAULTS) -> Path | None:
    return bfs_consistent(g, s, faults).path_to(t)


def suffix(p: Path | Sequence[int] | None, sigma: int) -> list[Edge]:
    """The last ``min(sigma, |p|)`` edges of ``p``, in path order."""
    if p is None:
        return []
    vs = p.vertices if isinstance(p, Path) else tuple(p)
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    k = min(sigma, len(vs) - 1)
    if k <= 0:
        return []
    tail = vs[len(vs) - 1 - k :]
    return [edge(tail[i], tail[i + 1]) for i in range(k)]


def last_edge(p: Path | Sequence[int] | None) -> Edge | None:
    if p is None:
        return None
    vs = p.vertices if isinstance(p, Path) else tuple(p)
    if len(vs) < 2:
        return None
    return edge(vs[-2], vs[-1])


def dist_edge_vertex(g: Graph, e: Edge, t: int, faults: Iterable[Edge] = NO_FAULTS) -> int | None:
    e = edge(*e)
    if e not in g.edges:
        raise ValueError(f"{e} is not an edge")
    depth = bfs_depths(g, t, FaultSet(faults).check(g))
    ds = [d for d in (depth[e[0]], depth[e[1]]) if d is not None]
    return min(ds) if ds else None


def sample(g: Graph | int, p: float, rng_seed: int) -> frozenset[int]:
    """Each vertex independently with probability ``min(p, 1)``."""
    if p < 0:
        raise ValueError("probability must be non-negative")
    n = g.n if isinstance(g, Graph) else int(g)
    p = min(p, 1.0)
    if p == 0:
        return frozenset()
    if p == 1:
        return frozenset(range(n))
    draws = np.random.default_rng(rng_seed).random(n)
    return frozenset(int(v) for v in np.flatnonzero(draws < p))


def sample_probability(n: int, sigma: float, constant: float = 10.0) -> float:
    """``constant * ceil(ln n) / sigma`` clamped to 1."""
    if sigma <= 0:
        return 1.0
    return min(1.0, constant * ceil_log(n) / sigma)


# ---------------------------------------------------------------- file formats


def parse_edge_list(text: str) -> Graph:
    """Read ``u v`` lines; ``#`` starts a comment. Labels are remapped densely.

    Purely numeric labels keep numeric order so ``0..n-1`` inputs map to
    themselves; a line with a single token declares an isolated vertex.
    """
    pairs: list[tuple[str, str]] = []
    seen: dict[str, None] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        if len(toks) == 1:
            seen.setdefault(toks[0])
            continue
        if len(toks) != 2:
            raise ValueError(f"line {lineno}: expected 'u v', got {raw!r}")
        a, b = toks
        seen.setdefault(a)
        seen.setdefault(b)
        pairs.append((a, b))
    labels = list(seen)
    if all(l.lstrip("-").isdigit() for l in labels):
        labels.sort(key=int)
    index = {l: i for i, l in enumerate(labels)}
    return Graph(len(labels), [(index[a], index[b]) for a, b in pairs], labels)


def read_edge_list(path: str) -> Graph:
    with open(path) as fh:
        return parse_edge_list(fh.read())


def format_edge_list(g: Graph, edges: Iterable[Edge] | None = None) -> str:
    es = sorted(edge(*e) for e in (g.edges if edges is None else edges))
    lines = [f"# n={g.n} m={len(es)}"]
    lab = g.labels
    used = {v for e in es for v in e}
    lines += [lab[v] for v in range(g.n) if v not in used]
    lines += [f"{lab[u]} {lab[v]}" for u, v in es]
    return "\n".join(lines) + "\n"


def iter_fault_sets(g: Graph, f: int) -> Iterator[FaultSet]:
    """``∅``, then singletons, then pairs, each lexicographic by canonical edges."""
    es = g.sorted_edges()
    yield NO_FAULTS
    if f >= 1:
        for e in es:
            yield FaultSet([e])
    if f >= 2:
        for i, e1 in enumerate(es):
            for e2 in es[i + 1 :]:
                yield FaultSet([e1, e2])


class PreserverSubgraph:
    """Edge subset of a host graph; each edge remembers which rules added it."""

    def __init__(self, host: Graph):
        self.host = host
        self.provenance: dict[Edge, set[str]] = {}

    def add(self, e: tuple[int, int], tag: str) -> None:
        e = edge(*e)
        if e not in self.host.edges:
            raise ValueError(f"{e} is not an edge of the host graph")
        self.provenance.setdefault(e, set()).add(tag)

    def add_all(self, edges: Iterable[tuple[int, int]], tag: str) -> None:
        for e in edges:
            self.add(e, tag)

    def update(self, other: "PreserverSubgraph", prefix: str = "") -> None:
        for e, tags in other.provenance.items():
            for t in tags:
                self.add(e, prefix + t)

    @property
    def edges(self) -> frozenset[Edge]:
        return frozenset(self.provenance)

    def edges_with(self, tag: str) -> set[Edge]:
        return {e for e, tags in self.provenance.items() if tag in tags}

    def tags(self) -> set[str]:
        return {t for tags in self.provenance.values() for t in tags}

    def __len__(self) -> int:
        return len(self.provenance)

    def __contains__(self, e: object) -> bool:
        return isinstance(e, tuple) and edge(*e) in self.provenance

    def provenance_json(self) -> dict[str, list[str]]:
        lab = self.host.labels
        return {f"{lab[u]} {lab[v]}": sorted(t) for (u, v), t in sorted(self.provenance.items())}

    def to_edge_list(self) -> str:
        return format_edge_list(self.host, self.provenance)
