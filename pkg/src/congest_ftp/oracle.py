"""Exhaustive ground truth for fault-tolerant preservers.

Distances under every fault set are computed with batched dense BFS
(``frontier @ adjacency`` over a stack of faulted adjacency matrices), which
keeps the all-pairs-of-faults enumeration tractable at n <= 40.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .graph_core import (
    NO_FAULTS,
    Edge,
    FaultSet,
    Graph,
    Path,
    bfs_consistent,
    edge,
    iter_fault_sets,
    last_edge,
)

DUAL_SIZE_CAP = 40
_BATCH_BYTES = 48 * 2**20


class OracleConsistencyError(AssertionError):
    """A subgraph distance beat the host-graph distance."""


@dataclass(frozen=True)
class Violation:
    s: int
    t: int
    faults: tuple[Edge, ...]
    dist_g: int | None
    dist_h: int | None

    def as_dict(self) -> dict:
        return {
            "s": self.s,
            "t": self.t,
            "faults": [list(e) for e in self.faults],
            "dist_g": self.dist_g,
            "dist_h": self.dist_h,
        }


@dataclass
class VerificationReport:
    passed: bool
    violations: list[Violation] = field(default_factory=list)
    triples_checked: int = 0

    def to_json(self) -> dict:
        return {
            "pass": self.passed,
            "triples_checked": self.triples_checked,
            "violations": [v.as_dict() for v in self.violations],
        }

    def summary(self, limit: int = 20) -> str:
        head = f"{'PASS' if self.passed else 'FAIL'}: {self.triples_checked} triples, {len(self.violations)} violations"
        lines = [head]
        for v in self.violations[:limit]:
            lines.append(f"  s={v.s} t={v.t} F={list(v.faults)} G={v.dist_g} H={v.dist_h}")
        if len(self.violations) > limit:
            lines.append(f"  ... {len(self.violations) - limit} more")
        return "\n".join(lines)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


@dataclass(frozen=True)
class SensitiveDetour:
    first_sensitive: int
    segment: Path
    preceding_vertex: int | None


# ------------------------------------------------------------ batched BFS core


def _adjacency(n: int, edges: Iterable[Edge]) -> np.ndarray:
    a = np.zeros((n, n), dtype=np.float32)
    for u, v in edges:
        a[u, v] = a[v, u] = 1.0
    return a


def _faulted_stack(a: np.ndarray, faults: Sequence[FaultSet]) -> np.ndarray:
    stack = np.repeat(a[None, :, :], len(faults), axis=0)
    bi, ui, vi = [], [], []
    for b, fs in enumerate(faults):
        for u, v in fs:
            bi.append(b)
            ui.append(u)
            vi.append(v)
    if bi:
        stack[bi, ui, vi] = 0.0
        stack[bi, vi, ui] = 0.0
    return stack


def _batched_depths(stack: np.ndarray, sources: Sequence[int]) -> np.ndarray:
    """``(B, k, n)`` hop distances from each source, ``-1`` if unreachable."""
    nb, n, _ = stack.shape
    k = len(sources)
    dist = np.full((nb, k, n), -1, dtype=np.int32)
    front = np.zeros((nb, k, n), dtype=np.float32)
    rows = np.arange(k)
    front[:, rows, list(sources)] = 1.0
    dist[:, rows, list(sources)] = 0
    visited = front > 0
    d = 0
    while True:
        d += 1
        nxt = np.matmul(front, stack) > 0
        nxt &= ~visited
        if not nxt.any():
            return dist
        visited |= nxt
        dist[nxt] = d
        front = nxt.astype(np.float32)


def _batches(items: Sequence, per_item_bytes: int) -> Iterator[tuple[int, Sequence]]:
    size = max(1, _BATCH_BYTES // max(1, per_item_bytes))
    for i in range(0, len(items), size):
        yield i, items[i : i + size]


def fault_sets(g: Graph, f: int) -> list[FaultSet]:
    return sorted(iter_fault_sets(g, f), key=FaultSet.key)


def distances_under_faults(
    g: Graph, edges: Iterable[Edge] | None, sources: Sequence[int], faults: Sequence[FaultSet]
) -> np.ndarray:
    """``(len(faults), len(sources), n)`` distances in ``(V, edges) - F``."""
    a = _adjacency(g.n, g.edges if edges is None else edges)
    out = np.empty((len(faults), len(sources), g.n), dtype=np.int32)
    per = 4 * g.n * (g.n + 2 * len(sources)) + 1
    for i, chunk in _batches(faults, per):
        out[i : i + len(chunk)] = _batched_depths(_faulted_stack(a, chunk), sources)
    return out


# ---------------------------------------------------------------- verification


def _check_subset(g: Graph, h: Iterable[Edge]) -> frozenset[Edge]:
    hs = frozenset(edge(*e) for e in h)
    extra = hs - g.edges
    if extra:
        raise ValueError(f"subgraph has {len(extra)} edges not in the host graph, e.g. {min(extra)}")
    return hs


def _compare(
    g: Graph,
    h: Iterable[Edge],
    sources: Sequence[int],
    f: int,
    beta: int | None,
    allow_large: bool,
) -> VerificationReport:
    hs = _check_subset(g, h)
    if f not in (0, 1, 2):
        raise ValueError("f must be 0, 1 or 2")
    if f == 2 and g.n > DUAL_SIZE_CAP and not allow_large:
        raise ValueError(f"dual-fault verification capped at n <= {DUAL_SIZE_CAP}; pass allow_large=True")
    srcs = sorted(set(sources))
    fsets = fault_sets(g, f)
    ag, ah = _adjacency(g.n, g.edges), _adjacency(g.n, hs)
    raw: list[tuple[int, int, int, int, int]] = []
    per = 8 * g.n * (g.n + 2 * len(srcs)) + 1
    for i, chunk in _batches(fsets, per):
        dg = _batched_depths(_faulted_stack(ag, chunk), srcs)
        dh = _batched_depths(_faulted_stack(ah, chunk), srcs)
        if np.any((dg < 0) & (dh >= 0)) or np.any((dh >= 0) & (dh < dg)):
            raise OracleConsistencyError("subgraph distance shorter than host distance")
        if beta is None:
            bad = dg != dh
        else:
            bad = ((dg >= 0) & (dh < 0)) | ((dg >= 0) & (dh > dg + beta))
        for b, si, t in zip(*np.nonzero(bad)):
            raw.append((int(si), i + int(b), int(t), int(dg[b, si, t]), int(dh[b, si, t])))
    raw.sort(key=lambda r: (r[0], r[1], r[2]))
    viol = [
        Violation(srcs[si], t, fsets[fi].key(), dgv if dgv >= 0 else None, dhv if dhv >= 0 else None)
        for si, fi, t, dgv, dhv in raw
    ]
    return VerificationReport(not viol, viol, len(srcs) * len(fsets) * g.n)


def verify_preserver(
    g: Graph, h: Iterable[Edge], sources: Iterable[int], f: int, *, allow_large: bool = False
) -> VerificationReport:
    """Exact ``dist(s,t,H-F) == dist(s,t,G-F)`` for all ``s in S, t, |F| <= f``."""
    return _compare(g, h, list(sources), f, None, allow_large)


def verify_additive(
    g: Graph, h: Iterable[Edge], f: int, beta: int, *, allow_large: bool = False
) -> VerificationReport:
    """``dist(s,t,H-F) <= dist(s,t,G-F) + beta`` for all pairs and ``|F| <= f``."""
    return _compare(g, h, list(range(g.n)), f, beta, allow_large)


# ------------------------------------------------------------ last-edge oracles


def tie_broken_parents(g: Graph, sources: Sequence[int], faults: Sequence[FaultSet]) -> np.ndarray:
    """``(len(faults), k, n)`` min-ID BFS parent of each target, ``-1`` if none."""
    a = _adjacency(g.n, g.edges)
    k = len(sources)
    out = np.full((len(faults), k, g.n), -1, dtype=np.int32)
    per = 4 * g.n * g.n * (1 + 2 * k) + 1
    for i, chunk in _batches(faults, per):
        stack = _faulted_stack(a, chunk)
        dist = _batched_depths(stack, sources)
        cand = (stack[:, None, :, :] > 0) & (dist[:, :, :, None] == dist[:, :, None, :] - 1)
        cand &= dist[:, :, None, :] > 0
        has = cand.any(axis=2)
        first = cand.argmax(axis=2)
        out[i : i + len(chunk)] = np.where(has, first, -1)
    return out


def canonical_last_edges(g: Graph, sources: Iterable[int], f: int) -> set[Edge]:
    """Union of ``LastE(P(s,t,F))`` over ``s in S``, all ``t`` and ``|F| <= f``."""
    srcs = sorted(set(sources))
    fsets = fault_sets(g, f)
    par = tie_broken_parents(g, srcs, fsets)
    bb, kk, tt = np.nonzero(par >= 0)
    return {edge(int(par[b, k, t]), int(t)) for b, k, t in zip(bb, kk, tt)}


def coverage_mask(
    g: Graph, cover: Iterable[Edge], sources: Sequence[int], faults: Sequence[FaultSet]
) -> tuple[np.ndarray, np.ndarray]:
    """Which (F, s, t) have a valid last edge inside ``cover``.

    An edge ``(p, t)`` is a valid last edge for ``(s, t, F)`` when it
    survives ``F`` and ``dist(s,p,G-F) = dist(s,t,G-F) - 1``. Returns
    ``(required, covered)`` boolean arrays of shape ``(B, k, n)``; a triple is
    required when ``t`` is reachable and ``t != s``.
    """
    a = _adjacency(g.n, g.edges)
    c = _adjacency(g.n, cover)
    k = len(sources)
    req = np.zeros((len(faults), k, g.n), dtype=bool)
    cov = np.zeros_like(req)
    per = 4 * g.n * g.n * (2 + 2 * k) + 1
    for i, chunk in _batches(faults, per):
        dist = _batched_depths(_faulted_stack(a, chunk), sources)
        cs = _faulted_stack(c, chunk)
        ok = (cs[:, None, :, :] > 0) & (dist[:, :, :, None] == dist[:, :, None, :] - 1)
        req[i : i + len(chunk)] = dist > 0
        cov[i : i + len(chunk)] = ok.any(axis=2) & (dist > 0)
    return req, cov


# ------------------------------------------------------------ sensitive detours


def _is_below(tree_parent: Sequence[int | None], depth: Sequence[int | None], w: int, y: int) -> bool:
    """Whether ``y`` lies on the tree path from the root to ``w``."""
    if depth[w] is None or depth[y] is None or depth[w] < depth[y]:
        return False
    while depth[w] > depth[y]:
        w = tree_parent[w]
    return w == y


def sensitive_to_edge(g: Graph, s: int, e: Edge, w: int, tree=None) -> bool:
    """``e in pi(s, w)``."""
    tree = tree or bfs_consistent(g, s)
    x, y = e
    if tree.parent[y] != x:
        if tree.parent[x] != y:
            return False
        x, y = y, x
    return _is_below(tree.parent, tree.depth, w, y)


def sensitive_detour(g: Graph, s: int, t: int, faults: Iterable[Edge]) -> SensitiveDetour | None:
    fs = faults if isinstance(faults, FaultSet) else FaultSet(faults)
    fs.check(g)
    tf = bfs_consistent(g, s, fs)
    p = tf.path_to(t)
    if p is None:
        raise ValueError(f"{t} is unreachable from {s} after removing {fs.key()}")
    if not fs:
        return None
    if len(fs) == 1:
        (e,) = tuple(fs)
        base = bfs_consistent(g, s)
        sens = lambda w: sensitive_to_edge(g, s, e, w, base)  # noqa: E731
    else:
        e1, e2 = fs.key()
        t1, t2 = bfs_consistent(g, s, [e1]), bfs_consistent(g, s, [e2])

        def sens(w: int) -> bool:
            pw = tf.path_to(w)
            return pw != t1.path_to(w) and pw != t2.path_to(w)

    vs = p.vertices
    for i, w in enumerate(vs):
        if sens(w):
            return SensitiveDetour(w, Path(vs[i:]), vs[i - 1] if i else None)
    return None


def replacement_last_edge(g: Graph, s: int, t: int, faults: Iterable[Edge]) -> Edge | None:
    return last_edge(bfs_consistent(g, s, faults).path_to(t))
