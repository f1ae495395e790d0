"""Heavy-light LCA labels for BFS trees, plus their distributed construction.

A label of ``v`` lists the heavy paths met on the way from the root:
``((head_1, exit_1), ..., (head_k, depth(v)))`` where ``exit_i`` is the depth at
which the root path leaves heavy path ``i`` through a light edge. Two labels
alone determine the depth of the lowest common ancestor, and hence ancestry.
"""
from __future__ import annotations

from collections import defaultdict
from typing import Sequence

from . import congest_sim as sim
from .congest_sim import NetworkConfig, StagedTrace
from .graph_core import Graph, ShortestPathTree

Label = tuple[tuple[int, int], ...]


def label_depth(a: Label) -> int:
    return a[-1][1]


def lca_depth(a: Label, b: Label) -> int:
    if a[0][0] != b[0][0]:
        raise ValueError("labels come from different trees")
    i = 0
    while True:
        xa, xb = a[i][1], b[i][1]
        if xa != xb or i + 1 == len(a) or i + 1 == len(b):
            return min(xa, xb)
        if a[i + 1][0] != b[i + 1][0]:
            return xa
        i += 1


def is_ancestor(a: Label, b: Label) -> bool:
    """Whether the vertex labelled ``a`` lies on the root path of ``b``."""
    return lca_depth(a, b) == label_depth(a)


def ancestor_label(b: Label, depth: int) -> Label:
    """Label of the ancestor of ``b`` at the given depth."""
    if not 0 <= depth <= label_depth(b):
        raise ValueError("depth outside the root path")
    for i, (head, exit_depth) in enumerate(b):
        if exit_depth >= depth:
            return b[:i] + ((head, depth),)
    raise AssertionError("unreachable")


def heavy_children(tree: ShortestPathTree) -> list[int | None]:
    """Child with the largest subtree, ties to the lower ID."""
    children = tree.children()
    size = [1] * len(tree.parent)
    order = sorted((v for v in range(len(tree.parent)) if tree.depth[v] is not None), key=lambda v: -tree.depth[v])
    for v in order:
        p = tree.parent[v]
        if p is not None:
            size[p] += size[v]
    heavy: list[int | None] = [None] * len(size)
    for v in range(len(size)):
        if children[v]:
            heavy[v] = min(children[v], key=lambda c: (-size[c], c))
    return heavy


def tree_labels(tree: ShortestPathTree) -> list[Label | None]:
    """Centralized reference labelling."""
    heavy = heavy_children(tree)
    children = tree.children()
    labels: list[Label | None] = [None] * len(tree.parent)
    labels[tree.source] = ((tree.source, 0),)
    stack = [tree.source]
    while stack:
        v = stack.pop()
        lab = labels[v]
        d = lab[-1][1]
        for c in children[v]:
            labels[c] = lab[:-1] + ((lab[-1][0], d + 1),) if c == heavy[v] else lab + ((c, d + 1),)
            stack.append(c)
    return labels


class _Labelling:
    """Convergecast subtree sizes, then push labels down each tree."""

    def __init__(self, g: Graph, trees: dict[int, ShortestPathTree], children: dict[int, list[list[int]]]):
        self.g = g
        self.trees = trees
        self.children = children
        self.size = [defaultdict(lambda: 1) for _ in range(g.n)]
        self.child_size: list[dict[int, dict[int, int]]] = [defaultdict(dict) for _ in range(g.n)]
        self.labels: list[dict[int, Label]] = [dict() for _ in range(g.n)]

    def _report(self, net, v, r) -> None:
        p = self.trees[r].parent[v]
        sz = 1 + sum(self.child_size[v][r].values())
        if p is None:
            self._push(net, v, r, ((r, 0),))
        else:
            net.send(v, p, ("size", r, sz))

    def _push(self, net, v, r, lab: Label) -> None:
        self.labels[v][r] = lab
        kids = self.children[r][v]
        if not kids:
            return
        sizes = self.child_size[v][r]
        heavy = min(kids, key=lambda c: (-sizes[c], c))
        d = lab[-1][1]
        for c in kids:
            out = lab[:-1] + ((lab[-1][0], d + 1),) if c == heavy else lab + ((c, d + 1),)
            net.send(v, c, ("label", r, out), units=net.config.units(2 * len(out)))

    def init(self, net) -> None:
        for r in sorted(self.trees):
            for v in range(self.g.n):
                if self.trees[r].depth[v] is not None and not self.children[r][v]:
                    self._report(net, v, r)

    def on_round(self, v, rnd, inbox, net) -> None:
        for src, msg in inbox:
            kind, r, body = msg
            if kind == "size":
                self.child_size[v][r][src] = body
                if len(self.child_size[v][r]) == len(self.children[r][v]):
                    self._report(net, v, r)
            else:
                self._push(net, v, r, body)


def distributed_labels(
    g: Graph,
    trees: dict[int, ShortestPathTree],
    children: dict[int, list[list[int]]],
    config: NetworkConfig,
    trace: StagedTrace | None = None,
) -> list[dict[int, Label]]:
    """Per-vertex labels in every tree, computed inside the simulator."""
    proto = _Labelling(g, trees, children)
    tr = sim.run(g, proto, config)
    if trace is not None:
        trace.add("lca_labels", tr)
    return proto.labels


def tree_lca_depth(tree: ShortestPathTree, u: int, v: int) -> int:
    """Direct LCA depth by walking parents, for cross-checking labels."""
    dep, par = tree.depth, tree.parent
    while dep[u] > dep[v]:
        u = par[u]
    while dep[v] > dep[u]:
        v = par[v]
    while u != v:
        u, v = par[u], par[v]
    return dep[u]


def labels_consistent(tree: ShortestPathTree, labels: Sequence[Label | None]) -> bool:
    n = len(tree.parent)
    for u in range(n):
        for v in range(n):
            if labels[u] is None or labels[v] is None:
                continue
            if lca_depth(labels[u], labels[v]) != tree_lca_depth(tree, u, v):
                return False
    return True
