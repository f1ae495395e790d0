"""Check the sampled-pair distance formula on lollipop graphs.

Lists, for each instance, the (s, e, t) whose sensitive detour is longer than
sigma1 and compares the computed distance with a fresh BFS of G - e.
"""
import argparse

from congest_ftp.congest_sim import NetworkConfig
from congest_ftp.dist_dual import DualParams, compute_info_hard
from congest_ftp.graph_core import bfs_consistent, bfs_depths, suffix
from congest_ftp.harness import GraphSpec, generate
from congest_ftp.oracle import sensitive_detour


def check(n, ring, radius=None):
    g = generate(GraphSpec("lollipop", n, cycle_length=ring), 0)
    p = DualParams.for_graph(n, 1, hard_sample_prob=1.0, hard_radius=radius)
    tree = bfs_consistent(g, 0)
    pairs = [[] for _ in range(n)]
    for t in range(n):
        for e in suffix(tree.path_to(t), p.sigma2):
            if bfs_depths(g, 0, [e])[t] is None:
                continue
            sd = sensitive_detour(g, 0, t, [e])
            if sd is not None and len(sd.segment) > p.sigma1:
                pairs[t].append((0, e))
    hard = compute_info_hard(g, [0], p, NetworkConfig(), 1, pairs=pairs)
    total = sum(map(len, pairs))
    wrong = sum(hard.info[t][k].dist != bfs_depths(g, 0, [k[1]])[t] for t in range(n) for k in pairs[t])
    return p, total, wrong, hard.trace.rounds_used


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="85:40,90:50,100:60,120:70", help="n:ring pairs")
    ap.add_argument("--radius", type=int)
    args = ap.parse_args(argv)
    for item in args.sizes.split(","):
        n, ring = map(int, item.split(":"))
        p, total, wrong, rounds = check(n, ring, args.radius)
        print(f"n={n} ring={ring} sigma1={p.sigma1} sigma2={p.sigma2} radius={p.hard_radius} "
              f"hard={total} wrong={wrong} rounds={rounds}")


if __name__ == "__main__":
    main()
