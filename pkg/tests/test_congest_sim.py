import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from congest_ftp.congest_sim import (
    NetworkConfig,
    SimTimeout,
    StagedTrace,
    broadcast_seed,
    delay_of,
    run,
    seed_bits,
)
from congest_ftp.graph_core import Graph, bfs_depths

from conftest import connected_gnp


class Script:
    """Sends a fixed batch at init and records every delivery."""

    def __init__(self, sends):
        self.sends = sends
        self.got = []

    def init(self, net):
        for src, dst, payload, units, deadline in self.sends:
            net.send(src, dst, payload, units, deadline)

    def on_round(self, v, rnd, inbox, net):
        for src, payload in inbox:
            self.got.append((rnd, src, v, payload))


class Flood:
    """Plain BFS flood; records the round each vertex first hears."""

    def __init__(self, root):
        self.root = root
        self.heard = {}

    def init(self, net):
        self.heard[self.root] = 0
        for u in net.g.adj[self.root]:
            net.send(self.root, u, "x")

    def on_round(self, v, rnd, inbox, net):
        if v in self.heard:
            return
        self.heard[v] = rnd
        for u in net.g.adj[v]:
            net.send(v, u, "x")


PATH3 = Graph(3, [(0, 1), (1, 2)])


def test_unit_message_arrives_next_round():
    p = Script([(0, 1, "a", 1, None)])
    tr = run(PATH3, p)
    assert p.got == [(1, 0, 1, "a")]
    assert tr.rounds_used == 1 and tr.messages == 1


def test_fifo_and_bandwidth_on_one_edge():
    p = Script([(0, 1, "a", 2, None), (0, 1, "b", 1, None), (1, 0, "c", 1, None)])
    tr = run(PATH3, p)
    assert [g[:4] for g in sorted(p.got)] == [(1, 1, 0, "c"), (2, 0, 1, "a"), (3, 0, 1, "b")]
    assert tr.units == 4 and tr.max_edge_round_load == 1
    assert tr.per_edge_units[(0, 1)] == 3


def test_wider_bandwidth_moves_more_units():
    p = Script([(0, 1, "a", 2, None), (0, 1, "b", 1, None)])
    run(PATH3, p, NetworkConfig(bandwidth=3))
    assert sorted(g[0] for g in p.got) == [1, 1]


def test_send_to_non_neighbor_rejected():
    with pytest.raises(ValueError):
        run(PATH3, Script([(0, 2, "a", 1, None)]))


def test_deadline_slippage_counted():
    p = Script([(0, 1, i, 1, 0) for i in range(3)])
    tr = run(PATH3, p)
    assert tr.slipped == 2


def test_phase_load_bookkeeping():
    p = Script([(0, 1, i, 1, None) for i in range(5)])
    tr = run(PATH3, p, phase_length=2)
    assert tr.per_edge_per_phase_load == {(0, 1, 0): 2, (0, 1, 1): 2, (0, 1, 2): 1}
    assert tr.max_edge_phase_load == 2
    assert tr.phase_histogram() == {1: 1, 2: 2}


def test_timeout_raises_with_partial_trace():
    p = Script([(0, 1, i, 1, None) for i in range(50)])
    with pytest.raises(SimTimeout) as exc:
        run(PATH3, p, NetworkConfig(max_rounds=10))
    assert exc.value.trace.rounds_used > 0


def test_wake_skips_idle_rounds():
    class Sleeper:
        def init(self, net):
            net.wake(2, 1000)

        def on_round(self, v, rnd, inbox, net):
            if rnd == 1000:
                net.send(2, 1, "late")

    tr = run(PATH3, Sleeper())
    assert tr.rounds_used == 1001


@settings(max_examples=20, deadline=None)
@given(st.integers(5, 40), st.integers(0, 10_000))
def test_flood_arrival_equals_bfs_depth(n, seed):
    g = connected_gnp(n, 0.2, seed)
    proto = Flood(0)
    tr = run(g, proto)
    assert [proto.heard[v] for v in range(n)] == bfs_depths(g, 0)
    assert tr.rounds_used == max(bfs_depths(g, 0)) + 1


def test_broadcast_seed_reaches_everyone():
    g = connected_gnp(30, 0.15, 4)
    bits = seed_bits(11)
    shared, tr = broadcast_seed(g, bits)
    assert shared.bits == bits and tr.rounds_used >= g.diameter
    with pytest.raises(ValueError):
        broadcast_seed(Graph(3, [(0, 1)]), bits)


def test_delay_of_is_a_deterministic_prf():
    bits = seed_bits(3)
    xs = [delay_of(bits, ("s", i), 10) for i in range(500)]
    assert xs == [delay_of(bits, ("s", i), 10) for i in range(500)]
    assert set(xs) == set(range(1, 11))
    assert delay_of(bits, "k", 1) == 1
    assert delay_of(seed_bits(4), ("s", 0), 10**9) != delay_of(bits, ("s", 0), 10**9)
    with pytest.raises(ValueError):
        delay_of(bits, "k", 0)


def test_staged_trace_sums_rounds():
    st_ = StagedTrace()
    st_.add("a", run(PATH3, Script([(0, 1, "x", 1, None)])))
    st_.add("b", run(PATH3, Script([(0, 1, "x", 3, None)])))
    assert st_.rounds_used == 1 + 3
    assert st_.stage("b").units == 3
    assert [s["name"] for s in st_.summary()["stages"]] == ["a", "b"]
