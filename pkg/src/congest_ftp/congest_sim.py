"""Round-accurate synchronous CONGEST simulator.

Each directed edge carries ``bandwidth`` units per round. One unit is one
token descriptor (two IDs and a hop count, i.e. ``words_per_unit`` words).
Larger messages occupy the edge for several rounds; excess traffic waits in
a FIFO queue per directed edge.

A protocol is any object with

* ``init(net)`` -- enqueue the first messages / wake-ups;
* ``on_round(v, rnd, inbox, net)`` -- called for node ``v`` in round ``rnd``
  when it has mail or asked to be woken. ``inbox`` is a list of
  ``(sender, payload)`` transmitted during round ``rnd - 1``.

The run ends when nothing is queued, nothing is in flight and no wake-up is
pending. Detecting that is the simulator's job, not the protocol's.
"""
from __future__ import annotations

import hashlib
import hmac
import math
from collections import Counter, defaultdict, deque
from dataclasses import dataclass, field
from typing import Any, Hashable, Protocol

from .graph_core import Graph


@dataclass
class NetworkConfig:
    bandwidth: int = 1
    phase_constant: int = 4
    phase_length: int | None = None
    max_rounds: int = 5_000_000
    words_per_unit: int = 3

    def __post_init__(self) -> None:
        if self.bandwidth < 1 or self.phase_constant < 1 or self.max_rounds < 1 or self.words_per_unit < 1:
            raise ValueError("network parameters must be positive")
        if self.phase_length is not None and self.phase_length < 1:
            raise ValueError("phase_length must be positive")

    def ell(self, n: int) -> int:
        """Rounds per phase: ``phase_constant * ceil(log2 n)`` unless fixed."""
        if self.phase_length is not None:
            return self.phase_length
        return self.phase_constant * max(1, math.ceil(math.log2(max(n, 2))))

    def units(self, words: int) -> int:
        return max(1, -(-words // self.words_per_unit))


class NodeProtocol(Protocol):
    def init(self, net: "Network") -> None: ...

    def on_round(self, v: int, rnd: int, inbox: list[tuple[int, Any]], net: "Network") -> None: ...


@dataclass
class SimTrace:
    rounds_used: int = 0
    quiescent_round: int = 0
    messages: int = 0
    units: int = 0
    slipped: int = 0
    max_edge_round_load: int = 0
    phase_length: int | None = None
    per_edge_per_phase_load: Counter = field(default_factory=Counter)
    per_edge_units: Counter = field(default_factory=Counter)
    delivered: list[tuple[int, int, int, Any]] | None = None

    @property
    def max_edge_phase_load(self) -> int:
        return max(self.per_edge_per_phase_load.values(), default=0)

    def phase_histogram(self) -> dict[int, int]:
        return dict(sorted(Counter(self.per_edge_per_phase_load.values()).items()))

    def summary(self) -> dict:
        loads = list(self.per_edge_units.values())
        return {
            "rounds_used": self.rounds_used,
            "messages": self.messages,
            "units": self.units,
            "slipped": self.slipped,
            "max_edge_round_load": self.max_edge_round_load,
            "max_edge_total_units": max(loads, default=0),
            "mean_edge_total_units": (sum(loads) / len(loads)) if loads else 0.0,
            "phase_length": self.phase_length,
            "max_edge_phase_load": self.max_edge_phase_load,
            "phase_load_histogram": {str(k): v for k, v in self.phase_histogram().items()},
        }


@dataclass
class StagedTrace:
    """Sequential composition of several simulator runs."""

    stages: list[tuple[str, SimTrace]] = field(default_factory=list)

    def add(self, name: str, trace: SimTrace) -> SimTrace:
        self.stages.append((name, trace))
        return trace

    def extend(self, other: "StagedTrace", prefix: str = "") -> None:
        for name, tr in other.stages:
            self.stages.append((prefix + name, tr))

    @property
    def rounds_used(self) -> int:
        return sum(t.rounds_used for _, t in self.stages)

    @property
    def slipped(self) -> int:
        return sum(t.slipped for _, t in self.stages)

    @property
    def max_edge_phase_load(self) -> int:
        return max((t.max_edge_phase_load for _, t in self.stages), default=0)

    def stage(self, name: str) -> SimTrace:
        for n, t in self.stages:
            if n == name:
                return t
        raise KeyError(name)

    def summary(self) -> dict:
        return {
            "rounds_used": self.rounds_used,
            "slipped": self.slipped,
            "max_edge_phase_load": self.max_edge_phase_load,
            "stages": [{"name": n, **t.summary()} for n, t in self.stages],
        }


class SimTimeout(RuntimeError):
    def __init__(self, trace: SimTrace):
        super().__init__(f"simulation exceeded max_rounds after {trace.rounds_used} rounds")
        self.trace = trace


class _Msg:
    __slots__ = ("src", "dst", "payload", "left", "deadline")

    def __init__(self, src: int, dst: int, payload: Any, units: int, deadline: int | None):
        self.src, self.dst, self.payload, self.left, self.deadline = src, dst, payload, units, deadline


class Network:
    """Per-run simulator state handed to protocol callbacks."""

    def __init__(self, g: Graph, config: NetworkConfig, phase_length: int | None, log: bool):
        self.g = g
        self._nbrs = [set(a) for a in g.adj]
        self.config = config
        self.round = 0
        self._queues: dict[tuple[int, int], deque[_Msg]] = {}
        self._wakes: dict[int, set[int]] = defaultdict(set)
        self.trace = SimTrace(phase_length=phase_length, delivered=[] if log else None)

    def send(self, src: int, dst: int, payload: Any, units: int = 1, deadline: int | None = None) -> None:
        q = self._queues.get((src, dst))
        if q is None:
            if dst not in self._nbrs[src]:
                raise ValueError(f"{src} and {dst} are not neighbors")
            q = self._queues[(src, dst)] = deque()
        q.append(_Msg(src, dst, payload, units if units > 1 else 1, deadline))

    def wake(self, v: int, rnd: int) -> None:
        if rnd < self.round:
            raise ValueError("cannot schedule a wake-up in the past")
        self._wakes[rnd].add(v)


def run(
    g: Graph,
    protocol: NodeProtocol,
    config: NetworkConfig | None = None,
    *,
    phase_length: int | None = None,
    log: bool = False,
) -> SimTrace:
    """Execute ``protocol`` until quiescence; returns the trace.

    Node state lives on the protocol object. ``phase_length`` only affects
    bookkeeping: per-phase loads are bucketed by ``round // phase_length``.
    """
    cfg = config or NetworkConfig()
    net = Network(g, cfg, phase_length, log)
    tr = net.trace
    bw = cfg.bandwidth
    protocol.init(net)
    inboxes: dict[int, list[tuple[int, Any]]] = {}
    last_comm = -1
    r = 0
    while True:
        net.round = r
        woken = net._wakes.pop(r, set())
        if inboxes or woken:
            for v in sorted(woken.union(inboxes)):
                protocol.on_round(v, r, inboxes.pop(v, []), net)
        nxt: dict[int, list[tuple[int, Any]]] = {}
        queues = net._queues
        if queues:
            done = []
            sent = 0
            units_total = 0
            phase_load = tr.per_edge_per_phase_load
            edge_units = tr.per_edge_units
            delivered = tr.delivered
            for key, q in queues.items():
                cap = bw
                while q and cap:
                    msg = q[0]
                    take = cap if cap < msg.left else msg.left
                    msg.left -= take
                    cap -= take
                    if msg.left == 0:
                        q.popleft()
                        box = nxt.get(msg.dst)
                        if box is None:
                            nxt[msg.dst] = [(msg.src, msg.payload)]
                        else:
                            box.append((msg.src, msg.payload))
                        sent += 1
                        if msg.deadline is not None and r > msg.deadline:
                            tr.slipped += 1
                        if phase_length:
                            phase_load[(msg.src, msg.dst, r // phase_length)] += 1
                        if delivered is not None:
                            delivered.append((r, msg.src, msg.dst, msg.payload))
                used = bw - cap
                units_total += used
                edge_units[key] += used
                if used > tr.max_edge_round_load:
                    tr.max_edge_round_load = used
                if not q:
                    done.append(key)
            tr.messages += sent
            tr.units += units_total
            for key in done:
                del queues[key]
            last_comm = r
        inboxes = nxt
        if not inboxes and not queues and not net._wakes:
            break
        if inboxes or queues:
            r += 1
        else:
            r = min(net._wakes)
        if r > cfg.max_rounds:
            tr.rounds_used = last_comm + 1
            raise SimTimeout(tr)
    tr.rounds_used = last_comm + 1
    tr.quiescent_round = r + 1
    return tr


# ------------------------------------------------------------ shared randomness


@dataclass(frozen=True)
class SharedSeed:
    bits: bytes
    broadcast_round: int


class _Flood:
    def __init__(self, root: int, chunks: list[bytes]):
        self.root = root
        self.chunks = chunks
        self.have: dict[int, dict[int, bytes]] = defaultdict(dict)

    def init(self, net: Network) -> None:
        self.have[self.root] = dict(enumerate(self.chunks))
        for u in net.g.adj[self.root]:
            for i, c in enumerate(self.chunks):
                net.send(self.root, u, (i, c))

    def on_round(self, v, rnd, inbox, net) -> None:
        got = self.have[v]
        senders: dict[int, set[int]] = defaultdict(set)
        fresh = []
        for src, (i, c) in inbox:
            senders[i].add(src)
            if i not in got:
                got[i] = c
                fresh.append(i)
        for i in fresh:
            for u in net.g.adj[v]:
                if u not in senders[i]:
                    net.send(v, u, (i, got[i]))


def broadcast_seed(g: Graph, bits: bytes, config: NetworkConfig | None = None) -> tuple[SharedSeed, SimTrace]:
    """Flood ``bits`` from the minimum-ID vertex, one word per unit slot."""
    if not g.is_connected():
        raise ValueError("shared randomness needs a connected graph")
    cfg = config or NetworkConfig()
    word_bits = max(1, math.ceil(math.log2(max(g.n, 2))))
    unit_bytes = max(1, (word_bits * cfg.words_per_unit) // 8)
    chunks = [bits[i : i + unit_bytes] for i in range(0, len(bits), unit_bytes)] or [b""]
    proto = _Flood(0, chunks)
    tr = run(g, proto, cfg)
    for v in range(g.n):
        if b"".join(proto.have[v][i] for i in range(len(chunks))) != bits:
            raise RuntimeError(f"vertex {v} did not receive the shared seed")
    return SharedSeed(bits, tr.rounds_used), tr


def seed_bits(seed: int, nbytes: int = 16) -> bytes:
    return hashlib.sha256(b"shared-randomness" + int(seed).to_bytes(16, "big", signed=True)).digest()[:nbytes]


def delay_of(seed: SharedSeed | bytes, key: Hashable, range_size: int) -> int:
    """Start phase in ``[1, range_size]`` from a keyed PRF over the shared seed."""
    if range_size < 1:
        raise ValueError("range_size must be >= 1")
    if range_size == 1:
        return 1
    k = seed.bits if isinstance(seed, SharedSeed) else seed
    digest = hmac.new(k, repr(key).encode(), hashlib.sha256).digest()
    return int.from_bytes(digest, "big") % range_size + 1
