"""
Event-clocked model of an entanglement-distributing network.

Links generate Werner pairs after a geometric number of attempts, repeater
nodes join them by sequential left-to-right swapping, and every pair decays
while it waits in memory. All randomness flows through the ``SimClock``'s
generator, so a seed fixes the whole event sequence.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field, fields, replace
from typing import Hashable, Iterable, NamedTuple

import numpy as np

from .errors import InvalidParameterError, SimulationTimeout
from .state_algebra import WernerState, clamp_unit, round_trip_fidelity

Node = Hashable

DEFAULT_ATTEMPT_CAP = 10**6


@dataclass(frozen=True)
class HardwareProfile:
    """Per-link hardware parameters. Durations are in nanoseconds."""

    p_gen: float = 1.0
    t_attempt: float = 10.0
    f_link: float = 1.0
    p_swap: float = 1.0
    t_swap: float = 0.0
    t_classical: float = 0.0
    tau_memory: float = math.inf
    q_swap: float = 1.0
    q_gate: float = 1.0
    max_attempts: int = DEFAULT_ATTEMPT_CAP

    def __post_init__(self):
        for name in ("p_gen", "p_swap", "q_swap", "q_gate"):
            value = getattr(self, name)
            if not 0.0 < value <= 1.0:
                raise InvalidParameterError(f"{name} must lie in (0, 1], got {value!r}")
        if not 0.0 <= self.f_link <= 1.0:
            raise InvalidParameterError(f"f_link must lie in [0, 1], got {self.f_link!r}")
        for name in ("t_attempt", "t_swap", "t_classical"):
            if getattr(self, name) < 0:
                raise InvalidParameterError(f"{name} must be non-negative, got {getattr(self, name)!r}")
        if not self.tau_memory > 0:
            raise InvalidParameterError(f"tau_memory must be positive, got {self.tau_memory!r}")
        if self.max_attempts < 1:
            raise InvalidParameterError("max_attempts must be at least 1")

    @classmethod
    def field_names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))


def _key(a: Node, b: Node) -> frozenset:
    return frozenset((a, b))


class Topology:
    """Undirected simple graph of nodes joined by quantum links."""

    def __init__(self, nodes: Iterable[Node] = (), links: Iterable[tuple] = ()):
        self._nodes: list[Node] = []
        self._links: dict[frozenset, HardwareProfile] = {}
        self._adj: dict[Node, list[Node]] = {}
        for n in nodes:
            self.add_node(n)
        for a, b, profile in links:
            self.add_link(a, b, profile)

    def add_node(self, node: Node) -> None:
        if node in self._adj:
            raise InvalidParameterError(f"duplicate node {node!r}")
        self._nodes.append(node)
        self._adj[node] = []

    def add_link(self, a: Node, b: Node, profile: HardwareProfile | None = None) -> None:
        if a == b:
            raise InvalidParameterError(f"self-loop on node {a!r}")
        for n in (a, b):
            if n not in self._adj:
                raise InvalidParameterError(f"unknown node {n!r}")
        if _key(a, b) in self._links:
            raise InvalidParameterError(f"duplicate link {a!r}-{b!r}")
        self._links[_key(a, b)] = profile or HardwareProfile()
        self._adj[a].append(b)
        self._adj[b].append(a)

    @property
    def nodes(self) -> tuple[Node, ...]:
        return tuple(self._nodes)

    def __contains__(self, node: Node) -> bool:
        return node in self._adj

    def neighbors(self, node: Node) -> tuple[Node, ...]:
        return tuple(self._adj[node])

    def has_link(self, a: Node, b: Node) -> bool:
        return _key(a, b) in self._links

    def profile(self, a: Node, b: Node) -> HardwareProfile:
        try:
            return self._links[_key(a, b)]
        except KeyError:
            raise InvalidParameterError(f"no link between {a!r} and {b!r}") from None

    def links(self) -> list[tuple[Node, Node, HardwareProfile]]:
        out = []
        for key, profile in self._links.items():
            a, b = sorted(key, key=self._nodes.index)
            out.append((a, b, profile))
        return out

    def shortest_path(self, src: Node, dst: Node) -> "PathRoute | None":
        """Breadth-first hop-count shortest path, or None if disconnected."""
        for n in (src, dst):
            if n not in self._adj:
                raise InvalidParameterError(f"unknown node {n!r}")
        prev = {src: None}
        queue = deque([src])
        while queue:
            u = queue.popleft()
            if u == dst:
                break
            for v in self._adj[u]:
                if v not in prev:
                    prev[v] = u
                    queue.append(v)
        if dst not in prev or src == dst:
            return None
        hops = [dst]
        while prev[hops[-1]] is not None:
            hops.append(prev[hops[-1]])
        return PathRoute(self, hops[::-1])


class PathRoute:
    """Validated simple path ``v0 ... vN`` through a topology."""

    def __init__(self, topology: Topology, nodes: Iterable[Node]):
        nodes = tuple(nodes)
        if len(nodes) < 2:
            raise InvalidParameterError("a path needs at least two nodes")
        if len(set(nodes)) != len(nodes):
            raise InvalidParameterError(f"path repeats a node: {nodes!r}")
        for a, b in zip(nodes, nodes[1:]):
            if not topology.has_link(a, b):
                raise InvalidParameterError(f"no link between {a!r} and {b!r}")
        self.topology = topology
        self.nodes = nodes

    @property
    def n_segments(self) -> int:
        return len(self.nodes) - 1

    def hops(self) -> list[tuple[Node, Node]]:
        return list(zip(self.nodes, self.nodes[1:]))

    def profiles(self) -> list[HardwareProfile]:
        return [self.topology.profile(a, b) for a, b in self.hops()]

    def segment(self, i: int) -> "PathRoute":
        return PathRoute(self.topology, self.nodes[i : i + 2])

    def subpath(self, start: int, stop: int) -> "PathRoute":
        return PathRoute(self.topology, self.nodes[start : stop + 1])

    def __repr__(self):
        return f"PathRoute({'-'.join(map(str, self.nodes))})"


@dataclass
class SimClock:
    """Simulated time (ns) plus the random stream that drives every event."""

    rng_seed: int = 0
    now: float = 0.0
    rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        self.rng = np.random.default_rng(self.rng_seed)

    def advance(self, dt: float) -> float:
        if dt < 0:
            raise InvalidParameterError("simulated time cannot run backwards")
        self.now += dt
        return self.now

    def spawn(self) -> "SimClock":
        """Independent child clock at the same time with a seed drawn from this one."""
        return SimClock(int(self.rng.integers(0, 2**63)), self.now)


class Delivery(NamedTuple):
    state: WernerState
    elapsed: float


class RoundTrip(NamedTuple):
    success_prob: float
    elapsed: float


def sample_attempts(p_gen: float, rng: np.random.Generator, cap: int = DEFAULT_ATTEMPT_CAP) -> int:
    """Number of generation attempts up to and including the first success."""
    k = int(rng.geometric(p_gen))
    if k > cap:
        raise SimulationTimeout(f"link generation exceeded {cap} attempts")
    return k


def generate_link(profile: HardwareProfile, clock: SimClock) -> Delivery:
    """Run attempts on one link until success; advances the clock."""
    k = sample_attempts(profile.p_gen, clock.rng, profile.max_attempts)
    elapsed = k * profile.t_attempt
    clock.advance(elapsed)
    return Delivery(WernerState(profile.f_link), elapsed)


def _generation_time(profile: HardwareProfile, rng: np.random.Generator) -> float:
    return sample_attempts(profile.p_gen, rng, profile.max_attempts) * profile.t_attempt


def distribute_end_to_end(path: PathRoute, clock: SimClock) -> Delivery:
    """Generate every link in parallel, then swap left to right.

    Swap ``j`` (1-based) joins the chain covering links ``0..j-1`` with link
    ``j`` at node ``v_j``; its timing, success probability and quality come
    from link ``j``'s profile. A failed swap destroys both consumed pairs, so
    links ``0..j`` are regenerated and swapping restarts from the left while
    the remaining links stay in memory and keep decaying.
    """
    profiles = path.profiles()
    n = len(profiles)
    rng = clock.rng

    # times below are relative to the start of this distribution round
    created = [_generation_time(p, rng) for p in profiles]
    consumed = list(created)
    t = max(created)
    swap_attempts = 0
    j = 1
    while j < n:
        prof = profiles[j]
        swap_start = t
        t = swap_start + prof.t_swap + prof.t_classical
        swap_attempts += 1
        if swap_attempts > prof.max_attempts:
            raise SimulationTimeout(f"swapping exceeded {prof.max_attempts} attempts")
        if rng.random() < prof.p_swap:
            if j == 1:
                consumed[0] = swap_start
            consumed[j] = swap_start
            j += 1
            continue
        for i in range(j + 1):
            created[i] = t + _generation_time(profiles[i], rng)
            consumed[i] = created[i]
        t = max([t] + created[: j + 1])
        j = 1

    fidelity = 1.0
    for i, prof in enumerate(profiles):
        wait = consumed[i] - created[i]
        fidelity *= prof.f_link * math.exp(-wait / prof.tau_memory)
    for prof in profiles[1:]:
        fidelity *= prof.q_swap

    clock.advance(t)
    return Delivery(WernerState(clamp_unit(fidelity)), t)


def distribute_round_trip(path: PathRoute, clock: SimClock) -> RoundTrip:
    """Send half of a local pair out along ``path`` and reflect it back.

    The returned probability is that of a successful |Phi+> projection. The
    return leg is charged the one-way latency again plus one classical
    message on the first hop.
    """
    one_way = distribute_end_to_end(path, clock)
    extra = one_way.elapsed + path.profiles()[0].t_classical
    clock.advance(extra)
    return RoundTrip(round_trip_fidelity(one_way.state.fidelity), one_way.elapsed + extra)


def ideal_end_to_end_fidelity(path: PathRoute) -> float:
    """Composition of fresh link fidelities with no waiting decay."""
    profiles = path.profiles()
    f = math.prod(p.f_link for p in profiles) * math.prod(p.q_swap for p in profiles[1:])
    return clamp_unit(f)


def line_topology(n_nodes: int, profile: HardwareProfile | None = None, prefix: str = "n") -> tuple[Topology, PathRoute]:
    """Linear repeater chain ``n0 - n1 - ... `` with identical links."""
    names = [f"{prefix}{i}" for i in range(n_nodes)]
    topo = Topology(names)
    for a, b in zip(names, names[1:]):
        topo.add_link(a, b, profile or HardwareProfile())
    return topo, PathRoute(topo, names)


def with_profile(topology: Topology, a: Node, b: Node, **changes) -> None:
    """Replace fields of one link's profile in place."""
    topology._links[_key(a, b)] = replace(topology.profile(a, b), **changes)
