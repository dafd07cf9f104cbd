"""Network model: graph structure, per-node security state, scenarios.

The simulated cloud network is an undirected graph partitioned into
subnets.  Every node carries a security posture (health, isolation,
vulnerability) plus static role flags (high-value node, entry node).
States are immutable values; every transformation returns a new state.
"""

from __future__ import annotations

import hashlib
import json
from collections import deque
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Mapping, Optional, Sequence

import numpy as np


class _Unreachable:
    """Sentinel distance for node pairs with no traversable path."""

    __slots__ = ()

    def __repr__(self) -> str:
        return "Unreachable"


UNREACHABLE = _Unreachable()


@dataclass(frozen=True)
class NodeState:
    """Security posture of one node."""

    compromised: bool = False
    isolated: bool = False
    vulnerability: float = 0.5
    is_hvn: bool = False
    is_entry: bool = False

    def __post_init__(self) -> None:
        if not 0.0 <= self.vulnerability <= 1.0:
            raise ValueError(f"vulnerability {self.vulnerability} outside [0, 1]")


@dataclass(frozen=True)
class SubnetContext:
    """Free-text operational context for one subnet, split by concern."""

    exposure: str
    vulnerability_profile: str
    assets: str
    service_continuity: str

    def __post_init__(self) -> None:
        for name in ("exposure", "vulnerability_profile", "assets", "service_continuity"):
            if not getattr(self, name).strip():
                raise ValueError(f"context block {name!r} must be non-empty")


@dataclass(frozen=True)
class NetworkGraph:
    """Undirected topology with a subnet partition.

    ``edges`` holds unordered pairs stored as (low, high) tuples; adjacency
    is derived once and cached.  ``hvn_labels`` maps high-value node ids to
    their asset names for reporting.
    """

    node_count: int
    edges: frozenset[tuple[int, int]]
    subnet_of: tuple[str, ...]
    hvn_labels: Mapping[int, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if len(self.subnet_of) != self.node_count:
            raise ValueError("subnet_of length must equal node_count")
        for a, b in self.edges:
            if a == b:
                raise ValueError(f"self-loop on node {a}")
            if not (0 <= a < b < self.node_count):
                raise ValueError(f"edge ({a}, {b}) out of range or unordered")

    @cached_property
    def adjacency(self) -> tuple[tuple[int, ...], ...]:
        nbrs: list[set[int]] = [set() for _ in range(self.node_count)]
        for a, b in self.edges:
            nbrs[a].add(b)
            nbrs[b].add(a)
        return tuple(tuple(sorted(s)) for s in nbrs)

    @cached_property
    def subnet_names(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for name in self.subnet_of:
            seen.setdefault(name, None)
        return tuple(seen)

    def subnet_nodes(self, name: str) -> tuple[int, ...]:
        return tuple(n for n, s in enumerate(self.subnet_of) if s == name)


@dataclass(frozen=True)
class GlobalState:
    """Complete security posture of the network at one time step."""

    graph: NetworkGraph
    nodes: tuple[NodeState, ...]
    context: Mapping[str, SubnetContext]
    human_instruction: Optional[str] = None
    time: int = 0

    def __post_init__(self) -> None:
        if len(self.nodes) != self.graph.node_count:
            raise ValueError("nodes length must equal graph.node_count")

    def node(self, n: int) -> NodeState:
        if not 0 <= n < len(self.nodes):
            raise KeyError(f"unknown node {n}")
        return self.nodes[n]

    def compromised_nodes(self) -> tuple[int, ...]:
        return tuple(n for n, st in enumerate(self.nodes) if st.compromised)

    def hvn_nodes(self) -> tuple[int, ...]:
        return tuple(n for n, st in enumerate(self.nodes) if st.is_hvn)

    def entry_nodes(self) -> tuple[int, ...]:
        return tuple(n for n, st in enumerate(self.nodes) if st.is_entry)

    def with_node(self, n: int, **changes) -> "GlobalState":
        self.node(n)
        nodes = list(self.nodes)
        nodes[n] = replace(nodes[n], **changes)
        return replace(self, nodes=tuple(nodes))

    def with_instruction(self, text: Optional[str]) -> "GlobalState":
        return replace(self, human_instruction=text)

    def advanced(self) -> "GlobalState":
        return replace(self, time=self.time + 1)


def neighbors(state: GlobalState, n: int) -> set[int]:
    """Traversable neighbors of ``n``: isolation severs all incident edges."""
    st = state.node(n)
    if st.isolated:
        return set()
    return {m for m in state.graph.adjacency[n] if not state.nodes[m].isolated}


def hvn_distance_map(state: GlobalState) -> list[object]:
    """Hop distance from every node to its nearest high-value node.

    Multi-source BFS over traversable edges (isolated endpoints excluded).
    An HVN is at distance 0 from itself even when isolated.  Entries with
    no path hold the UNREACHABLE sentinel.
    """
    dist: list[object] = [UNREACHABLE] * state.graph.node_count
    queue: deque[int] = deque()
    for n in state.hvn_nodes():
        dist[n] = 0
        queue.append(n)
    while queue:
        n = queue.popleft()
        for m in neighbors(state, n):
            if dist[m] is UNREACHABLE:
                dist[m] = dist[n] + 1  # type: ignore[operator]
                queue.append(m)
    return dist


def shortest_distance_to_hvn(state: GlobalState, n: int):
    """BFS hop count from ``n`` to the nearest HVN, or UNREACHABLE."""
    state.node(n)
    return hvn_distance_map(state)[n]


@dataclass(frozen=True)
class GatewayLink:
    """Declared inter-subnet connection: ``links`` edges to subnet ``to``."""

    to: str
    links: int = 1


@dataclass(frozen=True)
class SubnetSpec:
    name: str
    node_scale: int
    entry_count: int
    hvn_assets: tuple[str, ...] = ()
    edge_density: float = 0.15
    gateways: tuple[GatewayLink, ...] = ()


@dataclass(frozen=True)
class VulnerabilityDistribution:
    low: float = 0.1
    high: float = 0.9

    def __post_init__(self) -> None:
        if not 0.0 <= self.low <= self.high <= 1.0:
            raise ValueError("vulnerability bounds must satisfy 0 <= low <= high <= 1")


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything needed to build an episode's starting state."""

    name: str
    subnets: tuple[SubnetSpec, ...]
    vulnerability: VulnerabilityDistribution = VulnerabilityDistribution()
    attacker_count: int = 1
    attack_policy: str = "recon"
    attacker_skill: float = 0.7
    max_steps: int = 100
    reward_overrides: Mapping[str, float] = field(default_factory=dict)
    context: Mapping[str, SubnetContext] = field(default_factory=dict)
    hvn_terminal: bool = True

    def __post_init__(self) -> None:
        if not self.subnets:
            raise ValueError("scenario needs at least one subnet")
        names = [s.name for s in self.subnets]
        if len(set(names)) != len(names):
            raise ValueError("duplicate subnet names")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if self.attacker_count < 0:
            raise ValueError("attacker_count must be >= 0")
        if self.attack_policy not in ("recon", "penetrate", "impact"):
            raise ValueError(f"unknown attack policy {self.attack_policy!r}")
        for spec in self.subnets:
            if spec.node_scale < 1:
                raise ValueError(f"subnet {spec.name!r} has no nodes")
            if spec.entry_count < 0 or spec.entry_count > spec.node_scale:
                raise ValueError(f"subnet {spec.name!r} entry_count out of range")
            if len(spec.hvn_assets) + spec.entry_count > spec.node_scale:
                raise ValueError(f"subnet {spec.name!r} cannot fit entries plus HVNs")
            if not 0.0 <= spec.edge_density <= 1.0:
                raise ValueError(f"subnet {spec.name!r} edge_density outside [0, 1]")

    @property
    def node_count(self) -> int:
        return sum(s.node_scale for s in self.subnets)


_DEFAULT_CONTEXT = SubnetContext(
    exposure="General-purpose subnet with standard perimeter controls.",
    vulnerability_profile="Mixed patch levels typical of office infrastructure.",
    assets="No individually named key assets.",
    service_continuity="Short outages tolerated outside business-critical windows.",
)


def _subnet_edges(nodes: Sequence[int], density: float,
                  rng: np.random.Generator) -> set[tuple[int, int]]:
    """Random connected topology: spanning tree plus extra edges to density."""
    edges: set[tuple[int, int]] = set()
    order = list(nodes)
    rng.shuffle(order)
    for i in range(1, len(order)):
        a = order[i]
        b = order[int(rng.integers(0, i))]
        edges.add((min(a, b), max(a, b)))
    n = len(nodes)
    target = int(round(density * n * (n - 1) / 2))
    possible = n * (n - 1) // 2
    attempts = 0
    while len(edges) < min(target, possible) and attempts < 50 * possible:
        a, b = rng.choice(len(nodes), size=2, replace=False)
        pair = (min(nodes[a], nodes[b]), max(nodes[a], nodes[b]))
        edges.add(pair)
        attempts += 1
    return edges


def build_scenario(config: ScenarioConfig, seed: int) -> GlobalState:
    """Construct the deterministic starting state for ``config``.

    All nodes begin Healthy and non-isolated at t=0.  Entry nodes and HVNs
    are drawn per subnet without overlap; vulnerabilities come from the
    configured uniform range.  Pure function of (config, seed).
    """
    rng = np.random.default_rng(seed)
    subnet_of: list[str] = []
    base: dict[str, int] = {}
    for spec in config.subnets:
        base[spec.name] = len(subnet_of)
        subnet_of.extend([spec.name] * spec.node_scale)
    total = len(subnet_of)

    edges: set[tuple[int, int]] = set()
    entry_flags = [False] * total
    hvn_flags = [False] * total
    hvn_labels: dict[int, str] = {}
    for spec in config.subnets:
        local = list(range(base[spec.name], base[spec.name] + spec.node_scale))
        edges |= _subnet_edges(local, spec.edge_density, rng)
        picked = rng.choice(len(local), size=len(spec.hvn_assets) + spec.entry_count,
                            replace=False)
        for label, idx in zip(spec.hvn_assets, picked[: len(spec.hvn_assets)]):
            hvn_flags[local[idx]] = True
            hvn_labels[local[idx]] = label
        for idx in picked[len(spec.hvn_assets):]:
            entry_flags[local[idx]] = True

    by_name = {s.name: s for s in config.subnets}
    for spec in config.subnets:
        for link in spec.gateways:
            if link.to not in by_name:
                raise ValueError(f"gateway from {spec.name!r} to unknown subnet {link.to!r}")
            src = base[spec.name]
            dst = base[link.to]
            for _ in range(link.links):
                a = src + int(rng.integers(0, spec.node_scale))
                b = dst + int(rng.integers(0, by_name[link.to].node_scale))
                edges.add((min(a, b), max(a, b)))

    vulns = rng.uniform(config.vulnerability.low, config.vulnerability.high, size=total)
    nodes = tuple(
        NodeState(compromised=False, isolated=False, vulnerability=float(vulns[n]),
                  is_hvn=hvn_flags[n], is_entry=entry_flags[n])
        for n in range(total)
    )
    context = {s.name: config.context.get(s.name, _DEFAULT_CONTEXT)
               for s in config.subnets}
    graph = NetworkGraph(node_count=total, edges=frozenset(edges),
                         subnet_of=tuple(subnet_of), hvn_labels=hvn_labels)
    return GlobalState(graph=graph, nodes=nodes, context=context,
                       human_instruction=None, time=0)


@dataclass(frozen=True)
class PerturbationConfig:
    """Per-node rates for the structural-robustness perturbation."""

    entry_reshuffle_rate: float = 0.0
    hvn_reshuffle_rate: float = 0.0
    vulnerability_redraw_rate: float = 0.0
    isolation_rate: float = 0.0

    def __post_init__(self) -> None:
        for name in ("entry_reshuffle_rate", "hvn_reshuffle_rate",
                     "vulnerability_redraw_rate", "isolation_rate"):
            rate = getattr(self, name)
            if not 0.0 <= rate <= 1.0:
                raise ValueError(f"{name} {rate} outside [0, 1]")


def perturb_structure(state: GlobalState, config: PerturbationConfig,
                      rng: np.random.Generator) -> GlobalState:
    """Randomly reshuffle role flags, re-draw vulnerabilities, isolate nodes.

    Node count and the subnet partition never change.  Deterministic for a
    given rng state.
    """
    nodes = list(state.nodes)
    graph = state.graph

    def reshuffle(flag: str, rate: float) -> None:
        for n, st in enumerate(list(nodes)):
            if getattr(st, flag) and rng.random() < rate:
                peers = [m for m in graph.subnet_nodes(graph.subnet_of[n])
                         if m != n and not getattr(nodes[m], flag)]
                if not peers:
                    continue
                m = peers[int(rng.integers(0, len(peers)))]
                nodes[n] = replace(nodes[n], **{flag: False})
                nodes[m] = replace(nodes[m], **{flag: True})

    reshuffle("is_entry", config.entry_reshuffle_rate)
    reshuffle("is_hvn", config.hvn_reshuffle_rate)
    for n in range(len(nodes)):
        if rng.random() < config.vulnerability_redraw_rate:
            nodes[n] = replace(nodes[n], vulnerability=float(rng.uniform(0.0, 1.0)))
    for n in range(len(nodes)):
        if rng.random() < config.isolation_rate:
            nodes[n] = replace(nodes[n], isolated=True)

    hvn_labels = {n: graph.hvn_labels.get(n, "relocated key asset")
                  for n, st in enumerate(nodes) if st.is_hvn}
    new_graph = replace(graph, hvn_labels=hvn_labels)
    return replace(state, graph=new_graph, nodes=tuple(nodes))


def state_to_dict(state: GlobalState) -> dict:
    """JSON-ready view of a state; context text included for completeness."""
    return {
        "time": state.time,
        "human_instruction": state.human_instruction,
        "graph": {
            "node_count": state.graph.node_count,
            "edges": sorted(list(e) for e in state.graph.edges),
            "subnet_of": list(state.graph.subnet_of),
            "hvn_labels": {str(k): v for k, v in sorted(state.graph.hvn_labels.items())},
        },
        "nodes": [
            {
                "compromised": st.compromised,
                "isolated": st.isolated,
                "vulnerability": st.vulnerability,
                "is_hvn": st.is_hvn,
                "is_entry": st.is_entry,
            }
            for st in state.nodes
        ],
        "context": {
            name: {
                "exposure": ctx.exposure,
                "vulnerability_profile": ctx.vulnerability_profile,
                "assets": ctx.assets,
                "service_continuity": ctx.service_continuity,
            }
            for name, ctx in sorted(state.context.items())
        },
    }


def state_from_dict(data: Mapping) -> GlobalState:
    graph = NetworkGraph(
        node_count=data["graph"]["node_count"],
        edges=frozenset(tuple(e) for e in data["graph"]["edges"]),
        subnet_of=tuple(data["graph"]["subnet_of"]),
        hvn_labels={int(k): v for k, v in data["graph"]["hvn_labels"].items()},
    )
    nodes = tuple(NodeState(**entry) for entry in data["nodes"])
    context = {name: SubnetContext(**blocks) for name, blocks in data["context"].items()}
    return GlobalState(graph=graph, nodes=nodes, context=context,
                       human_instruction=data.get("human_instruction"), time=data["time"])


def state_digest(state: GlobalState) -> str:
    """sha256 over the canonical JSON form; stable across processes."""
    blob = json.dumps(state_to_dict(state), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()
