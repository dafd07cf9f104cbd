"""Network model: construction, adjacency, distances, perturbation."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bluewall.netmodel import (GlobalState, NetworkGraph, NodeState,
                               PerturbationConfig, ScenarioConfig, SubnetContext,
                               SubnetSpec, UNREACHABLE, build_scenario,
                               hvn_distance_map, neighbors, perturb_structure,
                               shortest_distance_to_hvn, state_digest,
                               state_from_dict, state_to_dict)
from bluewall.scenarios import PRESET_NAMES, load_scenario


def tiny_state(edges, node_count=None, hvns=(), isolated=(), entries=(),
               compromised=(), vulns=None):
    nodes = node_count or (max((max(e) for e in edges), default=-1) + 1)
    graph = NetworkGraph(
        node_count=nodes,
        edges=frozenset((min(a, b), max(a, b)) for a, b in edges),
        subnet_of=tuple("net" for _ in range(nodes)),
    )
    states = tuple(
        NodeState(
            compromised=n in compromised,
            isolated=n in isolated,
            vulnerability=(vulns or {}).get(n, 0.5),
            is_hvn=n in hvns,
            is_entry=n in entries,
        )
        for n in range(nodes)
    )
    ctx = {"net": SubnetContext(exposure="x", vulnerability_profile="v",
                                assets="a", service_continuity="s")}
    return GlobalState(graph=graph, nodes=states, context=ctx)


class TestNeighbors:
    def test_triangle_all_healthy(self):
        state = tiny_state([(0, 1), (0, 2), (1, 2)])
        assert neighbors(state, 0) == {1, 2}

    def test_triangle_isolated_endpoint_removed(self):
        state = tiny_state([(0, 1), (0, 2), (1, 2)], isolated={1})
        assert neighbors(state, 0) == {2}

    def test_path_middle(self):
        state = tiny_state([(0, 1), (1, 2)])
        assert neighbors(state, 1) == {0, 2}

    def test_isolated_node_has_no_neighbors(self):
        state = tiny_state([(0, 1)], isolated={0})
        assert neighbors(state, 0) == set()

    def test_unknown_node_raises(self):
        state = tiny_state([(0, 1)])
        with pytest.raises(KeyError):
            neighbors(state, 9)


class TestHvnDistance:
    def test_self_distance_zero(self):
        state = tiny_state([(0, 1)], hvns={0})
        assert shortest_distance_to_hvn(state, 0) == 0

    def test_chain_two_hops(self):
        state = tiny_state([(0, 1), (1, 2)], hvns={2})
        assert shortest_distance_to_hvn(state, 0) == 2

    def test_cut_path_unreachable(self):
        state = tiny_state([(0, 1), (1, 2)], hvns={2}, isolated={1})
        assert shortest_distance_to_hvn(state, 0) is UNREACHABLE

    def test_no_hvn_unreachable(self):
        state = tiny_state([(0, 1)])
        assert shortest_distance_to_hvn(state, 0) is UNREACHABLE

    def test_isolated_hvn_still_zero_to_itself(self):
        state = tiny_state([(0, 1)], hvns={1}, isolated={1})
        assert shortest_distance_to_hvn(state, 1) == 0
        assert shortest_distance_to_hvn(state, 0) is UNREACHABLE


def floyd_warshall_oracle(state):
    """Independent all-pairs route for small graphs."""
    n = state.graph.node_count
    inf = float("inf")
    dist = [[0 if i == j else inf for j in range(n)] for i in range(n)]
    for a, b in state.graph.edges:
        if not state.nodes[a].isolated and not state.nodes[b].isolated:
            dist[a][b] = dist[b][a] = 1
    for k in range(n):
        for i in range(n):
            for j in range(n):
                if dist[i][k] + dist[k][j] < dist[i][j]:
                    dist[i][j] = dist[i][k] + dist[k][j]
    out = []
    hvns = [m for m in range(n) if state.nodes[m].is_hvn]
    for i in range(n):
        best = min((dist[i][m] for m in hvns), default=inf)
        out.append(UNREACHABLE if best == inf else int(best))
    return out


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_hvn_distance_matches_all_pairs_oracle(data):
    n = data.draw(st.integers(min_value=2, max_value=12))
    pairs = [(a, b) for a in range(n) for b in range(a + 1, n)]
    edges = data.draw(st.sets(st.sampled_from(pairs), max_size=len(pairs)))
    hvns = data.draw(st.sets(st.integers(0, n - 1), max_size=n))
    isolated = data.draw(st.sets(st.integers(0, n - 1), max_size=n))
    state = tiny_state(edges, node_count=n, hvns=hvns, isolated=isolated)
    assert hvn_distance_map(state) == floyd_warshall_oracle(state)


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_neighbor_symmetry(data):
    n = data.draw(st.integers(min_value=2, max_value=10))
    pairs = [(a, b) for a in range(n) for b in range(a + 1, n)]
    edges = data.draw(st.sets(st.sampled_from(pairs), max_size=len(pairs)))
    isolated = data.draw(st.sets(st.integers(0, n - 1), max_size=n))
    state = tiny_state(edges, node_count=n, isolated=isolated)
    for a in range(n):
        for b in neighbors(state, a):
            assert a in neighbors(state, b)


class TestBuildScenario:
    def test_sce1_shape(self):
        state = build_scenario(load_scenario("sce1"), seed=3)
        assert state.graph.node_count == 30
        assert state.graph.subnet_names == ("Servers",)
        assert len(state.entry_nodes()) == 2
        assert len(state.hvn_nodes()) == 3
        assert state.time == 0
        assert all(not st.compromised and not st.isolated for st in state.nodes)

    def test_sce7_shape(self):
        state = build_scenario(load_scenario("sce7"), seed=3)
        assert state.graph.node_count == 450
        assert len(state.graph.subnet_names) == 6
        assert len(state.entry_nodes()) == 25

    def test_partition_covers_all_nodes(self):
        config = load_scenario("sce4")
        state = build_scenario(config, seed=9)
        total = sum(len(state.graph.subnet_nodes(s)) for s in state.graph.subnet_names)
        assert total == state.graph.node_count

    def test_deterministic_for_seed(self):
        config = load_scenario("sce2")
        a = build_scenario(config, seed=11)
        b = build_scenario(config, seed=11)
        assert state_digest(a) == state_digest(b)
        c = build_scenario(config, seed=12)
        assert state_digest(a) != state_digest(c)

    def test_each_subnet_internally_connected(self):
        state = build_scenario(load_scenario("sce7"), seed=5)
        for name in state.graph.subnet_names:
            members = set(state.graph.subnet_nodes(name))
            start = next(iter(members))
            seen = {start}
            frontier = [start]
            while frontier:
                n = frontier.pop()
                for m in state.graph.adjacency[n]:
                    if m in members and m not in seen:
                        seen.add(m)
                        frontier.append(m)
            assert seen == members

    def test_entries_and_hvns_disjoint(self):
        state = build_scenario(load_scenario("sce7"), seed=5)
        assert not (set(state.entry_nodes()) & set(state.hvn_nodes()))

    def test_vulnerabilities_within_bounds(self):
        config = load_scenario("sce3")
        state = build_scenario(config, seed=2)
        for st_ in state.nodes:
            assert config.vulnerability.low <= st_.vulnerability <= config.vulnerability.high

    def test_empty_subnet_list_rejected(self):
        with pytest.raises(ValueError):
            ScenarioConfig(name="bad", subnets=())

    def test_overfull_subnet_rejected(self):
        with pytest.raises(ValueError):
            SubnetSpec(name="s", node_scale=2, entry_count=2,
                       hvn_assets=("a",)) and ScenarioConfig(
                name="bad",
                subnets=(SubnetSpec(name="s", node_scale=2, entry_count=2,
                                    hvn_assets=("a",)),))


class TestPresets:
    def test_all_presets_load(self):
        for name in PRESET_NAMES:
            config = load_scenario(name)
            assert config.name == name
            assert config.max_steps == 100

    def test_scales_and_entries(self):
        expected = {
            "Servers": (30, 2), "Dep1": (100, 5), "Dep2": (100, 6),
            "Dep3": (100, 4), "Dep4": (100, 5), "Dep5": (20, 3),
        }
        config = load_scenario("sce7")
        for spec in config.subnets:
            scale, entries = expected[spec.name]
            assert spec.node_scale == scale
            assert spec.entry_count == entries

    def test_attacker_settings(self):
        assert load_scenario("sce1").attacker_count == 6
        assert load_scenario("sce2").attacker_count == 7
        assert load_scenario("sce3").attacker_count == 8
        assert load_scenario("sce5").attack_policy == "penetrate"
        assert load_scenario("sce6").attack_policy == "impact"

    def test_unknown_name_raises(self):
        with pytest.raises(FileNotFoundError):
            load_scenario("sce99")


class TestPerturb:
    def test_identity_perturbation(self):
        state = build_scenario(load_scenario("sce1"), seed=1)
        out = perturb_structure(state, PerturbationConfig(), np.random.default_rng(0))
        assert state_digest(out) == state_digest(state)

    def test_full_isolation(self):
        state = tiny_state([(0, 1), (1, 2), (2, 3), (3, 4)])
        out = perturb_structure(state, PerturbationConfig(isolation_rate=1.0),
                                np.random.default_rng(0))
        assert all(st.isolated for st in out.nodes)

    def test_vuln_redraw_repeatable(self):
        state = build_scenario(load_scenario("sce1"), seed=1)
        cfg = PerturbationConfig(vulnerability_redraw_rate=0.5)
        a = perturb_structure(state, cfg, np.random.default_rng(7))
        b = perturb_structure(state, cfg, np.random.default_rng(7))
        changed_a = [n for n in range(30)
                     if a.nodes[n].vulnerability != state.nodes[n].vulnerability]
        changed_b = [n for n in range(30)
                     if b.nodes[n].vulnerability != state.nodes[n].vulnerability]
        assert changed_a == changed_b and changed_a

    def test_partition_preserved(self):
        state = build_scenario(load_scenario("sce4"), seed=1)
        cfg = PerturbationConfig(entry_reshuffle_rate=1.0, hvn_reshuffle_rate=1.0,
                                 vulnerability_redraw_rate=1.0, isolation_rate=0.3)
        out = perturb_structure(state, cfg, np.random.default_rng(3))
        assert out.graph.subnet_of == state.graph.subnet_of
        assert out.graph.node_count == state.graph.node_count
        assert len(out.hvn_nodes()) == len(state.hvn_nodes())
        assert len(out.entry_nodes()) == len(state.entry_nodes())

    def test_bad_rate_rejected(self):
        with pytest.raises(ValueError):
            PerturbationConfig(isolation_rate=1.5)


class TestSerialization:
    def test_round_trip(self):
        state = build_scenario(load_scenario("sce1"), seed=4)
        state = state.with_node(0, compromised=True).with_instruction("hold the line")
        back = state_from_dict(state_to_dict(state))
        assert state_digest(back) == state_digest(state)

    def test_digest_sensitive_to_state(self):
        state = build_scenario(load_scenario("sce1"), seed=4)
        assert state_digest(state.with_node(0, compromised=True)) != state_digest(state)
