"""Perception: metrics, entropy, connectivity, observation rendering."""

import dataclasses
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bluewall.attack import AttackEvent
from bluewall.netmodel import UNREACHABLE, build_scenario
from bluewall.perception import (TemplateError, attack_entropy, compute_metrics,
                                 connectivity, critical_distance, penetration_speed,
                                 perceive, render_observation)
from bluewall.scenarios import load_scenario
from tests.test_netmodel import tiny_state


def ev(target, time=0, success=True, attacker=0, source=None):
    return AttackEvent(attacker=attacker, source=source, target=target,
                       success=success, time=time)


class TestEntropy:
    def test_single_subnet_focus(self):
        subnet_of = ["a", "a", "b", "b"]
        events = [ev(0, t) for t in range(5)]
        assert attack_entropy(events, 10, subnet_of) == 0.0

    def test_uniform_four(self):
        subnet_of = ["a", "b", "c", "d"]
        events = [ev(n, 0) for n in range(4)]
        assert attack_entropy(events, 10, subnet_of) == pytest.approx(math.log(4))

    def test_even_split_two(self):
        subnet_of = ["a", "a", "b", "b"]
        events = [ev(0, 0), ev(2, 0)]
        assert attack_entropy(events, 10, subnet_of) == pytest.approx(math.log(2))

    def test_no_events_zero(self):
        assert attack_entropy([], 10, ["a"]) == 0.0

    def test_window_excludes_old(self):
        subnet_of = ["a", "b"]
        events = [ev(0, 0), ev(1, 50)]
        # at now=51 only the subnet-b event is inside a 10-step window
        assert attack_entropy(events, 10, subnet_of, now=51) == 0.0

    def test_failures_count_as_attempts(self):
        subnet_of = ["a", "b"]
        events = [ev(0, 0, success=False), ev(1, 0, success=True)]
        assert attack_entropy(events, 10, subnet_of) == pytest.approx(math.log(2))

    def test_bad_window(self):
        with pytest.raises(ValueError):
            attack_entropy([], 0, ["a"])

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.integers(0, 4), min_size=1, max_size=40))
    def test_bounds_and_uniform_maximum(self, targets):
        subnet_of = ["s0", "s1", "s2", "s3", "s4"]
        events = [ev(t, 0) for t in targets]
        h = attack_entropy(events, 10, subnet_of)
        hit = {subnet_of[t] for t in targets}
        assert -1e-12 <= h <= math.log(len(hit)) + 1e-12
        counts = [targets.count(i) for i in sorted({t for t in targets})]
        if len(set(counts)) == 1:
            assert h == pytest.approx(math.log(len(hit)))


class TestCriticalDistance:
    def test_compromised_hvn_is_zero(self):
        state = tiny_state([(0, 1)], hvns={0}, compromised={0})
        assert critical_distance(state, "net") == 0

    def test_no_compromise_unreachable(self):
        state = tiny_state([(0, 1)], hvns={1})
        assert critical_distance(state, "net") is UNREACHABLE

    def test_chain_two_hops(self):
        state = tiny_state([(0, 1), (1, 2)], hvns={2}, compromised={0})
        assert critical_distance(state, "net") == 2

    def test_min_over_compromised(self):
        state = tiny_state([(0, 1), (1, 2), (2, 3)], hvns={3}, compromised={0, 2})
        assert critical_distance(state, "net") == 1

    def test_unknown_subnet(self):
        with pytest.raises(KeyError):
            critical_distance(tiny_state([(0, 1)]), "nope")


class TestPenetrationSpeed:
    def test_approach(self):
        assert penetration_speed(3, 1) == (2.0, True)

    def test_unchanged(self):
        assert penetration_speed(2, 2) == (0.0, True)

    def test_pushed_back(self):
        assert penetration_speed(1, 3) == (-2.0, True)

    def test_unreachable_undefined(self):
        assert penetration_speed(UNREACHABLE, 2) == (0.0, False)
        assert penetration_speed(2, UNREACHABLE) == (0.0, False)
        assert penetration_speed(None, 2) == (0.0, False)


class TestConnectivity:
    def test_triangle_complete(self):
        assert connectivity(tiny_state([(0, 1), (0, 2), (1, 2)]), "net") == 1.0

    def test_three_node_path(self):
        assert connectivity(tiny_state([(0, 1), (1, 2)]), "net") == pytest.approx(2 / 3)

    def test_all_isolated_zero(self):
        state = tiny_state([(0, 1), (0, 2), (1, 2)], isolated={0, 1, 2})
        assert connectivity(state, "net") == 0.0

    def test_exhaustive_small_graphs_against_oracle(self):
        # every graph on 4 nodes, every isolation mask
        import itertools
        pairs = [(a, b) for a in range(4) for b in range(a + 1, 4)]
        for r in range(len(pairs) + 1):
            for edges in itertools.combinations(pairs, r):
                for mask in range(16):
                    isolated = {n for n in range(4) if mask >> n & 1}
                    state = tiny_state(edges, node_count=4, isolated=isolated)
                    active = sum(1 for a, b in edges
                                 if a not in isolated and b not in isolated)
                    assert connectivity(state, "net") == pytest.approx(active / 6)

    def test_monotone_under_isolation(self):
        state = tiny_state([(0, 1), (0, 2), (1, 2), (2, 3)])
        base = connectivity(state, "net")
        for n in range(4):
            assert connectivity(
                state.with_node(n, isolated=True), "net") <= base + 1e-12


class TestRendering:
    def make_report(self, instruction=None, events=(), memory_digest=""):
        state = build_scenario(load_scenario("sce4"), seed=8)
        if instruction:
            state = state.with_instruction(instruction)
        return state, perceive(state, list(events), memory_digest=memory_digest)

    def test_metrics_appear_per_subnet(self):
        state, report = self.make_report()
        for name in state.graph.subnet_names:
            assert f"--- Subnet {name} ---" in report.rendered_text

    def test_no_instruction_no_section(self):
        _, report = self.make_report()
        assert "HUMAN OPERATOR INSTRUCTION" not in report.rendered_text

    def test_instruction_verbatim(self):
        text = "prioritize server subnet availability"
        _, report = self.make_report(instruction=text)
        assert text in report.rendered_text
        assert "=== HUMAN OPERATOR INSTRUCTION ===" in report.rendered_text

    def test_deterministic(self):
        _, a = self.make_report(events=[ev(3, 0)])
        _, b = self.make_report(events=[ev(3, 0)])
        assert a.rendered_text == b.rendered_text

    def test_memory_digest_included(self):
        _, report = self.make_report(memory_digest="likely next target: node 7")
        assert "likely next target: node 7" in report.rendered_text

    def test_missing_context_block_named_in_error(self):
        state = build_scenario(load_scenario("sce1"), seed=1)
        ctx = {k: v for k, v in state.context.items() if k != "Servers"}
        state = dataclasses.replace(state, context=ctx)
        per_subnet, entropy = compute_metrics(state, [])
        with pytest.raises(TemplateError, match="Servers"):
            render_observation(state, per_subnet, entropy)

    def test_metric_changes_change_text(self):
        state = build_scenario(load_scenario("sce1"), seed=8)
        per_subnet, entropy = compute_metrics(state, [])
        base = render_observation(state, per_subnet, entropy).rendered_text
        m = per_subnet["Servers"]
        for change in (
            {"entry_count": m.entry_count + 1},
            {"avg_vulnerability": m.avg_vulnerability + 0.1},
            {"compromised_count": m.compromised_count + 2},
            {"isolated_count": m.isolated_count + 1},
            {"attack_frequency": m.attack_frequency + 0.5},
            {"critical_distance": 1},
            {"penetration_speed": m.penetration_speed + 1.0,
             "penetration_known": True},
            {"connectivity": m.connectivity / 2},
            {"hvn_count": m.hvn_count + 1},
        ):
            mutated = {"Servers": dataclasses.replace(m, **change)}
            out = render_observation(state, mutated, entropy).rendered_text
            assert out != base, f"change {change} not reflected"

    def test_entropy_in_header(self):
        # perception runs after the step, so the clock sits past the events
        state = build_scenario(load_scenario("sce4"), seed=8)
        state = dataclasses.replace(state, time=1)
        events = [ev(t, 0) for t in (0, 31, 131)]
        report = perceive(state, events)
        assert report.attack_entropy > 0
        assert "Attack concentration entropy" in report.rendered_text


class TestComputeMetrics:
    def test_counts_match_state(self):
        state = build_scenario(load_scenario("sce1"), seed=3)
        state = state.with_node(4, compromised=True).with_node(9, isolated=True)
        per_subnet, _ = compute_metrics(state, [])
        m = per_subnet["Servers"]
        assert m.compromised_count == 1
        assert m.isolated_count == 1
        assert m.entry_count == 2
        assert m.hvn_count == 3

    def test_attack_frequency_counts_window_attempts(self):
        state = build_scenario(load_scenario("sce1"), seed=3)
        state = dataclasses.replace(state, time=5)
        events = [ev(0, 4), ev(1, 4, success=False), ev(2, 0)]
        per_subnet, _ = compute_metrics(state, events, window=10)
        assert per_subnet["Servers"].attack_frequency == pytest.approx(3 / 10)

    def test_penetration_uses_prev_distances(self):
        state = tiny_state([(0, 1), (1, 2)], hvns={2}, compromised={0})
        per_subnet, _ = compute_metrics(state, [], prev_distances={"net": 3})
        assert per_subnet["net"].penetration_speed == pytest.approx(1.0)
        assert per_subnet["net"].penetration_known
