"""Harness: metrics, episode records, defenses, runners, experiment flow."""

import dataclasses
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bluewall.harness import (CV_WINDOW, Defense, EpisodeRecord,
                              HeuristicExecutor, InsufficientDataError,
                              JUMPSTART_WINDOW, Session, TransitionExperiment,
                              UndefinedMetricError, agent_checksums,
                              assemble_defense, fresh_agents, healthy_ratio,
                              jumpstart, load_agents, make_backend,
                              make_defense, mean_vulnerability, read_episode_log,
                              reward_cv, run_episode, run_transition_experiment,
                              write_episode_log)
from bluewall.agents import CheckpointError, save_agent
from bluewall.env import AtomicAction
from bluewall.netmodel import (ScenarioConfig, SubnetSpec,
                               VulnerabilityDistribution)
from bluewall.planner import ScriptedBackend
from tests.test_netmodel import tiny_state

SPEC = SubnetSpec(name="Net", node_scale=10, entry_count=2,
                  hvn_assets=("Db",), edge_density=0.3)
HOT = ScenarioConfig(name="mini-hot", subnets=(SPEC,),
                     vulnerability=VulnerabilityDistribution(0.5, 0.9),
                     attacker_count=4, attack_policy="impact",
                     attacker_skill=0.9, max_steps=25)
CALM = ScenarioConfig(name="mini-calm", subnets=(SPEC,),
                      vulnerability=VulnerabilityDistribution(0.1, 0.3),
                      attacker_count=0, attack_policy="recon",
                      attacker_skill=0.5, max_steps=10)


def record(rewards=(-1.0, -2.0), scenario="s", defense="random", seed=0,
           node_count=4, healthy=None, **overrides):
    steps = len(rewards)
    fields = dict(
        scenario=scenario, defense=defense, seed=seed, node_count=node_count,
        max_steps=max(steps, 5),
        rewards=tuple(rewards),
        reward_components=tuple({"asset": 0.0, "security": r, "cost": 0.0}
                                for r in rewards),
        actions=tuple(() for _ in range(steps)),
        events=tuple(() for _ in range(steps)),
        healthy_counts=tuple(healthy if healthy is not None
                             else (node_count,) * steps),
        terminal_reason="MaxSteps",
        cumulative_reward=float(sum(rewards)),
        final_mean_vulnerability=0.5,
    )
    fields.update(overrides)
    return EpisodeRecord(**fields)


class TestMetrics:
    def test_healthy_ratio_counts_both_statuses(self):
        state = tiny_state([(0, 1), (1, 2), (2, 3)], compromised={0},
                           isolated={1})
        assert healthy_ratio(state) == 0.5

    def test_healthy_ratio_full(self):
        assert healthy_ratio(tiny_state([(0, 1)])) == 1.0

    def test_mean_vulnerability(self):
        state = tiny_state([(0, 1)], vulns={0: 0.2, 1: 0.6})
        assert mean_vulnerability(state) == pytest.approx(0.4)

    def test_jumpstart_constant_series(self):
        records = [record(rewards=(-2.0,)) for _ in range(JUMPSTART_WINDOW)]
        assert jumpstart(records) == -2.0

    def test_jumpstart_ignores_everything_past_window(self):
        head = [record(rewards=(-1.0,)) for _ in range(JUMPSTART_WINDOW)]
        tail = [record(rewards=(-50.0,)) for _ in range(7)]
        assert jumpstart(head + tail) == jumpstart(head) == -1.0

    def test_jumpstart_needs_full_window(self):
        with pytest.raises(InsufficientDataError):
            jumpstart([record()] * (JUMPSTART_WINDOW - 1))

    def test_reward_cv_known_value(self):
        # mean -2, std 1
        assert reward_cv([-1.0, -3.0]) == pytest.approx(0.5)

    def test_reward_cv_scale_invariant(self):
        base = [-1.0, -3.0, -2.5, -0.5]
        assert reward_cv([10 * r for r in base]) == pytest.approx(reward_cv(base))

    def test_reward_cv_zero_mean_undefined(self):
        with pytest.raises(UndefinedMetricError):
            reward_cv([-1.0, 1.0])

    def test_reward_cv_empty_series(self):
        with pytest.raises(InsufficientDataError):
            reward_cv([])

    def test_reward_cv_window_limits(self):
        series = [-1.0] * CV_WINDOW + [-100.0]
        assert reward_cv(series) == 0.0

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.floats(-100, -0.1), min_size=2, max_size=20))
    def test_reward_cv_nonnegative(self, rewards):
        assert reward_cv(rewards) >= 0.0


class TestEpisodeRecord:
    def test_series_lengths_must_agree(self):
        with pytest.raises(ValueError, match="length"):
            record(healthy=(4,))

    def test_components_must_sum_to_reward(self):
        comps = ({"asset": 0.0, "security": -0.5, "cost": 0.0},
                 {"asset": 0.0, "security": -2.0, "cost": 0.0})
        with pytest.raises(ValueError, match="components"):
            record(reward_components=comps)

    def test_cumulative_must_match(self):
        with pytest.raises(ValueError, match="cumulative"):
            record(cumulative_reward=-17.5)

    def test_steps_capped_by_max_steps(self):
        with pytest.raises(ValueError, match="max_steps"):
            record(max_steps=1)

    def test_healthy_ratio_series(self):
        rec = record(healthy=(4, 2))
        assert rec.healthy_ratios == (1.0, 0.5)
        assert rec.mean_healthy_ratio == 0.75

    def test_round_trip(self):
        rec = record(audit=({"thought": "t", "tactic": "Fortify",
                             "observation": "o"},))
        again = EpisodeRecord.from_dict(json.loads(json.dumps(rec.to_dict())))
        assert again == rec

    def test_log_round_trip(self, tmp_path):
        records = [record(), record(rewards=(-4.0, -1.0, -0.5))]
        path = tmp_path / "episodes.jsonl"
        write_episode_log(records, path)
        assert read_episode_log(path) == records


class TestHeuristicExecutors:
    def test_fortify_prefers_entry_then_vulnerability(self):
        state = tiny_state([(0, 1), (1, 2)], entries={2},
                           vulns={0: 0.9, 1: 0.5, 2: 0.1})
        action = HeuristicExecutor("Fortify").act(state, "net")
        assert action == AtomicAction("Patch", 2)

    def test_recover_skips_quarantined_compromised(self):
        state = tiny_state([(0, 1), (1, 2)], isolated={0, 1}, compromised={1})
        action = HeuristicExecutor("Recover").act(state, "net")
        assert action == AtomicAction("Restore", 0)

    def test_recover_noop_when_nothing_safe(self):
        state = tiny_state([(0, 1)], isolated={0}, compromised={0})
        assert HeuristicExecutor("Recover").act(state, "net").operation == "NoOp"

    def test_purge_targets_active_spreader_nearest_hvn(self):
        # 2 is quarantined, 0 and 1 active; 1 is adjacent to the HVN
        state = tiny_state([(0, 3), (3, 1), (1, 4), (2, 4)], hvns={4},
                           compromised={0, 1, 2}, isolated={2})
        action = HeuristicExecutor("Purge").act(state, "net")
        assert action == AtomicAction("Reset", 1)

    def test_block_cuts_compromised_entry_first(self):
        state = tiny_state([(0, 1), (1, 2), (2, 3)], entries={2}, hvns={0},
                           compromised={1, 2})
        action = HeuristicExecutor("Block").act(state, "net")
        assert action == AtomicAction("Isolate", 2)

    def test_block_noop_without_footholds(self):
        assert HeuristicExecutor("Block").act(
            tiny_state([(0, 1)]), "net").operation == "NoOp"

    def test_unknown_type_rejected(self):
        with pytest.raises(ValueError):
            HeuristicExecutor("Banish").act(tiny_state([(0, 1)]), "net")


class TestDefenseConstruction:
    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="unknown defense"):
            Defense("firewall")

    def test_budget_positive(self):
        with pytest.raises(ValueError, match="budget"):
            Defense("random", budget=0)

    def test_hierarchical_needs_agents(self):
        with pytest.raises(ValueError, match="agent"):
            make_defense("hierarchical")

    def test_hierarchical_missing_type(self):
        agents = fresh_agents(0, capacity=10)
        del agents["Block"]
        with pytest.raises(ValueError, match="Block"):
            make_defense("hierarchical", agents=agents)

    def test_make_backend_rejects_other_names(self):
        with pytest.raises(ValueError, match="backend"):
            make_backend("oracle")

    def test_capacity_checked_at_session_start(self):
        from bluewall.agents import CapacityError
        defense = make_defense("hierarchical", agents=fresh_agents(0, 4))
        with pytest.raises(CapacityError):
            Session.start(HOT, defense, seed=0)

    def test_load_agents_missing_file(self, tmp_path):
        with pytest.raises(CheckpointError, match="missing"):
            load_agents(tmp_path)

    def test_load_agents_type_mismatch(self, tmp_path):
        agents = fresh_agents(0, capacity=6)
        for slot in ("fortify", "recover", "purge", "block"):
            save_agent(agents["Fortify"], tmp_path / f"{slot}.npz")
        with pytest.raises(CheckpointError, match="expected Recover"):
            load_agents(tmp_path)

    def test_fresh_agents_deterministic(self):
        a = agent_checksums(fresh_agents(7, capacity=6))
        b = agent_checksums(fresh_agents(7, capacity=6))
        assert a == b
        assert len(set(a.values())) == 4  # per-type init differs

    def test_assemble_defense_plain_kinds(self):
        assert assemble_defense("random").kind == "random"
        assert assemble_defense("greedy-isolate").executors is None
        scripted = assemble_defense("scripted-only")
        assert isinstance(scripted.backend, ScriptedBackend)


class TestRunEpisode:
    def test_deterministic_per_seed(self):
        one = run_episode(HOT, make_defense("random"), 4)
        two = run_episode(HOT, make_defense("random"), 4)
        assert one == two
        other = run_episode(HOT, make_defense("random"), 5)
        assert other != one

    def test_random_defense_loses_the_hot_board(self):
        rec = run_episode(HOT, make_defense("random"), 0)
        assert rec.terminal_reason == "HvnCompromised"
        assert rec.length < HOT.max_steps

    def test_greedy_isolation_contains_the_hot_board(self):
        rec = run_episode(HOT, make_defense("greedy-isolate"), 0)
        assert rec.terminal_reason == "MaxSteps"
        assert rec.mean_healthy_ratio == pytest.approx(0.804)
        loss = run_episode(HOT, make_defense("random"), 0)
        assert rec.mean_healthy_ratio > loss.mean_healthy_ratio

    def test_calm_board_stays_fully_healthy(self):
        rec = run_episode(CALM, make_defense("scripted-only"), 3)
        assert rec.terminal_reason == "MaxSteps"
        assert rec.mean_healthy_ratio == 1.0
        ops = {a["operation"] for step in rec.actions for a in step}
        assert ops == {"Patch"}
        assert rec.final_mean_vulnerability < mean_vulnerability(
            tiny_state([(0, 1)], vulns={0: 0.1, 1: 0.3}))

    def test_instruction_schedule_lands_and_clears(self):
        text = "prioritize quarantining the database tier"
        rec = run_episode(HOT, make_defense("scripted-only"), 0,
                          instruction_schedule={2: text, 5: None})
        windows = ["database tier" in entry["observation"]
                   for entry in rec.audit[:7]]
        assert windows == [False, False, True, True, True, False, False]

    def test_audit_written_per_step(self, tmp_path):
        path = tmp_path / "audit.jsonl"
        rec = run_episode(CALM, make_defense("scripted-only"), 3,
                          audit_path=path)
        lines = [json.loads(line) for line in path.read_text().splitlines()]
        assert len(lines) == rec.length == len(rec.audit)
        assert all("reasoning" in entry and "executed" in entry
                   for entry in lines)

    def test_session_finish_requires_terminal(self):
        session = Session.start(CALM, make_defense("random"), 0)
        with pytest.raises(RuntimeError, match="still running"):
            session.finish()


def _fake_scenarios(monkeypatch):
    table = {"quiet": CALM, "storm": HOT}
    monkeypatch.setattr("bluewall.harness.load_scenario",
                        lambda name: table[name])
    return table


class TestTransitionExperiment:
    def test_validation(self):
        with pytest.raises(ValueError, match="phase"):
            TransitionExperiment(phases=(), episodes_per_phase=5)
        with pytest.raises(ValueError, match="episodes_per_phase"):
            TransitionExperiment(phases=("sce1",), episodes_per_phase=0)
        with pytest.raises(ValueError, match="defense"):
            TransitionExperiment(phases=("sce1",), episodes_per_phase=1,
                                 defense="mob")

    def test_from_json(self, tmp_path):
        path = tmp_path / "exp.json"
        path.write_text(json.dumps({"phases": ["sce1", "sce2"],
                                    "episodes_per_phase": 3, "seed": 9}))
        exp = TransitionExperiment.from_json(path)
        assert exp.phases == ("sce1", "sce2")
        assert exp.episodes_per_phase == 3
        assert exp.seed == 9
        assert exp.defense == "hierarchical"

    def test_phases_run_and_summarize(self, monkeypatch, tmp_path):
        _fake_scenarios(monkeypatch)
        exp = TransitionExperiment(phases=("quiet", "storm"),
                                   episodes_per_phase=JUMPSTART_WINDOW,
                                   defense="greedy-isolate", seed=3)
        report = run_transition_experiment(exp, out_dir=tmp_path)
        assert [p.scenario for p in report.phases] == ["mini-calm", "mini-hot"]
        assert all(p.episodes == JUMPSTART_WINDOW for p in report.phases)
        # greedy-isolate never runs a planner and has no checksums to track
        assert report.checksums == {}
        assert (tmp_path / "summary.json").exists()
        assert (tmp_path / "phases.csv").exists()
        logged = read_episode_log(tmp_path / "phase1_mini-hot.jsonl")
        assert logged == report.records[1]

    def test_checksums_frozen_across_phases(self, monkeypatch):
        _fake_scenarios(monkeypatch)
        exp = TransitionExperiment(phases=("quiet", "quiet", "quiet"),
                                   episodes_per_phase=JUMPSTART_WINDOW)
        agents = fresh_agents(0, capacity=10)
        report = run_transition_experiment(exp, agents=agents)
        assert set(report.checksums) == set(agents)
        for series in report.checksums.values():
            assert len(series) == 4  # before the run plus one per phase
            assert len(set(series)) == 1

    def test_episode_seeds_differ_across_phases(self, monkeypatch):
        _fake_scenarios(monkeypatch)
        exp = TransitionExperiment(phases=("storm", "storm"),
                                   episodes_per_phase=JUMPSTART_WINDOW,
                                   defense="random", seed=11)
        report = run_transition_experiment(exp)
        first = [r.seed for r in report.records[0]]
        second = [r.seed for r in report.records[1]]
        assert set(first).isdisjoint(second)

    def test_summary_reports_overall_ratio(self, monkeypatch):
        _fake_scenarios(monkeypatch)
        exp = TransitionExperiment(phases=("quiet",),
                                   episodes_per_phase=JUMPSTART_WINDOW,
                                   defense="scripted-only")
        report = run_transition_experiment(exp)
        assert report.overall_mean_healthy_ratio == 1.0
        doc = report.summary_dict()
        assert doc["phases"][0]["scenario"] == "mini-calm"
        assert doc["overall_mean_healthy_ratio"] == 1.0
