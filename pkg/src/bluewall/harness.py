"""Episode and experiment runners plus the evaluation metrics.

The harness glues the layers together: perception summarizes the board,
the planner picks tactics and dispatches agents, the environment advances,
and memory folds in whatever the attackers managed to do.  Every run is
deterministic for a fixed (scenario, seed, instruction schedule).
"""

from __future__ import annotations

import csv
import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from .agents import (AGENT_TYPES, CapacityError, CheckpointError, DefenseAgent,
                     load_agent, network_checksum)
from .agents.fixtures import bundled_checkpoint_dir
from .env import NOOP, OPERATIONS, AtomicAction, Episode, StepOutcome
from .memory import LongTermMemory, ShortTermMemory, ltm_record, stm_update
from .netmodel import (GlobalState, ScenarioConfig, UNREACHABLE,
                       hvn_distance_map, state_digest)
from .perception import perceive
from .planner import (DEFAULT_BUDGET, AuditEntry, PlannerBackend,
                      RemoteBackend, ScriptedBackend, audit_append,
                      react_cycle)
from .scenarios import load_scenario

DEFENSE_KINDS = ("hierarchical", "random", "greedy-isolate", "scripted-only")
JUMPSTART_WINDOW = 10
CV_WINDOW = 30


class InsufficientDataError(ValueError):
    """A metric was asked for with fewer samples than its window needs."""


class UndefinedMetricError(ValueError):
    """A metric has no defined value for the given inputs."""


def healthy_ratio(state: GlobalState) -> float:
    """Fraction of nodes that are neither compromised nor isolated."""
    good = sum(1 for st in state.nodes if not st.compromised and not st.isolated)
    return good / state.graph.node_count


def mean_vulnerability(state: GlobalState) -> float:
    return float(np.mean([st.vulnerability for st in state.nodes]))


def jumpstart(records: Sequence["EpisodeRecord"],
              window: int = JUMPSTART_WINDOW) -> float:
    """Mean cumulative reward over the first ``window`` episodes of a phase."""
    if len(records) < window:
        raise InsufficientDataError(
            f"jumpstart needs {window} episodes, got {len(records)}")
    return float(np.mean([r.cumulative_reward for r in records[:window]]))


def reward_cv(rewards: Sequence[float], window: int = CV_WINDOW) -> float:
    """Coefficient of variation (stddev over |mean|) of the leading window."""
    head = np.asarray(list(rewards)[:window], dtype=float)
    if head.size == 0:
        raise InsufficientDataError("reward_cv needs a non-empty series")
    mean = head.mean()
    if mean == 0.0:
        raise UndefinedMetricError("reward_cv undefined for zero-mean rewards")
    return float(head.std() / abs(mean))


def end_vulnerability(record: "EpisodeRecord") -> float:
    """Mean node vulnerability at the final step of a finished episode."""
    return record.final_mean_vulnerability


@dataclass(frozen=True)
class EpisodeRecord:
    """Everything one episode produced, JSON-stable for logging and replay."""

    scenario: str
    defense: str
    seed: int
    node_count: int
    max_steps: int
    rewards: tuple[float, ...]
    reward_components: tuple[Mapping[str, float], ...]
    actions: tuple[tuple[Mapping, ...], ...]
    events: tuple[tuple[Mapping, ...], ...]
    healthy_counts: tuple[int, ...]
    terminal_reason: str
    cumulative_reward: float
    final_mean_vulnerability: float
    audit: tuple[Mapping, ...] = ()

    def __post_init__(self) -> None:
        n = len(self.rewards)
        if not (len(self.reward_components) == len(self.actions)
                == len(self.events) == len(self.healthy_counts) == n):
            raise ValueError("per-step series disagree on length")
        if n > self.max_steps:
            raise ValueError(f"{n} steps exceed max_steps {self.max_steps}")
        for reward, parts in zip(self.rewards, self.reward_components):
            # exact equality on purpose: the components ARE the reward
            if parts["asset"] + parts["security"] + parts["cost"] != reward:
                raise ValueError("reward components do not sum to the reward")
        total = 0.0
        for reward in self.rewards:
            total += reward
        if total != self.cumulative_reward:
            raise ValueError("cumulative reward disagrees with the step sum")

    @property
    def length(self) -> int:
        return len(self.rewards)

    @property
    def healthy_ratios(self) -> tuple[float, ...]:
        return tuple(c / self.node_count for c in self.healthy_counts)

    @property
    def mean_healthy_ratio(self) -> float:
        return float(np.mean(self.healthy_ratios))

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "defense": self.defense,
            "seed": self.seed,
            "node_count": self.node_count,
            "max_steps": self.max_steps,
            "rewards": list(self.rewards),
            "reward_components": [dict(p) for p in self.reward_components],
            "actions": [[dict(a) for a in step] for step in self.actions],
            "events": [[dict(e) for e in step] for step in self.events],
            "healthy_counts": list(self.healthy_counts),
            "terminal_reason": self.terminal_reason,
            "cumulative_reward": self.cumulative_reward,
            "final_mean_vulnerability": self.final_mean_vulnerability,
            "audit": [dict(a) for a in self.audit],
        }

    @staticmethod
    def from_dict(data: Mapping) -> "EpisodeRecord":
        return EpisodeRecord(
            scenario=data["scenario"],
            defense=data["defense"],
            seed=data["seed"],
            node_count=data["node_count"],
            max_steps=data["max_steps"],
            rewards=tuple(data["rewards"]),
            reward_components=tuple(dict(p) for p in data["reward_components"]),
            actions=tuple(tuple(dict(a) for a in step)
                          for step in data["actions"]),
            events=tuple(tuple(dict(e) for e in step)
                         for step in data["events"]),
            healthy_counts=tuple(data["healthy_counts"]),
            terminal_reason=data["terminal_reason"],
            cumulative_reward=data["cumulative_reward"],
            final_mean_vulnerability=data["final_mean_vulnerability"],
            audit=tuple(dict(a) for a in data.get("audit", ())),
        )


def write_episode_log(records: Sequence[EpisodeRecord],
                      path: Union[str, Path]) -> None:
    with open(path, "w") as handle:
        for record in records:
            handle.write(json.dumps(record.to_dict(), sort_keys=True,
                                    separators=(",", ":")) + "\n")


def read_episode_log(path: Union[str, Path]) -> list[EpisodeRecord]:
    records = []
    with open(path) as handle:
        for line in handle:
            if line.strip():
                records.append(EpisodeRecord.from_dict(json.loads(line)))
    return records


@dataclass(frozen=True)
class HeuristicExecutor:
    """Rule-based stand-in for a trained agent, one instance per type.

    Used by the scripted-only defense and as a what-if baseline: the same
    planner assigns work, but execution is a fixed priority rule instead
    of a learned value function.
    """

    agent_type: str

    def act(self, state: GlobalState, subnet: str) -> AtomicAction:
        nodes = state.graph.subnet_nodes(subnet)
        if not nodes:
            return NOOP
        if self.agent_type == "Fortify":
            # entry nodes are the standing attack surface, harden them first
            target = max(nodes, key=lambda n: (state.nodes[n].is_entry,
                                               state.nodes[n].vulnerability, -n))
            return AtomicAction("Patch", target)
        if self.agent_type == "Recover":
            # never reconnect a node that is still compromised, and leave
            # quarantined entry points for last: they invite re-compromise
            candidates = [n for n in nodes if state.nodes[n].isolated
                          and not state.nodes[n].compromised]
            if not candidates:
                return NOOP
            target = min(candidates,
                         key=lambda n: (state.nodes[n].is_entry, n))
            return AtomicAction("Restore", target)
        if self.agent_type == "Purge":
            # active spreaders first, nearest the assets; quarantined ones
            # cannot reinfect anybody and wait for a quiet step
            candidates = [n for n in nodes if state.nodes[n].compromised]
            if not candidates:
                return NOOP
            distances = hvn_distance_map(state)
            target = min(candidates,
                         key=lambda n: (state.nodes[n].isolated,
                                        _finite(distances[n]), n))
            return AtomicAction("Reset", target)
        if self.agent_type == "Block":
            # compromised entry points feed every later wave, so cut those
            # first; otherwise quarantine the foothold nearest an asset
            candidates = [n for n in nodes if state.nodes[n].compromised
                          and not state.nodes[n].isolated]
            if not candidates:
                return NOOP
            distances = hvn_distance_map(state)
            target = min(candidates,
                         key=lambda n: (not state.nodes[n].is_entry,
                                        _finite(distances[n]), n))
            return AtomicAction("Isolate", target)
        raise ValueError(f"unknown agent type {self.agent_type!r}")


def _finite(distance) -> float:
    return float("inf") if distance is UNREACHABLE else float(distance)


@dataclass
class Defense:
    """A complete defense-side configuration for running episodes."""

    kind: str
    budget: int = DEFAULT_BUDGET
    backend: Optional[PlannerBackend] = None
    executors: Optional[Mapping[str, object]] = None

    def __post_init__(self) -> None:
        if self.kind not in DEFENSE_KINDS:
            raise ValueError(
                f"unknown defense {self.kind!r}; expected one of {DEFENSE_KINDS}")
        if self.budget < 1:
            raise ValueError(f"budget {self.budget} must be positive")

    @property
    def uses_planner(self) -> bool:
        return self.kind in ("hierarchical", "scripted-only")


def make_defense(kind: str, *, agents: Optional[Mapping[str, object]] = None,
                 backend: Optional[PlannerBackend] = None,
                 budget: int = DEFAULT_BUDGET) -> Defense:
    if kind == "hierarchical":
        if not agents:
            raise ValueError("hierarchical defense needs one agent per type")
        missing = [t for t in AGENT_TYPES if t not in agents]
        if missing:
            raise ValueError(f"hierarchical defense is missing agents: {missing}")
        return Defense(kind, budget, backend or ScriptedBackend(), dict(agents))
    if kind == "scripted-only":
        executors = {t: HeuristicExecutor(t) for t in AGENT_TYPES}
        return Defense(kind, budget, backend or ScriptedBackend(), executors)
    return Defense(kind, budget)


CHECKPOINT_FILES = {t: f"{t.lower()}.npz" for t in AGENT_TYPES}


def load_agents(checkpoint_dir: Union[str, Path]) -> dict[str, DefenseAgent]:
    """Load the four per-type checkpoints ({fortify,recover,purge,block}.npz)."""
    directory = Path(checkpoint_dir)
    agents: dict[str, DefenseAgent] = {}
    for agent_type, filename in CHECKPOINT_FILES.items():
        path = directory / filename
        if not path.exists():
            raise CheckpointError(f"missing checkpoint {path}")
        agent, _ = load_agent(path)
        if agent.agent_type != agent_type:
            raise CheckpointError(
                f"{path} holds a {agent.agent_type} agent, expected {agent_type}")
        agents[agent_type] = agent
    return agents


def fresh_agents(seed: int, capacity: int) -> dict[str, DefenseAgent]:
    """Deterministically initialized untrained agents, one per type."""
    return {t: DefenseAgent.create(t, capacity=capacity,
                                   rng=np.random.default_rng([seed, i]))
            for i, t in enumerate(AGENT_TYPES)}


def agent_checksums(agents: Mapping[str, DefenseAgent]) -> dict[str, str]:
    return {t: network_checksum(agent.network)
            for t, agent in sorted(agents.items())}


def _describe(actions: Sequence[AtomicAction]) -> str:
    if not actions:
        return "none"
    return "; ".join(a.operation if a.target is None
                     else f"{a.operation} {a.target}" for a in actions)


@dataclass
class Session:
    """One live episode: environment, memories, and the defense loop.

    The gateway wraps a Session per connected client; the batch runners
    below drive one to completion.  ``set_instruction`` replaces (or, with
    None, clears) the operator instruction; it lands in the observation of
    the next step and persists until changed.
    """

    config: ScenarioConfig
    defense: Defense
    seed: int
    episode: Episode
    stm: ShortTermMemory
    ltm: LongTermMemory
    audit_path: Optional[Path] = None
    defense_rng: Optional[np.random.Generator] = None
    events: list = field(default_factory=list)
    prev_distances: Optional[dict] = None
    audit_entries: list[AuditEntry] = field(default_factory=list)
    _rewards: list[float] = field(default_factory=list)
    _components: list[dict] = field(default_factory=list)
    _actions: list[tuple] = field(default_factory=list)
    _events_log: list[tuple] = field(default_factory=list)
    _healthy: list[int] = field(default_factory=list)

    @staticmethod
    def start(config: ScenarioConfig, defense: Defense, seed: int, *,
              ltm: Optional[LongTermMemory] = None,
              audit_path: Optional[Union[str, Path]] = None) -> "Session":
        if defense.kind == "hierarchical":
            largest = max(s.node_scale for s in config.subnets)
            for agent_type, executor in defense.executors.items():
                capacity = getattr(executor, "capacity", None)
                if capacity is not None and capacity < largest:
                    raise CapacityError(
                        f"{agent_type} agent capacity {capacity} is below the "
                        f"largest subnet ({largest} nodes)")
        return Session(
            config=config, defense=defense, seed=seed,
            episode=Episode.start(config, seed),
            stm=ShortTermMemory(),
            ltm=ltm if ltm is not None else LongTermMemory(),
            audit_path=Path(audit_path) if audit_path is not None else None,
            defense_rng=np.random.default_rng([seed, 998]))

    @property
    def state(self) -> GlobalState:
        return self.episode.state

    @property
    def done(self) -> bool:
        return self.episode.terminal

    @property
    def cumulative_reward(self) -> float:
        total = 0.0
        for reward in self._rewards:
            total += reward
        return total

    def set_instruction(self, text: Optional[str]) -> None:
        self.episode.state = self.episode.state.with_instruction(text)

    def _decide(self) -> tuple[tuple[AtomicAction, ...], Optional[AuditEntry]]:
        state = self.episode.state
        if self.defense.uses_planner:
            report = perceive(state, self.events,
                              prev_distances=self.prev_distances)
            result = react_cycle(state, report, self.stm, self.ltm,
                                 self.defense.backend, self.defense.executors,
                                 budget=self.defense.budget)
            self.prev_distances = {name: m.critical_distance
                                   for name, m in report.per_subnet.items()}
            return result.actions, result.entry
        if self.defense.kind == "random":
            actions = []
            for _ in range(self.defense.budget):
                op = OPERATIONS[int(self.defense_rng.integers(len(OPERATIONS)))]
                if op == "NoOp":
                    actions.append(NOOP)
                else:
                    target = int(self.defense_rng.integers(state.graph.node_count))
                    actions.append(AtomicAction(op, target))
            return tuple(actions), None
        # greedy-isolate: quarantine whatever just got compromised
        targets = [n for n in state.compromised_nodes()
                   if not state.nodes[n].isolated][: self.defense.budget]
        return tuple(AtomicAction("Isolate", n) for n in targets), None

    def step(self) -> StepOutcome:
        state_before = self.episode.state
        actions, entry = self._decide()
        outcome = self.episode.step(actions, action_budget=self.defense.budget)
        for event in outcome.events:
            if event.success:
                ltm_record(self.ltm, event, state_before.graph.subnet_of)
        self.events.extend(outcome.events)
        if entry is not None:
            self.audit_entries.append(entry)
            if self.audit_path is not None:
                audit_append(self.audit_path, entry)
            stm_update(self.stm, _describe(actions), entry.observation,
                       state_digest(outcome.next_state))
        self._rewards.append(outcome.reward)
        self._components.append(dict(outcome.reward_components))
        self._actions.append(tuple(a.to_dict() for a in actions))
        self._events_log.append(tuple(e.to_dict() for e in outcome.events))
        healthy = sum(1 for st in outcome.next_state.nodes
                      if not st.compromised and not st.isolated)
        self._healthy.append(healthy)
        return outcome

    def finish(self) -> EpisodeRecord:
        if not self.episode.terminal:
            raise RuntimeError("episode still running; step it to terminal first")
        total = 0.0
        for reward in self._rewards:
            total += reward
        return EpisodeRecord(
            scenario=self.config.name,
            defense=self.defense.kind,
            seed=self.seed,
            node_count=self.episode.state.graph.node_count,
            max_steps=self.config.max_steps,
            rewards=tuple(self._rewards),
            reward_components=tuple(self._components),
            actions=tuple(self._actions),
            events=tuple(self._events_log),
            healthy_counts=tuple(self._healthy),
            terminal_reason=self.episode.terminal_reason,
            cumulative_reward=total,
            final_mean_vulnerability=mean_vulnerability(self.episode.state),
            audit=tuple(entry.to_dict() for entry in self.audit_entries),
        )


def run_episode(config: ScenarioConfig, defense: Defense, seed: int, *,
                instruction_schedule: Optional[Mapping[int, Optional[str]]] = None,
                ltm: Optional[LongTermMemory] = None,
                audit_path: Optional[Union[str, Path]] = None) -> EpisodeRecord:
    """Play one episode to terminal; deterministic for fixed inputs.

    ``instruction_schedule`` maps a step time to operator text (None
    clears), applied just before the decision at that time.
    """
    schedule = dict(instruction_schedule or {})
    session = Session.start(config, defense, seed, ltm=ltm,
                            audit_path=audit_path)
    while not session.done:
        now = session.state.time
        if now in schedule:
            session.set_instruction(schedule[now])
        session.step()
    return session.finish()


@dataclass(frozen=True)
class TransitionExperiment:
    """Ordered scenario phases played by one frozen defense configuration."""

    phases: tuple[str, ...]
    episodes_per_phase: int
    defense: str = "hierarchical"
    backend: str = "scripted"
    seed: int = 0
    budget: int = DEFAULT_BUDGET
    checkpoint_dir: Optional[str] = None

    def __post_init__(self) -> None:
        if not self.phases:
            raise ValueError("at least one phase is required")
        if not 1 <= self.episodes_per_phase <= 1000:
            raise ValueError(
                f"episodes_per_phase {self.episodes_per_phase} outside [1, 1000]")
        if self.defense not in DEFENSE_KINDS:
            raise ValueError(f"unknown defense {self.defense!r}")

    @staticmethod
    def from_json(path: Union[str, Path]) -> "TransitionExperiment":
        data = json.loads(Path(path).read_text())
        return TransitionExperiment(
            phases=tuple(data["phases"]),
            episodes_per_phase=data["episodes_per_phase"],
            defense=data.get("defense", "hierarchical"),
            backend=data.get("backend", "scripted"),
            seed=data.get("seed", 0),
            budget=data.get("budget", DEFAULT_BUDGET),
            checkpoint_dir=data.get("checkpoint_dir"),
        )


@dataclass(frozen=True)
class PhaseSummary:
    phase: int
    scenario: str
    episodes: int
    mean_cumulative_reward: float
    jumpstart: float
    mean_healthy_ratio: float
    mean_length: float
    mean_end_vulnerability: float
    terminal_reasons: Mapping[str, int]

    def to_dict(self) -> dict:
        return {
            "phase": self.phase,
            "scenario": self.scenario,
            "episodes": self.episodes,
            "mean_cumulative_reward": self.mean_cumulative_reward,
            "jumpstart": self.jumpstart,
            "mean_healthy_ratio": self.mean_healthy_ratio,
            "mean_length": self.mean_length,
            "mean_end_vulnerability": self.mean_end_vulnerability,
            "terminal_reasons": dict(self.terminal_reasons),
        }


@dataclass
class TransitionReport:
    experiment: TransitionExperiment
    phases: list[PhaseSummary]
    records: list[list[EpisodeRecord]]
    checksums: Mapping[str, tuple[str, ...]]

    @property
    def overall_mean_healthy_ratio(self) -> float:
        ratios = [r.mean_healthy_ratio
                  for phase in self.records for r in phase]
        return float(np.mean(ratios))

    def summary_dict(self) -> dict:
        return {
            "experiment": {
                "phases": list(self.experiment.phases),
                "episodes_per_phase": self.experiment.episodes_per_phase,
                "defense": self.experiment.defense,
                "backend": self.experiment.backend,
                "seed": self.experiment.seed,
                "budget": self.experiment.budget,
                "checkpoint_dir": self.experiment.checkpoint_dir,
            },
            "phases": [p.to_dict() for p in self.phases],
            "checksums": {t: list(v) for t, v in sorted(self.checksums.items())},
            "overall_mean_healthy_ratio": self.overall_mean_healthy_ratio,
        }


def _summarize_phase(index: int, scenario: str,
                     records: Sequence[EpisodeRecord]) -> PhaseSummary:
    return PhaseSummary(
        phase=index,
        scenario=scenario,
        episodes=len(records),
        mean_cumulative_reward=float(
            np.mean([r.cumulative_reward for r in records])),
        jumpstart=jumpstart(records),
        mean_healthy_ratio=float(
            np.mean([r.mean_healthy_ratio for r in records])),
        mean_length=float(np.mean([r.length for r in records])),
        mean_end_vulnerability=float(
            np.mean([r.final_mean_vulnerability for r in records])),
        terminal_reasons=dict(Counter(r.terminal_reason for r in records)),
    )


def make_backend(name: str) -> PlannerBackend:
    """"scripted" or an http(s) endpoint of a chat-completion service."""
    if name == "scripted":
        return ScriptedBackend()
    if name.startswith("http://") or name.startswith("https://"):
        return RemoteBackend(endpoint=name)
    raise ValueError(
        f"backend must be 'scripted' or an http(s) URL, got {name!r}")


def assemble_defense(kind: str, *, backend: str = "scripted",
                     checkpoint_dir: Optional[Union[str, Path]] = None,
                     config: Optional[ScenarioConfig] = None, seed: int = 0,
                     budget: int = DEFAULT_BUDGET) -> Defense:
    """Resolve names and checkpoints into a ready Defense.

    Hierarchical agents come from ``checkpoint_dir``, else the bundled
    checkpoints sized for the scenario, else deterministic fresh
    initialization (useful for smoke runs, not for performance).
    """
    if kind in ("random", "greedy-isolate"):
        return make_defense(kind, budget=budget)
    resolved = make_backend(backend)
    if kind == "scripted-only":
        return make_defense(kind, backend=resolved, budget=budget)
    if checkpoint_dir is not None:
        agents = load_agents(checkpoint_dir)
    else:
        if config is None:
            raise ValueError("hierarchical defense needs a scenario config "
                             "to size its agents")
        capacity = max(s.node_scale for s in config.subnets)
        bundled = bundled_checkpoint_dir(capacity)
        agents = (load_agents(bundled) if bundled is not None
                  else fresh_agents(seed, capacity))
    return make_defense(kind, agents=agents, backend=resolved, budget=budget)


def run_transition_experiment(
        experiment: TransitionExperiment, *,
        agents: Optional[Mapping[str, DefenseAgent]] = None,
        out_dir: Optional[Union[str, Path]] = None) -> TransitionReport:
    """Run all phases with a frozen defense; no learning happens anywhere.

    Hierarchical agents come from ``agents``, else the experiment's
    checkpoint_dir, else the bundled checkpoints sized for the largest
    subnet across phases, else deterministic fresh initialization.
    Long-term memory persists through the whole run; parameter checksums
    are snapshotted at every phase boundary.
    """
    configs = [load_scenario(name) for name in experiment.phases]
    if experiment.defense == "hierarchical" and agents is None:
        if experiment.checkpoint_dir is not None:
            agents = load_agents(experiment.checkpoint_dir)
        else:
            capacity = max(s.node_scale for c in configs for s in c.subnets)
            bundled = bundled_checkpoint_dir(capacity)
            agents = (load_agents(bundled) if bundled is not None
                      else fresh_agents(experiment.seed, capacity))
    backend = (make_backend(experiment.backend)
               if experiment.defense in ("hierarchical", "scripted-only")
               else None)
    defense = make_defense(experiment.defense, agents=agents, backend=backend,
                           budget=experiment.budget)

    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)

    checksums: dict[str, list[str]] = {}

    def snapshot() -> None:
        if experiment.defense == "hierarchical":
            for agent_type, digest in agent_checksums(agents).items():
                checksums.setdefault(agent_type, []).append(digest)

    ltm = LongTermMemory()
    snapshot()
    phases: list[PhaseSummary] = []
    all_records: list[list[EpisodeRecord]] = []
    for index, config in enumerate(configs):
        audit_path = (out / f"phase{index}_audit.jsonl"
                      if out is not None and defense.uses_planner else None)
        records = []
        for i in range(experiment.episodes_per_phase):
            episode_seed = experiment.seed + 1000 * index + i
            records.append(run_episode(config, defense, episode_seed,
                                       ltm=ltm, audit_path=audit_path))
            ltm.mark_episode_boundary()
        phases.append(_summarize_phase(index, config.name, records))
        all_records.append(records)
        if out is not None:
            write_episode_log(records, out / f"phase{index}_{config.name}.jsonl")
        snapshot()

    report = TransitionReport(
        experiment=experiment, phases=phases, records=all_records,
        checksums={t: tuple(v) for t, v in checksums.items()})
    if out is not None:
        write_summary(report, out / "summary.json")
        write_phase_csv(report, out / "phases.csv")
    return report


def write_summary(report: TransitionReport, path: Union[str, Path]) -> None:
    Path(path).write_text(
        json.dumps(report.summary_dict(), sort_keys=True, indent=2) + "\n")


def write_phase_csv(report: TransitionReport, path: Union[str, Path]) -> None:
    columns = ("phase", "scenario", "episodes", "mean_cumulative_reward",
               "jumpstart", "mean_healthy_ratio", "mean_length",
               "mean_end_vulnerability", "terminal_reasons")
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(columns)
        for summary in report.phases:
            reasons = "|".join(f"{k}:{v}" for k, v in
                               sorted(summary.terminal_reasons.items()))
            writer.writerow([summary.phase, summary.scenario, summary.episodes,
                             summary.mean_cumulative_reward, summary.jumpstart,
                             summary.mean_healthy_ratio, summary.mean_length,
                             summary.mean_end_vulnerability, reasons])
