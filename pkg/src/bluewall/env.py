"""MDP core: atomic defense actions, step transition, rewards, termination.

A step applies the defender's actions first, then lets every attacker act,
then scores the transition.  Rewards are all penalties; the best attainable
step reward is 0.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Sequence

import numpy as np

from .attack import Attacker, AttackEvent, attackers_step
from .netmodel import GlobalState, ScenarioConfig, build_scenario

log = logging.getLogger(__name__)

OPERATIONS = ("Reset", "Patch", "Isolate", "Restore", "NoOp")


@dataclass(frozen=True)
class AtomicAction:
    operation: str
    target: Optional[int] = None

    def __post_init__(self) -> None:
        if self.operation not in OPERATIONS:
            raise ValueError(f"unknown operation {self.operation!r}")
        if self.operation == "NoOp":
            if self.target is not None:
                raise ValueError("NoOp takes no target")
        elif self.target is None:
            raise ValueError(f"{self.operation} requires a target")

    def to_dict(self) -> dict:
        return {"operation": self.operation, "target": self.target}

    @staticmethod
    def from_dict(data: Mapping) -> "AtomicAction":
        return AtomicAction(operation=data["operation"], target=data.get("target"))


NOOP = AtomicAction("NoOp")


@dataclass(frozen=True)
class RewardWeights:
    """Penalty weights; all components are non-positive by construction."""

    lambda_hva: float = 10.0
    alpha: float = 0.5
    beta: float = 1.0
    cost: Mapping[str, float] = field(default_factory=lambda: {
        "Patch": 0.2, "Isolate": 0.5, "Reset": 1.0, "Restore": 0.2, "NoOp": 0.0,
    })
    gamma: float = 0.8
    patch_delta: float = 0.2
    vuln_min: float = 0.05

    def __post_init__(self) -> None:
        if min(self.lambda_hva, self.alpha, self.beta) < 0:
            raise ValueError("weights must be >= 0")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        if self.cost.get("NoOp", 0.0) != 0.0:
            raise ValueError("NoOp must cost 0")
        for op in OPERATIONS:
            if self.cost.get(op, 0.0) < 0:
                raise ValueError(f"cost[{op}] must be >= 0")

    @staticmethod
    def from_overrides(overrides: Mapping[str, float]) -> "RewardWeights":
        base = RewardWeights()
        cost = dict(base.cost)
        simple = {}
        for key, value in overrides.items():
            if key.startswith("cost_"):
                cost[key[len("cost_"):]] = value
            else:
                simple[key] = value
        return replace(base, cost=cost, **simple)


@dataclass(frozen=True)
class StepOutcome:
    next_state: GlobalState
    reward: float
    reward_components: Mapping[str, float]
    events: tuple[AttackEvent, ...]
    terminal: bool
    terminal_reason: Optional[str]  # "HvnCompromised" | "MaxSteps" | None
    warnings: tuple[str, ...] = ()


def apply_action(state: GlobalState, action: AtomicAction,
                 weights: RewardWeights = RewardWeights()) -> GlobalState:
    """Apply one atomic defense action; illegal-but-harmless cases no-op."""
    state2, _ = apply_action_checked(state, action, weights)
    return state2


def apply_action_checked(state: GlobalState, action: AtomicAction,
                         weights: RewardWeights) -> tuple[GlobalState, Optional[str]]:
    if action.operation == "NoOp":
        return state, None
    target = action.target
    st = state.node(target)
    if action.operation == "Reset":
        return state.with_node(target, compromised=False), None
    if action.operation == "Patch":
        vuln = max(st.vulnerability - weights.patch_delta, weights.vuln_min)
        return state.with_node(target, vulnerability=vuln), None
    if action.operation == "Isolate":
        if st.isolated:
            warning = f"Isolate on already-isolated node {target}"
            log.debug(warning)
            return state, warning
        return state.with_node(target, isolated=True), None
    # Restore
    if not st.isolated:
        warning = f"Restore on non-isolated node {target}"
        log.debug(warning)
        return state, warning
    return state.with_node(target, isolated=False), None


def _abnormal(state: GlobalState) -> set[int]:
    return {n for n, st in enumerate(state.nodes) if st.compromised or st.isolated}


def asset_reward(next_state: GlobalState, weights: RewardWeights) -> float:
    """Penalty per compromised high-value node in the resulting state."""
    hit = sum(1 for n in next_state.hvn_nodes() if next_state.nodes[n].compromised)
    return -weights.lambda_hva * hit


def security_reward(state: GlobalState, next_state: GlobalState,
                    weights: RewardWeights) -> float:
    """Penalty on abnormal-node level plus newly abnormal nodes this step."""
    if state.graph.node_count != next_state.graph.node_count:
        raise ValueError("states must share a node set")
    before = _abnormal(state)
    after = _abnormal(next_state)
    newly = len(after - before)
    return -(weights.alpha * len(after) + weights.beta * newly)


def cost_reward(action: AtomicAction, weights: RewardWeights) -> float:
    return -weights.cost.get(action.operation, 0.0)


def global_reward(state: GlobalState, actions: Sequence[AtomicAction],
                  next_state: GlobalState,
                  weights: RewardWeights) -> tuple[float, dict[str, float]]:
    """Total step reward with its exact three-way decomposition."""
    components = {
        "asset": asset_reward(next_state, weights),
        "security": security_reward(state, next_state, weights),
        "cost": sum(cost_reward(a, weights) for a in actions),
    }
    return components["asset"] + components["security"] + components["cost"], components


def env_step(state: GlobalState, defender_actions: Sequence[AtomicAction],
             attackers: list[Attacker], weights: RewardWeights,
             rng: np.random.Generator, max_steps: int = 100,
             action_budget: Optional[int] = None,
             hvn_terminal: bool = True) -> StepOutcome:
    """One environment step: defender acts, attackers respond, reward scored.

    ``action_budget`` caps the defender's joint action list; exceeding it is
    a hard error so planners cannot silently over-commit.
    """
    if action_budget is not None and len(defender_actions) > action_budget:
        raise ValueError(
            f"{len(defender_actions)} actions exceed budget {action_budget}")
    start = state
    warnings: list[str] = []
    for action in defender_actions:
        state, warning = apply_action_checked(state, action, weights)
        if warning:
            warnings.append(warning)
    state, events = attackers_step(state, attackers, rng)
    state = state.advanced()
    reward, components = global_reward(start, defender_actions, state, weights)
    hvn_hit = any(state.nodes[n].compromised for n in state.hvn_nodes())
    if hvn_terminal and hvn_hit:
        terminal, reason = True, "HvnCompromised"
    elif state.time >= max_steps:
        terminal, reason = True, "MaxSteps"
    else:
        terminal, reason = False, None
    return StepOutcome(next_state=state, reward=reward, reward_components=components,
                       events=tuple(events), terminal=terminal, terminal_reason=reason,
                       warnings=tuple(warnings))


@dataclass
class Episode:
    """Mutable episode handle tying a scenario, attackers, and the clock."""

    config: ScenarioConfig
    state: GlobalState
    attackers: list[Attacker]
    weights: RewardWeights
    rng: np.random.Generator
    terminal: bool = False
    terminal_reason: Optional[str] = None

    @staticmethod
    def start(config: ScenarioConfig, seed: int) -> "Episode":
        from .attack import make_attackers
        state = build_scenario(config, seed)
        rng = np.random.default_rng(seed + 1)
        weights = RewardWeights.from_overrides(config.reward_overrides)
        attackers = make_attackers(config.attacker_count, config.attacker_skill,
                                   config.attack_policy)
        return Episode(config=config, state=state, attackers=attackers,
                       weights=weights, rng=rng)

    def step(self, defender_actions: Sequence[AtomicAction],
             action_budget: Optional[int] = None) -> StepOutcome:
        if self.terminal:
            raise RuntimeError("episode already terminal")
        outcome = env_step(self.state, defender_actions, self.attackers,
                           self.weights, self.rng, max_steps=self.config.max_steps,
                           action_budget=action_budget,
                           hvn_terminal=self.config.hvn_terminal)
        self.state = outcome.next_state
        self.terminal = outcome.terminal
        self.terminal_reason = outcome.terminal_reason
        return outcome
