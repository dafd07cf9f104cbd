"""Per-type value-learning: epsilon-greedy control, specialized rewards,
and the separated pre-training loop that turns a micro-scenario into a
trained defense agent.

Each agent type trains alone in a scenario generator biased toward its
objective (high-vulnerability nets for Fortify, isolation-heavy nets for
Recover, multi-compromise nets for Purge, near-breach nets for Block),
against a fixed attacker configuration, with its own reward shaping.
Training is seeded-deterministic end to end.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Callable, Collection, Optional

import numpy as np

from ..attack import Attacker, make_attackers
from ..env import NOOP, AtomicAction, RewardWeights, env_step, global_reward
from ..netmodel import (GlobalState, ScenarioConfig, SubnetSpec,
                        VulnerabilityDistribution, build_scenario, neighbors)
from .mlp import HIDDEN_UNITS, Adam, ValueNetwork
from .obs import (AGENT_TYPES, DEFAULT_CAPACITY, LocalObservation, action_dim,
                  observation_dim, project_observation)
from .replay import ReplayBuffer

TRAINING_SUBNET = "TrainNet"


@dataclass(frozen=True)
class Hyperparams:
    learning_rate: float = 0.003
    batch_size: int = 64
    gamma: float = 0.0
    buffer_capacity: int = 100_000
    target_update_interval: int = 100  # learn steps between target syncs
    epsilon_start: float = 1.0
    epsilon_decay_steps: int = 10**9
    episodes: int = 10_000
    hidden_units: int = HIDDEN_UNITS
    learn_every: int = 1  # env steps per gradient update
    normalize_targets: bool = True
    # high enough to flush weights on inputs that never vary during
    # training, low enough that rarely-reinforced per-node weights survive
    weight_decay: float = 0.03

    def __post_init__(self) -> None:
        if self.learning_rate <= 0 or self.batch_size < 1:
            raise ValueError("learning_rate and batch_size must be positive")
        # gamma 0 is allowed: it turns learning into pure one-step
        # regression, which the drill scenarios with immediate shaped
        # rewards rely on
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must lie in [0, 1)")
        if not 0.0 <= self.epsilon_start <= 1.0:
            raise ValueError("epsilon_start must lie in [0, 1]")
        if self.episodes < 0:
            raise ValueError("episodes must be >= 0")
        if self.learn_every < 1:
            raise ValueError("learn_every must be >= 1")
        if self.weight_decay < 0.0:
            raise ValueError("weight_decay must be >= 0")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def epsilon_schedule(step: int, start: float = 0.6, decay_steps: int = 2000) -> float:
    """Exploration rate: linear from ``start`` at step 0 to 0 at ``decay_steps``."""
    if step < 0:
        raise ValueError("step must be >= 0")
    if step >= decay_steps:
        return 0.0
    return start * (1.0 - step / decay_steps)


@dataclass
class DefenseAgent:
    """One specialized defender: a value network over localized observations."""

    agent_type: str
    capacity: int
    network: ValueNetwork

    @staticmethod
    def create(agent_type: str, capacity: int = DEFAULT_CAPACITY,
               hidden: int = HIDDEN_UNITS,
               rng: Optional[np.random.Generator] = None) -> "DefenseAgent":
        if agent_type not in AGENT_TYPES:
            raise ValueError(f"unknown agent type {agent_type!r}")
        net = ValueNetwork(observation_dim(agent_type, capacity),
                           action_dim(agent_type, capacity),
                           hidden=hidden, rng=rng)
        return DefenseAgent(agent_type=agent_type, capacity=capacity, network=net)

    def observe(self, state: GlobalState, subnet: str) -> LocalObservation:
        return project_observation(state, subnet, self.agent_type, self.capacity)

    def q_values(self, local: LocalObservation) -> np.ndarray:
        return self.network.forward(local.vector)[0]

    def select_index(self, local: LocalObservation, epsilon: float,
                     rng: Optional[np.random.Generator] = None) -> int:
        """Masked epsilon-greedy over the local action space; ties pick the
        lowest index, and a fully masked space falls back to NoOp."""
        if not 0.0 <= epsilon <= 1.0:
            raise ValueError("epsilon must lie in [0, 1]")
        valid = np.flatnonzero(local.action_mask())
        if valid.size == 0:
            return local.action_space - 1
        if epsilon > 0.0:
            if rng is None:
                raise ValueError("epsilon > 0 requires an rng")
            if rng.random() < epsilon:
                return int(valid[rng.integers(0, valid.size)])
        q = self.q_values(local)
        best = valid[np.argmax(q[valid])]
        return int(best)

    def act(self, state: GlobalState, subnet: str, epsilon: float = 0.0,
            rng: Optional[np.random.Generator] = None) -> AtomicAction:
        local = self.observe(state, subnet)
        operation, target = local.decode(self.select_index(local, epsilon, rng))
        if operation == "NoOp":
            return NOOP
        return AtomicAction(operation, target)


@dataclass(frozen=True)
class SpecializedRewardConfig:
    """Per-type shaping knobs layered on the shared global reward."""

    emphasis: float = 2.0            # multiplier on the emphasized component
    fortify_patch_bonus: float = 0.5   # per point of vulnerability removed
    recover_restore_bonus: float = 0.5  # per node brought back online


def specialized_reward(agent_type: str, state: GlobalState, action: AtomicAction,
                       next_state: GlobalState, weights: RewardWeights,
                       config: SpecializedRewardConfig = SpecializedRewardConfig(),
                       ) -> float:
    """Type-shaped step reward built on the global decomposition.

    Purge doubles the security component, Block the asset component;
    Fortify earns a bonus per vulnerability point patched away and Recover
    per node restored.  A no-change NoOp transition scores 0 for all types.
    """
    if agent_type not in AGENT_TYPES:
        raise ValueError(f"unknown agent type {agent_type!r}")
    total, parts = global_reward(state, [action], next_state, weights)
    if agent_type == "Purge":
        return total + (config.emphasis - 1.0) * parts["security"]
    if agent_type == "Block":
        return total + (config.emphasis - 1.0) * parts["asset"]
    if agent_type == "Fortify":
        reduced = sum(max(0.0, a.vulnerability - b.vulnerability)
                      for a, b in zip(state.nodes, next_state.nodes))
        return total + config.fortify_patch_bonus * reduced
    # Recover; releasing a node that is still compromised brings no service
    # back, so only healthy returns earn the bonus
    restored = sum(1 for a, b in zip(state.nodes, next_state.nodes)
                   if a.isolated and not b.isolated and not b.compromised)
    return total + config.recover_restore_bonus * restored


@dataclass(frozen=True)
class TrainingScenarioTriple:
    """Reset generator, attacker configuration, and termination predicate
    defining one agent type's dedicated training environment."""

    name: str
    subnet: str
    reset: Callable[[np.random.Generator], GlobalState]
    attacker_count: int
    attack_policy: str
    attacker_skill: float
    max_steps: int
    weights: RewardWeights = RewardWeights()
    reward_config: SpecializedRewardConfig = SpecializedRewardConfig()
    hvn_terminal: bool = True
    terminate: Callable[[GlobalState], bool] = lambda state: False
    # optional hook to plant footholds on the fresh attackers each episode
    seed_footholds: Optional[Callable[
        [GlobalState, list[Attacker], np.random.Generator], None]] = None


def _micro_config(node_count: int, vulnerability: VulnerabilityDistribution,
                  entry_count: int = 2, edge_density: float = 0.25) -> ScenarioConfig:
    spec = SubnetSpec(name=TRAINING_SUBNET, node_scale=node_count,
                      entry_count=entry_count, hvn_assets=("Primary Service",),
                      edge_density=edge_density)
    return ScenarioConfig(name="micro", subnets=(spec,), vulnerability=vulnerability)


def _seeded_build(config: ScenarioConfig, rng: np.random.Generator) -> GlobalState:
    return build_scenario(config, int(rng.integers(0, 2**31)))


DRILL_TOPOLOGY_SEED = 7041


def _drill_board(config: ScenarioConfig) -> GlobalState:
    """One fixed board per drill.

    Topology, entry points, and HVN placement stay constant across
    episodes; resets only reshuffle node statuses on top.  A board
    resampled every episode would feed the value regression hundreds of
    input dimensions of pure noise, and weight decay alone cannot keep
    that much noise out of a network trained on tens of thousands of
    samples.
    """
    return build_scenario(config, DRILL_TOPOLOGY_SEED)


def _spread_vulnerabilities(state: GlobalState, rng: np.random.Generator,
                            low: float = 0.05, high: float = 0.9) -> GlobalState:
    """Assign the same multiset of vulnerability levels every episode,
    shuffled over nodes: board-level aggregates stay constant while every
    node's level is fresh learning material."""
    count = state.graph.node_count
    levels = np.linspace(low, high, count)[rng.permutation(count)]
    for node in range(count):
        state = state.with_node(node, vulnerability=float(levels[node]))
    return state


def _pick_ordinary(state: GlobalState, rng: np.random.Generator,
                   count: int, exclude: Collection[int] = ()) -> list[int]:
    """Sample distinct non-HVN nodes; keeping HVNs clean keeps the large
    HVN penalty term out of the drill's reward variance."""
    ordinary = [n for n in range(state.graph.node_count)
                if not state.nodes[n].is_hvn and n not in exclude]
    picked = rng.choice(len(ordinary), size=min(count, len(ordinary)),
                        replace=False)
    return [ordinary[i] for i in picked]


def training_triple(agent_type: str, node_count: Optional[int] = None,
                    weights: RewardWeights = RewardWeights(),
                    ) -> TrainingScenarioTriple:
    """Build the drill triple for one agent type.

    Each drill pins everything the step reward aggregates over: the board,
    the status counts, and the vulnerability multiset.  Only the assignment
    of statuses to nodes varies between episodes, so rewards differ between
    actions rather than between boards and the per-node readout emerges
    from modest sample counts.  Drill size defaults to the observation
    capacity; training on smaller boards would leave the higher node slots'
    outputs untrained.  Drill boards use zero extra edge density (a bare
    spanning tree): every constant nonzero adjacency input acts as one more
    bias term competing for gradient, and a dense board carries enough of
    them to starve the sparse per-node status signal.
    """
    if agent_type == "Fortify":
        n = node_count or DEFAULT_CAPACITY
        config = _micro_config(n, VulnerabilityDistribution(0.5, 0.5),
                               edge_density=0.0)
        base = _drill_board(config)
        compromised = max(2, round(n * 0.15))

        def reset(rng: np.random.Generator) -> GlobalState:
            state = _spread_vulnerabilities(base, rng)
            for node in _pick_ordinary(state, rng, compromised):
                state = state.with_node(node, compromised=True)
            return state

        # the patch bonus is the only term that separates targets, so it
        # has to clear the action costs by a wide margin
        return TrainingScenarioTriple(
            name="fortify-patch-ladder", subnet=TRAINING_SUBNET,
            reset=reset, attacker_count=0, attack_policy="recon",
            attacker_skill=0.5, max_steps=3, weights=weights,
            reward_config=SpecializedRewardConfig(fortify_patch_bonus=2.5))

    if agent_type == "Recover":
        n = node_count or DEFAULT_CAPACITY
        config = _micro_config(n, VulnerabilityDistribution(0.5, 0.5),
                               edge_density=0.0)
        base = _drill_board(config)
        released = max(3, round(n * 0.2))     # clean, waiting for release
        quarantined = max(1, round(n * 0.1))  # still compromised

        def reset(rng: np.random.Generator) -> GlobalState:
            state = base
            picks = _pick_ordinary(state, rng, released + quarantined)
            for i, node in enumerate(picks):
                if i < released:
                    state = state.with_node(node, isolated=True)
                else:
                    state = state.with_node(node, isolated=True,
                                            compromised=True)
            return state

        return TrainingScenarioTriple(
            name="recover-release-queue", subnet=TRAINING_SUBNET,
            reset=reset, attacker_count=0, attack_policy="recon",
            attacker_skill=0.5, max_steps=3, weights=weights)

    if agent_type == "Purge":
        n = node_count or DEFAULT_CAPACITY
        config = _micro_config(n, VulnerabilityDistribution(0.5, 0.5),
                               edge_density=0.0)
        base = _drill_board(config)
        compromised = max(3, round(n * 0.2))

        def reset(rng: np.random.Generator) -> GlobalState:
            state = _spread_vulnerabilities(base, rng)
            for node in _pick_ordinary(state, rng, compromised):
                state = state.with_node(node, compromised=True)
            return state

        return TrainingScenarioTriple(
            name="purge-cleanup-queue", subnet=TRAINING_SUBNET,
            reset=reset, attacker_count=0, attack_policy="recon",
            attacker_skill=0.5, max_steps=3, weights=weights,
            reward_config=SpecializedRewardConfig(emphasis=3.0))

    if agent_type == "Block":
        n = node_count or DEFAULT_CAPACITY
        config = _micro_config(n, VulnerabilityDistribution(0.9, 0.9),
                               edge_density=0.0)
        breached = max(3, round(n * 0.1))

        # unlike the other drills this one resamples its topology every
        # episode: the containment lesson keys on which slot is breached,
        # and a fixed board would confine the eligible breach sites to a
        # handful of slots and teach slot identity instead of the flag
        def reset(rng: np.random.Generator) -> GlobalState:
            state = _seeded_build(config, rng)
            entries = sorted(state.entry_nodes())
            for node in entries:
                state = state.with_node(node, isolated=True)
            # a breach must keep >= 2 clean neighbors, otherwise walling
            # off its single target teaches isolating clean nodes instead
            picks: list[int] = []
            eligible = [m for m in range(state.graph.node_count)
                        if not state.nodes[m].is_hvn and m not in entries]
            for m in rng.permutation(len(eligible)):
                node = eligible[int(m)]
                near = neighbors(state, node)
                if len(near) >= 2 and not near.intersection(picks):
                    picks.append(node)
                if len(picks) == breached:
                    break
            for node in picks:
                state = state.with_node(node, compromised=True)
            return state

        def seed_footholds(state: GlobalState, attackers: list[Attacker],
                           rng: np.random.Generator) -> None:
            spread = sorted(state.compromised_nodes())
            for i, attacker in enumerate(attackers):
                attacker.footholds.add(spread[i % len(spread)])

        # isolation only pays off through the attacks it prevents; with the
        # entries sealed and each attacker pinned to one breach as its sole
        # foothold, isolating that breach strands its attacker outright, so
        # the containment value lands in the very next reward instead of
        # leaking away through attackers re-entering at the edge.  One step
        # per episode: after a round of spread the attackers are multi-homed
        # and no single isolation can strand them, which would bury the
        # containment lesson under steps where it cannot be demonstrated
        return TrainingScenarioTriple(
            name="block-containment", subnet=TRAINING_SUBNET,
            reset=reset, attacker_count=breached, attack_policy="impact",
            attacker_skill=1.0, max_steps=1, weights=weights,
            reward_config=SpecializedRewardConfig(emphasis=3.0),
            hvn_terminal=False, seed_footholds=seed_footholds)

    raise ValueError(f"unknown agent type {agent_type!r}")


def default_hyperparams(agent_type: str, episodes: int = 10_000) -> Hyperparams:
    """Training settings suited to each type's drill.

    All four drills carry their lesson in the immediate shaped reward, so
    they share one pure one-step regression setup.
    """
    if agent_type not in AGENT_TYPES:
        raise ValueError(f"unknown agent type {agent_type!r}")
    return Hyperparams(episodes=episodes)


def triple_from_config(agent_type: str, config: ScenarioConfig,
                       subnet: Optional[str] = None) -> TrainingScenarioTriple:
    """Training triple that plays out a full scenario config.

    The agent trains on one subnet (the largest by default) while the
    scenario's own attackers roam the whole board.
    """
    if agent_type not in AGENT_TYPES:
        raise ValueError(f"unknown agent type {agent_type!r}")
    names = [s.name for s in config.subnets]
    if subnet is None:
        subnet = max(config.subnets, key=lambda s: (s.node_scale, s.name)).name
    elif subnet not in names:
        raise ValueError(f"unknown subnet {subnet!r}; config has {names}")

    def reset(rng: np.random.Generator) -> GlobalState:
        return _seeded_build(config, rng)

    return TrainingScenarioTriple(
        name=config.name, subnet=subnet, reset=reset,
        attacker_count=config.attacker_count,
        attack_policy=config.attack_policy,
        attacker_skill=config.attacker_skill,
        max_steps=config.max_steps,
        weights=RewardWeights.from_overrides(config.reward_overrides),
        hvn_terminal=config.hvn_terminal)


class TrainingDiverged(RuntimeError):
    """Raised when the temporal-difference loss stops being finite."""


class TargetNormalizer:
    """Running affine normalization of temporal-difference targets.

    Large boards carry large negative per-step baselines; regressing raw
    values drives every shared ReLU unit negative before the output bias
    can absorb the offset, and the trunk dies.  Learning in normalized
    space removes the offset.  Greedy action choice is unaffected: the
    transform is the same for every action in a state.
    """

    def __init__(self, momentum: float = 0.01, floor: float = 0.05) -> None:
        self.momentum = momentum
        self.floor = floor
        self.mean = 0.0
        self.mean_sq = 1.0
        self.primed = False

    @property
    def std(self) -> float:
        return max(np.sqrt(max(self.mean_sq - self.mean ** 2, 0.0)),
                   self.floor)

    def update(self, values: np.ndarray) -> None:
        if not self.primed:
            # adopt the first batch outright; easing in from (0, 1) would
            # let a large offset burn the network before the average moves
            self.mean = float(values.mean())
            self.mean_sq = float((values ** 2).mean())
            self.primed = True
            return
        m = self.momentum
        self.mean = (1 - m) * self.mean + m * float(values.mean())
        self.mean_sq = (1 - m) * self.mean_sq + m * float((values ** 2).mean())

    def normalize(self, values: np.ndarray) -> np.ndarray:
        return (values - self.mean) / self.std

    def denormalize(self, values: np.ndarray) -> np.ndarray:
        return values * self.std + self.mean


@dataclass
class TrainingResult:
    agent: DefenseAgent
    episode_rewards: list[float] = field(default_factory=list)
    env_steps: int = 0
    learn_steps: int = 0


def _masked_max(q: np.ndarray, mask: np.ndarray) -> np.ndarray:
    return np.where(mask, q, -np.inf).max(axis=1)


def train_agent(agent_type: str, triple: TrainingScenarioTriple,
                hyperparams: Hyperparams = Hyperparams(), seed: int = 0,
                capacity: int = DEFAULT_CAPACITY) -> TrainingResult:
    """Separated pre-training of one agent type in its dedicated scenario.

    Runs an episode loop of epsilon-greedy interaction feeding a replay
    buffer, with minibatch temporal-difference updates against a
    periodically synced target network.  Deterministic given (seed,
    hyperparams, triple).  A zero-episode budget returns the untrained
    network with an empty curve.
    """
    rng = np.random.default_rng(seed)
    agent = DefenseAgent.create(agent_type, capacity=capacity,
                                hidden=hyperparams.hidden_units, rng=rng)
    target = ValueNetwork(agent.network.input_dim, agent.network.output_dim,
                          hidden=hyperparams.hidden_units)
    target.copy_from(agent.network)
    optimizer = Adam(lr=hyperparams.learning_rate,
                     weight_decay=hyperparams.weight_decay)
    buffer = ReplayBuffer(hyperparams.buffer_capacity)
    normalizer = (TargetNormalizer() if hyperparams.normalize_targets
                  else None)
    result = TrainingResult(agent=agent)

    for _ in range(hyperparams.episodes):
        state = triple.reset(rng)
        attackers = make_attackers(triple.attacker_count, triple.attacker_skill,
                                   triple.attack_policy)
        if triple.seed_footholds is not None:
            triple.seed_footholds(state, attackers, rng)
        episode_reward = 0.0
        done = False
        while not done:
            local = agent.observe(state, triple.subnet)
            epsilon = epsilon_schedule(result.env_steps,
                                       start=hyperparams.epsilon_start,
                                       decay_steps=hyperparams.epsilon_decay_steps)
            index = agent.select_index(local, epsilon, rng)
            operation, node = local.decode(index)
            action = NOOP if operation == "NoOp" else AtomicAction(operation, node)
            outcome = env_step(state, [action], attackers, triple.weights, rng,
                               max_steps=triple.max_steps,
                               hvn_terminal=triple.hvn_terminal)
            reward = specialized_reward(agent_type, state, action,
                                        outcome.next_state, triple.weights,
                                        triple.reward_config)
            done = outcome.terminal or triple.terminate(outcome.next_state)
            next_local = agent.observe(outcome.next_state, triple.subnet)
            buffer.append(local.vector, index, reward, next_local.vector, done,
                          next_local.action_mask())
            state = outcome.next_state
            episode_reward += reward
            result.env_steps += 1

            if (len(buffer) >= hyperparams.batch_size
                    and result.env_steps % hyperparams.learn_every == 0):
                _learn_step(agent, target, optimizer, buffer, hyperparams, rng,
                            result, normalizer)
        result.episode_rewards.append(episode_reward)
    return result


def _learn_step(agent: DefenseAgent, target: ValueNetwork, optimizer: Adam,
                buffer: ReplayBuffer, hp: Hyperparams,
                rng: np.random.Generator, result: TrainingResult,
                normalizer: Optional[TargetNormalizer] = None) -> None:
    obs, actions, rewards, next_obs, dones, next_masks = buffer.sample(
        hp.batch_size, rng)
    bootstrap = _masked_max(target.forward(next_obs), next_masks)
    if normalizer is not None:
        # the target net predicts normalized values; the Bellman sum must
        # happen in reward units, then return to normalized space
        bootstrap = normalizer.denormalize(bootstrap)
    targets = rewards + hp.gamma * bootstrap * ~dones
    if normalizer is not None:
        normalizer.update(targets)
        targets = normalizer.normalize(targets)
    x, h1, h2, q = agent.network.forward_cached(obs)
    rows = np.arange(hp.batch_size)
    error = q[rows, actions] - targets
    loss = float(np.mean(error ** 2))
    if not np.isfinite(loss):
        raise TrainingDiverged(
            f"non-finite loss at learn step {result.learn_steps}: {loss}")
    dout = np.zeros_like(q)
    dout[rows, actions] = 2.0 * error / hp.batch_size
    optimizer.step(agent.network, agent.network.gradients(x, h1, h2, dout))
    result.learn_steps += 1
    if result.learn_steps % hp.target_update_interval == 0:
        target.copy_from(agent.network)


def evaluate_agent(agent: DefenseAgent, triple: TrainingScenarioTriple,
                   episodes: int, seed: int = 0,
                   policy: str = "greedy") -> np.ndarray:
    """Per-episode shaped returns under a frozen policy.

    ``policy`` is "greedy" (value-network argmax) or "random" (uniform over
    valid actions).  Episode i draws its randomness from seed + i, so two
    policies evaluated with the same seed see paired scenarios.
    """
    if policy not in ("greedy", "random"):
        raise ValueError(f"unknown policy {policy!r}")
    returns = np.zeros(episodes)
    for episode in range(episodes):
        rng = np.random.default_rng(seed + episode)
        state = triple.reset(rng)
        attackers = make_attackers(triple.attacker_count, triple.attacker_skill,
                                   triple.attack_policy)
        if triple.seed_footholds is not None:
            triple.seed_footholds(state, attackers, rng)
        total = 0.0
        done = False
        while not done:
            local = agent.observe(state, triple.subnet)
            if policy == "random":
                valid = np.flatnonzero(local.action_mask())
                index = int(valid[rng.integers(0, valid.size)])
            else:
                index = agent.select_index(local, 0.0)
            operation, node = local.decode(index)
            action = NOOP if operation == "NoOp" else AtomicAction(operation, node)
            outcome = env_step(state, [action], attackers, triple.weights, rng,
                               max_steps=triple.max_steps,
                               hvn_terminal=triple.hvn_terminal)
            total += specialized_reward(agent.agent_type, state, action,
                                        outcome.next_state, triple.weights,
                                        triple.reward_config)
            done = outcome.terminal or triple.terminate(outcome.next_state)
            state = outcome.next_state
        returns[episode] = total
    return returns
