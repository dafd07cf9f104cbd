"""Fixed-capacity localized observations for the four defense agent types.

Each agent sees only its assigned subnet, encoded into a fixed-length
vector so the network input never depends on global network size: the
per-type node features (slot-padded to capacity, feature-major order,
nodes sorted by id) followed by the flattened local adjacency matrix.
Isolation severs adjacency entries.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..netmodel import GlobalState

DEFAULT_CAPACITY = 30

AGENT_TYPES = ("Fortify", "Recover", "Purge", "Block")

OPERATION_SETS = {
    "Fortify": ("Patch",),
    "Recover": ("Restore",),
    "Purge": ("Reset", "Patch"),
    "Block": ("Isolate",),
}

# per-node features by type; "compromised" is the health flag (1 = bad)
FEATURE_SETS = {
    "Fortify": ("vulnerability", "compromised", "is_hvn"),
    "Recover": ("isolated", "compromised", "is_hvn"),
    "Purge": ("compromised", "vulnerability", "is_hvn"),
    "Block": ("compromised", "is_hvn"),
}


class CapacityError(ValueError):
    """Subnet larger than the agent's slot capacity."""


@dataclass(frozen=True)
class LocalObservation:
    agent_type: str
    subnet: str
    capacity: int
    node_ids: tuple[int, ...]  # slot -> NodeId for the real slots
    vector: np.ndarray         # float64, length = F*capacity + capacity^2
    mask: np.ndarray           # bool per slot, True = real node

    @property
    def n_operations(self) -> int:
        return len(OPERATION_SETS[self.agent_type])

    @property
    def action_space(self) -> int:
        return self.n_operations * self.capacity + 1

    def action_mask(self) -> np.ndarray:
        """Valid action indices: real slots per operation, NoOp always last."""
        valid = np.zeros(self.action_space, dtype=bool)
        for op_idx in range(self.n_operations):
            base = op_idx * self.capacity
            valid[base: base + self.capacity] = self.mask
        valid[-1] = True
        return valid

    def decode(self, action_index: int):
        """Map a flat action index to (operation, NodeId); NoOp -> (NoOp, None)."""
        if not 0 <= action_index < self.action_space:
            raise IndexError(f"action index {action_index} outside space")
        if action_index == self.action_space - 1:
            return "NoOp", None
        op_idx, slot = divmod(action_index, self.capacity)
        if not self.mask[slot]:
            raise IndexError(f"action index {action_index} targets a padded slot")
        return OPERATION_SETS[self.agent_type][op_idx], self.node_ids[slot]


def observation_dim(agent_type: str, capacity: int = DEFAULT_CAPACITY) -> int:
    return len(FEATURE_SETS[agent_type]) * capacity + capacity * capacity


def action_dim(agent_type: str, capacity: int = DEFAULT_CAPACITY) -> int:
    return len(OPERATION_SETS[agent_type]) * capacity + 1


def project_observation(state: GlobalState, subnet: str, agent_type: str,
                        capacity: int = DEFAULT_CAPACITY) -> LocalObservation:
    if agent_type not in FEATURE_SETS:
        raise ValueError(f"unknown agent type {agent_type!r}")
    members = state.graph.subnet_nodes(subnet)
    if not members:
        raise KeyError(f"unknown subnet {subnet!r}")
    if len(members) > capacity:
        raise CapacityError(
            f"subnet {subnet!r} has {len(members)} nodes; needs capacity >= "
            f"{len(members)}, agent has {capacity}")

    features = FEATURE_SETS[agent_type]
    vector = np.zeros(observation_dim(agent_type, capacity))
    for f_idx, feature in enumerate(features):
        base = f_idx * capacity
        for slot, n in enumerate(members):
            vector[base + slot] = float(getattr(state.nodes[n], feature))

    adj_base = len(features) * capacity
    slot_of = {n: i for i, n in enumerate(members)}
    for a, b in state.graph.edges:
        if a in slot_of and b in slot_of:
            if not state.nodes[a].isolated and not state.nodes[b].isolated:
                i, j = slot_of[a], slot_of[b]
                vector[adj_base + i * capacity + j] = 1.0
                vector[adj_base + j * capacity + i] = 1.0

    mask = np.zeros(capacity, dtype=bool)
    mask[: len(members)] = True
    return LocalObservation(agent_type=agent_type, subnet=subnet,
                            capacity=capacity, node_ids=tuple(members),
                            vector=vector, mask=mask)
