"""Attacker modeling: skill, footholds, target selection, attack resolution.

Each attacker holds an independent foothold set and attempts one target per
step.  Success probability depends on the attacker's skill and the target's
vulnerability; only successful attempts change state.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .netmodel import GlobalState, hvn_distance_map, neighbors, UNREACHABLE

POLICIES = ("recon", "penetrate", "impact")

# serialized source value for attacks launched from outside the network
EXTERNAL = "external"


@dataclass
class Attacker:
    """One adversary; ``footholds`` grows in place as attacks land."""

    id: int
    skill: float
    policy: str
    footholds: set[int] = field(default_factory=set)

    def __post_init__(self) -> None:
        if not 0.0 <= self.skill <= 1.0:
            raise ValueError(f"skill {self.skill} outside [0, 1]")
        if self.policy not in POLICIES:
            raise ValueError(f"unknown policy {self.policy!r}")


@dataclass(frozen=True)
class AttackEvent:
    attacker: int
    source: Optional[int]  # None = launched from outside via an entry node
    target: int
    success: bool
    time: int

    def to_dict(self) -> dict:
        return {
            "attacker": self.attacker,
            "source": EXTERNAL if self.source is None else self.source,
            "target": self.target,
            "success": self.success,
            "time": self.time,
        }

    @staticmethod
    def from_dict(data: dict) -> "AttackEvent":
        src = data["source"]
        return AttackEvent(
            attacker=data["attacker"],
            source=None if src == EXTERNAL else src,
            target=data["target"],
            success=data["success"],
            time=data["time"],
        )


def attack_success_probability(skill: float, target_vulnerability: float) -> float:
    """min(RS^2 / (RS + (1 - vuln)), 1); zero skill can never succeed."""
    if not 0.0 <= skill <= 1.0:
        raise ValueError(f"skill {skill} outside [0, 1]")
    if not 0.0 <= target_vulnerability <= 1.0:
        raise ValueError(f"vulnerability {target_vulnerability} outside [0, 1]")
    if skill == 0.0:
        return 0.0
    return min(skill * skill / (skill + (1.0 - target_vulnerability)), 1.0)


def visible_targets(state: GlobalState, attacker: Attacker) -> set[int]:
    """Attack surface: outside-reachable entries plus foothold neighbors."""
    targets: set[int] = set()
    for n in state.entry_nodes():
        st = state.nodes[n]
        if not st.isolated and n not in attacker.footholds:
            targets.add(n)
    for fh in attacker.footholds:
        for m in neighbors(state, fh):
            if not state.nodes[m].compromised:
                targets.add(m)
    return targets


def select_target(state: GlobalState, attacker: Attacker,
                  rng: np.random.Generator) -> Optional[int]:
    """Pick one target under the attacker's policy; None if nothing visible."""
    visible = sorted(visible_targets(state, attacker))
    if not visible:
        return None
    if attacker.policy == "recon":
        return visible[int(rng.integers(0, len(visible)))]
    if attacker.policy == "penetrate":
        # ties broken by lowest id via the sort order
        return max(visible, key=lambda n: (state.nodes[n].vulnerability, -n))
    dist = hvn_distance_map(state)

    def impact_key(n: int):
        d = dist[n]
        hops = float("inf") if d is UNREACHABLE else d
        return (hops, -state.nodes[n].vulnerability, n)

    return min(visible, key=impact_key)


def _event_source(state: GlobalState, attacker: Attacker, target: int) -> Optional[int]:
    # prefer a foothold launch point when one is adjacent; else external
    launch = [fh for fh in attacker.footholds if target in neighbors(state, fh)]
    return min(launch) if launch else None


def attackers_step(state: GlobalState, attackers: list[Attacker],
                   rng: np.random.Generator) -> tuple[GlobalState, list[AttackEvent]]:
    """One attack round: every attacker, in id order, attempts one target.

    Later attackers see state changes made by earlier ones.  Footholds are
    first pruned to the current compromised set (defender resets revoke
    access), then extended by this round's successes.  Attacker objects are
    updated in place.
    """
    events: list[AttackEvent] = []
    for attacker in sorted(attackers, key=lambda a: a.id):
        compromised = set(state.compromised_nodes())
        attacker.footholds &= compromised
        target = select_target(state, attacker, rng)
        if target is None:
            continue
        source = _event_source(state, attacker, target)
        prob = attack_success_probability(attacker.skill,
                                          state.nodes[target].vulnerability)
        success = bool(rng.random() < prob)
        if success:
            state = state.with_node(target, compromised=True)
            attacker.footholds.add(target)
        events.append(AttackEvent(attacker=attacker.id, source=source,
                                  target=target, success=success, time=state.time))
    return state, events


def make_attackers(count: int, skill: float, policy: str) -> list[Attacker]:
    return [Attacker(id=i, skill=skill, policy=policy) for i in range(count)]
