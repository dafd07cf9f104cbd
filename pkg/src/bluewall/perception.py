"""Semantic situation awareness: per-subnet metrics and the text observation.

Numeric network state is condensed into per-subnet metrics, then rendered
through a fixed template into a natural-language report ordered by the
Identify / Protect / Detect / Respond / Recover phases.  Rendering is
deterministic: identical inputs produce identical strings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union

from .attack import AttackEvent
from .netmodel import GlobalState, UNREACHABLE, hvn_distance_map

DEFAULT_WINDOW = 10

INSTRUCTION_HEADER = "=== HUMAN OPERATOR INSTRUCTION ==="
INSTRUCTION_FOOTER = "=== END OF INSTRUCTION ==="


class TemplateError(ValueError):
    """Raised when the observation template cannot be filled."""


@dataclass(frozen=True)
class SubnetMetrics:
    entry_count: int
    avg_vulnerability: float
    compromised_count: int
    isolated_count: int
    attack_frequency: float
    critical_distance: object  # hop count or UNREACHABLE
    penetration_speed: float
    penetration_known: bool
    connectivity: float
    hvn_count: int


@dataclass(frozen=True)
class PerceptionReport:
    per_subnet: Mapping[str, SubnetMetrics]
    attack_entropy: float
    rendered_text: str


def attack_entropy(events: Sequence[AttackEvent], window: int,
                   subnet_of: Sequence[str], now: Optional[int] = None) -> float:
    """Entropy of the attack-attempt distribution over subnets in the window.

    All attempts count, successful or not.  No attempts in the window means
    zero entropy by convention.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    recent = _window_events(events, window, now)
    if not recent:
        return 0.0
    counts: dict[str, int] = {}
    for event in recent:
        counts[subnet_of[event.target]] = counts.get(subnet_of[event.target], 0) + 1
    total = sum(counts.values())
    return -sum((c / total) * math.log(c / total) for c in counts.values())


def _window_events(events: Sequence[AttackEvent], window: int,
                   now: Optional[int]) -> list[AttackEvent]:
    if now is None:
        if not events:
            return []
        now = max(e.time for e in events) + 1
    return [e for e in events if now - window <= e.time < now]


def critical_distance(state: GlobalState, subnet: str):
    """Min hops from any compromised node of the subnet to an HVN."""
    if subnet not in state.graph.subnet_names:
        raise KeyError(f"unknown subnet {subnet!r}")
    dist = hvn_distance_map(state)
    best = None
    for n in state.graph.subnet_nodes(subnet):
        if state.nodes[n].compromised and dist[n] is not UNREACHABLE:
            if best is None or dist[n] < best:
                best = dist[n]
    return UNREACHABLE if best is None else best


def penetration_speed(prev_distance, curr_distance) -> tuple[float, bool]:
    """Signed approach rate D_prev - D_curr; undefined around Unreachable."""
    if prev_distance is UNREACHABLE or curr_distance is UNREACHABLE \
            or prev_distance is None or curr_distance is None:
        return 0.0, False
    return float(prev_distance - curr_distance), True


def connectivity(state: GlobalState, subnet: str) -> float:
    """Active intra-subnet edge fraction; isolation removes edges."""
    members = state.graph.subnet_nodes(subnet)
    if not members:
        raise KeyError(f"unknown subnet {subnet!r}")
    size = len(members)
    if size == 1:
        return 1.0
    member_set = set(members)
    active = sum(
        1 for a, b in state.graph.edges
        if a in member_set and b in member_set
        and not state.nodes[a].isolated and not state.nodes[b].isolated
    )
    return active / (size * (size - 1) / 2)


def compute_metrics(state: GlobalState, events: Sequence[AttackEvent],
                    window: int = DEFAULT_WINDOW,
                    prev_distances: Optional[Mapping[str, object]] = None,
                    ) -> tuple[dict[str, SubnetMetrics], float]:
    """All per-subnet metrics plus the global attack entropy."""
    dist = hvn_distance_map(state)
    recent = _window_events(events, window, state.time)
    per_subnet: dict[str, SubnetMetrics] = {}
    for name in state.graph.subnet_names:
        members = state.graph.subnet_nodes(name)
        states = [state.nodes[n] for n in members]
        best = None
        for n in members:
            if state.nodes[n].compromised and dist[n] is not UNREACHABLE:
                if best is None or dist[n] < best:
                    best = dist[n]
        curr = UNREACHABLE if best is None else best
        prev = (prev_distances or {}).get(name)
        speed, known = penetration_speed(prev, curr)
        hits = sum(1 for e in recent if state.graph.subnet_of[e.target] == name)
        per_subnet[name] = SubnetMetrics(
            entry_count=sum(1 for s in states if s.is_entry),
            avg_vulnerability=sum(s.vulnerability for s in states) / len(states),
            compromised_count=sum(1 for s in states if s.compromised),
            isolated_count=sum(1 for s in states if s.isolated),
            attack_frequency=hits / window,
            critical_distance=curr,
            penetration_speed=speed,
            penetration_known=known,
            connectivity=connectivity(state, name),
            hvn_count=sum(1 for s in states if s.is_hvn),
        )
    entropy = attack_entropy(events, window, state.graph.subnet_of, now=state.time)
    return per_subnet, entropy


def load_template(path: Optional[Union[str, Path]] = None) -> str:
    if path is None:
        return (resources.files("bluewall") / "templates"
                / "observation_v1.txt").read_text()
    return Path(path).read_text()


def _fmt(value: float) -> str:
    return format(value, ".6g")


def render_observation(state: GlobalState,
                       per_subnet: Mapping[str, SubnetMetrics],
                       entropy: float,
                       memory_digest: str = "",
                       instruction: Optional[str] = None,
                       template: Optional[str] = None,
                       window: int = DEFAULT_WINDOW) -> PerceptionReport:
    """Fill the observation template; the instruction passes through verbatim."""
    text = template if template is not None else load_template()
    if "%% SUBNET BLOCK %%" not in text:
        raise TemplateError("template lacks the %% SUBNET BLOCK %% divider")
    doc_tpl, subnet_tpl = text.split("%% SUBNET BLOCK %%", 1)
    subnet_tpl = subnet_tpl.lstrip("\n")

    sections = []
    for name in state.graph.subnet_names:
        if name not in state.context:
            raise TemplateError(f"missing context block set for subnet {name!r}")
        ctx = state.context[name]
        m = per_subnet[name]
        speed = _fmt(m.penetration_speed) if m.penetration_known else "n/a"
        cd = ("Unreachable" if m.critical_distance is UNREACHABLE
              else str(m.critical_distance))
        try:
            sections.append(subnet_tpl.format(
                name=name,
                exposure=ctx.exposure,
                vulnerability_profile=ctx.vulnerability_profile,
                assets=ctx.assets,
                service_continuity=ctx.service_continuity,
                entry_count=m.entry_count,
                avg_vulnerability=_fmt(m.avg_vulnerability),
                compromised_count=m.compromised_count,
                attack_frequency=_fmt(m.attack_frequency),
                hvn_count=m.hvn_count,
                critical_distance=cd,
                penetration_speed=speed,
                isolated_count=m.isolated_count,
                connectivity=_fmt(m.connectivity),
                window=window,
            ))
        except KeyError as exc:
            raise TemplateError(f"template references unknown field {exc}") from exc

    if instruction is not None:
        instruction_section = (f"{INSTRUCTION_HEADER}\n{instruction}\n"
                               f"{INSTRUCTION_FOOTER}\n")
    else:
        instruction_section = ""
    try:
        rendered = doc_tpl.format(
            time=state.time,
            node_count=state.graph.node_count,
            subnet_count=len(state.graph.subnet_names),
            total_compromised=len(state.compromised_nodes()),
            total_isolated=sum(1 for s in state.nodes if s.isolated),
            window=window,
            attack_entropy=_fmt(entropy),
            subnet_sections="\n".join(sections),
            memory_digest=memory_digest or "No attack-chain prediction available.",
            instruction_section=instruction_section,
        )
    except KeyError as exc:
        raise TemplateError(f"template references unknown field {exc}") from exc
    return PerceptionReport(per_subnet=dict(per_subnet), attack_entropy=entropy,
                            rendered_text=rendered)


def perceive(state: GlobalState, events: Sequence[AttackEvent],
             memory_digest: str = "", window: int = DEFAULT_WINDOW,
             prev_distances: Optional[Mapping[str, object]] = None,
             template: Optional[str] = None) -> PerceptionReport:
    """One-call pipeline: metrics then rendering, instruction from state."""
    per_subnet, entropy = compute_metrics(state, events, window=window,
                                          prev_distances=prev_distances)
    return render_observation(state, per_subnet, entropy,
                              memory_digest=memory_digest,
                              instruction=state.human_instruction,
                              template=template, window=window)
