"""Attack-chain memory: one-cycle short-term context plus long-term chains.

Long-term memory groups successful attacks into per-subnet chains keyed on
the launch point: an attack launched from a chain's tail extends that
chain, one launched from a mid-chain node forks a branch sharing the
prefix.  When attackers close within a distance threshold of a high-value
node, similar historical chains are retrieved and their continuations are
vote-merged into a prediction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Any, Optional, Sequence

from .attack import AttackEvent
from .netmodel import UNREACHABLE

DEFAULT_THETA = 3
DEFAULT_TOP_K = 3


@dataclass(frozen=True)
class ShortTermMemory:
    """Exactly one decision cycle of context."""

    prev_action: Optional[Any] = None
    prev_observation: Optional[str] = None
    current_state_digest: Optional[str] = None


def stm_update(stm: ShortTermMemory, executed_action: Any,
               observation_text: str, state_digest: str) -> ShortTermMemory:
    """Replace all three slots; history never accumulates."""
    del stm
    return ShortTermMemory(prev_action=executed_action,
                           prev_observation=observation_text,
                           current_state_digest=state_digest)


@dataclass(frozen=True)
class Hop:
    target: int
    time: int


@dataclass
class AttackChain:
    """One movement path inside a subnet.

    ``prefix`` is borrowed from a parent chain when this chain forked off a
    mid-chain node; only ``hops`` are owned by this chain, which keeps each
    recorded event in exactly one chain.
    """

    subnet: str
    hops: list[Hop]
    prefix: tuple[Hop, ...] = ()
    episode: int = 0

    @property
    def sequence(self) -> tuple[Hop, ...]:
        return self.prefix + tuple(self.hops)

    @property
    def node_sequence(self) -> tuple[int, ...]:
        return tuple(h.target for h in self.sequence)

    @property
    def tail(self) -> int:
        return self.sequence[-1].target

    @property
    def last_time(self) -> int:
        return self.sequence[-1].time

    def check(self) -> None:
        seq = self.sequence
        if not seq:
            raise ValueError("chain cannot be empty")
        for a, b in zip(seq, seq[1:]):
            if b.time <= a.time:
                raise ValueError("hop times must strictly increase")


@dataclass
class LongTermMemory:
    """Single-writer store of attack chains with episode markers."""

    chains: list[AttackChain] = field(default_factory=list)
    episode: int = 0
    events_recorded: int = 0

    def mark_episode_boundary(self) -> None:
        self.episode += 1

    def owned_hop_count(self) -> int:
        return sum(len(c.hops) for c in self.chains)


def ltm_record(ltm: LongTermMemory, event: AttackEvent, subnet_of: Sequence[str],
               ) -> LongTermMemory:
    """Fold one successful attack into the chain store, in place.

    Linkage rules, checked in order against chains of the target's subnet:
    tail match extends the most recently active matching chain; a mid-chain
    match forks a branch sharing the prefix up to the source; anything else
    (external source, unknown source, cross-subnet hop) opens a new chain.
    """
    if not event.success:
        raise ValueError("only successful attacks are recorded")
    subnet = subnet_of[event.target]
    hop = Hop(target=event.target, time=event.time)

    candidates = ([] if event.source is None else
                  [(i, c) for i, c in enumerate(ltm.chains) if c.subnet == subnet])
    tail_matches = [(i, c) for i, c in candidates
                    if c.tail == event.source and c.last_time < event.time]
    if tail_matches:
        _, chain = max(tail_matches, key=lambda t: (t[1].last_time, t[0]))
        chain.hops.append(hop)
    else:
        mid_matches = []
        for i, c in candidates:
            seq = c.sequence
            positions = [j for j, h in enumerate(seq)
                         if h.target == event.source and h.time < event.time]
            if positions:
                mid_matches.append((i, c, positions[-1]))
        if mid_matches:
            _, parent, pos = max(mid_matches,
                                 key=lambda t: (t[1].last_time, t[0]))
            ltm.chains.append(AttackChain(subnet=subnet, hops=[hop],
                                          prefix=parent.sequence[: pos + 1],
                                          episode=ltm.episode))
        else:
            ltm.chains.append(AttackChain(subnet=subnet, hops=[hop],
                                          episode=ltm.episode))
    ltm.events_recorded += 1
    return ltm


def _lcs_len(a: Sequence[int], b: Sequence[int]) -> int:
    # bit-parallel row updates; retrieval scores every stored chain, so the
    # classic quadratic table is too slow once the store grows
    if not a or not b:
        return 0
    masks: dict[int, int] = {}
    for j, sym in enumerate(b):
        masks[sym] = masks.get(sym, 0) | (1 << j)
    full = (1 << len(b)) - 1
    row = 0
    for sym in a:
        matched = row | masks.get(sym, 0)
        carried = (matched - ((row << 1) | 1)) & full
        row = matched & ~carried & full
    return row.bit_count()


def chain_similarity(a: AttackChain, b: AttackChain) -> float:
    """Normalized longest-common-subsequence over node ids; 0 across subnets."""
    if a.subnet != b.subnet:
        return 0.0
    sa, sb = a.node_sequence, b.node_sequence
    if not sa or not sb:
        return 0.0
    return _lcs_len(sa, sb) / max(len(sa), len(sb))


def _aligned_continuation(stored: AttackChain,
                          current: AttackChain) -> tuple[int, ...]:
    """Remaining nodes of ``stored`` after its last node matched by ``current``."""
    seq = stored.node_sequence
    cur = set(current.node_sequence)
    last = -1
    for j, node in enumerate(seq):
        if node in cur:
            last = j
    return seq[last + 1:] if last >= 0 else ()


@dataclass(frozen=True)
class ChainPrediction:
    predicted_next_nodes: tuple[int, ...] = ()
    source_chains: tuple[int, ...] = ()
    match_score: float = 0.0

    @property
    def empty(self) -> bool:
        return not self.predicted_next_nodes


def reactive_retrieve(ltm: LongTermMemory, current_chain: AttackChain,
                      critical_distance, theta: int = DEFAULT_THETA,
                      k: int = DEFAULT_TOP_K,
                      min_score: Optional[float] = None) -> ChainPrediction:
    """Predict the attacker's continuation once they close within ``theta``.

    Fires only when critical_distance < theta (Unreachable never fires).
    Stored chains are ranked by similarity to the current chain (ties:
    more recently active first); the top-k vote, weighted by similarity,
    on the first node of their aligned continuations.  The winning vote's
    best-matching chain supplies the full predicted path.
    """
    if theta < 0 or k < 1:
        raise ValueError("theta must be >= 0 and k >= 1")
    if critical_distance is UNREACHABLE or critical_distance is None \
            or critical_distance >= theta:
        return ChainPrediction()
    scored = []
    for idx, chain in enumerate(ltm.chains):
        if chain is current_chain:
            continue
        score = chain_similarity(current_chain, chain)
        if min_score is not None and score < min_score:
            continue
        scored.append((score, chain.last_time, idx, chain))
    if not scored:
        return ChainPrediction()
    scored.sort(key=lambda t: (-t[0], -t[1], -t[2]))
    top = scored[:k]

    votes: dict[int, float] = {}
    backing: dict[int, tuple[float, int, tuple[int, ...]]] = {}
    used: list[int] = []
    for score, _, idx, chain in top:
        continuation = _aligned_continuation(chain, current_chain)
        if not continuation or score <= 0.0:
            continue
        head = continuation[0]
        votes[head] = votes.get(head, 0.0) + score
        used.append(idx)
        if head not in backing or score > backing[head][0]:
            backing[head] = (score, idx, continuation)
    if not votes:
        return ChainPrediction()
    winner = max(votes, key=lambda node: (votes[node], backing[node][0], -node))
    score, idx, continuation = backing[winner]
    return ChainPrediction(predicted_next_nodes=continuation,
                           source_chains=tuple(used), match_score=score)


def prediction_digest(prediction: ChainPrediction) -> str:
    """Render a prediction for inclusion in the text observation."""
    if prediction.empty:
        return ""
    path = " -> ".join(f"node {n}" for n in prediction.predicted_next_nodes)
    return (f"Attackers are likely to continue toward: {path} "
            f"(match score {prediction.match_score:.2f}).")


def active_chain(ltm: LongTermMemory) -> Optional[AttackChain]:
    """The most recently extended chain, if any."""
    if not ltm.chains:
        return None
    _, chain = max(enumerate(ltm.chains), key=lambda t: (t[1].last_time, t[0]))
    return chain


def ltm_to_json(ltm: LongTermMemory) -> str:
    doc = {
        "episode": ltm.episode,
        "events_recorded": ltm.events_recorded,
        "chains": [
            {
                "subnet": c.subnet,
                "episode": c.episode,
                "prefix": [[h.target, h.time] for h in c.prefix],
                "hops": [[h.target, h.time] for h in c.hops],
            }
            for c in ltm.chains
        ],
    }
    return json.dumps(doc, sort_keys=True)


def ltm_from_json(text: str) -> LongTermMemory:
    doc = json.loads(text)
    chains = [
        AttackChain(
            subnet=c["subnet"],
            episode=c.get("episode", 0),
            prefix=tuple(Hop(target=t, time=ts) for t, ts in c["prefix"]),
            hops=[Hop(target=t, time=ts) for t, ts in c["hops"]],
        )
        for c in doc["chains"]
    ]
    return LongTermMemory(chains=chains, episode=doc["episode"],
                          events_recorded=doc["events_recorded"])
