"""Tactical planning layer above the specialized agents.

One reasoning/acting exchange happens per environment step: the planner
composes a text observation (perception report, memory prediction,
previous-cycle context, tool catalog), asks a pluggable backend for a
proposal, validates the proposed tool calls against the live state and an
action budget, executes what survives, and appends an audit entry.  The
scripted backend is a deterministic rule table so everything runs offline;
the remote backend speaks the common chat-completion wire format.
"""

from __future__ import annotations

import json
import re
import urllib.error
import urllib.request
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Mapping, Optional, Protocol, Sequence, Union

from .agents.obs import AGENT_TYPES
from .env import NOOP, OPERATIONS, AtomicAction
from .memory import (DEFAULT_THETA, LongTermMemory, ShortTermMemory,
                     active_chain, prediction_digest, reactive_retrieve)
from .netmodel import GlobalState, UNREACHABLE
from .perception import PerceptionReport, critical_distance, render_observation

DEFAULT_BUDGET = 4


# ---------------------------------------------------------------------------
# tactical actions

@dataclass(frozen=True)
class ExecuteAction:
    """Direct atomic operation requested by the planner."""

    operation: str
    target: int


@dataclass(frozen=True)
class AssignAgent:
    """Dispatch one pre-trained agent type to a subnet for this step."""

    agent_type: str
    subnet: str


@dataclass(frozen=True)
class TacticalNoOp:
    """Deliberate idle step."""


TacticalAction = Union[ExecuteAction, AssignAgent, TacticalNoOp]


def tactical_to_dict(action: TacticalAction) -> dict:
    if isinstance(action, ExecuteAction):
        return {"kind": "execute", "operation": action.operation,
                "target": action.target}
    if isinstance(action, AssignAgent):
        return {"kind": "assign", "agent_type": action.agent_type,
                "subnet": action.subnet}
    if isinstance(action, TacticalNoOp):
        return {"kind": "noop"}
    raise TypeError(f"not a tactical action: {action!r}")


def tactical_from_dict(data: Mapping) -> TacticalAction:
    kind = data.get("kind")
    if kind == "execute":
        return ExecuteAction(data["operation"], data["target"])
    if kind == "assign":
        return AssignAgent(data["agent_type"], data["subnet"])
    if kind == "noop":
        return TacticalNoOp()
    raise ValueError(f"unknown tactical action kind {kind!r}")


# ---------------------------------------------------------------------------
# proposals and validation

@dataclass(frozen=True)
class PlannerProposal:
    reasoning_text: str
    actions: tuple[TacticalAction, ...] = ()
    backend_id: str = ""
    parse_failed: bool = False


@dataclass(frozen=True)
class Rejection:
    action: TacticalAction
    reason: str


REJECTION_REASONS = ("UnknownNode", "UnknownSubnet", "UnknownAgentType",
                     "UnknownOperation", "DuplicateAssignment", "OverBudget",
                     "MalformedAction")


@dataclass(frozen=True)
class ValidationResult:
    accepted: tuple[TacticalAction, ...]
    rejections: tuple[Rejection, ...]
    proposal_invalid: bool


def validate_proposal(proposal: PlannerProposal, state: GlobalState,
                      budget: int = DEFAULT_BUDGET) -> ValidationResult:
    """Screen a proposal against the live state and the action budget.

    Rejection is data, never an exception: each dropped action carries a
    machine-readable reason.  An unparseable proposal is invalid as a whole
    and contributes nothing.  NoOps pass through silently (they occupy no
    budget and execute nothing).
    """
    if budget < 0:
        raise ValueError("budget must be >= 0")
    if proposal.parse_failed:
        return ValidationResult((), (), True)
    accepted: list[TacticalAction] = []
    rejections: list[Rejection] = []
    assigned: set[tuple[str, str]] = set()
    for action in proposal.actions:
        if isinstance(action, TacticalNoOp):
            continue
        if isinstance(action, ExecuteAction):
            if action.operation not in OPERATIONS or action.operation == "NoOp":
                rejections.append(Rejection(action, "UnknownOperation"))
                continue
            if not isinstance(action.target, int) or isinstance(action.target, bool) \
                    or not 0 <= action.target < state.graph.node_count:
                rejections.append(Rejection(action, "UnknownNode"))
                continue
        elif isinstance(action, AssignAgent):
            if action.agent_type not in AGENT_TYPES:
                rejections.append(Rejection(action, "UnknownAgentType"))
                continue
            if action.subnet not in state.graph.subnet_names:
                rejections.append(Rejection(action, "UnknownSubnet"))
                continue
            if (action.agent_type, action.subnet) in assigned:
                rejections.append(Rejection(action, "DuplicateAssignment"))
                continue
        else:
            rejections.append(Rejection(action, "MalformedAction"))
            continue
        if len(accepted) >= budget:
            rejections.append(Rejection(action, "OverBudget"))
            continue
        accepted.append(action)
        if isinstance(action, AssignAgent):
            assigned.add((action.agent_type, action.subnet))
    return ValidationResult(tuple(accepted), tuple(rejections), False)


# ---------------------------------------------------------------------------
# backends

@dataclass(frozen=True)
class PlannerRequest:
    """Everything a backend may draw on for one cycle.

    Text fields carry the full prompt for language-model backends; the
    structured report is there so offline rule backends do not have to
    parse their own rendering back out of the text.
    """

    observation: str
    tool_catalog: str
    budget: int
    report: Optional[PerceptionReport] = None
    instruction: Optional[str] = None


class PlannerBackend(Protocol):
    backend_id: str

    def propose(self, request: PlannerRequest) -> PlannerProposal: ...


class BackendUnavailable(RuntimeError):
    """Transport-level backend failure (unreachable, timeout, HTTP error)."""


_PRIORITY_RE = re.compile(r"priorit", re.IGNORECASE)


def parse_priority_list(instruction: Optional[str],
                        subnets: Sequence[str]) -> list[str]:
    """Subnet names an instruction asks to prioritize, in mention order."""
    if not instruction or not _PRIORITY_RE.search(instruction):
        return []
    found = []
    for name in subnets:
        match = re.search(rf"\b{re.escape(name)}\b", instruction, re.IGNORECASE)
        if match:
            found.append((match.start(), name))
    return [name for _, name in sorted(found)]


@dataclass(frozen=True)
class ScriptedBackend:
    """Deterministic rule-table planner used offline and as the fallback.

    Per subnet, every matching rule fires: a compromise within
    ``theta_block`` hops of a high-value node calls for Block; any
    compromise calls for Purge; more than ``recover_threshold`` isolated
    nodes call for Recover, but never while a threat is that close.  If
    nothing fires anywhere, Fortify goes to the most vulnerable subnet.
    An operator priority instruction moves the named subnets to the front
    of the queue.
    """

    theta_block: int = DEFAULT_THETA
    recover_threshold: int = 0
    backend_id: str = "scripted"

    def propose(self, request: PlannerRequest) -> PlannerProposal:
        report = request.report
        if report is None:
            raise ValueError("scripted backend requires the structured report")
        order = list(report.per_subnet)
        prioritized = parse_priority_list(request.instruction, order)
        rank_of = {name: prioritized.index(name) if name in prioritized
                   else len(prioritized) + order.index(name) for name in order}

        reasons: list[str] = []
        if prioritized:
            reasons.append("Operator priority in effect: "
                           + ", ".join(prioritized) + ".")
        # every matching rule fires (a subnet can need Block AND Purge in the
        # same cycle); the sort puts containment ahead of cleanup
        picks: list[tuple[tuple[int, int, int], AssignAgent, str]] = []
        for name in order:
            metrics = report.per_subnet[name]
            cd = metrics.critical_distance
            imminent = cd is not UNREACHABLE and cd < self.theta_block
            matched: list[tuple[int, str, str]] = []
            if imminent:
                matched.append((0, "Block",
                                f"compromise {cd} hop(s) from a high-value "
                                f"node (threshold {self.theta_block})"))
            if metrics.compromised_count > 0:
                matched.append((1, "Purge",
                                f"{metrics.compromised_count} compromised "
                                f"node(s)"))
            if metrics.isolated_count > self.recover_threshold and not imminent:
                matched.append((2, "Recover",
                                f"{metrics.isolated_count} isolated node(s) "
                                f"exceed the recovery threshold "
                                f"{self.recover_threshold}"))
            group = 0 if name in prioritized else 1
            for rule, agent_type, why in matched:
                picks.append(((group, rule, rank_of[name]),
                              AssignAgent(agent_type, name), why))

        if not picks:
            target = max(order,
                         key=lambda n: (report.per_subnet[n].avg_vulnerability,
                                        -order.index(n)))
            avg = report.per_subnet[target].avg_vulnerability
            reasons.append(f"All subnets nominal; hardening {target} "
                           f"(highest average vulnerability {avg:.3f}).")
            actions: tuple[TacticalAction, ...] = (AssignAgent("Fortify", target),)
        else:
            picks.sort(key=lambda item: item[0])
            picks = picks[: max(request.budget, 0)]
            for _, action, why in picks:
                reasons.append(f"{action.subnet}: {why}; assigning "
                               f"{action.agent_type}.")
            actions = tuple(action for _, action, _ in picks)
        return PlannerProposal(reasoning_text=" ".join(reasons),
                               actions=actions, backend_id=self.backend_id)


_FENCE_RE = re.compile(r"```[^\n]*\n(.*?)```", re.DOTALL)


def parse_action_block(text: str) -> Optional[tuple[TacticalAction, ...]]:
    """Parse the fenced mini-grammar out of free text.

    Structural failures (no fence, unknown keyword, wrong arity, non-integer
    node) return None; semantic checks are the validator's job.
    """
    blocks = _FENCE_RE.findall(text or "")
    if not blocks:
        return None
    actions: list[TacticalAction] = []
    for line in blocks[-1].splitlines():
        line = line.strip()
        if not line:
            continue
        tokens = line.split()
        if tokens[0] == "NOOP" and len(tokens) == 1:
            actions.append(TacticalNoOp())
        elif tokens[0] == "ASSIGN" and len(tokens) >= 3:
            actions.append(AssignAgent(tokens[1], " ".join(tokens[2:])))
        elif tokens[0] == "EXEC" and len(tokens) == 3:
            try:
                node = int(tokens[2])
            except ValueError:
                return None
            actions.append(ExecuteAction(tokens[1], node))
        else:
            return None
    return tuple(actions)


@dataclass
class RemoteBackend:
    """Chat-completion client for a hosted reasoning model.

    Transport failures raise BackendUnavailable so the caller can fall back;
    a reachable endpoint that answers without a parseable action block
    yields a parse-failed proposal instead (counted, never executed).
    """

    endpoint: str
    model: str = "default"
    api_key: Optional[str] = None
    timeout: float = 30.0
    temperature: float = 0.0
    backend_id: str = "remote"

    def propose(self, request: PlannerRequest) -> PlannerProposal:
        payload = {
            "model": self.model,
            "temperature": self.temperature,
            "messages": [
                {"role": "system", "content": request.tool_catalog},
                {"role": "user", "content": request.observation},
            ],
        }
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        http_request = urllib.request.Request(
            self.endpoint, data=json.dumps(payload).encode(), headers=headers)
        try:
            with urllib.request.urlopen(http_request,
                                        timeout=self.timeout) as response:
                body = json.load(response)
        except (urllib.error.URLError, TimeoutError, OSError) as exc:
            raise BackendUnavailable(
                f"planner endpoint {self.endpoint} unreachable: {exc}") from exc
        except json.JSONDecodeError as exc:
            return PlannerProposal(
                reasoning_text=f"undecodable backend response: {exc}",
                backend_id=self.backend_id, parse_failed=True)
        try:
            content = body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError):
            return PlannerProposal(
                reasoning_text=f"backend response missing message content: "
                               f"{json.dumps(body)[:200]}",
                backend_id=self.backend_id, parse_failed=True)
        parsed = parse_action_block(content)
        if parsed is None:
            return PlannerProposal(reasoning_text=content,
                                   backend_id=self.backend_id,
                                   parse_failed=True)
        return PlannerProposal(reasoning_text=content, actions=parsed,
                               backend_id=self.backend_id)


def load_tool_catalog(budget: int, subnets: Sequence[str],
                      path: Optional[Union[str, Path]] = None) -> str:
    if path is None:
        raw = (resources.files("bluewall") / "templates"
               / "tool_catalog_v1.txt").read_text()
    else:
        raw = Path(path).read_text()
    return raw.format(budget=budget, subnets=", ".join(subnets))


# ---------------------------------------------------------------------------
# audit log

@dataclass(frozen=True)
class AuditEntry:
    """One decision cycle's full record."""

    step: int
    observation: str
    reasoning: str
    executed: tuple[TacticalAction, ...]
    atomic: tuple[AtomicAction, ...]
    rejected: tuple[Rejection, ...]
    instruction: Optional[str]
    backend_id: str
    proposal_invalid: bool = False
    fallback_used: bool = False

    def to_dict(self) -> dict:
        return {
            "step": self.step,
            "observation": self.observation,
            "reasoning": self.reasoning,
            "executed": [tactical_to_dict(a) for a in self.executed],
            "atomic": [a.to_dict() for a in self.atomic],
            "rejected": [{"action": tactical_to_dict(r.action),
                          "reason": r.reason} for r in self.rejected],
            "instruction": self.instruction,
            "backend_id": self.backend_id,
            "proposal_invalid": self.proposal_invalid,
            "fallback_used": self.fallback_used,
        }

    @staticmethod
    def from_dict(data: Mapping) -> "AuditEntry":
        return AuditEntry(
            step=data["step"],
            observation=data["observation"],
            reasoning=data["reasoning"],
            executed=tuple(tactical_from_dict(a) for a in data["executed"]),
            atomic=tuple(AtomicAction.from_dict(a) for a in data["atomic"]),
            rejected=tuple(Rejection(tactical_from_dict(r["action"]),
                                     r["reason"]) for r in data["rejected"]),
            instruction=data["instruction"],
            backend_id=data["backend_id"],
            proposal_invalid=data["proposal_invalid"],
            fallback_used=data["fallback_used"],
        )


def audit_append(path: Union[str, Path], entry: AuditEntry) -> None:
    with open(path, "a") as handle:
        handle.write(json.dumps(entry.to_dict(), sort_keys=True) + "\n")


@dataclass
class AuditReadResult:
    entries: list[AuditEntry]
    corrupt_lines: list[tuple[int, str]]  # 1-based line number, problem


def audit_read(path: Union[str, Path], start: int = 0) -> AuditReadResult:
    """Read the audit log; corrupt lines are reported, not fatal."""
    result = AuditReadResult(entries=[], corrupt_lines=[])
    with open(path) as handle:
        for lineno, line in enumerate(handle, 1):
            line = line.strip()
            if not line:
                continue
            try:
                result.entries.append(AuditEntry.from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError, TypeError,
                    ValueError) as exc:
                result.corrupt_lines.append((lineno, str(exc)))
    result.entries = result.entries[start:]
    return result


def proposal_invalidity_rate(entries: Sequence[AuditEntry]) -> float:
    """Fraction of cycles whose proposal was unusable; 0.0 on an empty log."""
    if not entries:
        return 0.0
    return sum(1 for e in entries if e.proposal_invalid) / len(entries)


# ---------------------------------------------------------------------------
# the decision cycle

class AgentExecutor(Protocol):
    """Anything that can act for an agent type on one subnet."""

    def act(self, state: GlobalState, subnet: str) -> AtomicAction: ...


@dataclass(frozen=True)
class ReactResult:
    actions: tuple[AtomicAction, ...]
    entry: AuditEntry
    proposal: PlannerProposal
    validation: ValidationResult


def memory_prediction_digest(state: GlobalState, ltm: LongTermMemory,
                             theta: int = DEFAULT_THETA) -> str:
    """Reactive-retrieval summary for the currently active attack chain."""
    chain = active_chain(ltm)
    if chain is None:
        return ""
    distance = critical_distance(state, chain.subnet)
    prediction = reactive_retrieve(ltm, chain, distance, theta=theta)
    return prediction_digest(prediction)


def react_cycle(state: GlobalState, report: PerceptionReport,
                stm: Optional[ShortTermMemory], ltm: LongTermMemory,
                backend: PlannerBackend,
                agents: Mapping[str, AgentExecutor],
                budget: int = DEFAULT_BUDGET,
                fallback: Optional[PlannerBackend] = None) -> ReactResult:
    """One observe/reason/act exchange.

    Composes the text observation (perception rendering with the memory
    prediction folded in, previous-cycle context, tool catalog), obtains a
    proposal, validates it, runs assigned agents greedily on their subnet,
    and returns the flat atomic action list plus the audit entry.  A
    transport failure of the backend falls back to the scripted rules for
    this cycle and is flagged.
    """
    digest = memory_prediction_digest(state, ltm)
    rendered = render_observation(state, report.per_subnet,
                                  report.attack_entropy, memory_digest=digest,
                                  instruction=state.human_instruction)
    observation = rendered.rendered_text
    if stm is not None and stm.prev_action is not None:
        observation += f"\nPrevious cycle executed: {stm.prev_action}\n"
    catalog = load_tool_catalog(budget, list(report.per_subnet))
    request = PlannerRequest(observation=observation + "\n" + catalog,
                             tool_catalog=catalog, budget=budget,
                             report=rendered,
                             instruction=state.human_instruction)
    fallback_used = False
    try:
        proposal = backend.propose(request)
    except BackendUnavailable:
        fallback_used = True
        proposal = (fallback or ScriptedBackend()).propose(request)

    validation = validate_proposal(proposal, state, budget)
    atomic: list[AtomicAction] = []
    for action in validation.accepted:
        if isinstance(action, ExecuteAction):
            atomic.append(AtomicAction(action.operation, action.target))
        else:
            executor = agents[action.agent_type]
            atomic.append(executor.act(state, action.subnet))

    entry = AuditEntry(
        step=state.time,
        observation=observation,
        reasoning=proposal.reasoning_text,
        executed=validation.accepted,
        atomic=tuple(atomic),
        rejected=validation.rejections,
        instruction=state.human_instruction,
        backend_id=proposal.backend_id,
        proposal_invalid=validation.proposal_invalid,
        fallback_used=fallback_used,
    )
    return ReactResult(actions=tuple(atomic), entry=entry, proposal=proposal,
                       validation=validation)
