"""HTTP control surface: live sessions, stepping, operator instructions,
state snapshots, the audit feed, and a push event stream.

One live episode per session.  Every mutation of a session goes through
its lock, which serializes stepping and makes instruction injection
atomic with respect to steps: an instruction accepted between steps t and
t+1 is part of observation t+1, never t.
"""

from __future__ import annotations

import json
import os
import queue
import threading
import uuid
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional

from fastapi import FastAPI, HTTPException, Query, Request
from fastapi.responses import Response, StreamingResponse
from pydantic import BaseModel

from ..harness import (DEFAULT_BUDGET, DEFENSE_KINDS, Session,
                       assemble_defense, healthy_ratio, mean_vulnerability)
from ..netmodel import UNREACHABLE, state_to_dict
from ..perception import perceive
from ..scenarios import load_scenario

TOKEN_ENV = "BLUEWALL_TOKEN"
_CONFIG_KEYS = ("host", "port", "backend", "checkpoint_dir")


@dataclass(frozen=True)
class GatewayConfig:
    """Service-level defaults; sessions may override backend and checkpoints."""

    host: str = "127.0.0.1"
    port: int = 8000
    backend: str = "scripted"
    checkpoint_dir: Optional[str] = None

    @staticmethod
    def load(path) -> "GatewayConfig":
        data = json.loads(Path(path).read_text())
        unknown = set(data) - set(_CONFIG_KEYS)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return GatewayConfig(**data)


class CreateSessionBody(BaseModel):
    scenario: str
    defense: str = "scripted-only"
    backend: Optional[str] = None
    seed: int = 0
    budget: int = DEFAULT_BUDGET
    checkpoint_dir: Optional[str] = None


class InstructionBody(BaseModel):
    # null clears the standing instruction; a new one replaces it
    text: Optional[str]


class RunBody(BaseModel):
    max_steps: Optional[int] = None


class LiveSession:
    """One episode plus the bookkeeping the HTTP surface needs."""

    def __init__(self, session_id: str, session: Session) -> None:
        self.id = session_id
        self.session = session
        self.lock = threading.Lock()
        self.mode = "paused"
        self.stop_flag = threading.Event()
        self.runner: Optional[threading.Thread] = None
        self._subscribers: list[queue.SimpleQueue] = []
        self._sub_lock = threading.Lock()

    def subscribe(self) -> queue.SimpleQueue:
        q: queue.SimpleQueue = queue.SimpleQueue()
        with self._sub_lock:
            self._subscribers.append(q)
        return q

    def unsubscribe(self, q: queue.SimpleQueue) -> None:
        with self._sub_lock:
            if q in self._subscribers:
                self._subscribers.remove(q)

    def publish(self, payload: dict) -> None:
        with self._sub_lock:
            targets = list(self._subscribers)
        for q in targets:
            q.put(payload)

    def metrics(self) -> dict:
        state = self.session.state
        return {
            "step": state.time,
            "healthy_ratio": healthy_ratio(state),
            "mean_vulnerability": mean_vulnerability(state),
            "cumulative_reward": self.session.cumulative_reward,
        }

    def step_once(self) -> dict:
        """Advance one step; caller must hold ``lock``."""
        before = self.session.state
        outcome = self.session.step()
        changed = [
            {
                "id": i,
                "compromised": after.compromised,
                "isolated": after.isolated,
                "vulnerability": after.vulnerability,
            }
            for i, (prev, after) in enumerate(zip(before.nodes,
                                                  outcome.next_state.nodes))
            if prev != after
        ]
        payload = {
            "type": "step",
            "step": outcome.next_state.time,
            "reward": outcome.reward,
            "terminal": outcome.terminal,
            "terminal_reason": outcome.terminal_reason,
            "changed_nodes": changed,
            "metrics": self.metrics(),
        }
        self.publish(payload)
        return payload

    def state_payload(self) -> dict:
        """Full snapshot; caller must hold ``lock``."""
        session = self.session
        state = session.state
        report = perceive(state, session.events,
                          prev_distances=session.prev_distances)
        per_subnet = {}
        for name, m in report.per_subnet.items():
            distance = (None if m.critical_distance is UNREACHABLE
                        else int(m.critical_distance))
            per_subnet[name] = {
                "entry_count": m.entry_count,
                "avg_vulnerability": m.avg_vulnerability,
                "compromised_count": m.compromised_count,
                "isolated_count": m.isolated_count,
                "attack_frequency": m.attack_frequency,
                "critical_distance": distance,
                "penetration_speed": m.penetration_speed,
                "connectivity": m.connectivity,
                "hvn_count": m.hvn_count,
            }
        metrics = self.metrics()
        metrics["attack_entropy"] = report.attack_entropy
        metrics["per_subnet"] = per_subnet
        return {
            "id": self.id,
            "scenario": session.config.name,
            "defense": session.defense.kind,
            "mode": self.mode,
            "step": state.time,
            "terminal": session.done,
            "terminal_reason": session.episode.terminal_reason,
            "instruction": state.human_instruction,
            "state": state_to_dict(state),
            "metrics": metrics,
        }


def create_app(config: GatewayConfig = GatewayConfig()) -> FastAPI:
    app = FastAPI(title="bluewall gateway")
    sessions: dict[str, LiveSession] = {}
    app.state.sessions = sessions
    app.state.config = config

    @app.middleware("http")
    async def check_token(request: Request, call_next):
        token = os.environ.get(TOKEN_ENV)
        if token and request.headers.get("authorization") != f"Bearer {token}":
            return Response(json.dumps({"detail": "bad or missing token"}),
                            status_code=401, media_type="application/json")
        return await call_next(request)

    def live_or_404(session_id: str) -> LiveSession:
        live = sessions.get(session_id)
        if live is None:
            raise HTTPException(404, f"no session {session_id!r}")
        return live

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionBody) -> dict:
        if body.defense not in DEFENSE_KINDS:
            raise HTTPException(
                400, f"unknown defense {body.defense!r}; "
                     f"expected one of {list(DEFENSE_KINDS)}")
        try:
            scenario = load_scenario(body.scenario)
            defense = assemble_defense(
                body.defense,
                backend=body.backend or config.backend,
                checkpoint_dir=body.checkpoint_dir or config.checkpoint_dir,
                config=scenario, seed=body.seed, budget=body.budget)
        except (FileNotFoundError, ValueError, OSError) as exc:
            raise HTTPException(400, str(exc))
        session_id = uuid.uuid4().hex[:12]
        live = LiveSession(session_id,
                           Session.start(scenario, defense, body.seed))
        sessions[session_id] = live
        return {
            "id": session_id,
            "scenario": scenario.name,
            "defense": body.defense,
            "seed": body.seed,
            "mode": live.mode,
            "step": 0,
            "node_count": live.session.state.graph.node_count,
        }

    @app.post("/sessions/{session_id}/step")
    def step(session_id: str) -> dict:
        live = live_or_404(session_id)
        if live.mode == "running":
            raise HTTPException(409, "session is free-running; pause first")
        if not live.lock.acquire(blocking=False):
            raise HTTPException(409, "a step is in flight; retry shortly")
        try:
            if live.session.done:
                raise HTTPException(
                    409, "episode finished "
                         f"({live.session.episode.terminal_reason}); "
                         "start a new session")
            return live.step_once()
        finally:
            live.lock.release()

    @app.post("/sessions/{session_id}/run")
    def run_free(session_id: str, body: Optional[RunBody] = None) -> dict:
        live = live_or_404(session_id)
        if live.mode == "running":
            raise HTTPException(409, "already running")
        if live.session.done:
            raise HTTPException(409, "episode finished; start a new session")
        limit = body.max_steps if body is not None else None
        live.stop_flag.clear()
        live.mode = "running"

        def loop() -> None:
            steps = 0
            while not live.stop_flag.is_set():
                with live.lock:
                    if live.session.done:
                        break
                    live.step_once()
                steps += 1
                if limit is not None and steps >= limit:
                    break
            live.mode = "paused"

        live.runner = threading.Thread(target=loop, daemon=True)
        live.runner.start()
        return {"mode": "running", "step": live.session.state.time}

    @app.post("/sessions/{session_id}/pause")
    def pause(session_id: str) -> dict:
        live = live_or_404(session_id)
        live.stop_flag.set()
        runner = live.runner
        if runner is not None:
            runner.join(timeout=60)
        live.mode = "paused"
        return {"mode": "paused", "step": live.session.state.time}

    @app.post("/sessions/{session_id}/instruction")
    def instruction(session_id: str, body: InstructionBody) -> dict:
        live = live_or_404(session_id)
        if not live.lock.acquire(blocking=False):
            raise HTTPException(
                409, "a step is in flight; retry once it completes")
        try:
            live.session.set_instruction(body.text)
            next_step = live.session.state.time
        finally:
            live.lock.release()
        return {"instruction": body.text, "applies_from_step": next_step}

    @app.get("/sessions/{session_id}/state")
    def state(session_id: str) -> Response:
        live = live_or_404(session_id)
        with live.lock:
            payload = live.state_payload()
        # stable serialization: identical state must give identical bytes
        return Response(json.dumps(payload, sort_keys=True),
                        media_type="application/json")

    @app.get("/sessions/{session_id}/audit")
    def audit(session_id: str,
              from_: int = Query(0, alias="from", ge=0)) -> dict:
        live = live_or_404(session_id)
        with live.lock:
            entries = [entry.to_dict()
                       for entry in live.session.audit_entries[from_:]]
        return {"from": from_, "entries": entries,
                "next": from_ + len(entries)}

    @app.get("/sessions/{session_id}/events")
    def events(session_id: str) -> StreamingResponse:
        live = live_or_404(session_id)
        q = live.subscribe()

        def stream() -> Iterator[str]:
            try:
                yield "retry: 2000\n\n"
                if live.session.done:
                    closing = {"type": "terminal",
                               "terminal_reason":
                                   live.session.episode.terminal_reason,
                               "metrics": live.metrics()}
                    yield f"data: {json.dumps(closing, sort_keys=True)}\n\n"
                    return
                while True:
                    try:
                        item = q.get(timeout=15)
                    except queue.Empty:
                        yield ": keepalive\n\n"
                        continue
                    yield f"data: {json.dumps(item, sort_keys=True)}\n\n"
                    if item.get("terminal"):
                        return
            finally:
                live.unsubscribe(q)

        return StreamingResponse(stream(), media_type="text/event-stream")

    return app
