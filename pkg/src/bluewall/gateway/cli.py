"""Command line: pre-train agents, run and evaluate defenses, replay
audit trails, and serve the HTTP control surface.

Every run is deterministic for fixed flags; records go to stdout as JSON
lines unless an output directory is given, so two identical invocations
are byte-comparable.
"""

from __future__ import annotations

import csv
import dataclasses
import json
from pathlib import Path
from typing import Optional

import click

from ..agents import (AGENT_TYPES, DEFAULT_CAPACITY, default_hyperparams,
                      save_agent, train_agent, training_triple,
                      triple_from_config)
from ..harness import (DEFAULT_BUDGET, DEFENSE_KINDS, TransitionExperiment,
                       assemble_defense, read_episode_log,
                       run_episode, run_transition_experiment,
                       write_episode_log)
from ..memory import LongTermMemory
from ..planner import AuditEntry
from ..scenarios import load_scenario
from .service import GatewayConfig, create_app


@click.group()
def main() -> None:
    """Attack-defense simulation with a planner-and-agents defense stack."""


def _load_config(name: str):
    try:
        return load_scenario(name)
    except (FileNotFoundError, ValueError, KeyError) as exc:
        raise click.ClickException(str(exc))


@main.command()
@click.option("--agent", "agent_type", required=True,
              type=click.Choice(AGENT_TYPES, case_sensitive=False),
              help="Which defense specialty to train.")
@click.option("--scenario", default=None,
              help="Scenario name or JSON file; omitted means the built-in "
                   "drill for the agent type.")
@click.option("--subnet", default=None,
              help="Subnet the agent trains on (default: the largest).")
@click.option("--seed", default=0, show_default=True)
@click.option("--episodes", default=None, type=int,
              help="Override the default episode budget.")
@click.option("--capacity", default=DEFAULT_CAPACITY, show_default=True,
              help="Observation capacity of the trained network.")
@click.option("--out", required=True, type=click.Path(dir_okay=False),
              help="Checkpoint file to write (.npz).")
def train(agent_type: str, scenario: Optional[str], subnet: Optional[str],
          seed: int, episodes: Optional[int], capacity: int, out: str) -> None:
    """Pre-train one agent; writes a checkpoint and a reward-curve CSV."""
    if scenario is None:
        triple = training_triple(agent_type)
    else:
        try:
            triple = triple_from_config(agent_type, _load_config(scenario),
                                        subnet)
        except ValueError as exc:
            raise click.ClickException(str(exc))
    hyperparams = (default_hyperparams(agent_type, episodes=episodes)
                   if episodes is not None else default_hyperparams(agent_type))
    result = train_agent(agent_type, triple, hyperparams, seed=seed,
                         capacity=capacity)
    out_path = Path(out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    checksum = save_agent(result.agent, out_path,
                          hyperparams=dataclasses.asdict(hyperparams),
                          seed=seed)
    curve_path = out_path.with_suffix(".curve.csv")
    with open(curve_path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(("episode", "reward"))
        for i, reward in enumerate(result.episode_rewards):
            writer.writerow((i, reward))
    click.echo(f"trained {agent_type} for {len(result.episode_rewards)} "
               f"episodes ({result.learn_steps} updates)")
    click.echo(f"checkpoint {out_path} (checksum {checksum[:12]})")
    click.echo(f"curve {curve_path}")


@main.command()
@click.option("--scenario", required=True,
              help="Scenario name (sce1..sce7) or JSON file.")
@click.option("--defense", default="hierarchical", show_default=True,
              type=click.Choice(DEFENSE_KINDS))
@click.option("--backend", default="scripted", show_default=True,
              help="'scripted' or an http(s) planner endpoint.")
@click.option("--episodes", default=1, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--budget", default=DEFAULT_BUDGET, show_default=True)
@click.option("--checkpoint-dir", default=None,
              type=click.Path(exists=True, file_okay=False),
              help="Agent checkpoints for the hierarchical defense "
                   "(default: bundled).")
@click.option("--out", default=None, type=click.Path(file_okay=False),
              help="Directory for episode and audit logs; omitted prints "
                   "records to stdout.")
def run(scenario: str, defense: str, backend: str, episodes: int, seed: int,
        budget: int, checkpoint_dir: Optional[str], out: Optional[str]) -> None:
    """Play episodes with one defense; emits EpisodeRecord JSON lines."""
    config = _load_config(scenario)
    try:
        assembled = assemble_defense(defense, backend=backend,
                                     checkpoint_dir=checkpoint_dir,
                                     config=config, seed=seed, budget=budget)
    except (ValueError, OSError) as exc:
        raise click.ClickException(str(exc))
    out_dir = Path(out) if out is not None else None
    audit_path = None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        if assembled.uses_planner:
            audit_path = out_dir / "audit.jsonl"
            audit_path.unlink(missing_ok=True)
    ltm = LongTermMemory()
    records = []
    for i in range(episodes):
        record = run_episode(config, assembled, seed + i, ltm=ltm,
                             audit_path=audit_path)
        records.append(record)
        ltm.mark_episode_boundary()
    if out_dir is not None:
        write_episode_log(records, out_dir / "episodes.jsonl")
        click.echo(f"wrote {len(records)} records to {out_dir}/episodes.jsonl")
    else:
        for record in records:
            click.echo(json.dumps(record.to_dict(), sort_keys=True,
                                  separators=(",", ":")))


@main.command()
@click.option("--experiment", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Transition-experiment JSON description.")
@click.option("--out", default=None, type=click.Path(file_okay=False),
              help="Report directory (default: alongside the experiment).")
def eval(experiment: str, out: Optional[str]) -> None:
    """Run a scenario-transition experiment and write its reports."""
    try:
        spec = TransitionExperiment.from_json(experiment)
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        raise click.ClickException(f"bad experiment file: {exc}")
    out_dir = (Path(out) if out is not None
               else Path(experiment).with_name(Path(experiment).stem + "-out"))
    try:
        report = run_transition_experiment(spec, out_dir=out_dir)
    except (ValueError, OSError) as exc:
        raise click.ClickException(str(exc))
    for phase in report.phases:
        reasons = ", ".join(f"{k}={v}" for k, v in
                            sorted(phase.terminal_reasons.items()))
        click.echo(f"phase {phase.phase} {phase.scenario}: "
                   f"jumpstart {phase.jumpstart:.3f}, "
                   f"healthy {phase.mean_healthy_ratio:.3f}, "
                   f"reward {phase.mean_cumulative_reward:.3f} ({reasons})")
    click.echo(f"overall healthy ratio "
               f"{report.overall_mean_healthy_ratio:.3f}; reports in {out_dir}")


@main.command()
@click.option("--log", "log_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Episode log (.jsonl) produced by run or eval.")
def replay(log_path: str) -> None:
    """Reprint the reasoning audit trail from an episode log."""
    try:
        records = read_episode_log(log_path)
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        raise click.ClickException(f"unreadable log: {exc}")
    if not records:
        raise click.ClickException("log holds no episodes")
    for record in records:
        click.echo(f"episode scenario={record.scenario} seed={record.seed} "
                   f"defense={record.defense} steps={record.length} "
                   f"end={record.terminal_reason}")
        if not record.audit:
            click.echo("  (no audit entries; not a planner defense)")
            continue
        for data in record.audit:
            entry = AuditEntry.from_dict(data)
            click.echo(f"  step {entry.step}:")
            if entry.instruction:
                click.echo(f"    instruction: {entry.instruction}")
            click.echo(f"    reasoning: {entry.reasoning}")
            atomic = "; ".join(
                a.operation if a.target is None else f"{a.operation} {a.target}"
                for a in entry.atomic) or "none"
            click.echo(f"    actions: {atomic}")
            for rejection in entry.rejected:
                click.echo(f"    rejected: {rejection.reason}")
            if entry.proposal_invalid:
                click.echo("    proposal invalid; nothing executed")
            if entry.fallback_used:
                click.echo("    backend unavailable; scripted fallback used")


@main.command()
@click.option("--host", default=None, help="Bind address override.")
@click.option("--port", default=None, type=int, help="Port override.")
@click.option("--config", "config_path", default=None,
              type=click.Path(exists=True, dir_okay=False),
              help="Service config JSON (bind address, backend, checkpoints).")
def serve(host: Optional[str], port: Optional[int],
          config_path: Optional[str]) -> None:
    """Start the HTTP control service."""
    import uvicorn

    try:
        config = (GatewayConfig.load(config_path) if config_path is not None
                  else GatewayConfig())
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        raise click.ClickException(f"bad service config: {exc}")
    if host is not None:
        config = dataclasses.replace(config, host=host)
    if port is not None:
        config = dataclasses.replace(config, port=port)
    uvicorn.run(create_app(config), host=config.host, port=config.port)


if __name__ == "__main__":
    main()
