"""Loading scenario configs from JSON, including the shipped presets."""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path
from typing import Mapping, Union

from .netmodel import (GatewayLink, ScenarioConfig, SubnetContext, SubnetSpec,
                       VulnerabilityDistribution)

PRESET_NAMES = ("sce1", "sce2", "sce3", "sce4", "sce5", "sce6", "sce7")


def config_from_dict(data: Mapping) -> ScenarioConfig:
    subnets = tuple(
        SubnetSpec(
            name=s["name"],
            node_scale=s["node_scale"],
            entry_count=s["entry_count"],
            hvn_assets=tuple(s.get("hvn_assets", ())),
            edge_density=s.get("edge_density", 0.15),
            gateways=tuple(GatewayLink(to=g["to"], links=g.get("links", 1))
                           for g in s.get("gateways", ())),
        )
        for s in data["subnets"]
    )
    vuln = data.get("vulnerability", {})
    context = {name: SubnetContext(**blocks)
               for name, blocks in data.get("context", {}).items()}
    return ScenarioConfig(
        name=data.get("name", "custom"),
        subnets=subnets,
        vulnerability=VulnerabilityDistribution(low=vuln.get("low", 0.1),
                                                high=vuln.get("high", 0.9)),
        attacker_count=data.get("attacker_count", 1),
        attack_policy=data.get("attack_policy", "recon"),
        attacker_skill=data.get("attacker_skill", 0.5),
        max_steps=data.get("max_steps", 100),
        reward_overrides=dict(data.get("reward_overrides", {})),
        context=context,
        hvn_terminal=data.get("hvn_terminal", True),
    )


def config_to_dict(config: ScenarioConfig) -> dict:
    return {
        "name": config.name,
        "subnets": [
            {
                "name": s.name,
                "node_scale": s.node_scale,
                "entry_count": s.entry_count,
                "hvn_assets": list(s.hvn_assets),
                "edge_density": s.edge_density,
                "gateways": [{"to": g.to, "links": g.links} for g in s.gateways],
            }
            for s in config.subnets
        ],
        "vulnerability": {"low": config.vulnerability.low,
                          "high": config.vulnerability.high},
        "attacker_count": config.attacker_count,
        "attack_policy": config.attack_policy,
        "attacker_skill": config.attacker_skill,
        "max_steps": config.max_steps,
        "reward_overrides": dict(config.reward_overrides),
        "context": {
            name: {
                "exposure": ctx.exposure,
                "vulnerability_profile": ctx.vulnerability_profile,
                "assets": ctx.assets,
                "service_continuity": ctx.service_continuity,
            }
            for name, ctx in config.context.items()
        },
        "hvn_terminal": config.hvn_terminal,
    }


def load_scenario(name_or_path: Union[str, Path]) -> ScenarioConfig:
    """Load a named preset ("sce1".."sce7") or a JSON config file path."""
    name = str(name_or_path)
    if name in PRESET_NAMES:
        text = (resources.files("bluewall") / "scenarios" / f"{name}.json").read_text()
    else:
        path = Path(name_or_path)
        if not path.exists():
            raise FileNotFoundError(
                f"{name!r} is neither a preset ({', '.join(PRESET_NAMES)}) nor a file")
        text = path.read_text()
    return config_from_dict(json.loads(text))
