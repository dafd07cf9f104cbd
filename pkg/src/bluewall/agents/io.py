"""Versioned agent checkpoints with content checksums.

A checkpoint is a single compressed archive holding the six network
parameter arrays plus a JSON metadata record (format version, agent type,
capacity, hyperparameters, seed, checksum).  The checksum covers the
parameter bytes themselves, not the container, so two saves of the same
network always agree.
"""

from __future__ import annotations

import hashlib
import json
import zipfile
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .mlp import PARAM_NAMES, ValueNetwork
from .obs import AGENT_TYPES
from .train import DefenseAgent

FORMAT_VERSION = 1


class CheckpointError(RuntimeError):
    """Unreadable, corrupt, or incompatible agent checkpoint."""


def network_checksum(network: ValueNetwork) -> str:
    """Order-stable digest of the parameter contents."""
    digest = hashlib.sha256()
    for name, param in zip(PARAM_NAMES, network.params()):
        arr = np.ascontiguousarray(param, dtype=np.float64)
        digest.update(name.encode())
        digest.update(str(arr.shape).encode())
        digest.update(arr.tobytes())
    return digest.hexdigest()


def save_agent(agent: DefenseAgent, path: Union[str, Path],
               hyperparams: Optional[dict] = None,
               seed: Optional[int] = None) -> str:
    """Write a checkpoint; returns the parameter checksum."""
    checksum = network_checksum(agent.network)
    meta = {
        "format_version": FORMAT_VERSION,
        "agent_type": agent.agent_type,
        "capacity": agent.capacity,
        "input_dim": agent.network.input_dim,
        "output_dim": agent.network.output_dim,
        "hidden_units": agent.network.hidden,
        "hyperparams": hyperparams,
        "seed": seed,
        "checksum": checksum,
    }
    arrays = {name: param for name, param in
              zip(PARAM_NAMES, agent.network.params())}
    with open(path, "wb") as handle:
        np.savez(handle, meta=np.array(json.dumps(meta, sort_keys=True)),
                 **arrays)
    return checksum


def load_agent(path: Union[str, Path]) -> tuple[DefenseAgent, dict]:
    """Read a checkpoint back; raises CheckpointError on any defect."""
    try:
        with np.load(path, allow_pickle=False) as data:
            meta = json.loads(str(data["meta"]))
            params = [np.array(data[name], dtype=np.float64)
                      for name in PARAM_NAMES]
    except (OSError, ValueError, KeyError, EOFError,
            zipfile.BadZipFile, json.JSONDecodeError) as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc

    version = meta.get("format_version")
    if version != FORMAT_VERSION:
        raise CheckpointError(
            f"checkpoint {path} has format version {version}; "
            f"this build reads version {FORMAT_VERSION}")
    if meta.get("agent_type") not in AGENT_TYPES:
        raise CheckpointError(f"checkpoint {path} has unknown agent type "
                              f"{meta.get('agent_type')!r}")

    network = ValueNetwork(int(meta["input_dim"]), int(meta["output_dim"]),
                           hidden=int(meta["hidden_units"]))
    for name, stored, expected in zip(PARAM_NAMES, params, network.params()):
        if stored.shape != expected.shape:
            raise CheckpointError(
                f"checkpoint {path}: parameter {name} has shape "
                f"{stored.shape}, expected {expected.shape}")
    network.set_params(params)
    agent = DefenseAgent(agent_type=meta["agent_type"],
                         capacity=int(meta["capacity"]), network=network)
    actual = network_checksum(network)
    if actual != meta.get("checksum"):
        raise CheckpointError(f"checkpoint {path} failed its checksum: "
                              f"stored {meta.get('checksum')}, got {actual}")
    return agent, meta
