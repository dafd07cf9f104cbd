"""Train and save the bundled per-type agent checkpoints.

One checkpoint per (capacity, agent type) pair lands in the package's
fixtures directory, where the hierarchical defense picks them up at run
time. Rebuilding with the same arguments reproduces identical files, so
checkpoints only change when the training recipe does.
"""

import argparse
import time
from pathlib import Path

from bluewall.agents.io import save_agent
from bluewall.agents.obs import AGENT_TYPES
from bluewall.agents.train import (default_hyperparams, train_agent,
                                   training_triple)

DEFAULT_OUT = (Path(__file__).resolve().parents[1] / "src" / "bluewall"
               / "agents" / "fixtures")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--capacities", default="30,100",
                        help="comma-separated observation capacities")
    parser.add_argument("--episodes", type=int, default=10_000)
    parser.add_argument("--seed", type=int, default=11)
    parser.add_argument("--out", type=Path, default=DEFAULT_OUT)
    args = parser.parse_args()

    for capacity in [int(c) for c in args.capacities.split(",")]:
        out_dir = args.out / f"cap{capacity}"
        out_dir.mkdir(parents=True, exist_ok=True)
        for agent_type in AGENT_TYPES:
            hp = default_hyperparams(agent_type, episodes=args.episodes)
            triple = training_triple(agent_type, capacity)
            start = time.time()
            result = train_agent(agent_type, triple, hp, seed=args.seed,
                                 capacity=capacity)
            elapsed = time.time() - start
            path = out_dir / f"{agent_type.lower()}.npz"
            checksum = save_agent(result.agent, path,
                                  hyperparams=hp.to_dict(), seed=args.seed)
            print(f"{path}  {elapsed:6.0f}s  steps={result.env_steps}"
                  f"  checksum={checksum[:12]}")


if __name__ == "__main__":
    main()
