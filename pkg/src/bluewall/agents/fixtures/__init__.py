"""Bundled pre-trained checkpoints, one directory per observation capacity.

`capNN/` holds the four per-type checkpoints produced by
tools/pretrain_fixtures.py; the smallest bundle whose capacity covers the
largest subnet in play is the default for hierarchical runs.
"""

from importlib import resources
from pathlib import Path
from typing import Optional

BUNDLED_CAPACITIES = (30, 100)
_REQUIRED = ("fortify.npz", "recover.npz", "purge.npz", "block.npz")


def bundled_checkpoint_dir(capacity: int) -> Optional[Path]:
    """Directory of bundled checkpoints sized for ``capacity``, or None.

    Picks the smallest bundled capacity that is still large enough; a
    partially populated directory does not count.
    """
    root = resources.files(__package__)
    for cap in sorted(BUNDLED_CAPACITIES):
        if cap < capacity:
            continue
        candidate = root.joinpath(f"cap{cap}")
        if all(candidate.joinpath(name).is_file() for name in _REQUIRED):
            return Path(str(candidate))
    return None
