"""Uniform-sampling experience replay with FIFO eviction."""

from __future__ import annotations

import numpy as np


class ReplayBuffer:
    """List-backed ring buffer.

    Grows with actual content instead of preallocating at capacity, since
    observations can run to thousands of floats.  Observations are stored
    float32 and widened to float64 at sample time.
    """

    def __init__(self, capacity: int = 100_000):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._items: list[tuple] = []
        self._pos = 0

    def __len__(self) -> int:
        return len(self._items)

    def append(self, obs: np.ndarray, action: int, reward: float,
               next_obs: np.ndarray, done: bool,
               next_action_mask: np.ndarray) -> None:
        item = (np.asarray(obs, dtype=np.float32),
                int(action), float(reward),
                np.asarray(next_obs, dtype=np.float32),
                bool(done),
                np.asarray(next_action_mask, dtype=bool))
        if len(self._items) < self.capacity:
            self._items.append(item)
        else:
            self._items[self._pos] = item
            self._pos = (self._pos + 1) % self.capacity

    def sample(self, batch_size: int, rng: np.random.Generator):
        if batch_size > len(self._items):
            raise ValueError(f"cannot sample {batch_size} of {len(self._items)}")
        idx = rng.integers(0, len(self._items), size=batch_size)
        obs = np.stack([self._items[i][0] for i in idx]).astype(np.float64)
        actions = np.array([self._items[i][1] for i in idx], dtype=np.int64)
        rewards = np.array([self._items[i][2] for i in idx], dtype=np.float64)
        next_obs = np.stack([self._items[i][3] for i in idx]).astype(np.float64)
        dones = np.array([self._items[i][4] for i in idx], dtype=bool)
        next_masks = np.stack([self._items[i][5] for i in idx])
        return obs, actions, rewards, next_obs, dones, next_masks
