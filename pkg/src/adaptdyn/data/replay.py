"""Bounded FIFO experience buffer with uniform batch sampling."""

from __future__ import annotations

import numpy as np

__all__ = ["ReplayBuffer"]


class ReplayBuffer:
    """Ring of array tuples; oldest item is overwritten once capacity is hit.

    Items are tuples of equally-shaped arrays (e.g. a history window and the
    privileged factor vector observed after it). Sampling is uniform without
    replacement within a batch and returns one stacked array per field.
    """

    def __init__(self, capacity: int = 50_000):
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        self.capacity = int(capacity)
        self._items: list[tuple] = []
        self._next = 0
        self._shapes: tuple | None = None

    def __len__(self) -> int:
        return len(self._items)

    def push(self, *arrays) -> None:
        item = tuple(np.asarray(a, dtype=np.float64) for a in arrays)
        shapes = tuple(a.shape for a in item)
        if self._shapes is None:
            self._shapes = shapes
        elif shapes != self._shapes:
            raise ValueError(f"item shapes {shapes} != buffer shapes {self._shapes}")
        if len(self._items) < self.capacity:
            self._items.append(item)
        else:
            self._items[self._next] = item
            self._next = (self._next + 1) % self.capacity

    def sample(self, batch_size: int, rng: np.random.Generator) -> tuple:
        if not self._items:
            raise ValueError("cannot sample from an empty buffer")
        if batch_size > len(self._items):
            raise ValueError(f"batch {batch_size} exceeds buffer size {len(self._items)}")
        idx = rng.choice(len(self._items), size=batch_size, replace=False)
        picked = [self._items[i] for i in idx]
        return tuple(np.stack([item[j] for item in picked])
                     for j in range(len(self._shapes)))

    def snapshot(self) -> list[tuple]:
        """Shallow copy of the current contents, oldest-first order not guaranteed."""
        return list(self._items)
