"""Per-dimension affine input normalization shared by all networks."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..numerics import Tensor

__all__ = ["Normalizer"]

STD_FLOOR = 1e-2  # keeps near-constant channels from exploding the scale


@dataclass
class Normalizer:
    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64)
        self.std = np.asarray(self.std, dtype=np.float64)
        if self.mean.shape != self.std.shape or self.mean.ndim != 1:
            raise ValueError(f"bad normalizer shapes {self.mean.shape}/{self.std.shape}")
        if np.any(self.std <= 0.0):
            raise ValueError("normalizer std must be positive")
        self._inv = Tensor(1.0 / self.std)
        self._off = Tensor(-self.mean / self.std)

    @classmethod
    def from_data(cls, arr: np.ndarray, floor: float = STD_FLOOR) -> "Normalizer":
        arr = np.asarray(arr, dtype=np.float64).reshape(-1, arr.shape[-1])
        return cls(arr.mean(axis=0), np.maximum(arr.std(axis=0), floor))

    @classmethod
    def identity(cls, dim: int) -> "Normalizer":
        return cls(np.zeros(dim), np.ones(dim))

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def apply(self, x):
        """Normalize a numpy array or a Tensor (gradients flow through)."""
        if isinstance(x, Tensor):
            return x * self._inv + self._off
        return (np.asarray(x, dtype=np.float64) - self.mean) / self.std

    def arrays(self) -> dict[str, np.ndarray]:
        return {"mean": self.mean, "std": self.std}
