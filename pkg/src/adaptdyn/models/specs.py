"""Architecture descriptions for the networks; plain data, no parameters."""

from __future__ import annotations

from dataclasses import dataclass, field

__all__ = ["MLPSpec", "Conv1DSpec"]

_ACTIVATIONS = ("relu", "tanh")


@dataclass(frozen=True)
class MLPSpec:
    in_dim: int
    out_dim: int
    hidden: tuple[int, ...]
    activation: str = "relu"

    def __post_init__(self):
        if self.in_dim <= 0 or self.out_dim <= 0:
            raise ValueError(f"dims must be positive, got {self.in_dim}->{self.out_dim}")
        if any(h <= 0 for h in self.hidden):
            raise ValueError(f"hidden widths must be positive, got {self.hidden}")
        if self.activation not in _ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))

    def to_dict(self) -> dict:
        return {
            "in_dim": self.in_dim,
            "out_dim": self.out_dim,
            "hidden": list(self.hidden),
            "activation": self.activation,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MLPSpec":
        return cls(d["in_dim"], d["out_dim"], tuple(d["hidden"]), d["activation"])


@dataclass(frozen=True)
class Conv1DSpec:
    """Stack of valid 1D convolutions over a fixed-length sequence.

    The sequence length must survive every kernel (no padding), which bounds
    how short a history window the conv backend accepts.
    """

    in_channels: int
    seq_len: int
    channels: tuple[int, ...] = (16, 16, 16)
    kernels: tuple[int, ...] = (5, 3, 3)
    dropout: float = 0.1
    out_dim: int = 8

    def __post_init__(self):
        if len(self.channels) != len(self.kernels):
            raise ValueError(
                f"channels/kernels length mismatch: {self.channels} vs {self.kernels}"
            )
        if self.in_channels <= 0 or self.seq_len <= 0:
            raise ValueError("in_channels and seq_len must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError(f"dropout must be in [0, 1), got {self.dropout}")
        length = self.seq_len
        for k in self.kernels:
            length = length - k + 1
            if length <= 0:
                raise ValueError(
                    f"kernels {self.kernels} exhaust a length-{self.seq_len} sequence"
                )
        object.__setattr__(self, "channels", tuple(int(c) for c in self.channels))
        object.__setattr__(self, "kernels", tuple(int(k) for k in self.kernels))

    @property
    def flat_dim(self) -> int:
        length = self.seq_len
        for k in self.kernels:
            length = length - k + 1
        return self.channels[-1] * length

    def to_dict(self) -> dict:
        return {
            "in_channels": self.in_channels,
            "seq_len": self.seq_len,
            "channels": list(self.channels),
            "kernels": list(self.kernels),
            "dropout": self.dropout,
            "out_dim": self.out_dim,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Conv1DSpec":
        return cls(
            d["in_channels"],
            d["seq_len"],
            tuple(d["channels"]),
            tuple(d["kernels"]),
            d["dropout"],
            d["out_dim"],
        )
