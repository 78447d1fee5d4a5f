"""Per-platform training defaults for both model families."""

from __future__ import annotations

from .phase1 import Phase1Config
from .phase2 import Phase2Config

__all__ = ["WINDOW_LEN", "phase1_defaults", "phase2_defaults"]

WINDOW_LEN = {"msd": 5, "diffdrive": 5, "quad": 10}

_PHASE1_NODE = {
    "msd": Phase1Config(horizons=(1, 2, 4, 8), epochs_per_stage=10, batch_size=256,
                        state_hidden=(64, 64)),
    "diffdrive": Phase1Config(horizons=tuple(range(1, 11)), epochs_per_stage=10,
                              batch_size=512, state_hidden=(64, 64)),
    "quad": Phase1Config(horizons=tuple(range(1, 31)), epochs_per_stage=10,
                         batch_size=1024, state_hidden=(64, 64, 64)),
}

# Discrete-map baseline: one fixed autoregressive horizon, flat learning rate.
_PHASE1_MLP = {
    name: Phase1Config(horizons=(5,), epochs_per_stage=100, batch_size=128,
                       lr_start=1e-4, lr_end=1e-4, state_hidden=(64, 64, 64),
                       encoder_hidden=(64, 64))
    for name in WINDOW_LEN
}

_PHASE2_NODE = {
    "msd": Phase2Config(window_len=5, backend="mlp", adaptive_hidden=(64, 64),
                        lr=1e-3, epochs=100, batch_size=128),
    "diffdrive": Phase2Config(window_len=5, backend="mlp", adaptive_hidden=(64,),
                              lr=1e-3, epochs=50, batch_size=128),
    "quad": Phase2Config(window_len=10, backend="cnn", adaptive_hidden=(64,),
                         lr=1e-4, epochs=100, batch_size=1024),
}

_PHASE2_MLP = {
    name: Phase2Config(window_len=WINDOW_LEN[name], backend="mlp",
                       adaptive_hidden=(64, 64), lr=5e-5, epochs=15, batch_size=128)
    for name in WINDOW_LEN
}


def phase1_defaults(platform: str, kind: str = "node") -> Phase1Config:
    table = _PHASE1_NODE if kind == "node" else _PHASE1_MLP
    return table[platform]


def phase2_defaults(platform: str, kind: str = "node") -> Phase2Config:
    table = _PHASE2_NODE if kind == "node" else _PHASE2_MLP
    return table[platform]
