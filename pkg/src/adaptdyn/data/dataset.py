"""Trajectory containers and history-window extraction for model training."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

import numpy as np

from ..envs import platform_info

__all__ = [
    "Transition",
    "Trajectory",
    "Dataset",
    "window_rows",
    "history_window",
    "iter_windows",
]


class Transition(NamedTuple):
    x: np.ndarray
    u: np.ndarray
    e: np.ndarray
    x_next: np.ndarray
    step_index: int


@dataclass
class Trajectory:
    """One episode: states (T+1, sd), actions (T, ad), env factors (T, ed).

    Row k of states is x_k, so the transition at step k is
    (states[k], actions[k], envs[k], states[k+1]) and chaining is built in.
    """

    states: np.ndarray
    actions: np.ndarray
    envs: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=np.float64)
        self.actions = np.asarray(self.actions, dtype=np.float64)
        self.envs = np.asarray(self.envs, dtype=np.float64)
        if self.states.ndim != 2 or self.actions.ndim != 2 or self.envs.ndim != 2:
            raise ValueError("states, actions and envs must all be 2-d arrays")
        n = self.actions.shape[0]
        if self.states.shape[0] != n + 1:
            raise ValueError(
                f"want one more state than actions, got {self.states.shape[0]} vs {n}")
        if self.envs.shape[0] != n:
            raise ValueError(f"want one env row per action, got {self.envs.shape[0]} vs {n}")

    def __len__(self) -> int:
        return self.actions.shape[0]

    @property
    def state_dim(self) -> int:
        return self.states.shape[1]

    @property
    def action_dim(self) -> int:
        return self.actions.shape[1]

    @property
    def env_dim(self) -> int:
        return self.envs.shape[1]

    def transition(self, k: int) -> Transition:
        if not 0 <= k < len(self):
            raise IndexError(f"step {k} out of range for length {len(self)}")
        return Transition(self.states[k], self.actions[k], self.envs[k],
                          self.states[k + 1], k)

    def transitions(self) -> Iterator[Transition]:
        for k in range(len(self)):
            yield self.transition(k)


@dataclass
class Dataset:
    """Trajectories from one platform plus collection-level metadata."""

    platform: str
    trajectories: list
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        info = platform_info(self.platform)
        for i, traj in enumerate(self.trajectories):
            dims = (traj.state_dim, traj.action_dim, traj.env_dim)
            want = (info.state_dim, info.action_dim, info.env_dim)
            if dims != want:
                raise ValueError(f"trajectory {i} dims {dims} != platform dims {want}")

    def __len__(self) -> int:
        return len(self.trajectories)

    @property
    def n_transitions(self) -> int:
        return sum(len(t) for t in self.trajectories)

    def all_states(self) -> np.ndarray:
        return np.concatenate([t.states for t in self.trajectories], axis=0)

    def all_actions(self) -> np.ndarray:
        return np.concatenate([t.actions for t in self.trajectories], axis=0)

    def all_envs(self) -> np.ndarray:
        return np.concatenate([t.envs for t in self.trajectories], axis=0)


def window_rows(states: np.ndarray, actions: np.ndarray, k: int, M: int) -> np.ndarray:
    """History rows [x_i; u_i] for i in [k-M, k-1], oldest first: (M, sd+ad)."""
    if M < 1:
        raise ValueError(f"window length must be >= 1, got {M}")
    if k < M:
        raise ValueError(f"need k >= M to fill the window, got k={k}, M={M}")
    if k > actions.shape[0]:
        raise ValueError(f"window ends at step {k - 1} but only {actions.shape[0]} actions exist")
    return np.concatenate([states[k - M:k], actions[k - M:k]], axis=1)


def history_window(traj: Trajectory, k: int, M: int) -> np.ndarray:
    """The M (state, action) pairs preceding step k of a trajectory."""
    return window_rows(traj.states, traj.actions, k, M)


def iter_windows(traj: Trajectory, M: int) -> Iterator[tuple[int, np.ndarray, np.ndarray]]:
    """(k, window, e_k) for every step k of the trajectory with a full history."""
    for k in range(M, len(traj)):
        yield k, window_rows(traj.states, traj.actions, k, M), traj.envs[k]
