"""Task cost functions for sampling-based planning.

Every evaluator shares one calling convention: ``cost(states, actions) ->
(n,) costs`` for a batch of predicted trajectories, ``states`` shaped
(n, k, state_dim) and ``actions`` (n, k_a, action_dim). Only quadratic costs
look at the actions. Costs also expose two episode-loop hooks: ``observe``
(update internal progress from the realized state) and ``at`` (bind the
evaluation to an absolute control step for time-indexed references).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "wrap_angle",
    "monotone_nearest",
    "GoalReachCost",
    "VelocityCost",
    "PathTrackCost",
    "PoseTrackCost",
    "QuadraticCost",
]


def wrap_angle(a):
    """Wrap angles to (-pi, pi]."""
    a = np.asarray(a, dtype=np.float64)
    return np.pi - np.mod(np.pi - a, 2.0 * np.pi)


def monotone_nearest(path: np.ndarray, points: np.ndarray, start: int,
                     window: int, loop: bool = True) -> np.ndarray:
    """Nearest path index per point, never moving backward along the path.

    ``points`` is (n, k, 2); the index advances from ``start`` by at most
    ``window - 1`` positions per step (wrapping when ``loop``). Returns
    (n, k) integer indices.
    """
    path = np.asarray(path, dtype=np.float64)
    p = len(path)
    n, k = points.shape[0], points.shape[1]
    offsets = np.arange(window)
    idx = np.full(n, int(start))
    out = np.empty((n, k), dtype=np.intp)
    for j in range(k):
        cand = idx[:, None] + offsets[None, :]
        cand = np.mod(cand, p) if loop else np.minimum(cand, p - 1)
        d = np.sum((path[cand] - points[:, j, None, :]) ** 2, axis=-1)
        idx = cand[np.arange(n), np.argmin(d, axis=1)]
        out[:, j] = idx
    return out


def _check_weights(**named):
    for name, w in named.items():
        if w < 0.0:
            raise ValueError(f"{name} must be non-negative, got {w}")


@dataclass
class GoalReachCost:
    """Planar goal reaching: speed tracks a capped pursuit reference.

    The speed reference is proportional to the distance to the goal, capped
    at ``v_cap``; the heading reference points at the goal.
    """

    goal: tuple
    w_v: float = 1.0
    w_theta: float = 0.5
    v_gain: float = 1.0
    v_cap: float = 0.3

    def __post_init__(self):
        _check_weights(w_v=self.w_v, w_theta=self.w_theta)
        self.goal = (float(self.goal[0]), float(self.goal[1]))

    def __call__(self, states, actions):
        dx = self.goal[0] - states[..., 0]
        dy = self.goal[1] - states[..., 1]
        dist = np.hypot(dx, dy)
        v = np.hypot(states[..., 3], states[..., 4])
        v_ref = np.minimum(self.v_cap, self.v_gain * dist)
        dth = wrap_angle(states[..., 2] - np.arctan2(dy, dx))
        return np.sum(self.w_v * (v - v_ref) ** 2 + self.w_theta * dth ** 2,
                      axis=-1)

    def observe(self, obs):
        pass

    def at(self, step):
        return self


@dataclass
class VelocityCost:
    """Track a constant ground-speed reference, heading free."""

    v_ref: float
    w_v: float = 1.0

    def __post_init__(self):
        _check_weights(w_v=self.w_v)

    def __call__(self, states, actions):
        v = np.hypot(states[..., 3], states[..., 4])
        return np.sum(self.w_v * (v - self.v_ref) ** 2, axis=-1)

    def observe(self, obs):
        pass

    def at(self, step):
        return self


@dataclass
class PathTrackCost:
    """Follow a reference path with per-point headings and speeds.

    Reference points are matched by nearest Euclidean distance with a
    monotone index (never backward along the path); the anchor advances with
    the realized state via ``observe``.
    """

    path: np.ndarray
    headings: np.ndarray
    speeds: np.ndarray
    w_p: float = 10.0
    w_v: float = 0.5
    w_theta: float = 0.5
    search_window: int = 20
    loop: bool = True
    progress: int | None = field(default=None, repr=False)

    def __post_init__(self):
        _check_weights(w_p=self.w_p, w_v=self.w_v, w_theta=self.w_theta)
        self.path = np.asarray(self.path, dtype=np.float64)
        self.headings = np.asarray(self.headings, dtype=np.float64)
        self.speeds = np.asarray(self.speeds, dtype=np.float64)
        if self.path.ndim != 2 or self.path.shape[1] != 2 or len(self.path) == 0:
            raise ValueError("reference path must be a non-empty (p, 2) array")
        if len(self.headings) != len(self.path) or len(self.speeds) != len(self.path):
            raise ValueError("headings and speeds must match the path length")
        if self.search_window < 1:
            raise ValueError("search_window must be positive")

    def observe(self, obs):
        p = np.asarray(obs[:2], dtype=np.float64)
        if self.progress is None:
            self.progress = int(np.argmin(np.sum((self.path - p) ** 2, axis=1)))
        else:
            self.progress = int(monotone_nearest(
                self.path, p[None, None, :], self.progress,
                self.search_window, self.loop)[0, 0])

    def at(self, step):
        return self

    def __call__(self, states, actions):
        start = 0 if self.progress is None else self.progress
        idx = monotone_nearest(self.path, states[..., :2], start,
                               self.search_window, self.loop)
        ep = np.sum((states[..., :2] - self.path[idx]) ** 2, axis=-1)
        v = np.hypot(states[..., 3], states[..., 4])
        dth = wrap_angle(states[..., 2] - self.headings[idx])
        return np.sum(self.w_p * ep + self.w_v * (v - self.speeds[idx]) ** 2
                      + self.w_theta * dth ** 2, axis=-1)


@dataclass
class PoseTrackCost:
    """Position plus quaternion-orientation tracking.

    References are either constant (1-D ``ref_pos``/``ref_quat``) or tables
    indexed by absolute control step via ``at``; table lookups clamp at the
    last row. The orientation term 1 - (q . q_ref)^2 is double-cover safe,
    and predicted quaternions are renormalized before the dot product.
    """

    ref_pos: np.ndarray
    ref_quat: np.ndarray
    w_p: float = 10.0
    w_q: float = 1.0

    def __post_init__(self):
        _check_weights(w_p=self.w_p, w_q=self.w_q)
        self.ref_pos = np.asarray(self.ref_pos, dtype=np.float64)
        self.ref_quat = np.asarray(self.ref_quat, dtype=np.float64)
        if self.ref_pos.shape[-1] != 3 or self.ref_quat.shape[-1] != 4:
            raise ValueError("references must be 3-vector positions and quaternions")
        if self.ref_pos.ndim != self.ref_quat.ndim:
            raise ValueError("position and quaternion references must both be "
                             "constant or both be time tables")
        if self.ref_pos.ndim == 2 and len(self.ref_pos) != len(self.ref_quat):
            raise ValueError("reference tables must have equal length")

    @staticmethod
    def _window(ref, step, k):
        if ref.ndim == 1:
            return ref
        return ref[np.minimum(step + np.arange(k), len(ref) - 1)]

    def _eval(self, states, rp, rq):
        ep = np.sum((states[..., 0:3] - rp) ** 2, axis=-1)
        q = states[..., 6:10]
        n = np.linalg.norm(q, axis=-1, keepdims=True)
        q = q / np.where(n > 1e-9, n, 1.0)
        dot = np.sum(q * rq, axis=-1)
        return np.sum(self.w_p * ep + self.w_q * (1.0 - dot ** 2), axis=-1)

    def observe(self, obs):
        pass

    def at(self, step):
        if self.ref_pos.ndim == 1:
            return self

        def bound(states, actions):
            k = states.shape[1]
            return self._eval(states, self._window(self.ref_pos, step, k),
                              self._window(self.ref_quat, step, k))

        return bound

    def __call__(self, states, actions):
        k = states.shape[1]
        return self._eval(states, self._window(self.ref_pos, 0, k),
                          self._window(self.ref_quat, 0, k))


@dataclass
class QuadraticCost:
    """Sum of (x - goal)' Q (x - goal) plus u' R u, comparable to LQR."""

    goal: np.ndarray
    Q: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        self.goal = np.asarray(self.goal, dtype=np.float64)
        self.Q = np.asarray(self.Q, dtype=np.float64)
        self.R = np.asarray(self.R, dtype=np.float64)
        d = self.goal.size
        if self.Q.shape != (d, d):
            raise ValueError("Q must be (state_dim, state_dim)")

    def __call__(self, states, actions):
        e = states - self.goal
        c = np.einsum("nki,ij,nkj->n", e, self.Q, e)
        if actions.size:
            c = c + np.einsum("nki,ij,nkj->n", actions, self.R, actions)
        return c

    def observe(self, obs):
        pass

    def at(self, step):
        return self
