"""Multi-step prediction losses and trajectory-segment batching."""

from __future__ import annotations

import numpy as np

from ..numerics import SolverKind, Tensor, mean, ode_step

__all__ = ["SegmentSampler", "rollout_model", "loss_multistep"]


class SegmentSampler:
    """Uniform sampler over all (trajectory, start) segments of a horizon.

    A segment of horizon h spans states s..s+h, so only trajectories with at
    least h steps contribute start indices.
    """

    def __init__(self, trajectories, horizon: int):
        if horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {horizon}")
        self.horizon = horizon
        self.trajs = list(trajectories)
        self._index = [(ti, s) for ti, t in enumerate(self.trajs)
                       for s in range(len(t) - horizon + 1)]
        if not self._index:
            raise ValueError(
                f"horizon {horizon} exceeds every trajectory length")

    def __len__(self) -> int:
        return len(self._index)

    def gather(self, picks) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        h = self.horizon
        xs, us, es = [], [], []
        for ti, s in picks:
            t = self.trajs[ti]
            xs.append(t.states[s : s + h + 1])
            us.append(t.actions[s : s + h])
            es.append(t.envs[s : s + h])
        return np.stack(xs), np.stack(us), np.stack(es)

    def sample(self, batch_size: int, rng: np.random.Generator):
        idx = rng.choice(len(self._index), size=batch_size,
                         replace=len(self._index) < batch_size)
        return self.gather(self._index[i] for i in idx)

    def all(self, cap: int | None = None, rng: np.random.Generator | None = None):
        """Every segment, optionally subsampled without replacement to `cap`."""
        picks = self._index
        if cap is not None and len(picks) > cap:
            idx = rng.choice(len(picks), size=cap, replace=False)
            picks = [picks[i] for i in idx]
        return self.gather(picks)


def rollout_model(state_net, encoder, x0, u_seq: np.ndarray, e_seq: np.ndarray,
                  solver: SolverKind, kind: str = "node") -> list[Tensor]:
    """Open-loop rollout of the learned model; returns predicted states 1..h.

    Each step encodes that step's privileged factors and either integrates
    the field (kind "node") or applies the discrete map (kind "mlp").
    """
    x = x0 if isinstance(x0, Tensor) else Tensor(np.asarray(x0, dtype=np.float64))
    h = u_seq.shape[1]
    out = []
    for i in range(h):
        z = encoder.encode(e_seq[:, i])
        if kind == "node":
            x = ode_step(lambda xt, ut, zt, tt: state_net.derivative(xt, ut, zt),
                         x, u_seq[:, i], z, 0.0, solver)
        else:
            x = state_net.predict_next(x, u_seq[:, i], z)
        out.append(x)
    return out


def loss_multistep(state_net, encoder, x_seg: np.ndarray, u_seg: np.ndarray,
                   e_seg: np.ndarray, solver: SolverKind, kind: str = "node") -> Tensor:
    """Rollout MSE in normalized state units, averaged over steps and batch.

    x_seg: (B, h+1, sd) ground truth; u_seg: (B, h, ad); e_seg: (B, h, ed).
    """
    if x_seg.shape[1] != u_seg.shape[1] + 1:
        raise ValueError(f"segment needs h+1 states for h actions, got "
                         f"{x_seg.shape[1]} states, {u_seg.shape[1]} actions")
    norm = state_net.x_norm
    preds = rollout_model(state_net, encoder, x_seg[:, 0], u_seg, e_seg, solver, kind)
    total = None
    for i, x_hat in enumerate(preds):
        diff = norm.apply(x_hat) - Tensor(norm.apply(x_seg[:, i + 1]))
        term = mean(diff * diff)
        total = term if total is None else total + term
    return total * (1.0 / len(preds))
