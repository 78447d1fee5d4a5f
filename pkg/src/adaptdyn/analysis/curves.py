"""Long-horizon open-loop prediction error, split by state channel group."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from ..control import wrap_angle
from ..envs import platform_info
from ..numerics import Tensor, no_grad, ode_step
from ..training import SegmentSampler, rollout_model
from .metrics import quat_angle_error

__all__ = ["ErrorCurve", "error_curve", "write_curve_csv", "read_curve_csv"]


@dataclass(frozen=True)
class ErrorCurve:
    """Per-horizon RMSE rows; `ang` is None on platforms without an attitude."""

    horizons: np.ndarray
    pos: np.ndarray
    vel: np.ndarray
    ang: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "horizons", np.asarray(self.horizons, dtype=int))
        object.__setattr__(self, "pos", np.asarray(self.pos, dtype=np.float64))
        object.__setattr__(self, "vel", np.asarray(self.vel, dtype=np.float64))
        if self.ang is not None:
            object.__setattr__(self, "ang", np.asarray(self.ang, dtype=np.float64))
        want = np.arange(1, self.horizons.size + 1)
        if self.horizons.size == 0 or not np.array_equal(self.horizons, want):
            raise ValueError("horizons must run 1..H without gaps")
        for name in ("pos", "vel", "ang"):
            arr = getattr(self, name)
            if arr is not None and arr.shape != self.horizons.shape:
                raise ValueError(f"{name} needs one entry per horizon, got {arr.shape}")

    def __len__(self) -> int:
        return int(self.horizons.size)


def _windowed_segments(trajs, window_len: int, horizon: int, cap, rng):
    picks = [(ti, s) for ti, t in enumerate(trajs)
             for s in range(window_len, len(t) - horizon + 1)]
    if not picks:
        raise ValueError(f"window {window_len} plus horizon {horizon} "
                         f"exceeds every trajectory length")
    if cap is not None and len(picks) > cap:
        idx = rng.choice(len(picks), size=cap, replace=False)
        picks = [picks[i] for i in idx]
    xs, us, ws = [], [], []
    for ti, s in picks:
        t = trajs[ti]
        xs.append(t.states[s : s + horizon + 1])
        us.append(t.actions[s : s + horizon])
        ws.append(np.concatenate([t.states[s - window_len : s],
                                  t.actions[s - window_len : s]], axis=1))
    return np.stack(xs), np.stack(us), np.stack(ws)


def _rollout_fixed_z(bundle, x0: np.ndarray, u_seq: np.ndarray, z) -> list:
    x = Tensor(np.asarray(x0, dtype=np.float64))
    net, solver = bundle.state_net, bundle.solver
    out = []
    for i in range(u_seq.shape[1]):
        if bundle.kind == "node":
            x = ode_step(lambda xt, ut, zt, tt: net.derivative(xt, ut, zt),
                         x, u_seq[:, i], z, 0.0, solver)
        else:
            x = net.predict_next(x, u_seq[:, i], z)
        out.append(x)
    return out


def error_curve(bundle, dataset, max_horizon: int = 20, cap: int | None = None,
                rng: np.random.Generator | None = None,
                latents: str = "privileged") -> ErrorCurve:
    """RMSE of open-loop model rollouts against held-out trajectories.

    Every segment start contributes a rollout; errors aggregate per horizon
    into position / velocity / angle groups, with quaternion attitudes
    scored by geodesic angle. `cap` subsamples segments to limit cost.

    `latents` picks where z comes from: "privileged" encodes each step's
    true factors, "adaptive" estimates z once from the history window
    preceding each segment and holds it over the rollout, which is all a
    deployed planner would know. Adaptive segments must leave room for the
    window, so they start `window_len` steps into each trajectory.
    """
    if latents not in ("privileged", "adaptive"):
        raise ValueError(f"unknown latent source {latents!r}")
    info = platform_info(bundle.platform)
    trajs = getattr(dataset, "trajectories", dataset)
    if latents == "adaptive":
        if bundle.adaptive is None:
            raise ValueError("adaptive curves need a trained adaptive module")
        x_seg, u_seg, wins = _windowed_segments(trajs, bundle.window_len,
                                                max_horizon, cap, rng)
        with no_grad():
            z = bundle.adaptive.estimate(wins)
            preds = _rollout_fixed_z(bundle, x_seg[:, 0], u_seg, z)
    else:
        sampler = SegmentSampler(trajs, max_horizon)
        x_seg, u_seg, e_seg = sampler.all(cap=cap, rng=rng)
        with no_grad():
            preds = rollout_model(bundle.state_net, bundle.encoder, x_seg[:, 0],
                                  u_seg, e_seg, bundle.solver, bundle.kind)
    pos_idx, vel_idx, ang_idx = list(info.pos_idx), list(info.vel_idx), list(info.ang_idx)
    has_ang = bool(ang_idx) or info.quat_slice is not None
    pos, vel, ang = [], [], []
    for i, pred in enumerate(preds):
        diff = pred.data - x_seg[:, i + 1]
        pos.append(float(np.sqrt(np.mean(diff[:, pos_idx] ** 2))))
        vel.append(float(np.sqrt(np.mean(diff[:, vel_idx] ** 2))))
        if info.quat_slice is not None:
            lo, hi = info.quat_slice
            q_hat = pred.data[:, lo:hi]
            # the net's quaternion block drifts off the unit sphere; compare
            # directions, as any downstream consumer would renormalize too
            q_hat = q_hat / np.maximum(np.linalg.norm(q_hat, axis=1, keepdims=True), 1e-9)
            angles = quat_angle_error(x_seg[:, i + 1, lo:hi], q_hat)
            ang.append(float(np.sqrt(np.mean(angles**2))))
        elif ang_idx:
            dth = wrap_angle(diff[:, ang_idx])
            ang.append(float(np.sqrt(np.mean(dth**2))))
    return ErrorCurve(np.arange(1, len(preds) + 1), np.asarray(pos), np.asarray(vel),
                      np.asarray(ang) if has_ang else None)


_CSV_FIELDS = ("horizon", "pos_rmse", "vel_rmse", "ang_rmse")


def write_curve_csv(curve: ErrorCurve, path) -> None:
    """One row per horizon; the angle column stays empty when absent."""
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=_CSV_FIELDS)
        writer.writeheader()
        for i, h in enumerate(curve.horizons):
            writer.writerow({
                "horizon": int(h),
                "pos_rmse": repr(float(curve.pos[i])),
                "vel_rmse": repr(float(curve.vel[i])),
                "ang_rmse": "" if curve.ang is None else repr(float(curve.ang[i])),
            })


def read_curve_csv(path) -> ErrorCurve:
    """Inverse of write_curve_csv."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"no curve rows in {path}")
    horizons = np.array([int(r["horizon"]) for r in rows])
    pos = np.array([float(r["pos_rmse"]) for r in rows])
    vel = np.array([float(r["vel_rmse"]) for r in rows])
    ang = None
    if rows[0]["ang_rmse"] != "":
        ang = np.array([float(r["ang_rmse"]) for r in rows])
    return ErrorCurve(horizons, pos, vel, ang)
