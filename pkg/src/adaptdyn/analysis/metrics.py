"""Pointwise evaluation metrics shared by the curve and benchmark tooling."""

from __future__ import annotations

import numpy as np

__all__ = ["rmse", "quat_angle_error", "first_reach", "success_rate"]


def rmse(pred, true) -> float:
    """Root-mean-square error over every element of the pair."""
    pred = np.asarray(pred, dtype=np.float64)
    true = np.asarray(true, dtype=np.float64)
    if pred.shape != true.shape:
        raise ValueError(f"shape mismatch {pred.shape} vs {true.shape}")
    return float(np.sqrt(np.mean((pred - true) ** 2)))


def quat_angle_error(q_gt, q_pred):
    """Smallest rotation angle taking q_pred onto q_gt, in [0, pi].

    Both inputs must be unit quaternions, scalar first; stacks of shape
    (..., 4) are handled elementwise. Antipodal quaternions encode the same
    rotation, so q_pred == -q_gt gives 0.
    """
    q_gt = np.asarray(q_gt, dtype=np.float64)
    q_pred = np.asarray(q_pred, dtype=np.float64)
    if q_gt.shape != q_pred.shape or q_gt.shape[-1] != 4:
        raise ValueError(
            f"want matching (..., 4) arrays, got {q_gt.shape} and {q_pred.shape}")
    for name, q in (("q_gt", q_gt), ("q_pred", q_pred)):
        dev = np.abs(np.linalg.norm(q, axis=-1) - 1.0)
        if dev.max() > 1e-6:
            raise ValueError(f"{name} is not unit norm (max deviation {dev.max():.3e})")
    # the scalar part of q_gt composed with the inverse rotation is the
    # plain 4-vector dot product
    w = np.clip(np.abs(np.sum(q_gt * q_pred, axis=-1)), 0.0, 1.0)
    angle = 2.0 * np.arccos(w)
    return float(angle) if angle.ndim == 0 else angle


def first_reach(states: np.ndarray, target, idx, threshold: float) -> int | None:
    """First state index whose selected channels land within threshold of target."""
    states = np.asarray(states, dtype=np.float64)
    target = np.atleast_1d(np.asarray(target, dtype=np.float64))
    if threshold < 0.0:
        raise ValueError(f"threshold must be non-negative, got {threshold}")
    err = np.linalg.norm(states[:, list(idx)] - target, axis=1)
    hits = np.flatnonzero(err <= threshold)
    return int(hits[0]) if hits.size else None


def success_rate(flags) -> float:
    """Fraction of truthy entries; an empty run set is an error, not a zero."""
    flags = [bool(f) for f in flags]
    if not flags:
        raise ValueError("no runs to rate")
    return sum(flags) / len(flags)
