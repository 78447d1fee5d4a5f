from dataclasses import dataclass

import numpy as np

from . import diffdrive, msd, quad
from .diffdrive import (
    DEFAULT_GAINS,
    NON_SLIPPERY,
    SLIPPERY,
    DiffDriveParams,
    DiffDriveSim,
    core_from_obs,
    diffdrive_field,
    diffdrive_lowlevel,
    traction,
)
from .factors import (
    Constant,
    DiffDriveFactors,
    DissipatingBrownianWind,
    MassSwitch,
    MSDFactors,
    PiecewiseConstantSpatial,
    PIDGains,
    QuadFactors,
    RadialContinuous,
    SinusoidalWind,
    TimeVarying,
    WheelFriction,
    env_at,
    factor_from_spec,
    factor_spec,
    schedule_from_spec,
    schedule_spec,
)
from .msd import MSDParams, MSDSim, msd_field, msd_matrices, msd_step
from .quad import HOVER_OBS, QuadParams, QuadSim, quad_field


@dataclass(frozen=True)
class PlatformInfo:
    """Dimensions, rates and channel layout of one simulated platform."""

    name: str
    state_dim: int
    action_dim: int
    env_dim: int
    dt: float
    action_low: tuple
    action_high: tuple
    pos_idx: tuple  # position channels of the observed state
    vel_idx: tuple  # velocity channels
    ang_idx: tuple  # heading channel (diff drive) — quad uses the quaternion block
    quat_slice: tuple | None = None  # (start, stop) of the quaternion, if any

    @property
    def lo(self) -> np.ndarray:
        return np.array(self.action_low)

    @property
    def hi(self) -> np.ndarray:
        return np.array(self.action_high)


_HOVER_THRUST = QuadParams().m * QuadParams().g

PLATFORMS = {
    "msd": PlatformInfo(
        name="msd", state_dim=2, action_dim=1, env_dim=1, dt=msd.DT_DEFAULT,
        action_low=(-5.0,), action_high=(5.0,),
        pos_idx=(0,), vel_idx=(1,), ang_idx=(),
    ),
    "diffdrive": PlatformInfo(
        name="diffdrive", state_dim=6, action_dim=2, env_dim=6, dt=diffdrive.DT_DEFAULT,
        action_low=(-1.0, -1.0), action_high=(1.0, 1.0),
        pos_idx=(0, 1), vel_idx=(3, 4, 5), ang_idx=(2,),
    ),
    "quad": PlatformInfo(
        name="quad", state_dim=10, action_dim=4, env_dim=3, dt=quad.DT_DEFAULT,
        action_low=(0.5 * _HOVER_THRUST, -1.0, -1.0, -1.0),
        action_high=(1.5 * _HOVER_THRUST, 1.0, 1.0, 1.0),
        pos_idx=(0, 1, 2), vel_idx=(3, 4, 5), ang_idx=(), quat_slice=(6, 10),
    ),
}


def platform_info(name: str) -> PlatformInfo:
    try:
        return PLATFORMS[name]
    except KeyError:
        raise ValueError(f"unknown platform {name!r}, want one of {sorted(PLATFORMS)}") from None


def make_sim(platform: str, schedule, dt: float | None = None):
    """Simulator for a platform name, driven by the given factor schedule."""
    info = platform_info(platform)
    step = info.dt if dt is None else float(dt)
    if platform == "msd":
        return MSDSim(schedule, dt=step)
    if platform == "diffdrive":
        return DiffDriveSim(schedule, dt=step)
    return QuadSim(schedule, dt=step)


def reset_to_observation(sim, obs: np.ndarray) -> np.ndarray:
    """Reset a simulator so its next observation equals `obs`."""
    if sim.platform == "diffdrive":
        return sim.reset(core_from_obs(obs))
    return sim.reset(np.asarray(obs, dtype=np.float64))


def project_states(platform: str, states: np.ndarray) -> np.ndarray:
    """Re-impose state-manifold constraints on model-predicted states.

    Quadrotor quaternions are renormalized (degenerate norms fall back to
    identity); other platforms are unconstrained.
    """
    info = platform_info(platform)
    if info.quat_slice is None:
        return states
    lo, hi = info.quat_slice
    q = states[..., lo:hi]
    norm = np.linalg.norm(q, axis=-1, keepdims=True)
    bad = ~np.isfinite(norm) | (norm < 1e-8)
    safe = np.where(bad, 1.0, norm)
    q = q / safe
    if np.any(bad):
        q = np.where(bad, np.array([1.0, 0.0, 0.0, 0.0]), q)
    out = states.copy()
    out[..., lo:hi] = q
    return out


__all__ = [
    "PlatformInfo",
    "PLATFORMS",
    "platform_info",
    "project_states",
    "env_at",
    "Constant",
    "PiecewiseConstantSpatial",
    "RadialContinuous",
    "TimeVarying",
    "SinusoidalWind",
    "DissipatingBrownianWind",
    "MassSwitch",
    "MSDFactors",
    "WheelFriction",
    "DiffDriveFactors",
    "QuadFactors",
    "PIDGains",
    "MSDParams",
    "MSDSim",
    "msd_matrices",
    "msd_field",
    "msd_step",
    "DiffDriveParams",
    "DiffDriveSim",
    "DEFAULT_GAINS",
    "SLIPPERY",
    "NON_SLIPPERY",
    "diffdrive_lowlevel",
    "diffdrive_field",
    "traction",
    "QuadParams",
    "QuadSim",
    "quad_field",
    "HOVER_OBS",
    "factor_spec",
    "factor_from_spec",
    "schedule_spec",
    "schedule_from_spec",
    "core_from_obs",
    "make_sim",
    "reset_to_observation",
]
