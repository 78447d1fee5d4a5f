"""Sampling-based planner: perturb a nominal sequence, roll out, softmax-average."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..envs import platform_info, project_states
from ..numerics import no_grad

__all__ = ["MPPIConfig", "ControlResult", "PlannerError", "mppi_plan",
           "bundle_dynamics", "mppi_defaults"]


class PlannerError(RuntimeError):
    """No sampled trajectory produced a finite cost."""


@dataclass(frozen=True)
class MPPIConfig:
    horizon: int
    n_samples: int
    temperature: float
    sigma: tuple
    action_low: tuple
    action_high: tuple

    def __post_init__(self):
        object.__setattr__(self, "sigma", tuple(float(v) for v in self.sigma))
        object.__setattr__(self, "action_low", tuple(float(v) for v in self.action_low))
        object.__setattr__(self, "action_high", tuple(float(v) for v in self.action_high))
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if not self.temperature > 0.0:
            raise ValueError("temperature must be positive")
        if not (len(self.sigma) == len(self.action_low) == len(self.action_high)):
            raise ValueError("sigma and action bounds must share one length")
        if any(s <= 0.0 for s in self.sigma):
            raise ValueError("sigma must be positive elementwise")
        if any(lo >= hi for lo, hi in zip(self.action_low, self.action_high)):
            raise ValueError("action bounds must satisfy low < high")

    @property
    def action_dim(self) -> int:
        return len(self.sigma)

    @property
    def lo(self) -> np.ndarray:
        return np.array(self.action_low)

    @property
    def hi(self) -> np.ndarray:
        return np.array(self.action_high)


@dataclass
class ControlResult:
    """One plan: first action to apply plus the evidence behind it."""

    u_star: np.ndarray
    costs: np.ndarray
    weights: np.ndarray
    nominal: np.ndarray  # shifted weighted-average sequence, next warm start
    u_sequence: np.ndarray


_DEFAULTS = {
    ("msd", "goal"): dict(horizon=20, n_samples=1000, temperature=1e-3,
                          sigma=(0.4,)),
    ("diffdrive", "goal"): dict(horizon=20, n_samples=500, temperature=1e-2,
                                sigma=(0.1, 0.1)),
    ("diffdrive", "path"): dict(horizon=15, n_samples=800, temperature=1e-4,
                                sigma=(0.5, 0.3)),
    ("diffdrive", "velocity"): dict(horizon=20, n_samples=800, temperature=1e-4,
                                    sigma=(0.2, 0.1)),
    ("quad", "goal"): dict(horizon=40, n_samples=4096, temperature=0.05,
                           sigma=(0.25, 0.7, 0.7, 0.7)),
    ("quad", "path"): dict(horizon=40, n_samples=4096, temperature=0.05,
                           sigma=(0.25, 0.7, 0.7, 0.7)),
}


def mppi_defaults(platform: str, task: str) -> MPPIConfig:
    """Planner hyperparameters per (platform, task), bounds from the platform."""
    try:
        d = _DEFAULTS[(platform, task)]
    except KeyError:
        raise ValueError(f"no planner defaults for {(platform, task)!r}, "
                         f"want one of {sorted(_DEFAULTS)}") from None
    info = platform_info(platform)
    return MPPIConfig(action_low=tuple(info.action_low),
                      action_high=tuple(info.action_high), **d)


def bundle_dynamics(bundle, z):
    """Batched rollout closure (x0, actions (n, h, ad)) -> states (n, h+1, sd).

    The latent ``z`` is held fixed over the horizon. Non-finite predictions
    are left in place so the cost can discard those samples; quaternion
    blocks are renormalized after every step.
    """
    net = bundle.state_net
    platform, dt, method, kind = (bundle.platform, bundle.dt,
                                  bundle.solver_method, bundle.kind)
    z = np.asarray(getattr(z, "data", z), dtype=np.float64).reshape(-1)

    def deriv(xb, ub, zb):
        return net.derivative(xb, ub, zb).data

    def rollout(x0, actions):
        n, h, _ = actions.shape
        x = np.tile(np.asarray(x0, dtype=np.float64), (n, 1))
        zb = np.tile(z, (n, 1))
        out = np.empty((n, h + 1, x.shape[1]))
        out[:, 0] = x
        with no_grad():
            for i in range(h):
                u = actions[:, i]
                if kind == "mlp":
                    x = net.predict_next(x, u, zb).data
                elif method == "rk4":
                    k1 = deriv(x, u, zb)
                    k2 = deriv(x + (0.5 * dt) * k1, u, zb)
                    k3 = deriv(x + (0.5 * dt) * k2, u, zb)
                    k4 = deriv(x + dt * k3, u, zb)
                    x = x + (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
                else:
                    x = x + dt * deriv(x, u, zb)
                x = project_states(platform, x)
                out[:, i + 1] = x
        return out

    return rollout


def mppi_plan(x, nominal, dynamics, cost, cfg: MPPIConfig,
              rng: np.random.Generator) -> ControlResult:
    """One receding-horizon plan from state ``x`` around ``nominal``.

    Samples nominal + N(0, sigma) sequences clipped to the action bounds,
    rolls them out through ``dynamics``, and softmax-averages by cost with
    min-cost subtraction. Non-finite costs get zero weight; if none are
    finite, raises PlannerError. All noise comes from one vectorized draw of
    ``rng``, so the result is reproducible regardless of how rollouts run.
    """
    lo, hi = cfg.lo, cfg.hi
    nominal = np.asarray(nominal, dtype=np.float64)
    if nominal.shape != (cfg.horizon, cfg.action_dim):
        raise ValueError(f"nominal must be {(cfg.horizon, cfg.action_dim)}, "
                         f"got {nominal.shape}")
    noise = rng.normal(size=(cfg.n_samples, cfg.horizon, cfg.action_dim))
    samples = np.clip(nominal[None] + noise * np.asarray(cfg.sigma), lo, hi)
    with np.errstate(over="ignore", invalid="ignore"):
        states = dynamics(np.asarray(x, dtype=np.float64), samples)
        costs = np.asarray(cost(states, samples),
                           dtype=np.float64).reshape(cfg.n_samples)
    costs = np.where(np.isfinite(costs), costs, np.inf)
    finite = np.isfinite(costs)
    if not np.any(finite):
        raise PlannerError("every sampled trajectory has non-finite cost")
    w = np.exp(-(costs - costs[finite].min()) / cfg.temperature)
    w = w / w.sum()
    u_seq = np.tensordot(w, samples, axes=(0, 0))
    warm = np.concatenate([u_seq[1:], u_seq[-1:]], axis=0)
    return ControlResult(u_star=u_seq[0].copy(), costs=costs, weights=w,
                         nominal=warm, u_sequence=u_seq)
