"""Closed-loop episode execution with history warm-start and latent selection."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..envs import platform_info
from ..numerics import IntegrationError, no_grad
from .mppi import MPPIConfig, bundle_dynamics, mppi_plan

__all__ = ["EpisodeLog", "run_episode", "MODES"]

MODES = ("adaptive", "privileged", "fixed")


@dataclass
class EpisodeLog:
    """Everything one closed-loop run produced, row-aligned by control step."""

    platform: str
    mode: str
    states: np.ndarray       # (t+1, state_dim)
    actions: np.ndarray      # (t, action_dim)
    envs: np.ndarray         # (t, env_dim) privileged factors in effect
    latents: np.ndarray      # (t, latent_dim); nan rows for random steps
    stage_costs: np.ndarray  # (t,) realized cost of each reached state
    aborted: bool = False
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.actions)


def run_episode(sim, obs0, bundle, cost, cfg: MPPIConfig, n_steps: int,
                seed: int, mode: str = "adaptive",
                warmup: int | None = None) -> EpisodeLog:
    """Run one closed-loop episode of ``n_steps`` on the true simulator.

    The first ``warmup`` steps (default: the history window length) apply
    uniform random actions to fill the history before planning starts.
    ``mode`` picks the latent source: "adaptive" re-estimates from the
    history window each step, "privileged" encodes the true factors, and
    "fixed" freezes the encoding of the initial factors. A simulator
    blow-up truncates the log and marks it aborted.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}, want one of {MODES}")
    if mode == "adaptive" and bundle.adaptive is None:
        raise ValueError("adaptive mode requires a trained adaptive module")
    info = platform_info(bundle.platform)
    window_len = bundle.window_len
    warm = window_len if warmup is None else int(warmup)
    if mode == "adaptive" and warm < window_len:
        raise ValueError("warm-up must cover the history window")
    rng = np.random.default_rng(seed)
    warm_rng, plan_rng = rng.spawn(2)
    lo, hi = info.lo, info.hi
    obs = np.asarray(obs0, dtype=np.float64).copy()
    states = [obs.copy()]
    actions: list[np.ndarray] = []
    envs: list[np.ndarray] = []
    lats: list[np.ndarray] = []
    stages: list[float] = []
    nominal = np.tile((lo + hi) / 2.0, (cfg.horizon, 1))
    z_fixed = None
    aborted = False
    cost.observe(obs)
    for k in range(n_steps):
        fac = sim.peek_factors().as_vector()
        if mode == "fixed" and z_fixed is None:
            with no_grad():
                z_fixed = bundle.encoder.encode(fac[None]).data[0]
        if k < warm:
            u = warm_rng.uniform(lo, hi)
            z = None
        else:
            if mode == "adaptive":
                win = np.concatenate([np.stack(states[k - window_len:k]),
                                      np.stack(actions[k - window_len:k])],
                                     axis=1)
                with no_grad():
                    z = bundle.adaptive.estimate(win[None]).data[0]
            elif mode == "privileged":
                with no_grad():
                    z = bundle.encoder.encode(fac[None]).data[0]
            else:
                z = z_fixed
            res = mppi_plan(obs, nominal, bundle_dynamics(bundle, z),
                            cost.at(k), cfg, plan_rng)
            u = res.u_star
            nominal = res.nominal
        try:
            obs, _ = sim.step(u)
        except IntegrationError:
            aborted = True
            break
        states.append(obs.copy())
        actions.append(np.asarray(u, dtype=np.float64).copy())
        envs.append(fac)
        lats.append(np.full(bundle.latent_dim, np.nan) if z is None
                    else np.asarray(z, dtype=np.float64).copy())
        stages.append(float(np.asarray(
            cost.at(k + 1)(obs[None, None, :],
                           np.asarray(u)[None, None, :]))[0]))
        cost.observe(obs)
    t = len(actions)
    return EpisodeLog(
        platform=bundle.platform, mode=mode,
        states=np.array(states).reshape(t + 1, info.state_dim),
        actions=np.array(actions).reshape(t, info.action_dim),
        envs=np.array(envs).reshape(t, info.env_dim),
        latents=np.array(lats).reshape(t, bundle.latent_dim),
        stage_costs=np.array(stages, dtype=np.float64),
        aborted=aborted,
        meta={"seed": seed, "n_steps": n_steps, "warmup": warm,
              "kind": bundle.kind},
    )
