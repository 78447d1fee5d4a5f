"""Online adaptation: epsilon-greedy episodes fine-tune the adaptive module."""

from __future__ import annotations

import copy
from dataclasses import dataclass, replace as dc_replace

import numpy as np

from ..control import MPPIConfig, bundle_dynamics, mppi_plan
from ..data import ReplayBuffer
from ..envs import platform_info
from ..models import param_hash
from ..numerics import IntegrationError, Tensor, backward, mean, no_grad
from .optim import Adam

__all__ = ["OnlineConfig", "online_learn"]


@dataclass(frozen=True)
class OnlineConfig:
    """Exploration schedule and update cadence for online fine-tuning."""

    n_episodes: int = 5
    n_steps: int = 200
    epsilon: float = 0.1
    final_episode_greedy: bool = True
    update_period: int = 50
    updates_per_trigger: int = 10
    batch_size: int = 64
    lr: float = 1e-4
    buffer_capacity: int = 50_000

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in [0, 1]")
        for name in ("n_episodes", "n_steps", "update_period",
                     "updates_per_trigger", "batch_size"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not self.lr > 0.0:
            raise ValueError("lr must be positive")
        if self.buffer_capacity <= self.batch_size:
            raise ValueError("buffer capacity must exceed the batch size")


def online_learn(episode_env, bundle, planner_cfg: MPPIConfig,
                 cfg: OnlineConfig, seed: int):
    """Closed-loop episodes with epsilon-greedy actions and periodic updates.

    ``episode_env(i, rng) -> (sim, obs0, cost)`` builds each episode. Every
    step past the warm-up pushes (history window, factors, encoded target)
    into an experience replay; every ``update_period`` global steps the
    adaptive module takes ``updates_per_trigger`` regression steps toward
    the frozen encoder's latents. State net and encoder never change. A
    simulator blow-up aborts the episode (logged, then skipped). Returns
    (bundle with the tuned adaptive module, log dict, buffer).
    """
    if bundle.adaptive is None:
        raise ValueError("online learning needs a phase-2 adaptive module")
    am = copy.deepcopy(bundle.adaptive)
    frozen = (param_hash(bundle.state_net.parameters()),
              param_hash(bundle.encoder.parameters()))
    info = platform_info(bundle.platform)
    window_len = bundle.window_len
    opt = Adam(am.parameters(), lr=cfg.lr)
    buf = ReplayBuffer(cfg.buffer_capacity)
    rng = np.random.default_rng(seed)
    episodes: list[dict] = []
    updates: list[dict] = []
    lo, hi = info.lo, info.hi
    step_count = 0
    for ep in range(cfg.n_episodes):
        env_rng, act_rng, plan_rng, up_rng = rng.spawn(4)
        sim, obs0, cost = episode_env(ep, env_rng)
        greedy = cfg.final_episode_greedy and ep == cfg.n_episodes - 1
        eps = 0.0 if greedy else cfg.epsilon
        obs = np.asarray(obs0, dtype=np.float64).copy()
        states = [obs.copy()]
        acts: list[np.ndarray] = []
        stage: list[float] = []
        n_random = n_planned = n_up = 0
        nominal = np.tile((lo + hi) / 2.0, (planner_cfg.horizon, 1))
        aborted = False
        cost.observe(obs)
        for k in range(cfg.n_steps):
            fac = sim.peek_factors().as_vector()
            win = None
            if k >= window_len:
                win = np.concatenate([np.stack(states[k - window_len:k]),
                                      np.stack(acts[k - window_len:k])],
                                     axis=1)
                with no_grad():
                    z_target = bundle.encoder.encode(fac[None]).data[0]
                buf.push(win, fac, z_target)
            if win is None or act_rng.uniform() < eps:
                u = act_rng.uniform(lo, hi)
                n_random += 1
            else:
                with no_grad():
                    z = am.estimate(win[None]).data[0]
                res = mppi_plan(obs, nominal, bundle_dynamics(bundle, z),
                                cost.at(k), planner_cfg, plan_rng)
                u = res.u_star
                nominal = res.nominal
                n_planned += 1
            try:
                obs, _ = sim.step(u)
            except IntegrationError:
                aborted = True
                break
            states.append(obs.copy())
            acts.append(np.asarray(u, dtype=np.float64).copy())
            stage.append(float(np.asarray(
                cost.at(k + 1)(obs[None, None, :],
                               np.asarray(u)[None, None, :]))[0]))
            cost.observe(obs)
            step_count += 1
            if step_count % cfg.update_period == 0 and len(buf) >= cfg.batch_size:
                loss_v = float("nan")
                for _ in range(cfg.updates_per_trigger):
                    w_b, _, z_b = buf.sample(cfg.batch_size, up_rng)
                    est = am.estimate(w_b, training=True, rng=up_rng)
                    diff = est - Tensor(z_b)
                    loss = mean(diff * diff)
                    loss_v = float(loss.data)
                    opt.zero_grad()
                    backward(loss)
                    opt.step()
                updates.append({"episode": ep, "step": step_count,
                                "loss": loss_v})
                n_up += 1
        episodes.append({
            "episode": ep, "epsilon": eps, "steps": len(acts),
            "aborted": aborted, "n_random": n_random, "n_planned": n_planned,
            "n_updates": n_up,
            "mean_stage_cost": float(np.mean(stage)) if stage else float("nan"),
        })
    now = (param_hash(bundle.state_net.parameters()),
           param_hash(bundle.encoder.parameters()))
    if now != frozen:
        raise RuntimeError("frozen dynamics changed during online learning")
    out = dc_replace(bundle, adaptive=am,
                     meta={**bundle.meta, "online_seed": seed})
    return out, {"episodes": episodes, "updates": updates}, buf
