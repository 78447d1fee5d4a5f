"""Offline data collection: 50-step random-action episodes per platform."""

from __future__ import annotations

import numpy as np

from ..envs import (
    NON_SLIPPERY,
    SLIPPERY,
    Constant,
    DiffDriveSim,
    MSDFactors,
    MSDSim,
    QuadFactors,
    QuadSim,
    platform_info,
    schedule_spec,
)
from .dataset import Dataset, Trajectory

__all__ = ["collect_msd", "collect_diffdrive", "collect_quad"]

TRAJ_STEPS = 50


def _run(sim, obs0: np.ndarray, actions: np.ndarray, meta: dict) -> Trajectory:
    states = np.empty((actions.shape[0] + 1, obs0.size))
    states[0] = obs0
    envs = np.empty((actions.shape[0], sim.peek_factors().as_vector().size))
    for k, u in enumerate(actions):
        obs, fac = sim.step(u)
        states[k + 1] = obs
        envs[k] = fac.as_vector()
    return Trajectory(states, actions, envs, meta)


def collect_msd(rng: np.random.Generator, pos_grid: int = 5, vel_grid: int = 5,
                n_masses: int = 8, mass_range: tuple = (1.0, 4.0),
                n_steps: int = TRAJ_STEPS, action_bound: float = 5.0) -> Dataset:
    """Grid of initial (position, velocity) x sampled masses, i.i.d. forces."""
    masses = rng.uniform(mass_range[0], mass_range[1], size=n_masses)
    inits = [(p0, v0) for p0 in np.linspace(-1.0, 1.0, pos_grid)
             for v0 in np.linspace(-1.0, 1.0, vel_grid)]
    streams = rng.spawn(len(inits) * n_masses)
    trajs = []
    for i, (p0, v0) in enumerate(inits):
        for j, m in enumerate(masses):
            child = streams[i * n_masses + j]
            schedule = Constant(MSDFactors(float(m)))
            sim = MSDSim(schedule)
            obs0 = sim.reset(np.array([p0, v0]))
            actions = child.uniform(-action_bound, action_bound, size=(n_steps, 1))
            meta = {"schedule": schedule_spec(schedule), "init": [float(p0), float(v0)]}
            trajs.append(_run(sim, obs0, actions, meta))
    return Dataset("msd", trajs, {"protocol": "msd_grid", "n_steps": n_steps,
                                  "mass_range": list(map(float, mass_range))})


def collect_diffdrive(rng: np.random.Generator, pos_grid: int = 11, n_headings: int = 8,
                      surfaces=None, workspace: float = 1.0,
                      n_steps: int = TRAJ_STEPS) -> Dataset:
    """Gridded poses on each training surface, one random command held per episode."""
    if surfaces is None:
        surfaces = (SLIPPERY, NON_SLIPPERY)
    coords = np.linspace(-workspace, workspace, pos_grid)
    headings = np.linspace(-np.pi, np.pi, n_headings, endpoint=False)
    cells = [(x, y, th, surf) for surf in surfaces for x in coords for y in coords
             for th in headings]
    streams = rng.spawn(len(cells))
    trajs = []
    for child, (x, y, th, surf) in zip(streams, cells):
        schedule = Constant(surf)
        sim = DiffDriveSim(schedule)
        obs0 = sim.reset(np.array([x, y, th, 0.0, 0.0]))
        u = child.uniform(-1.0, 1.0, size=2)
        actions = np.tile(u, (n_steps, 1))
        meta = {"schedule": schedule_spec(schedule),
                "init": [float(x), float(y), float(th), 0.0, 0.0]}
        trajs.append(_run(sim, obs0, actions, meta))
    return Dataset("diffdrive", trajs,
                   {"protocol": "diffdrive_grid", "n_steps": n_steps,
                    "pos_grid": pos_grid, "n_headings": n_headings})


def collect_quad(rng: np.random.Generator, n_trajectories: int = 2000,
                 wind_range: float = 1.0, n_steps: int = TRAJ_STEPS,
                 max_tilt: float = 0.25) -> Dataset:
    """Random starts and i.i.d. commands under a constant per-episode wind."""
    info = platform_info("quad")
    streams = rng.spawn(n_trajectories) if n_trajectories else []
    trajs = []
    for child in streams:
        wind = child.uniform(-wind_range, wind_range, size=3)
        p = child.uniform(-1.0, 1.0, size=3)
        v = child.uniform(-1.0, 1.0, size=3)
        axis = child.standard_normal(3)
        axis /= max(np.linalg.norm(axis), 1e-12)
        half = 0.5 * child.uniform(0.0, max_tilt)
        q = np.concatenate([[np.cos(half)], np.sin(half) * axis])
        schedule = Constant(QuadFactors(wind))
        sim = QuadSim(schedule)
        obs0 = sim.reset(np.concatenate([p, v, q]))
        actions = child.uniform(info.lo, info.hi, size=(n_steps, 4))
        meta = {"schedule": schedule_spec(schedule), "init": obs0.tolist()}
        trajs.append(_run(sim, obs0, actions, meta))
    return Dataset("quad", trajs, {"protocol": "quad_random", "n_steps": n_steps,
                                   "wind_range": float(wind_range)})
