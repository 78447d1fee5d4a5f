"""Run configuration: YAML schema, per-platform defaults, and object builders."""

from __future__ import annotations

import copy
from dataclasses import asdict, replace as dc_replace
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from .control import (
    GoalReachCost,
    MPPIConfig,
    PathTrackCost,
    PoseTrackCost,
    QuadraticCost,
    VelocityCost,
    circle_refs,
    mppi_defaults,
    stadium_path,
)
from .envs import NON_SLIPPERY, schedule_from_spec
from .training import (
    OnlineConfig,
    Phase1Config,
    Phase2Config,
    WINDOW_LEN,
    phase1_defaults,
    phase2_defaults,
)

__all__ = [
    "ConfigError",
    "RunConfig",
    "PLATFORMS",
    "CONTROL_MODES",
    "default_config",
    "deep_merge",
    "load_config",
    "resolve_config",
    "build_phase1",
    "build_phase2",
    "build_online",
    "build_mppi",
    "build_cost",
    "build_schedule",
]

PLATFORMS = ("msd", "diffdrive", "quad")

# command-line mode name -> (required model kind, episode latent mode)
CONTROL_MODES = {
    "adnode-phase2": ("node", "adaptive"),
    "adnode-phase1-privileged": ("node", "privileged"),
    "fixed-node": ("node", "fixed"),
    "mlp-phase1": ("mlp", "privileged"),
    "mlp-phase2": ("mlp", "adaptive"),
}

_TOP_KEYS = ("platform", "seed", "out", "model", "inputs", "collect", "phase1",
             "phase2", "control", "online", "analyze")


class ConfigError(ValueError):
    """A configuration value is missing, malformed, or inconsistent."""


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved configuration tree for one command invocation."""

    platform: str
    seed: int
    raw: dict

    def section(self, name: str) -> dict:
        return self.raw[name]


_COLLECT_DEFAULTS = {
    "msd": {"pos_grid": 5, "vel_grid": 5, "n_masses": 8,
            "mass_range": [1.0, 4.0], "n_steps": 100, "action_bound": 5.0},
    "diffdrive": {"pos_grid": 11, "n_headings": 8, "workspace": 1.0,
                  "n_steps": 100},
    "quad": {"n_trajectories": 2000, "wind_range": 1.0, "n_steps": 100,
             "max_tilt": 0.25},
}

_TASK_DEFAULTS = {
    "msd": {
        "task": "goal",
        "x0": [1.0, 0.0],
        "schedule": {"kind": "constant", "value": {"kind": "msd", "vector": [2.0]}},
        "cost": {"goal": [0.0, 0.0], "q_diag": [1.0, 0.1], "r_diag": [0.1]},
        "success_threshold": 0.01,
    },
    "diffdrive": {
        "task": "goal",
        "x0": [-0.75, -0.75, 0.0, 0.0, 0.0],
        "schedule": {"kind": "constant",
                     "value": {"kind": "diffdrive",
                               "vector": NON_SLIPPERY.as_vector().tolist()}},
        "cost": {"goal": [0.75, 0.75], "w_v": 1.0, "w_theta": 0.5,
                 "v_gain": 1.0, "v_cap": 0.3},
        "success_threshold": 0.01,
    },
    "quad": {
        "task": "goal",
        "x0": [0.5, 0.5, 0.3, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0],
        "schedule": {"kind": "constant",
                     "value": {"kind": "quad", "vector": [0.5, 0.0, 0.0]}},
        "cost": {"ref_pos": [0.0, 0.0, 0.0], "ref_quat": [1.0, 0.0, 0.0, 0.0],
                 "w_p": 10.0, "w_q": 1.0},
        "success_threshold": 0.05,
    },
}


def default_config(platform: str, kind: str = "node") -> dict:
    """The full configuration tree with every value at its platform default."""
    if platform not in PLATFORMS:
        raise ConfigError(f"unknown platform {platform!r}, want one of {PLATFORMS}")
    if kind not in ("node", "mlp"):
        raise ConfigError(f"unknown model kind {kind!r}, want node or mlp")
    task = copy.deepcopy(_TASK_DEFAULTS[platform])
    return {
        "platform": platform,
        "seed": 0,
        "out": None,
        "model": {"kind": kind, "window_len": WINDOW_LEN[platform]},
        "inputs": {},
        "collect": copy.deepcopy(_COLLECT_DEFAULTS[platform]),
        "phase1": asdict(phase1_defaults(platform, kind)),
        "phase2": asdict(phase2_defaults(platform, kind)),
        "control": {**copy.deepcopy(task), "mode": "adnode-phase2",
                    "n_episodes": 20, "n_steps": 200, "warmup": None, "mppi": {}},
        "online": {**asdict(OnlineConfig()), **copy.deepcopy(task), "mppi": {}},
        "analyze": {"max_horizon": 20, "cap": 2000, "latents": "privileged",
                    "bounds": None, "bound_check": None},
    }


def deep_merge(base: dict, override: dict) -> dict:
    """Recursive dict merge; non-dict override values replace wholesale."""
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def load_config(path) -> dict:
    """Parse a YAML config file into a plain tree; empty files give {}."""
    text = Path(path).read_text()
    try:
        tree = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML ({exc})") from None
    if tree is None:
        return {}
    if not isinstance(tree, dict):
        raise ConfigError(f"{path}: top level must be a mapping, got "
                          f"{type(tree).__name__}")
    return tree


def resolve_config(file_cfg: dict | None, overrides: dict | None = None) -> RunConfig:
    """Layer defaults <- file <- flag overrides into one validated tree.

    The platform and model kind are read first because they pick which
    default table everything else merges onto.
    """
    file_cfg = file_cfg or {}
    overrides = overrides or {}
    for tree, source in ((file_cfg, "config file"), (overrides, "flags")):
        unknown = set(tree) - set(_TOP_KEYS)
        if unknown:
            raise ConfigError(f"unknown {source} keys {sorted(unknown)}, "
                              f"want a subset of {list(_TOP_KEYS)}")
    pre = deep_merge(file_cfg, overrides)
    platform = pre.get("platform", "msd")
    kind = pre.get("model", {}).get("kind", "node")
    raw = deep_merge(deep_merge(default_config(platform, kind), file_cfg), overrides)
    seed = raw["seed"]
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError(f"seed must be a non-negative integer, got {seed!r}")
    return RunConfig(platform=platform, seed=seed, raw=raw)


def _tupled(d: dict) -> dict:
    return {k: tuple(v) if isinstance(v, list) else v for k, v in d.items()}


def _make(cls, d: dict, where: str):
    try:
        return cls(**_tupled(d))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad {where} section: {exc}") from None


def build_phase1(cfg: RunConfig) -> Phase1Config:
    return _make(Phase1Config, cfg.section("phase1"), "phase1")


def build_phase2(cfg: RunConfig) -> Phase2Config:
    return _make(Phase2Config, cfg.section("phase2"), "phase2")


# keys of the online/control sections that configure the episode environment
# rather than the named dataclass
_EPISODE_KEYS = ("task", "x0", "schedule", "cost", "mppi", "success_threshold",
                 "mode", "n_steps_control", "warmup")


def build_online(cfg: RunConfig) -> OnlineConfig:
    d = {k: v for k, v in cfg.section("online").items() if k not in _EPISODE_KEYS}
    return _make(OnlineConfig, d, "online")


def build_mppi(cfg: RunConfig, section: str = "control") -> MPPIConfig:
    sec = cfg.section(section)
    base = mppi_defaults(cfg.platform, sec["task"])
    over = _tupled(sec.get("mppi") or {})
    try:
        return dc_replace(base, **over)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad {section}.mppi section: {exc}") from None


def build_cost(platform: str, task: str, cost_cfg: dict):
    """Stage-cost object for a (platform, task) pair from its config dict.

    Costs with internal progress state must be rebuilt per episode, so this
    is called once per episode, never cached.
    """
    d = dict(cost_cfg or {})
    try:
        if (platform, task) == ("msd", "goal"):
            return QuadraticCost(np.asarray(d["goal"], dtype=np.float64),
                                 np.diag(d["q_diag"]), np.diag(d["r_diag"]))
        if (platform, task) == ("diffdrive", "goal"):
            return GoalReachCost(tuple(d["goal"]), w_v=d.get("w_v", 1.0),
                                 w_theta=d.get("w_theta", 0.5),
                                 v_gain=d.get("v_gain", 1.0),
                                 v_cap=d.get("v_cap", 0.3))
        if (platform, task) == ("diffdrive", "velocity"):
            return VelocityCost(d["v_ref"], w_v=d.get("w_v", 1.0))
        if (platform, task) == ("diffdrive", "path"):
            xy, headings, speeds = stadium_path(**d.get("path", {}))
            return PathTrackCost(xy, headings, speeds, w_p=d.get("w_p", 10.0),
                                 w_v=d.get("w_v", 0.5),
                                 w_theta=d.get("w_theta", 0.5),
                                 search_window=d.get("search_window", 20),
                                 loop=d.get("loop", True))
        if (platform, task) == ("quad", "goal"):
            return PoseTrackCost(np.asarray(d["ref_pos"], dtype=np.float64),
                                 np.asarray(d["ref_quat"], dtype=np.float64),
                                 w_p=d.get("w_p", 10.0), w_q=d.get("w_q", 1.0))
        if (platform, task) == ("quad", "path"):
            positions, quats = circle_refs(**d.get("circle", {}))
            return PoseTrackCost(positions, quats, w_p=d.get("w_p", 10.0),
                                 w_q=d.get("w_q", 1.0))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad cost config for {platform}/{task}: {exc}") from None
    raise ConfigError(f"no cost builder for platform {platform!r} task {task!r}")


def build_schedule(spec: dict):
    """Environment-factor schedule from its JSON-safe description."""
    if not isinstance(spec, dict):
        raise ConfigError(f"schedule spec must be a mapping, got {type(spec).__name__}")
    try:
        return schedule_from_spec(spec)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad schedule spec: {exc}") from None
