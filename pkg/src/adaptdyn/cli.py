"""Command-line pipeline: collect | train-phase1 | train-phase2 | control | online | analyze."""

from __future__ import annotations

import argparse
import csv
import json
import platform as host
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    ConvergenceParams,
    empirical_bound_check,
    eps_f,
    error_curve,
    first_reach,
    gamma_N,
    success_rate,
    uub_radius,
    write_curve_csv,
)
from .config import (
    CONTROL_MODES,
    ConfigError,
    RunConfig,
    build_cost,
    build_mppi,
    build_online,
    build_phase1,
    build_phase2,
    build_schedule,
    load_config,
    resolve_config,
)
from .control import run_episode
from .data import (
    DatasetError,
    collect_diffdrive,
    collect_msd,
    collect_quad,
    dataset_load,
    dataset_save,
)
from .envs import DiffDriveSim, MSDSim, QuadSim, msd_matrices, platform_info
from .models import CheckpointError, load_checkpoint, save_checkpoint
from .training import TrainingDiverged, online_learn, train_phase1, train_phase2

__all__ = ["main"]

_SIMS = {"msd": MSDSim, "diffdrive": DiffDriveSim, "quad": QuadSim}
_COLLECTORS = {"msd": collect_msd, "diffdrive": collect_diffdrive,
               "quad": collect_quad}


def _jsonable(value):
    """Recursively coerce numpy scalars/arrays so json.dumps accepts them."""
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    return value


def _write_json(path: Path, tree: dict) -> None:
    path.write_text(json.dumps(_jsonable(tree), indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, rows: list, fieldnames=None) -> None:
    rows = [_jsonable(r) for r in rows]
    if not rows and not fieldnames:
        raise ValueError(f"refusing to write {path} with no rows and no header")
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames or list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)


def _start(args, command: str) -> tuple[RunConfig, Path]:
    """Resolve the config, create the run directory, snapshot everything."""
    file_cfg = load_config(args.config) if args.config else {}
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if getattr(args, "mode", None):
        overrides["control"] = {"mode": args.mode}
    cfg = resolve_config(file_cfg, overrides)
    out = args.out or cfg.raw.get("out")
    if not out:
        raise ConfigError("no output directory: pass --out or set out: in the config")
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    # the directory itself says where the run lives; keeping the path out of
    # the snapshot makes identical configs byte-identical wherever they run
    snapshot = {k: v for k, v in cfg.raw.items() if k != "out"}
    _write_json(out / "config.json", snapshot)
    return cfg, out


def _finish(out: Path, command: str, cfg: RunConfig, summary: dict,
            t0: float, deterministic: bool) -> int:
    _write_json(out / "summary.json", summary)
    meta = {"command": command, "package": "adaptdyn", "version": __version__,
            "python": host.python_version(), "numpy": np.__version__,
            "seed": cfg.seed, "platform": cfg.platform,
            "deterministic": bool(deterministic)}
    if not deterministic:
        # wall-clock fields are the only nondeterminism in a run directory
        meta["elapsed_seconds"] = round(time.time() - t0, 3)
    _write_json(out / "meta.json", meta)
    print(f"[{command}] {out}/summary.json written")
    return 0


def _input_path(args, cfg: RunConfig, name: str) -> Path:
    """Input file from the flag, falling back to the config inputs table."""
    value = getattr(args, name.replace("-", "_"), None) or cfg.raw["inputs"].get(name)
    if not value:
        raise ConfigError(f"no {name} given: pass --{name} or set inputs.{name}")
    path = Path(value)
    if not path.exists():
        raise ConfigError(f"{name} file does not exist: {path}")
    return path


def _load_bundle(path: Path, cfg: RunConfig):
    bundle = load_checkpoint(path)
    if bundle.platform != cfg.platform:
        raise ConfigError(f"checkpoint is for platform {bundle.platform!r} but the "
                          f"config says {cfg.platform!r}")
    return bundle


# ------------------------------------------------------------------ commands


def cmd_collect(args) -> int:
    t0 = time.time()
    cfg, out = _start(args, "collect")
    rng = np.random.default_rng(cfg.seed)
    ds = _COLLECTORS[cfg.platform](rng, **cfg.section("collect"))
    dataset_save(out / "dataset.bin", ds)
    summary = {"platform": cfg.platform, "file": "dataset.bin",
               "n_trajectories": len(ds), "n_transitions": ds.n_transitions,
               "protocol": ds.meta.get("protocol")}
    return _finish(out, "collect", cfg, summary, t0, args.deterministic)


def cmd_train_phase1(args) -> int:
    t0 = time.time()
    cfg, out = _start(args, "train-phase1")
    ds = dataset_load(_input_path(args, cfg, "dataset"))
    if ds.platform != cfg.platform:
        raise ConfigError(f"dataset platform {ds.platform!r} != config "
                          f"platform {cfg.platform!r}")
    model = cfg.section("model")
    bundle, curve = train_phase1(ds, build_phase1(cfg), seed=cfg.seed,
                                 kind=model["kind"], window_len=model["window_len"])
    save_checkpoint(out / "phase1.bin", bundle)
    _write_csv(out / "curve.csv", curve)
    summary = {"checkpoint": "phase1.bin", "kind": model["kind"],
               "epochs": len(curve), "first_epoch": curve[0], "last_epoch": curve[-1]}
    return _finish(out, "train-phase1", cfg, summary, t0, args.deterministic)


def cmd_train_phase2(args) -> int:
    t0 = time.time()
    cfg, out = _start(args, "train-phase2")
    ds = dataset_load(_input_path(args, cfg, "dataset"))
    bundle = _load_bundle(_input_path(args, cfg, "checkpoint"), cfg)
    tuned, curve = train_phase2(ds, bundle, build_phase2(cfg), seed=cfg.seed)
    save_checkpoint(out / "phase2.bin", tuned)
    _write_csv(out / "curve.csv", curve)
    summary = {"checkpoint": "phase2.bin", "kind": tuned.kind,
               "epochs": len(curve), "first_epoch": curve[0], "last_epoch": curve[-1]}
    return _finish(out, "train-phase2", cfg, summary, t0, args.deterministic)


def _episode_x0(sec: dict, index: int) -> np.ndarray:
    x0 = sec["x0"]
    if x0 and isinstance(x0[0], (list, tuple)):  # one row per episode, cycled
        x0 = x0[index % len(x0)]
    return np.asarray(x0, dtype=np.float64)


def _terminal_metrics(platform: str, sec: dict, log) -> dict:
    """Task-aware distance-to-target numbers for one finished episode."""
    final = log.states[-1]
    cost_cfg = sec["cost"]
    threshold = sec["success_threshold"]
    if platform == "msd":
        goal = np.asarray(cost_cfg["goal"], dtype=np.float64)
        reach = first_reach(log.states, goal, (0, 1), threshold)
        return {"terminal_pos_err": abs(final[0] - goal[0]),
                "terminal_vel_err": abs(final[1] - goal[1]),
                "reach_step": reach, "reached": reach is not None}
    if platform == "diffdrive" and sec["task"] == "goal":
        goal = np.asarray(cost_cfg["goal"], dtype=np.float64)
        reach = first_reach(log.states, goal, (0, 1), threshold)
        return {"terminal_pos_err": float(np.linalg.norm(final[:2] - goal)),
                "reach_step": reach, "reached": reach is not None}
    if platform == "quad" and sec["task"] == "goal":
        goal = np.asarray(cost_cfg["ref_pos"], dtype=np.float64)
        # hover quality: position RMSE over the last second of flight
        tail = max(1, int(round(1.0 / platform_info("quad").dt)))
        errs = np.linalg.norm(log.states[-tail:, :3] - goal, axis=1)
        terminal = float(np.linalg.norm(final[:3] - goal))
        return {"terminal_pos_err": terminal,
                "final_second_rmse": float(np.sqrt(np.mean(errs**2))),
                "reached": terminal <= threshold}
    return {"terminal_pos_err": float(np.linalg.norm(final[:2]))}


def cmd_control(args) -> int:
    t0 = time.time()
    cfg, out = _start(args, "control")
    bundle = _load_bundle(_input_path(args, cfg, "checkpoint"), cfg)
    sec = cfg.section("control")
    try:
        want_kind, episode_mode = CONTROL_MODES[sec["mode"]]
    except KeyError:
        raise ConfigError(f"unknown control mode {sec['mode']!r}, want one of "
                          f"{sorted(CONTROL_MODES)}") from None
    if bundle.kind != want_kind:
        raise ConfigError(f"mode {sec['mode']} needs a {want_kind!r} checkpoint, "
                          f"got {bundle.kind!r}")
    if episode_mode == "adaptive" and bundle.adaptive is None:
        raise ConfigError(f"mode {sec['mode']} needs an adaptive module; train "
                          f"phase 2 first")
    planner = build_mppi(cfg, "control")
    seeds = np.random.default_rng(cfg.seed).integers(2**31, size=sec["n_episodes"])
    rows, dump = [], {}
    for i in range(sec["n_episodes"]):
        sim = _SIMS[cfg.platform](build_schedule(sec["schedule"]))
        obs0 = sim.reset(_episode_x0(sec, i))
        cost = build_cost(cfg.platform, sec["task"], sec["cost"])
        log = run_episode(sim, obs0, bundle, cost, planner, sec["n_steps"],
                          seed=int(seeds[i]), mode=episode_mode,
                          warmup=sec["warmup"])
        row = {"episode": i, "steps": len(log), "aborted": log.aborted,
               "mean_stage_cost": float(np.mean(log.stage_costs)) if len(log) else float("nan")}
        row.update(_terminal_metrics(cfg.platform, sec, log))
        rows.append(row)
        dump[f"states_{i}"] = log.states
        dump[f"actions_{i}"] = log.actions
        dump[f"envs_{i}"] = log.envs
        dump[f"latents_{i}"] = log.latents
    np.savez(out / "episodes.npz", **dump)
    _write_csv(out / "episodes.csv", rows)
    summary = {"mode": sec["mode"], "task": sec["task"],
               "n_episodes": len(rows),
               "n_aborted": sum(r["aborted"] for r in rows),
               "mean_terminal_pos_err": float(np.mean([r["terminal_pos_err"] for r in rows])),
               "max_terminal_pos_err": float(np.max([r["terminal_pos_err"] for r in rows]))}
    if all("reached" in r for r in rows):
        summary["success_rate"] = success_rate([r["reached"] for r in rows])
    if all("final_second_rmse" in r for r in rows):
        summary["mean_final_second_rmse"] = float(
            np.mean([r["final_second_rmse"] for r in rows]))
    return _finish(out, "control", cfg, summary, t0, args.deterministic)


def cmd_online(args) -> int:
    t0 = time.time()
    cfg, out = _start(args, "online")
    bundle = _load_bundle(_input_path(args, cfg, "checkpoint"), cfg)
    if bundle.adaptive is None:
        raise ConfigError("online learning needs a phase-2 checkpoint with an "
                          "adaptive module")
    sec = cfg.section("online")

    def episode_env(i, rng):
        sim = _SIMS[cfg.platform](build_schedule(sec["schedule"]))
        obs0 = sim.reset(_episode_x0(sec, i))
        return sim, obs0, build_cost(cfg.platform, sec["task"], sec["cost"])

    tuned, history, _buffer = online_learn(episode_env, bundle,
                                           build_mppi(cfg, "online"),
                                           build_online(cfg), seed=cfg.seed)
    save_checkpoint(out / "online.bin", tuned)
    _write_csv(out / "episodes.csv", history["episodes"])
    _write_csv(out / "updates.csv", history["updates"],
               fieldnames=["episode", "step", "loss"])
    eps_rows = history["episodes"]
    summary = {"checkpoint": "online.bin",
               "n_episodes": len(eps_rows),
               "n_updates": int(sum(r["n_updates"] for r in eps_rows)),
               "first_episode_cost": eps_rows[0]["mean_stage_cost"],
               "last_episode_cost": eps_rows[-1]["mean_stage_cost"]}
    return _finish(out, "online", cfg, summary, t0, args.deterministic)


def _bounds_report(spec: dict) -> dict:
    params = ConvergenceParams(**spec)
    return {"params": spec,
            "gamma_N": gamma_N(params.L_ell, params.L_lf, params.L_x, params.N),
            "eps_f": eps_f(params.L_z, params.eps_z, params.eps_s),
            "uub_radius": uub_radius(params)}


def _bound_check_report(cfg: RunConfig, spec: dict) -> dict:
    if cfg.platform != "msd":
        raise ConfigError("analyze.bound_check runs on the closed-form msd field "
                          f"only, not platform {cfg.platform!r}")
    A, B = msd_matrices(spec.get("mass", 1.0))
    bump = np.asarray(spec.get("bump", [0.0, 0.05]), dtype=np.float64)
    true_field = lambda x, u, t: A @ x + B @ u
    pert_field = lambda x, u, t: A @ x + B @ u + bump
    n_steps = int(spec.get("n_steps", 200))
    controls = spec.get("amplitude", 0.5) * np.sin(
        np.linspace(0.0, 4.0, n_steps))[:, None]
    report = empirical_bound_check(
        true_field, pert_field, np.asarray(spec.get("x0", [0.4, 0.0])), controls,
        t_max=float(spec.get("t_max", 2.0)), L=float(np.linalg.norm(A, 2)))
    return report.to_dict()


def cmd_analyze(args) -> int:
    t0 = time.time()
    cfg, out = _start(args, "analyze")
    bundle = _load_bundle(_input_path(args, cfg, "checkpoint"), cfg)
    ds = dataset_load(_input_path(args, cfg, "dataset"))
    sec = cfg.section("analyze")
    latents = sec.get("latents", "privileged")
    if latents not in ("privileged", "adaptive"):
        raise ConfigError(f"analyze.latents must be privileged or adaptive, "
                          f"got {latents!r}")
    if latents == "adaptive" and bundle.adaptive is None:
        raise ConfigError("analyze.latents=adaptive needs a phase-2 checkpoint")
    curve = error_curve(bundle, ds, max_horizon=sec["max_horizon"],
                        cap=sec["cap"], rng=np.random.default_rng(cfg.seed),
                        latents=latents)
    write_curve_csv(curve, out / "curve.csv")
    summary = {"curve": "curve.csv", "max_horizon": len(curve),
               "latents": latents,
               "pos_rmse_final": curve.pos[-1], "vel_rmse_final": curve.vel[-1]}
    if curve.ang is not None:
        summary["ang_rmse_final"] = curve.ang[-1]
    if sec.get("bounds"):
        report = _bounds_report(sec["bounds"])
        _write_json(out / "bounds.json", report)
        summary["uub_radius"] = report["uub_radius"]
    if sec.get("bound_check"):
        report = _bound_check_report(cfg, sec["bound_check"])
        _write_json(out / "bound_check.json", report)
        summary["bound_check_passed"] = report["passed"]
    return _finish(out, "analyze", cfg, summary, t0, args.deterministic)


# -------------------------------------------------------------------- parser


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, default=None,
                   help="YAML config file; flags override file values")
    p.add_argument("--seed", type=int, default=None, help="override the run seed")
    p.add_argument("--out", type=Path, default=None, help="run output directory")
    p.add_argument("--deterministic", action="store_true",
                   help="omit wall-clock fields so reruns are byte-identical")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adaptdyn",
        description="Train adaptive continuous-time dynamics models and drive "
                    "them with sampling-based MPC on simulated platforms.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("collect", help="generate a trajectory dataset")
    _add_common(p)
    p.set_defaults(func=cmd_collect)

    p = sub.add_parser("train-phase1", help="fit dynamics + encoder on "
                                            "privileged factors")
    _add_common(p)
    p.add_argument("--dataset", type=Path, default=None)
    p.set_defaults(func=cmd_train_phase1)

    p = sub.add_parser("train-phase2", help="fit the history-based adaptive "
                                            "module against the frozen encoder")
    _add_common(p)
    p.add_argument("--dataset", type=Path, default=None)
    p.add_argument("--checkpoint", type=Path, default=None,
                   help="phase-1 checkpoint")
    p.set_defaults(func=cmd_train_phase2)

    p = sub.add_parser("control", help="run closed-loop MPC episodes")
    _add_common(p)
    p.add_argument("--checkpoint", type=Path, default=None)
    p.add_argument("--mode", choices=sorted(CONTROL_MODES), default=None,
                   help="which model/latent variant drives the planner")
    p.set_defaults(func=cmd_control)

    p = sub.add_parser("online", help="adapt the history module during "
                                      "deployment episodes")
    _add_common(p)
    p.add_argument("--checkpoint", type=Path, default=None,
                   help="phase-2 checkpoint")
    p.set_defaults(func=cmd_online)

    p = sub.add_parser("analyze", help="prediction-error curves and bound reports")
    _add_common(p)
    p.add_argument("--checkpoint", type=Path, default=None)
    p.add_argument("--dataset", type=Path, default=None)
    p.set_defaults(func=cmd_analyze)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DatasetError, CheckpointError, TrainingDiverged,
            FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
