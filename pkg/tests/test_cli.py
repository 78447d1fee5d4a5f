import json

import numpy as np
import pytest
import yaml

from adaptdyn.cli import main
from adaptdyn.config import (
    ConfigError,
    build_cost,
    build_mppi,
    build_online,
    build_phase1,
    build_phase2,
    build_schedule,
    deep_merge,
    default_config,
    load_config,
    resolve_config,
)
from adaptdyn.control import (
    GoalReachCost,
    PathTrackCost,
    PoseTrackCost,
    QuadraticCost,
    VelocityCost,
)
from adaptdyn.data import Dataset, Trajectory, dataset_save
from adaptdyn.envs import MassSwitch, RadialContinuous
from adaptdyn.models import save_checkpoint
from adaptdyn.numerics import no_grad
from adaptdyn.training import rollout_model

from test_analysis import toy_bundle

TINY = {
    "platform": "msd",
    "seed": 3,
    "collect": {"pos_grid": 3, "vel_grid": 2, "n_masses": 4, "n_steps": 25},
    "phase1": {"horizons": [1, 2], "epochs_per_stage": 3, "batch_size": 128,
               "latent_dim": 3, "state_hidden": [16, 16], "encoder_hidden": [8]},
    "phase2": {"epochs": 10, "adaptive_hidden": [16], "batch_size": 64},
    "control": {"n_episodes": 2, "n_steps": 30,
                "mppi": {"horizon": 8, "n_samples": 64}},
    "online": {"n_episodes": 2, "n_steps": 25, "update_period": 10,
               "updates_per_trigger": 2, "batch_size": 16,
               "buffer_capacity": 256},
    "analyze": {"max_horizon": 10, "cap": 100},
}


# ------------------------------------------------------------------- config


def test_default_config_covers_all_platforms():
    for platform in ("msd", "diffdrive", "quad"):
        cfg = resolve_config({"platform": platform})
        assert cfg.platform == platform
        assert cfg.seed == 0
        build_phase1(cfg)
        build_phase2(cfg)
        build_online(cfg)
        planner = build_mppi(cfg)
        assert planner.action_dim == len(planner.sigma)
        sec = cfg.section("control")
        build_cost(platform, sec["task"], sec["cost"])


def test_deep_merge_is_recursive_and_nondestructive():
    base = {"a": {"b": 1, "c": 2}, "d": [1, 2]}
    out = deep_merge(base, {"a": {"c": 3}, "d": [9]})
    assert out == {"a": {"b": 1, "c": 3}, "d": [9]}
    assert base["a"]["c"] == 2  # untouched


def test_resolve_rejects_unknown_top_level_keys():
    with pytest.raises(ConfigError, match="unknown config file keys"):
        resolve_config({"platfrom": "msd"})


def test_resolve_rejects_bad_platform_and_seed():
    with pytest.raises(ConfigError, match="unknown platform"):
        resolve_config({"platform": "hovercraft"})
    with pytest.raises(ConfigError, match="seed"):
        resolve_config({"seed": -1})
    with pytest.raises(ConfigError, match="seed"):
        resolve_config({"seed": True})


def test_flag_overrides_beat_file_values():
    cfg = resolve_config({"seed": 5, "control": {"n_steps": 77}},
                         {"seed": 9, "control": {"mode": "fixed-node"}})
    assert cfg.seed == 9
    assert cfg.section("control")["n_steps"] == 77
    assert cfg.section("control")["mode"] == "fixed-node"


def test_mlp_kind_switches_phase1_defaults():
    node = resolve_config({"platform": "msd"})
    mlp = resolve_config({"platform": "msd", "model": {"kind": "mlp"}})
    assert len(build_phase1(node).horizons) > 1  # curriculum
    assert build_phase1(mlp).horizons == (5,)  # fixed autoregressive horizon


def test_build_phase1_rejects_unknown_field():
    cfg = resolve_config({"phase1": {"horizonz": [1, 2]}})
    with pytest.raises(ConfigError, match="phase1"):
        build_phase1(cfg)


def test_build_mppi_merges_over_task_defaults():
    cfg = resolve_config({"platform": "diffdrive",
                          "control": {"mppi": {"horizon": 7}}})
    planner = build_mppi(cfg)
    stock = build_mppi(resolve_config({"platform": "diffdrive"}))
    assert planner.horizon == 7
    assert planner.n_samples == stock.n_samples
    assert planner.action_low == stock.action_low


def test_build_cost_every_task():
    assert isinstance(build_cost("msd", "goal",
                                 {"goal": [0, 0], "q_diag": [1, 0.1],
                                  "r_diag": [0.1]}), QuadraticCost)
    goal = build_cost("diffdrive", "goal", {"goal": [0.5, 0.5], "w_theta": 0.9})
    assert isinstance(goal, GoalReachCost) and goal.w_theta == 0.9
    assert isinstance(build_cost("diffdrive", "velocity", {"v_ref": 0.3}),
                      VelocityCost)
    path = build_cost("diffdrive", "path", {"path": {"n_points": 40}})
    assert isinstance(path, PathTrackCost) and len(path.path) == 40
    assert isinstance(build_cost("quad", "goal",
                                 {"ref_pos": [0, 0, 0],
                                  "ref_quat": [1, 0, 0, 0]}), PoseTrackCost)
    circle = build_cost("quad", "path", {"circle": {"n_steps": 60}})
    assert isinstance(circle, PoseTrackCost) and len(circle.ref_pos) == 60
    with pytest.raises(ConfigError, match="no cost builder"):
        build_cost("msd", "path", {})
    with pytest.raises(ConfigError, match="bad cost config"):
        build_cost("diffdrive", "velocity", {})


def test_build_schedule_round_trips_specs():
    sched = build_schedule({"kind": "mass_switch", "initial": 2.0,
                            "switch_step": 150, "final": 5.0})
    assert isinstance(sched, MassSwitch)
    radial = build_schedule({
        "kind": "radial", "center": [0.0, 0.0], "r_inner": 0.2, "r_outer": 0.8,
        "inner": {"kind": "diffdrive", "vector": [1, 1, 1, 1, 1, 1]},
        "outer": {"kind": "diffdrive", "vector": [2, 2, 2, 2, 2, 2]}})
    assert isinstance(radial, RadialContinuous)
    with pytest.raises(ConfigError, match="bad schedule"):
        build_schedule({"kind": "phase-of-the-moon"})
    with pytest.raises(ConfigError, match="mapping"):
        build_schedule("constant")


def test_load_config_yaml(tmp_path):
    path = tmp_path / "conf.yaml"
    path.write_text(yaml.safe_dump(TINY))
    assert load_config(path) == TINY
    empty = tmp_path / "empty.yaml"
    empty.write_text("")
    assert load_config(empty) == {}
    bad = tmp_path / "bad.yaml"
    bad.write_text("- just\n- a\n- list\n")
    with pytest.raises(ConfigError, match="mapping"):
        load_config(bad)


def test_default_config_is_plain_data():
    # the snapshot written into run directories must be JSON-clean
    for platform in ("msd", "diffdrive", "quad"):
        json.dumps(default_config(platform))


# ---------------------------------------------------------------- pipeline


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """Run the six commands once on a tiny msd problem; hand back the paths."""
    root = tmp_path_factory.mktemp("cli")
    conf = root / "tiny.yaml"
    conf.write_text(yaml.safe_dump(TINY))
    paths = {"conf": conf, "root": root}
    steps = [
        ("collect", ["collect", "--out", str(root / "c")]),
        ("phase1", ["train-phase1", "--out", str(root / "p1"),
                    "--dataset", str(root / "c" / "dataset.bin")]),
        ("phase2", ["train-phase2", "--out", str(root / "p2"),
                    "--dataset", str(root / "c" / "dataset.bin"),
                    "--checkpoint", str(root / "p1" / "phase1.bin")]),
        ("control", ["control", "--out", str(root / "ctl"),
                     "--checkpoint", str(root / "p2" / "phase2.bin")]),
        ("online", ["online", "--out", str(root / "onl"),
                    "--checkpoint", str(root / "p2" / "phase2.bin")]),
        ("analyze", ["analyze", "--out", str(root / "an"),
                     "--checkpoint", str(root / "p2" / "phase2.bin"),
                     "--dataset", str(root / "c" / "dataset.bin")]),
    ]
    for name, argv in steps:
        code = main(argv + ["--config", str(conf)])
        assert code == 0, f"{name} failed"
        paths[name] = root / argv[2].rsplit("/", 1)[-1]
    return paths


def test_run_directories_are_complete(pipeline):
    for name, files in [
        ("collect", ["dataset.bin"]),
        ("phase1", ["phase1.bin", "curve.csv"]),
        ("phase2", ["phase2.bin", "curve.csv"]),
        ("control", ["episodes.csv", "episodes.npz"]),
        ("online", ["online.bin", "episodes.csv", "updates.csv"]),
        ("analyze", ["curve.csv"]),
    ]:
        out = pipeline[name]
        for fname in files + ["config.json", "meta.json", "summary.json"]:
            assert (out / fname).exists(), f"{name} missing {fname}"
        snapshot = json.loads((out / "config.json").read_text())
        assert snapshot["seed"] == TINY["seed"]
        assert snapshot["platform"] == "msd"
        meta = json.loads((out / "meta.json").read_text())
        assert meta["seed"] == TINY["seed"]
        assert {"version", "python", "numpy"} <= set(meta)


def test_control_summary_shape(pipeline):
    summary = json.loads((pipeline["control"] / "summary.json").read_text())
    assert summary["n_episodes"] == 2
    assert summary["mode"] == "adnode-phase2"
    assert 0.0 <= summary["success_rate"] <= 1.0
    with np.load(pipeline["control"] / "episodes.npz") as dump:
        assert dump["states_0"].shape == (31, 2)
        assert dump["actions_1"].shape == (30, 1)


def test_control_rerun_is_byte_identical(pipeline):
    outs = []
    for tag in ("r1", "r2"):
        out = pipeline["root"] / tag
        code = main(["control", "--config", str(pipeline["conf"]),
                     "--out", str(out), "--deterministic",
                     "--checkpoint", str(pipeline["phase2"] / "phase2.bin")])
        assert code == 0
        outs.append(out)
    for fname in ("summary.json", "meta.json", "config.json", "episodes.csv"):
        a = (outs[0] / fname).read_bytes()
        b = (outs[1] / fname).read_bytes()
        assert a == b, f"{fname} differs between identical runs"


def test_seed_flag_changes_outcomes(pipeline):
    out = pipeline["root"] / "seeded"
    code = main(["control", "--config", str(pipeline["conf"]),
                 "--out", str(out), "--seed", "99",
                 "--checkpoint", str(pipeline["phase2"] / "phase2.bin")])
    assert code == 0
    base = json.loads((pipeline["control"] / "summary.json").read_text())
    other = json.loads((out / "summary.json").read_text())
    assert other["mean_terminal_pos_err"] != base["mean_terminal_pos_err"]
    assert json.loads((out / "config.json").read_text())["seed"] == 99


def test_fixed_mode_never_queries_history_module(pipeline, monkeypatch):
    import adaptdyn.models.nets as nets

    def boom(self, *a, **k):
        raise AssertionError("history module must stay idle in fixed mode")

    monkeypatch.setattr(nets.AdaptiveModule, "estimate", boom)
    out = pipeline["root"] / "fixed"
    code = main(["control", "--config", str(pipeline["conf"]),
                 "--out", str(out), "--mode", "fixed-node",
                 "--checkpoint", str(pipeline["phase2"] / "phase2.bin")])
    assert code == 0
    assert json.loads((out / "summary.json").read_text())["mode"] == "fixed-node"


def test_mode_flag_validates_checkpoint_kind(pipeline, capsys):
    code = main(["control", "--config", str(pipeline["conf"]),
                 "--out", str(pipeline["root"] / "badmode"),
                 "--mode", "mlp-phase1",
                 "--checkpoint", str(pipeline["phase2"] / "phase2.bin")])
    assert code == 2
    assert "mlp" in capsys.readouterr().err


def test_online_summary_counts_updates(pipeline):
    summary = json.loads((pipeline["online"] / "summary.json").read_text())
    assert summary["n_episodes"] == 2
    assert summary["n_updates"] >= 1
    rows = (pipeline["online"] / "updates.csv").read_text().strip().splitlines()
    assert rows[0] == "episode,step,loss"
    assert len(rows) - 1 == summary["n_updates"]


def test_analyze_outputs_curve(pipeline):
    summary = json.loads((pipeline["analyze"] / "summary.json").read_text())
    assert summary["max_horizon"] == 10
    assert summary["latents"] == "privileged"
    assert summary["pos_rmse_final"] > 0.0
    header = (pipeline["analyze"] / "curve.csv").read_text().splitlines()[0]
    assert header == "horizon,pos_rmse,vel_rmse,ang_rmse"


def test_analyze_adaptive_latents(pipeline, tmp_path, capsys):
    conf = tmp_path / "adaptive.yaml"
    cfg = dict(TINY)
    cfg["analyze"] = {"max_horizon": 8, "cap": 50, "latents": "adaptive"}
    conf.write_text(yaml.safe_dump(cfg))
    common = ["analyze", "--config", str(conf),
              "--dataset", str(pipeline["collect"] / "dataset.bin")]
    out = tmp_path / "an"
    code = main(common + ["--out", str(out),
                          "--checkpoint", str(pipeline["phase2"] / "phase2.bin")])
    assert code == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["latents"] == "adaptive"
    assert summary["pos_rmse_final"] > 0.0
    # phase-1 checkpoints carry no history module to estimate latents with
    code = main(common + ["--out", str(tmp_path / "an1"),
                          "--checkpoint", str(pipeline["phase1"] / "phase1.bin")])
    assert code == 2
    assert "phase-2" in capsys.readouterr().err
    cfg["analyze"]["latents"] = "psychic"
    conf.write_text(yaml.safe_dump(cfg))
    code = main(common + ["--out", str(tmp_path / "an2"),
                          "--checkpoint", str(pipeline["phase2"] / "phase2.bin")])
    assert code == 2
    assert "latents" in capsys.readouterr().err


# ------------------------------------------------------------- error paths


def test_invalid_config_exits_with_diagnostic(tmp_path, capsys):
    conf = tmp_path / "bad.yaml"
    conf.write_text("platform: submarine\n")
    code = main(["collect", "--config", str(conf), "--out", str(tmp_path / "o")])
    assert code == 2
    assert "unknown platform" in capsys.readouterr().err


def test_missing_input_exits_with_diagnostic(tmp_path, capsys):
    code = main(["train-phase1", "--out", str(tmp_path / "o")])
    assert code == 2
    err = capsys.readouterr().err
    assert "--dataset" in err or "dataset" in err


def test_nonexistent_input_path(tmp_path, capsys):
    code = main(["train-phase1", "--out", str(tmp_path / "o"),
                 "--dataset", str(tmp_path / "nope.bin")])
    assert code == 2
    assert "does not exist" in capsys.readouterr().err


def test_missing_out_dir_is_config_error(tmp_path, capsys):
    code = main(["collect"])
    assert code == 2
    assert "--out" in capsys.readouterr().err


# ----------------------------------------------------- analyze corner cases


def test_analyze_oracle_model_emits_zero_curves(tmp_path):
    bundle = toy_bundle("msd", seed=4)
    rng = np.random.default_rng(11)
    trajs = []
    for _ in range(3):
        x0 = rng.uniform(-0.5, 0.5, 2)
        actions = rng.uniform(-1.0, 1.0, (15, 1))
        envs = rng.uniform(1.0, 3.0, (15, 1))
        with no_grad():
            preds = rollout_model(bundle.state_net, bundle.encoder, x0[None],
                                  actions[None], envs[None], bundle.solver,
                                  bundle.kind)
        states = np.concatenate([x0[None]] + [p.data for p in preds], axis=0)
        trajs.append(Trajectory(states, actions, envs))
    dataset_save(tmp_path / "self.bin", Dataset("msd", trajs))
    save_checkpoint(tmp_path / "self.ckpt", bundle)
    conf = tmp_path / "an.yaml"
    conf.write_text(yaml.safe_dump({"platform": "msd",
                                    "analyze": {"max_horizon": 10, "cap": None}}))
    code = main(["analyze", "--config", str(conf), "--out", str(tmp_path / "an"),
                 "--checkpoint", str(tmp_path / "self.ckpt"),
                 "--dataset", str(tmp_path / "self.bin")])
    assert code == 0
    summary = json.loads((tmp_path / "an" / "summary.json").read_text())
    assert summary["pos_rmse_final"] < 1e-9
    assert summary["vel_rmse_final"] < 1e-9


def test_analyze_emits_bound_reports(pipeline, tmp_path):
    conf = tmp_path / "bounds.yaml"
    tree = dict(TINY)
    tree["analyze"] = {"max_horizon": 5, "cap": 50,
                      "bounds": {"L_ell": 1.0, "L_lf": 1.0, "L_x": 1.0,
                                 "L_z": 2.0, "eps_z": 0.1, "eps_s": 0.05,
                                 "N": 3, "alpha1": 3.0},
                      "bound_check": {"mass": 1.0, "t_max": 1.5, "n_steps": 120}}
    conf.write_text(yaml.safe_dump(tree))
    out = tmp_path / "an"
    code = main(["analyze", "--config", str(conf), "--out", str(out),
                 "--checkpoint", str(pipeline["phase2"] / "phase2.bin"),
                 "--dataset", str(pipeline["collect"] / "dataset.bin")])
    assert code == 0
    bounds = json.loads((out / "bounds.json").read_text())
    assert bounds["gamma_N"] == pytest.approx(6.0)
    assert bounds["uub_radius"] == pytest.approx(1.0)
    check = json.loads((out / "bound_check.json").read_text())
    assert check["passed"] is True
    assert len(check["times"]) == 121
    summary = json.loads((out / "summary.json").read_text())
    assert summary["bound_check_passed"] is True
    assert summary["uub_radius"] == pytest.approx(1.0)
