import numpy as np
import pytest

from adaptdyn.data import Dataset, collect_msd, iter_windows
from adaptdyn.models import (
    DiscreteStateNet,
    EnvEncoder,
    MLPSpec,
    Normalizer,
    StateNet,
    param_hash,
)
from adaptdyn.numerics import SolverKind, Tensor, backward, no_grad
from adaptdyn.training import (
    Adam,
    Phase1Config,
    Phase2Config,
    SegmentSampler,
    TrainingDiverged,
    encode_factors,
    exp_lr,
    loss_multistep,
    r_squared,
    train_phase1,
    train_phase2,
)
from oracles import finite_diff_grad, rel_err


def tiny_msd(seed=0, n_masses=4, grid=3):
    return collect_msd(np.random.default_rng(seed), pos_grid=grid, vel_grid=grid,
                       n_masses=n_masses, n_steps=20)


def smooth_models(sd=2, ad=1, latent=2, seed=5, kind="node"):
    rng = np.random.default_rng(seed)
    cls = StateNet if kind == "node" else DiscreteStateNet
    net = cls(MLPSpec(sd + ad + latent, sd, (6,), activation="tanh"),
              Normalizer.identity(sd), Normalizer.identity(ad), rng)
    enc = EnvEncoder(MLPSpec(1, latent, (4,), activation="tanh"),
                     Normalizer.identity(1), rng)
    return net, enc


# ------------------------------------------------------------------ optimizer

def test_exp_lr_endpoints_and_midpoint():
    lr = exp_lr(1e-3, 1e-4, 11)
    assert lr(0) == pytest.approx(1e-3)
    assert lr(10) == pytest.approx(1e-4)
    assert lr(5) == pytest.approx(np.sqrt(1e-3 * 1e-4))
    assert lr(99) == pytest.approx(1e-4)
    flat = exp_lr(1e-3, 1e-3, 100)
    assert flat(50) == 1e-3


def test_adam_matches_reference_updates():
    p = Tensor(np.array([1.0, -2.0]), requires_grad=True)
    opt = Adam([p], lr=0.1)
    m = np.zeros(2)
    v = np.zeros(2)
    ref = np.array([1.0, -2.0])
    for t in range(1, 4):
        backward(_quad(p))
        g = p.grad.copy()
        m = 0.9 * m + 0.1 * g
        v = 0.999 * v + 0.001 * g * g
        ref = ref - 0.1 * (m / (1 - 0.9**t)) / (np.sqrt(v / (1 - 0.999**t)) + 1e-8)
        opt.step()
        opt.zero_grad()
        np.testing.assert_allclose(p.data, ref, rtol=0, atol=1e-15)


def _quad(p):
    from adaptdyn.numerics import mean

    d = p - Tensor(np.array([3.0, 1.0]))
    return mean(d * d)


def test_adam_rebinds_instead_of_mutating():
    p = Tensor(np.array([1.0, 2.0]), requires_grad=True)
    before = p.data
    view = before[:1]
    opt = Adam([p], lr=0.5)
    backward(_quad(p))
    opt.step()
    assert p.data is not before
    assert view[0] == 1.0  # old buffer untouched


def test_adam_skips_gradless_params():
    a = Tensor(np.array([1.0]), requires_grad=True)
    b = Tensor(np.array([5.0]), requires_grad=True)
    opt = Adam([a, b], lr=0.1)
    backward(_quad2(a))
    opt.step()
    assert b.data[0] == 5.0
    assert a.data[0] != 1.0


def _quad2(p):
    from adaptdyn.numerics import mean

    return mean(p * p)


# ------------------------------------------------------------------ losses

def test_segment_sampler_shapes_and_bounds():
    ds = tiny_msd()
    s = SegmentSampler(ds.trajectories, 4)
    xs, us, es = s.sample(8, np.random.default_rng(0))
    assert xs.shape == (8, 5, 2) and us.shape == (8, 4, 1) and es.shape == (8, 4, 1)
    with pytest.raises(ValueError):
        SegmentSampler(ds.trajectories, 21)
    with pytest.raises(ValueError):
        SegmentSampler(ds.trajectories, 0)


def test_loss_zero_for_perfect_model():
    sd, ad = 2, 1
    for kind in ("node", "mlp"):
        net, enc = smooth_models(kind=kind)
        for wt in (net.mlp.weights[-1], net.mlp.biases[-1]):
            wt.data = np.zeros_like(wt.data)
        xs = np.zeros((3, 5, sd))
        us = np.random.default_rng(0).normal(size=(3, 4, ad))
        es = np.random.default_rng(1).normal(size=(3, 4, 1))
        loss = loss_multistep(net, enc, xs, us, es, SolverKind("euler", 0.1), kind)
        assert float(loss.data) == 0.0


def test_loss_h1_is_single_step_mse():
    net, enc = smooth_models()
    rng = np.random.default_rng(2)
    xs = rng.normal(size=(4, 2, 2))
    us = rng.normal(size=(4, 1, 1))
    es = rng.normal(size=(4, 1, 1))
    dt = 0.07
    loss = float(loss_multistep(net, enc, xs, us, es, SolverKind("euler", dt)).data)
    with no_grad():
        z = enc.encode(es[:, 0]).data
        pred = xs[:, 0] + dt * net.derivative(xs[:, 0], us[:, 0], z).data
    assert loss == pytest.approx(np.mean((pred - xs[:, 1]) ** 2), rel=1e-12)


@pytest.mark.parametrize("kind", ["node", "mlp"])
def test_loss_gradient_matches_finite_differences(kind):
    net, enc = smooth_models(seed=9, kind=kind)
    rng = np.random.default_rng(3)
    xs = rng.normal(size=(3, 4, 2)) * 0.5
    us = rng.normal(size=(3, 3, 1))
    es = rng.normal(size=(3, 3, 1))
    solver = SolverKind("euler", 0.05)
    for target in (net.mlp.weights[0], enc.mlp.weights[0]):
        loss = loss_multistep(net, enc, xs, us, es, solver, kind)
        backward(loss)
        got = target.grad.copy()
        for p in net.parameters() + enc.parameters():
            p.grad = None

        def f(wv):
            saved = target.data
            target.data = wv
            with no_grad():
                out = float(loss_multistep(net, enc, xs, us, es, solver, kind).data)
            target.data = saved
            return out

        assert rel_err(got, finite_diff_grad(f, target.data.copy())) < 1e-4


def test_loss_shape_contract():
    net, enc = smooth_models()
    xs = np.zeros((2, 3, 2))
    us = np.zeros((2, 3, 1))  # needs h+1=4 states for 3 actions
    with pytest.raises(ValueError):
        loss_multistep(net, enc, xs, us, np.zeros((2, 3, 1)), SolverKind("euler", 0.1))


# ------------------------------------------------------------------ phase 1

def test_phase1_config_validation():
    with pytest.raises(ValueError):
        Phase1Config(horizons=(1, 3, 2))
    with pytest.raises(ValueError):
        Phase1Config(horizons=(2, 4))
    with pytest.raises(ValueError):
        Phase1Config(horizons=())
    with pytest.raises(ValueError):
        Phase1Config(solver_method="heun")
    Phase1Config(horizons=(5,))  # fixed-horizon baseline form is legal


def test_phase1_requires_env_diversity():
    ds = tiny_msd(n_masses=1, grid=2)
    with pytest.raises(ValueError):
        train_phase1(ds, Phase1Config(horizons=(1,), epochs_per_stage=1), seed=0)


def test_phase1_learns_and_logs():
    ds = tiny_msd(seed=3)
    cfg = Phase1Config(horizons=(1, 2), epochs_per_stage=3, batch_size=64)
    bundle, curve = train_phase1(ds, cfg, seed=7)
    assert len(curve) == 6
    assert curve[0]["stage"] == 1 and curve[-1]["stage"] == 2
    assert curve[-1]["train_loss"] < curve[0]["train_loss"]
    assert bundle.kind == "node" and bundle.platform == "msd"
    assert np.isfinite(curve[-1]["val_loss"])


def test_phase1_reproducible_across_seeds():
    ds = tiny_msd(seed=4, grid=2)
    cfg = Phase1Config(horizons=(1,), epochs_per_stage=2, batch_size=32)
    b1, _ = train_phase1(ds, cfg, seed=11)
    b2, _ = train_phase1(ds, cfg, seed=11)
    b3, _ = train_phase1(ds, cfg, seed=12)
    assert b1.dynamics_hash() == b2.dynamics_hash()
    assert b1.dynamics_hash() != b3.dynamics_hash()


def test_phase1_divergence_aborts_with_stage():
    ds = tiny_msd(seed=5, grid=2)
    # Adam caps the per-step move at ~lr, so only an overflow-scale rate
    # actually produces a non-finite loss.
    cfg = Phase1Config(horizons=(1, 2), epochs_per_stage=2, batch_size=32,
                       lr_start=1e300, lr_end=1e300)
    with np.errstate(over="ignore", invalid="ignore"):
        with pytest.raises(TrainingDiverged) as ei:
            train_phase1(ds, cfg, seed=1)
    assert ei.value.stage in (0, 1)


def test_phase1_msd_one_step_mse_below_1e4():
    ds = collect_msd(np.random.default_rng(0), pos_grid=4, vel_grid=4, n_masses=6)
    cfg = Phase1Config(horizons=(1, 2, 4, 8), epochs_per_stage=10, batch_size=256)
    bundle, curve = train_phase1(ds, cfg, seed=1)
    val = SegmentSampler(ds.trajectories, 1)
    xs, us, es = val.all(cap=2048, rng=np.random.default_rng(0))
    with no_grad():
        mse = float(loss_multistep(bundle.state_net, bundle.encoder, xs, us, es,
                                   bundle.solver).data)
    assert mse < 1e-4


def test_phase1_curriculum_monotone_on_msd():
    ds = tiny_msd(seed=6, n_masses=4, grid=3)
    base = dict(epochs_per_stage=6, batch_size=128)
    short, _ = train_phase1(ds, Phase1Config(horizons=(1, 2), **base), seed=21)
    full, _ = train_phase1(ds, Phase1Config(horizons=(1, 2, 4), **base), seed=21)
    val = SegmentSampler(ds.trajectories, 4)
    xs, us, es = val.all(cap=1024, rng=np.random.default_rng(1))
    with no_grad():
        before = float(loss_multistep(short.state_net, short.encoder, xs, us, es,
                                      short.solver).data)
        after = float(loss_multistep(full.state_net, full.encoder, xs, us, es,
                                     full.solver).data)
    assert after <= before * 1.05


# ------------------------------------------------------------------ phase 2

def test_phase2_freeze_contract_and_reproducibility():
    ds = tiny_msd(seed=8)
    bundle, _ = train_phase1(ds, Phase1Config(horizons=(1,), epochs_per_stage=2,
                                              batch_size=64), seed=2)
    before = bundle.dynamics_hash()
    cfg = Phase2Config(window_len=3, epochs=2, batch_size=64)
    out1, curve = train_phase2(ds, bundle, cfg, seed=5)
    assert bundle.dynamics_hash() == before
    assert out1.adaptive is not None and out1.window_len == 3
    assert len(curve) == 2
    out2, _ = train_phase2(ds, bundle, cfg, seed=5)
    assert param_hash(out1.adaptive.parameters()) == param_hash(out2.adaptive.parameters())


def test_phase2_initial_loss_is_latent_mse():
    ds = tiny_msd(seed=9, grid=2, n_masses=2)
    bundle, _ = train_phase1(ds, Phase1Config(horizons=(1,), epochs_per_stage=1,
                                              batch_size=64), seed=3)
    cfg = Phase2Config(window_len=3, epochs=1, batch_size=10_000, lr=1e-30,
                       val_fraction=0.0)
    out, curve = train_phase2(ds, bundle, cfg, seed=6)
    rows, envs = [], []
    for t in ds.trajectories:
        for _, w, e in iter_windows(t, 3):
            rows.append(w)
            envs.append(e)
    W, E = np.stack(rows), np.stack(envs)
    z = encode_factors(bundle.encoder, E)
    with no_grad():
        zh = out.adaptive.estimate(W).data
    assert curve[0]["train_loss"] == pytest.approx(np.mean((zh - z) ** 2), rel=1e-9)


def test_phase2_window_too_long():
    ds = tiny_msd(seed=10, grid=2)
    bundle, _ = train_phase1(ds, Phase1Config(horizons=(1,), epochs_per_stage=1,
                                              batch_size=64), seed=4)
    with pytest.raises(ValueError):
        train_phase2(ds, bundle, Phase2Config(window_len=50, epochs=1), seed=0)


def test_phase2_heldout_r2_msd():
    ds = collect_msd(np.random.default_rng(0), pos_grid=4, vel_grid=4, n_masses=8)
    held = ds.trajectories[::6]
    train = Dataset("msd", [t for i, t in enumerate(ds.trajectories) if i % 6], ds.meta)
    bundle, _ = train_phase1(ds, Phase1Config(horizons=(1, 2, 4, 8),
                                              epochs_per_stage=10, batch_size=256),
                             seed=1)
    out, _ = train_phase2(train, bundle, Phase2Config(window_len=5, epochs=100,
                                                      batch_size=128,
                                                      adaptive_hidden=(64, 64)),
                          seed=2)
    rows, envs = [], []
    for t in held:
        for _, w, e in iter_windows(t, 5):
            rows.append(w)
            envs.append(e)
    W, E = np.stack(rows), np.stack(envs)
    z = encode_factors(out.encoder, E)
    with no_grad():
        zh = out.adaptive.estimate(W).data
    assert r_squared(zh, z) > 0.8


def test_r_squared_basics():
    t = np.array([[0.0], [1.0], [2.0]])
    assert r_squared(t, t) == 1.0
    assert r_squared(np.full_like(t, t.mean()), t) == pytest.approx(0.0)
    assert r_squared(t + 10.0, t) < 0.0
