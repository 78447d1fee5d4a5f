import numpy as np
import pytest

from adaptdyn.data import (
    Dataset,
    ReplayBuffer,
    Trajectory,
    collect_diffdrive,
    collect_msd,
    collect_quad,
    dataset_load,
    dataset_save,
    history_window,
    iter_windows,
    window_rows,
)
from adaptdyn.data.io import DatasetError
from adaptdyn.envs import (
    SLIPPERY,
    MassSwitch,
    make_sim,
    reset_to_observation,
    schedule_from_spec,
)
from adaptdyn.models import AdaptiveModule, Normalizer


def toy_traj(T=6, sd=2, ad=1, seed=0):
    rng = np.random.default_rng(seed)
    return Trajectory(rng.normal(size=(T + 1, sd)), rng.normal(size=(T, ad)),
                      rng.normal(size=(T, 1)))


def test_trajectory_shape_validation():
    with pytest.raises(ValueError):
        Trajectory(np.zeros((5, 2)), np.zeros((5, 1)), np.zeros((5, 1)))
    with pytest.raises(ValueError):
        Trajectory(np.zeros((6, 2)), np.zeros((5, 1)), np.zeros((4, 1)))


def test_transitions_chain():
    traj = toy_traj()
    for tr in traj.transitions():
        assert np.array_equal(tr.x_next, traj.states[tr.step_index + 1])
        assert np.array_equal(tr.x, traj.states[tr.step_index])
    assert traj.transition(2).x_next is traj.transition(3).x or np.array_equal(
        traj.transition(2).x_next, traj.transition(3).x)


def test_history_window_single_pair():
    traj = toy_traj()
    w = history_window(traj, 1, 1)
    assert w.shape == (1, 3)
    assert np.array_equal(w[0, :2], traj.states[0])
    assert np.array_equal(w[0, 2:], traj.actions[0])


def test_history_window_oldest_first():
    traj = toy_traj(T=8)
    w = history_window(traj, 5, 3)
    for i, k in enumerate(range(2, 5)):
        assert np.array_equal(w[i, :2], traj.states[k])
        assert np.array_equal(w[i, 2:], traj.actions[k])


def test_history_window_constant_trajectory():
    traj = Trajectory(np.ones((7, 2)), np.full((6, 1), 0.3), np.zeros((6, 1)))
    w = history_window(traj, 6, 4)
    assert np.all(w == w[0])
    assert w.reshape(-1).size == 4 * 3


def test_history_window_contract_errors():
    traj = toy_traj(T=6)
    with pytest.raises(ValueError):
        history_window(traj, 2, 3)
    with pytest.raises(ValueError):
        history_window(traj, 7, 2)
    with pytest.raises(ValueError):
        window_rows(traj.states, traj.actions, 3, 0)


def test_window_feeds_adaptive_module():
    rng = np.random.default_rng(1)
    traj = toy_traj(T=10, sd=2, ad=1)
    am = AdaptiveModule("mlp", window_len=4, x_norm=Normalizer.identity(2),
                        u_norm=Normalizer.identity(1), latent_dim=3, rng=rng)
    w = history_window(traj, 7, 4)
    z = am.estimate(w[None])
    assert z.data.shape == (1, 3)


def test_iter_windows_alignment():
    schedule = MassSwitch(1.0, 3, 5.0)
    sim = make_sim("msd", schedule)
    sim.reset(np.array([0.1, 0.0]))
    states, actions, envs = [sim.state.copy()], [], []
    for k in range(8):
        obs, fac = sim.step(np.array([0.5]))
        states.append(obs)
        actions.append([0.5])
        envs.append(fac.as_vector())
    traj = Trajectory(np.array(states), np.array(actions), np.array(envs))
    got = list(iter_windows(traj, 2))
    assert [k for k, _, _ in got] == list(range(2, 8))
    for k, w, e in got:
        assert np.array_equal(e, traj.envs[k])
        assert np.array_equal(w, history_window(traj, k, 2))


def test_replay_fifo_eviction():
    buf = ReplayBuffer(capacity=2)
    for i in range(3):
        buf.push(np.array([float(i)]))
    vals = sorted(v[0][0] for v in buf.snapshot())
    assert vals == [1.0, 2.0]
    assert len(buf) == 2


def test_replay_full_sample_is_permutation():
    buf = ReplayBuffer(capacity=8)
    for i in range(5):
        buf.push(np.array([float(i)]), np.array([2.0 * i]))
    a, b = buf.sample(5, np.random.default_rng(0))
    assert sorted(a[:, 0]) == [0.0, 1.0, 2.0, 3.0, 4.0]
    assert np.array_equal(b[:, 0], 2.0 * a[:, 0])


def test_replay_errors():
    buf = ReplayBuffer(capacity=4)
    with pytest.raises(ValueError):
        buf.sample(1, np.random.default_rng(0))
    buf.push(np.zeros(3))
    with pytest.raises(ValueError):
        buf.push(np.zeros(4))
    with pytest.raises(ValueError):
        buf.sample(2, np.random.default_rng(0))
    with pytest.raises(ValueError):
        ReplayBuffer(capacity=0)


def test_replay_sampling_uniform():
    buf = ReplayBuffer(capacity=10)
    for i in range(10):
        buf.push(np.array([float(i)]))
    rng = np.random.default_rng(7)
    counts = np.zeros(10)
    n_batches, batch = 20_000, 5
    for _ in range(n_batches):
        (vals,) = buf.sample(batch, rng)
        ids = vals[:, 0].astype(int)
        assert len(set(ids.tolist())) == batch  # without replacement
        counts[ids] += 1
    total = n_batches * batch
    freq = counts / total
    sigma = np.sqrt(0.1 * 0.9 / total)
    assert np.all(np.abs(freq - 0.1) < 3 * sigma)


def test_collect_diffdrive_minimal_counts():
    ds = collect_diffdrive(np.random.default_rng(0), pos_grid=1, n_headings=1,
                           surfaces=(SLIPPERY,))
    assert len(ds) == 1
    assert ds.n_transitions == 50
    traj = ds.trajectories[0]
    assert np.max(np.abs(traj.actions - traj.actions[0])) == 0.0


def test_collect_diffdrive_deterministic():
    a = collect_diffdrive(np.random.default_rng(3), pos_grid=2, n_headings=2,
                          n_steps=10)
    b = collect_diffdrive(np.random.default_rng(3), pos_grid=2, n_headings=2,
                          n_steps=10)
    assert len(a) == len(b) == 2 * 2 * 2 * 2
    for ta, tb in zip(a.trajectories, b.trajectories):
        assert np.array_equal(ta.states, tb.states)
        assert np.array_equal(ta.actions, tb.actions)
        assert np.array_equal(ta.envs, tb.envs)


def test_collect_msd_grid():
    ds = collect_msd(np.random.default_rng(1), pos_grid=3, vel_grid=2, n_masses=2,
                     n_steps=5)
    assert len(ds) == 3 * 2 * 2
    assert np.all(np.abs(ds.all_actions()) <= 5.0)
    masses = ds.all_envs()
    assert np.all((masses >= 1.0) & (masses <= 4.0))
    inits = {tuple(t.meta["init"]) for t in ds.trajectories}
    assert len(inits) == 6


def test_collect_quad_empty_and_bounds():
    assert len(collect_quad(np.random.default_rng(0), n_trajectories=0)) == 0
    ds = collect_quad(np.random.default_rng(0), n_trajectories=3, n_steps=5)
    assert len(ds) == 3
    assert np.all(np.abs(ds.all_envs()) <= 1.0)
    for t in ds.trajectories:
        assert np.max(np.abs(t.envs - t.envs[0])) == 0.0  # wind fixed per episode


@pytest.mark.slow
def test_collect_quad_velocity_coverage():
    ds = collect_quad(np.random.default_rng(5), n_trajectories=1000, n_steps=2)
    v = ds.all_states()[:, 3:6]
    assert np.all(v.min(axis=0) < 0.0)
    assert np.all(v.max(axis=0) > 0.0)


def _replay_matches(ds, n_check=2):
    for traj in ds.trajectories[:n_check]:
        schedule = schedule_from_spec(traj.meta["schedule"])
        sim = make_sim(ds.platform, schedule)
        reset_to_observation(sim, traj.states[0])
        for k, u in enumerate(traj.actions):
            obs, fac = sim.step(u)
            assert np.max(np.abs(obs - traj.states[k + 1])) < 1e-12
            assert np.max(np.abs(fac.as_vector() - traj.envs[k])) < 1e-12


def test_replay_self_consistency_all_platforms():
    rng = np.random.default_rng(11)
    _replay_matches(collect_msd(rng, pos_grid=2, vel_grid=1, n_masses=1, n_steps=10))
    _replay_matches(collect_diffdrive(rng, pos_grid=1, n_headings=2, n_steps=10))
    _replay_matches(collect_quad(rng, n_trajectories=2, n_steps=10))


def test_dataset_roundtrip_exact(tmp_path):
    ds = collect_msd(np.random.default_rng(2), pos_grid=2, vel_grid=2, n_masses=1,
                     n_steps=7)
    p = tmp_path / "d.bin"
    dataset_save(p, ds)
    back = dataset_load(p)
    assert back.platform == ds.platform
    assert back.meta == ds.meta
    assert len(back) == len(ds)
    for ta, tb in zip(ds.trajectories, back.trajectories):
        assert ta.meta == tb.meta
        assert ta.states.tobytes() == tb.states.tobytes()
        assert ta.actions.tobytes() == tb.actions.tobytes()
        assert ta.envs.tobytes() == tb.envs.tobytes()


def test_dataset_load_rejects_garbage(tmp_path):
    p = tmp_path / "junk.bin"
    p.write_bytes(b"NOPE" + b"\x00" * 32)
    with pytest.raises(DatasetError):
        dataset_load(p)


def test_dataset_load_rejects_truncation(tmp_path):
    ds = collect_msd(np.random.default_rng(4), pos_grid=1, vel_grid=1, n_masses=1,
                     n_steps=4)
    p = tmp_path / "d.bin"
    dataset_save(p, ds)
    raw = p.read_bytes()
    (tmp_path / "t.bin").write_bytes(raw[:-8])
    with pytest.raises(DatasetError):
        dataset_load(tmp_path / "t.bin")
    (tmp_path / "x.bin").write_bytes(raw + b"\x00" * 8)
    with pytest.raises(DatasetError):
        dataset_load(tmp_path / "x.bin")


def test_dataset_platform_dim_validation():
    with pytest.raises(ValueError):
        Dataset("msd", [toy_traj(sd=3)])
