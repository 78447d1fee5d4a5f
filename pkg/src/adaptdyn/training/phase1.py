"""Privileged end-to-end training of the dynamics field and factor encoder."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..data import Dataset
from ..envs import platform_info
from ..models import (
    DiscreteStateNet,
    EnvEncoder,
    MLPSpec,
    ModelBundle,
    Normalizer,
    StateNet,
)
from ..numerics import IntegrationError, SolverKind, backward, no_grad
from .losses import SegmentSampler, loss_multistep
from .optim import Adam, exp_lr

__all__ = ["Phase1Config", "TrainingDiverged", "train_phase1"]

VAL_SEGMENT_CAP = 2048


class TrainingDiverged(RuntimeError):
    """Loss became non-finite; carries the curriculum stage that failed."""

    def __init__(self, msg: str, stage: int):
        super().__init__(msg)
        self.stage = stage


@dataclass(frozen=True)
class Phase1Config:
    """Curriculum and optimizer settings for privileged training.

    A multi-stage curriculum must start at one prediction step; a single
    fixed horizon (len == 1) is how the autoregressive baseline trains.
    """

    horizons: tuple = (1,)
    epochs_per_stage: int = 10
    batch_size: int = 512
    lr_start: float = 1e-3
    lr_end: float = 1e-4
    solver_method: str = "euler"
    state_hidden: tuple = (64, 64)
    encoder_hidden: tuple = (64,)
    latent_dim: int = 8
    val_fraction: float = 0.1
    patience: int | None = None

    def __post_init__(self):
        hs = self.horizons
        if not hs or any(b <= a for a, b in zip(hs, hs[1:])):
            raise ValueError(f"horizons must be strictly increasing, got {hs}")
        if len(hs) > 1 and hs[0] != 1:
            raise ValueError(f"a curriculum must start at horizon 1, got {hs}")
        if hs[0] < 1:
            raise ValueError(f"horizons must be >= 1, got {hs}")
        if self.epochs_per_stage < 1 or self.batch_size < 1:
            raise ValueError("epochs_per_stage and batch_size must be >= 1")
        if self.solver_method not in ("euler", "rk4"):
            raise ValueError(f"unknown solver {self.solver_method!r}")
        if not 0.0 <= self.val_fraction < 1.0:
            raise ValueError("val_fraction must sit in [0, 1)")


def _split(trajs, val_fraction: float, rng: np.random.Generator):
    idx = rng.permutation(len(trajs))
    n_val = int(round(val_fraction * len(trajs)))
    if val_fraction > 0.0:
        n_val = max(1, min(n_val, len(trajs) - 1))
    val = [trajs[i] for i in idx[:n_val]]
    train = [trajs[i] for i in idx[n_val:]]
    return train, val


def train_phase1(dataset: Dataset, cfg: Phase1Config, seed: int,
                 kind: str = "node", window_len: int = 5) -> tuple[ModelBundle, list]:
    """Fit dynamics + encoder on privileged data; returns (bundle, curve rows).

    The curve has one row per epoch: stage horizon, learning rate, mean
    train loss and validation loss at the stage horizon.
    """
    if kind not in ("node", "mlp"):
        raise ValueError(f"unknown model kind {kind!r}")
    envs = dataset.all_envs()
    if np.unique(envs, axis=0).shape[0] < 2:
        raise ValueError("dataset must cover at least 2 distinct environment values")
    info = platform_info(dataset.platform)
    rng = np.random.default_rng(seed)
    init_rng, split_rng, batch_rng, val_rng = rng.spawn(4)

    x_norm = Normalizer.from_data(dataset.all_states())
    u_norm = Normalizer.from_data(dataset.all_actions())
    e_norm = Normalizer.from_data(envs)
    sd, ad = info.state_dim, info.action_dim
    net_spec = MLPSpec(sd + ad + cfg.latent_dim, sd, cfg.state_hidden)
    net_cls = StateNet if kind == "node" else DiscreteStateNet
    state_net = net_cls(net_spec, x_norm, u_norm, init_rng)
    encoder = EnvEncoder(MLPSpec(info.env_dim, cfg.latent_dim, cfg.encoder_hidden),
                         e_norm, init_rng)

    solver = SolverKind(cfg.solver_method, info.dt)
    params = state_net.parameters() + encoder.parameters()
    opt = Adam(params, lr=cfg.lr_start)
    total_epochs = len(cfg.horizons) * cfg.epochs_per_stage
    lr_of = exp_lr(cfg.lr_start, cfg.lr_end, total_epochs)

    train_trajs, val_trajs = _split(dataset.trajectories, cfg.val_fraction, split_rng)
    curve: list[dict] = []
    epoch_global = 0
    for stage_idx, h in enumerate(cfg.horizons):
        sampler = SegmentSampler(train_trajs, h)
        val_sampler = SegmentSampler(val_trajs, h) if val_trajs else None
        val_batch = (val_sampler.all(VAL_SEGMENT_CAP, val_rng)
                     if val_sampler is not None else None)
        steps = max(1, len(sampler) // cfg.batch_size)
        best_val, since_best = np.inf, 0
        for _ in range(cfg.epochs_per_stage):
            opt.lr = lr_of(epoch_global)
            step_losses = []
            for _ in range(steps):
                xs, us, es = sampler.sample(cfg.batch_size, batch_rng)
                try:
                    loss = loss_multistep(state_net, encoder, xs, us, es,
                                          solver, kind)
                except IntegrationError as exc:
                    raise TrainingDiverged(
                        f"unroll blew up at curriculum stage {stage_idx} "
                        f"(horizon {h}): {exc}", stage=stage_idx) from exc
                val = float(loss.data)
                if not np.isfinite(val):
                    raise TrainingDiverged(
                        f"non-finite loss at curriculum stage {stage_idx} "
                        f"(horizon {h})", stage=stage_idx)
                opt.zero_grad()
                backward(loss)
                opt.step()
                step_losses.append(val)
            if val_batch is not None:
                with no_grad():
                    vloss = float(loss_multistep(state_net, encoder, *val_batch,
                                                 solver, kind).data)
            else:
                vloss = float("nan")
            curve.append({"phase": 1, "stage": h, "epoch": epoch_global,
                          "lr": opt.lr, "train_loss": float(np.mean(step_losses)),
                          "val_loss": vloss})
            epoch_global += 1
            if cfg.patience is not None and np.isfinite(vloss):
                if vloss < best_val:
                    best_val, since_best = vloss, 0
                else:
                    since_best += 1
                    if since_best >= cfg.patience:
                        break

    bundle = ModelBundle(
        platform=dataset.platform, kind=kind, latent_dim=cfg.latent_dim,
        window_len=window_len, dt=info.dt, solver_method=cfg.solver_method,
        state_net=state_net, encoder=encoder,
        meta={"seed": seed, "phase": 1})
    return bundle, curve
