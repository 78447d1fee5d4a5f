"""History-based latent regression against the frozen privileged encoder."""

from __future__ import annotations

from dataclasses import dataclass, replace as dc_replace

import numpy as np

from ..data import Dataset, iter_windows
from ..models import AdaptiveModule, Conv1DSpec, MLPSpec, ModelBundle, param_hash
from ..numerics import Tensor, backward, mean, no_grad
from .optim import Adam
from .phase1 import TrainingDiverged, _split

__all__ = ["Phase2Config", "train_phase2", "r_squared", "encode_factors"]


@dataclass(frozen=True)
class Phase2Config:
    window_len: int = 5
    backend: str = "mlp"  # "mlp" or "cnn"
    adaptive_hidden: tuple = (64,)
    lr: float = 1e-3
    epochs: int = 50
    batch_size: int = 128
    val_fraction: float = 0.1
    patience: int | None = None
    freeze_encoder: bool = True

    def __post_init__(self):
        if self.window_len < 1:
            raise ValueError("window_len must be >= 1")
        if self.backend not in ("mlp", "cnn"):
            raise ValueError(f"unknown adaptive backend {self.backend!r}")
        if self.lr <= 0.0 or self.epochs < 1 or self.batch_size < 1:
            raise ValueError("lr, epochs and batch_size must be positive")


def encode_factors(encoder, envs: np.ndarray, chunk: int = 4096) -> np.ndarray:
    """Latent targets z = g(e) computed without touching the graph."""
    outs = []
    with no_grad():
        for lo in range(0, envs.shape[0], chunk):
            outs.append(encoder.encode(envs[lo : lo + chunk]).data)
    return np.concatenate(outs, axis=0)


def r_squared(pred: np.ndarray, target: np.ndarray) -> float:
    """Coefficient of determination over all outputs jointly."""
    ss_res = float(np.sum((pred - target) ** 2))
    ss_tot = float(np.sum((target - target.mean(axis=0)) ** 2))
    if ss_tot == 0.0:
        return 1.0 if ss_res == 0.0 else -np.inf
    return 1.0 - ss_res / ss_tot


def _windows_of(trajs, M: int):
    rows, envs = [], []
    for t in trajs:
        for _, w, e in iter_windows(t, M):
            rows.append(w)
            envs.append(e)
    if not rows:
        raise ValueError(f"window length {M} leaves no training windows")
    return np.stack(rows), np.stack(envs)


def train_phase2(dataset: Dataset, bundle: ModelBundle, cfg: Phase2Config,
                 seed: int) -> tuple[ModelBundle, list]:
    """Fit the history encoder to the frozen latent targets.

    Returns a new bundle sharing the (untouched) dynamics nets plus the
    trained adaptive module, and per-epoch curve rows. The state net is
    always frozen; the factor encoder is frozen unless configured otherwise.
    """
    rng = np.random.default_rng(seed)
    init_rng, split_rng, batch_rng = rng.spawn(3)
    state_hash = param_hash(bundle.state_net.parameters())
    encoder_hash = param_hash(bundle.encoder.parameters())

    train_trajs, val_trajs = _split(dataset.trajectories, cfg.val_fraction, split_rng)
    w_train, e_train = _windows_of(train_trajs, cfg.window_len)
    w_val, e_val = _windows_of(val_trajs, cfg.window_len) if val_trajs else (None, None)

    row = bundle.state_dim + bundle.action_dim
    if cfg.backend == "cnn":
        conv_spec = Conv1DSpec(in_channels=row, seq_len=cfg.window_len,
                               out_dim=bundle.latent_dim)
        am = AdaptiveModule(
            "cnn", cfg.window_len, bundle.state_net.x_norm, bundle.state_net.u_norm,
            bundle.latent_dim, init_rng, conv_spec=conv_spec,
            head_spec=MLPSpec(conv_spec.flat_dim, bundle.latent_dim,
                              cfg.adaptive_hidden))
    else:
        am = AdaptiveModule(
            "mlp", cfg.window_len, bundle.state_net.x_norm, bundle.state_net.u_norm,
            bundle.latent_dim, init_rng,
            mlp_spec=MLPSpec(cfg.window_len * row, bundle.latent_dim,
                             cfg.adaptive_hidden))
    opt_params = list(am.parameters())
    if not cfg.freeze_encoder:
        opt_params += bundle.encoder.parameters()
    opt = Adam(opt_params, lr=cfg.lr)

    z_train = encode_factors(bundle.encoder, e_train)
    z_val = encode_factors(bundle.encoder, e_val) if e_val is not None else None

    n = w_train.shape[0]
    steps = max(1, n // cfg.batch_size)
    curve: list[dict] = []
    best_val, since_best = np.inf, 0
    for epoch in range(cfg.epochs):
        step_losses = []
        for _ in range(steps):
            idx = batch_rng.choice(n, size=min(cfg.batch_size, n), replace=False)
            z_hat = am.estimate(w_train[idx], training=True, rng=batch_rng)
            target = (Tensor(z_train[idx]) if cfg.freeze_encoder
                      else bundle.encoder.encode(e_train[idx]))
            diff = z_hat - target
            loss = mean(diff * diff)
            val = float(loss.data)
            if not np.isfinite(val):
                raise TrainingDiverged(f"non-finite loss at epoch {epoch}", stage=0)
            opt.zero_grad()
            backward(loss)
            opt.step()
            step_losses.append(val)
        if w_val is not None:
            if not cfg.freeze_encoder:
                z_val = encode_factors(bundle.encoder, e_val)
            with no_grad():
                pred = am.estimate(w_val).data
            vloss = float(np.mean((pred - z_val) ** 2))
        else:
            vloss = float("nan")
        curve.append({"phase": 2, "stage": cfg.window_len, "epoch": epoch,
                      "lr": cfg.lr, "train_loss": float(np.mean(step_losses)),
                      "val_loss": vloss})
        if cfg.patience is not None and np.isfinite(vloss):
            if vloss < best_val:
                best_val, since_best = vloss, 0
            else:
                since_best += 1
                if since_best >= cfg.patience:
                    break

    if param_hash(bundle.state_net.parameters()) != state_hash:
        raise RuntimeError("state net changed during phase 2 (freeze contract)")
    if cfg.freeze_encoder and param_hash(bundle.encoder.parameters()) != encoder_hash:
        raise RuntimeError("encoder changed despite freeze_encoder=True")

    out = dc_replace(bundle, window_len=cfg.window_len, adaptive=am,
                     meta={**bundle.meta, "phase": 2, "phase2_seed": seed})
    return out, curve
