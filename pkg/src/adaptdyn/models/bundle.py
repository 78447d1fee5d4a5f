"""A trained model set: dynamics net + encoder (+ optional history encoder)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..numerics import SolverKind
from .nets import MLP, AdaptiveModule, DiscreteStateNet, EnvEncoder, StateNet, param_hash
from .normalizer import Normalizer
from .specs import Conv1DSpec, MLPSpec

__all__ = ["ModelBundle", "build_bundle"]

LATENT_DIM_DEFAULT = 8


@dataclass
class ModelBundle:
    platform: str
    kind: str  # "node" (continuous-time field) or "mlp" (discrete map)
    latent_dim: int
    window_len: int
    dt: float
    solver_method: str
    state_net: StateNet | DiscreteStateNet
    encoder: EnvEncoder
    adaptive: AdaptiveModule | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("node", "mlp"):
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")

    @property
    def solver(self) -> SolverKind:
        return SolverKind(self.solver_method, self.dt)

    @property
    def state_dim(self) -> int:
        return self.state_net.x_norm.dim

    @property
    def action_dim(self) -> int:
        return self.state_net.u_norm.dim

    def dynamics_params(self) -> list:
        return self.state_net.parameters() + self.encoder.parameters()

    def dynamics_hash(self) -> str:
        return param_hash(self.dynamics_params())

    def named_arrays(self) -> list[tuple[str, np.ndarray]]:
        out: list[tuple[str, np.ndarray]] = []

        def push(prefix: str, arrays: dict[str, np.ndarray]):
            for k in sorted(arrays):
                out.append((f"{prefix}.{k}", arrays[k]))

        push("state_net.mlp", self.state_net.mlp.arrays())
        push("state_net.x_norm", self.state_net.x_norm.arrays())
        push("state_net.u_norm", self.state_net.u_norm.arrays())
        push("encoder.mlp", self.encoder.mlp.arrays())
        push("encoder.e_norm", self.encoder.e_norm.arrays())
        if self.adaptive is not None:
            ad = self.adaptive
            if ad.backend == "mlp":
                push("adaptive.mlp", ad.mlp.arrays())
            else:
                for i, (w, b) in enumerate(ad.conv_params):
                    out.append((f"adaptive.conv{i}.w", w.data))
                    out.append((f"adaptive.conv{i}.b", b.data))
                push("adaptive.head", ad.head.arrays())
            push("adaptive.x_norm", ad.x_norm.arrays())
            push("adaptive.u_norm", ad.u_norm.arrays())
        return out

    def describe(self) -> dict:
        """JSON-safe structural record, sufficient to rebuild the bundle."""
        d = {
            "platform": self.platform,
            "kind": self.kind,
            "latent_dim": self.latent_dim,
            "window_len": self.window_len,
            "dt": self.dt,
            "solver_method": self.solver_method,
            "state_net_spec": self.state_net.mlp.spec.to_dict(),
            "encoder_spec": self.encoder.mlp.spec.to_dict(),
            "meta": self.meta,
        }
        if self.adaptive is not None:
            d["adaptive_backend"] = self.adaptive.backend
            if self.adaptive.backend == "mlp":
                d["adaptive_mlp_spec"] = self.adaptive.mlp.spec.to_dict()
            else:
                d["adaptive_conv_spec"] = self.adaptive.conv_spec.to_dict()
                d["adaptive_head_spec"] = self.adaptive.head.spec.to_dict()
        return d


def _norm_from(arrays: dict[str, np.ndarray], prefix: str) -> Normalizer:
    return Normalizer(arrays[f"{prefix}.mean"], arrays[f"{prefix}.std"])


def build_bundle(desc: dict, arrays: dict[str, np.ndarray]) -> ModelBundle:
    """Reconstruct a bundle from describe() output plus its arrays."""
    rng = np.random.default_rng(0)  # placeholder init, overwritten below
    x_norm = _norm_from(arrays, "state_net.x_norm")
    u_norm = _norm_from(arrays, "state_net.u_norm")
    sn_spec = MLPSpec.from_dict(desc["state_net_spec"])
    net_cls = StateNet if desc["kind"] == "node" else DiscreteStateNet
    state_net = net_cls(sn_spec, x_norm, u_norm, rng)
    state_net.mlp.load_arrays({k.split(".", 2)[2]: v for k, v in arrays.items()
                               if k.startswith("state_net.mlp.")})
    e_norm = _norm_from(arrays, "encoder.e_norm")
    encoder = EnvEncoder(MLPSpec.from_dict(desc["encoder_spec"]), e_norm, rng)
    encoder.mlp.load_arrays({k.split(".", 2)[2]: v for k, v in arrays.items()
                             if k.startswith("encoder.mlp.")})
    adaptive = None
    if "adaptive_backend" in desc:
        ax = _norm_from(arrays, "adaptive.x_norm")
        au = _norm_from(arrays, "adaptive.u_norm")
        if desc["adaptive_backend"] == "mlp":
            adaptive = AdaptiveModule(
                "mlp", desc["window_len"], ax, au, desc["latent_dim"], rng,
                mlp_spec=MLPSpec.from_dict(desc["adaptive_mlp_spec"]))
            adaptive.mlp.load_arrays({k.split(".", 2)[2]: v for k, v in arrays.items()
                                      if k.startswith("adaptive.mlp.")})
        else:
            adaptive = AdaptiveModule(
                "cnn", desc["window_len"], ax, au, desc["latent_dim"], rng,
                conv_spec=Conv1DSpec.from_dict(desc["adaptive_conv_spec"]),
                head_spec=MLPSpec.from_dict(desc["adaptive_head_spec"]))
            for i, (w, b) in enumerate(adaptive.conv_params):
                w.data = np.array(arrays[f"adaptive.conv{i}.w"]).reshape(w.shape)
                b.data = np.array(arrays[f"adaptive.conv{i}.b"]).reshape(b.shape)
            adaptive.head.load_arrays({k.split(".", 2)[2]: v for k, v in arrays.items()
                                       if k.startswith("adaptive.head.")})
    return ModelBundle(
        platform=desc["platform"],
        kind=desc["kind"],
        latent_dim=desc["latent_dim"],
        window_len=desc["window_len"],
        dt=desc["dt"],
        solver_method=desc["solver_method"],
        state_net=state_net,
        encoder=encoder,
        adaptive=adaptive,
        meta=dict(desc.get("meta", {})),
    )
