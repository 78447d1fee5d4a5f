"""Parameterized networks: dynamics field, environment encoder, history encoder.

All parameters are float64 Tensors initialized uniformly in
[-1/sqrt(fan_in), 1/sqrt(fan_in)] from a caller-supplied generator, so a
fixed seed reproduces weights bit-for-bit.
"""

from __future__ import annotations

import hashlib

import numpy as np

from ..numerics import Tensor, concat, conv1d, dropout, matmul, relu, reshape, tanh
from .normalizer import Normalizer
from .specs import Conv1DSpec, MLPSpec

__all__ = [
    "MLP",
    "StateNet",
    "EnvEncoder",
    "AdaptiveModule",
    "DiscreteStateNet",
    "param_hash",
]


def _uniform(rng: np.random.Generator, shape, fan_in: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def param_hash(params) -> str:
    """Order-sensitive digest of parameter values, for freeze contracts."""
    h = hashlib.sha256()
    for p in params:
        h.update(np.ascontiguousarray(p.data).tobytes())
    return h.hexdigest()


class MLP:
    """Feed-forward stack per an MLPSpec; hidden activations, linear output."""

    def __init__(self, spec: MLPSpec, rng: np.random.Generator):
        self.spec = spec
        self.weights: list[Tensor] = []
        self.biases: list[Tensor] = []
        dims = [spec.in_dim, *spec.hidden, spec.out_dim]
        for d_in, d_out in zip(dims[:-1], dims[1:]):
            self.weights.append(Tensor(_uniform(rng, (d_in, d_out), d_in), requires_grad=True))
            self.biases.append(Tensor(_uniform(rng, (d_out,), d_in), requires_grad=True))
        self._act = relu if spec.activation == "relu" else tanh

    def __call__(self, x: Tensor) -> Tensor:
        h = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = matmul(h, w) + b
            if i < last:
                h = self._act(h)
        return h

    def parameters(self) -> list[Tensor]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def arrays(self) -> dict[str, np.ndarray]:
        out = {}
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            out[f"w{i}"] = w.data
            out[f"b{i}"] = b.data
        return out

    def load_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            w.data = np.array(arrays[f"w{i}"], dtype=np.float64).reshape(w.shape)
            b.data = np.array(arrays[f"b{i}"], dtype=np.float64).reshape(b.shape)


class StateNet:
    """Continuous-time dynamics model: (state, action, latent) -> d(state)/dt."""

    def __init__(self, spec: MLPSpec, x_norm: Normalizer, u_norm: Normalizer,
                 rng: np.random.Generator):
        if spec.in_dim <= x_norm.dim + u_norm.dim or spec.out_dim != x_norm.dim:
            raise ValueError("state net spec does not match state/action dims")
        self.mlp = MLP(spec, rng)
        self.x_norm = x_norm
        self.u_norm = u_norm
        self.latent_dim = spec.in_dim - x_norm.dim - u_norm.dim

    def derivative(self, x, u, z) -> Tensor:
        xin = self.x_norm.apply(x if isinstance(x, Tensor) else Tensor(x))
        uin = self.u_norm.apply(u if isinstance(u, Tensor) else Tensor(u))
        zin = z if isinstance(z, Tensor) else Tensor(z)
        return self.mlp(concat([xin, uin, zin], axis=-1))

    def parameters(self) -> list[Tensor]:
        return self.mlp.parameters()


class DiscreteStateNet:
    """Discrete-map baseline: (state, action, latent) -> next state directly."""

    def __init__(self, spec: MLPSpec, x_norm: Normalizer, u_norm: Normalizer,
                 rng: np.random.Generator):
        if spec.out_dim != x_norm.dim:
            raise ValueError("discrete net output must match state dim")
        self.mlp = MLP(spec, rng)
        self.x_norm = x_norm
        self.u_norm = u_norm
        self.latent_dim = spec.in_dim - x_norm.dim - u_norm.dim

    def predict_next(self, x, u, z) -> Tensor:
        xin = self.x_norm.apply(x if isinstance(x, Tensor) else Tensor(x))
        uin = self.u_norm.apply(u if isinstance(u, Tensor) else Tensor(u))
        zin = z if isinstance(z, Tensor) else Tensor(z)
        return self.mlp(concat([xin, uin, zin], axis=-1))

    def parameters(self) -> list[Tensor]:
        return self.mlp.parameters()


class EnvEncoder:
    """Maps privileged environment factors to the latent code."""

    def __init__(self, spec: MLPSpec, e_norm: Normalizer, rng: np.random.Generator):
        if spec.in_dim != e_norm.dim:
            raise ValueError("encoder spec does not match environment dim")
        self.mlp = MLP(spec, rng)
        self.e_norm = e_norm
        self.latent_dim = spec.out_dim

    def encode(self, e) -> Tensor:
        ein = self.e_norm.apply(e if isinstance(e, Tensor) else Tensor(e))
        return self.mlp(ein)

    def parameters(self) -> list[Tensor]:
        return self.mlp.parameters()


class AdaptiveModule:
    """Estimates the latent code from a window of recent (state, action) pairs.

    Windows arrive as raw (batch, window_len, state_dim + act_dim) arrays;
    rows are normalized with the training statistics before encoding. The
    backend is either a flat MLP or a 1D conv stack over time.
    """

    def __init__(self, backend: str, window_len: int, x_norm: Normalizer,
                 u_norm: Normalizer, latent_dim: int, rng: np.random.Generator,
                 mlp_spec: MLPSpec | None = None, conv_spec: Conv1DSpec | None = None,
                 head_spec: MLPSpec | None = None):
        if backend not in ("mlp", "cnn"):
            raise ValueError(f"unknown adaptive backend {backend!r}")
        self.backend = backend
        self.window_len = window_len
        self.x_norm = x_norm
        self.u_norm = u_norm
        self.latent_dim = latent_dim
        row_dim = x_norm.dim + u_norm.dim
        if backend == "mlp":
            if mlp_spec is None:
                mlp_spec = MLPSpec(window_len * row_dim, latent_dim, (64,))
            if mlp_spec.in_dim != window_len * row_dim or mlp_spec.out_dim != latent_dim:
                raise ValueError("adaptive mlp spec does not match window shape")
            self.mlp = MLP(mlp_spec, rng)
            self.conv_spec = None
            self.conv_params: list[tuple[Tensor, Tensor]] = []
            self.head = None
        else:
            if conv_spec is None:
                conv_spec = Conv1DSpec(in_channels=row_dim, seq_len=window_len,
                                       out_dim=latent_dim)
            if conv_spec.in_channels != row_dim or conv_spec.seq_len != window_len:
                raise ValueError("conv spec does not match window shape")
            if conv_spec.out_dim != latent_dim:
                raise ValueError("conv spec out_dim must equal latent_dim")
            self.conv_spec = conv_spec
            self.conv_params = []
            c_in = conv_spec.in_channels
            for c_out, k in zip(conv_spec.channels, conv_spec.kernels):
                fan = c_in * k
                w = Tensor(_uniform(rng, (c_out, c_in, k), fan), requires_grad=True)
                b = Tensor(_uniform(rng, (c_out,), fan), requires_grad=True)
                self.conv_params.append((w, b))
                c_in = c_out
            if head_spec is None:
                head_spec = MLPSpec(conv_spec.flat_dim, latent_dim, ())
            if head_spec.in_dim != conv_spec.flat_dim or head_spec.out_dim != latent_dim:
                raise ValueError("conv head spec does not match flattened conv output")
            self.head = MLP(head_spec, rng)
            self.mlp = None

    def _normalize(self, windows: np.ndarray) -> np.ndarray:
        windows = np.asarray(windows, dtype=np.float64)
        if windows.ndim == 2:
            windows = windows[None]
        sd = self.x_norm.dim
        out = np.empty_like(windows)
        out[..., :sd] = self.x_norm.apply(windows[..., :sd])
        out[..., sd:] = self.u_norm.apply(windows[..., sd:])
        return out

    def estimate(self, windows: np.ndarray, training: bool = False,
                 rng: np.random.Generator | None = None) -> Tensor:
        """(batch, window_len, row_dim) raw windows -> (batch, latent_dim)."""
        batch = self._normalize(windows)
        if batch.shape[1] != self.window_len:
            raise ValueError(f"window length {batch.shape[1]} != {self.window_len}")
        if self.backend == "mlp":
            flat = Tensor(batch.reshape(batch.shape[0], -1))
            return self.mlp(flat)
        h = Tensor(np.ascontiguousarray(batch.transpose(0, 2, 1)))
        rate = self.conv_spec.dropout
        for w, b in self.conv_params:
            h = relu(conv1d(h, w, b))
            if training and rate > 0.0:
                if rng is None:
                    raise ValueError("training-mode estimate needs an rng for dropout")
                h = dropout(h, rate, rng, training=True)
        h = reshape(h, (h.shape[0], self.conv_spec.flat_dim))
        return self.head(h)

    def parameters(self) -> list[Tensor]:
        if self.backend == "mlp":
            return self.mlp.parameters()
        out = []
        for w, b in self.conv_params:
            out.extend((w, b))
        out.extend(self.head.parameters())
        return out
