"""Gradient-descent machinery: Adam and the exponential learning-rate decay."""

from __future__ import annotations

import numpy as np

__all__ = ["Adam", "exp_lr"]


class Adam:
    """Per-parameter adaptive moments with bias correction.

    Updates rebind each parameter's data array instead of mutating it, so
    views taken during a forward pass can never alias a half-updated buffer.
    """

    def __init__(self, params, lr: float = 1e-3, betas: tuple = (0.9, 0.999),
                 eps: float = 1e-8):
        if lr <= 0.0 or eps <= 0.0:
            raise ValueError("lr and eps must be positive")
        b1, b2 = betas
        if not (0.0 <= b1 < 1.0 and 0.0 <= b2 < 1.0):
            raise ValueError(f"betas must sit in [0, 1), got {betas}")
        self.params = list(params)
        self.lr = float(lr)
        self.b1, self.b2 = float(b1), float(b2)
        self.eps = float(eps)
        self.t = 0
        self._m = [np.zeros_like(p.data) for p in self.params]
        self._v = [np.zeros_like(p.data) for p in self.params]

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None

    def step(self) -> None:
        self.t += 1
        c1 = 1.0 - self.b1 ** self.t
        c2 = 1.0 - self.b2 ** self.t
        for p, m, v in zip(self.params, self._m, self._v):
            if p.grad is None:
                continue
            g = p.grad
            m *= self.b1
            m += (1.0 - self.b1) * g
            v *= self.b2
            v += (1.0 - self.b2) * g * g
            p.data = p.data - self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def exp_lr(start: float, end: float, n_epochs: int):
    """Schedule decaying geometrically from start to end over n_epochs."""
    if start <= 0.0 or end <= 0.0:
        raise ValueError("learning rates must be positive")
    if n_epochs <= 1 or start == end:
        return lambda epoch: start
    ratio = end / start

    def lr(epoch: int) -> float:
        frac = min(max(epoch, 0), n_epochs - 1) / (n_epochs - 1)
        return start * ratio ** frac

    return lr
