"""Fixed-step explicit ODE integration, generic over numpy arrays and Tensors.

The vector field is any callable ``field(x, u, z, t) -> dx/dt`` whose output
supports +, * and scalar multiplication, so the same steppers drive both the
ground-truth simulators (numpy) and learned models (autodiff tensors).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import Tensor

__all__ = ["SolverKind", "IntegrationError", "ode_step", "integrate"]

_METHODS = ("euler", "rk4")


class IntegrationError(RuntimeError):
    """Non-finite state produced while stepping; carries the step index."""

    def __init__(self, message: str, step_index: int = 0):
        super().__init__(message)
        self.step_index = step_index


@dataclass(frozen=True)
class SolverKind:
    """Explicit solver choice plus its default step size (seconds)."""

    method: str
    step_size: float

    def __post_init__(self):
        if self.method not in _METHODS:
            raise ValueError(f"unknown solver method {self.method!r}, want one of {_METHODS}")
        if not self.step_size > 0.0:
            raise ValueError(f"step_size must be positive, got {self.step_size}")

    @classmethod
    def euler(cls, step_size: float) -> "SolverKind":
        return cls("euler", step_size)

    @classmethod
    def rk4(cls, step_size: float) -> "SolverKind":
        return cls("rk4", step_size)


def _is_finite(x) -> bool:
    if isinstance(x, Tensor):
        return x.is_finite()
    return bool(np.all(np.isfinite(x)))


def ode_step(field, x, u, z, t: float, solver: SolverKind, dt: float | None = None):
    """Advance the state by one solver step of size ``dt`` (default: solver's).

    ``dt=0`` is the identity. Raises IntegrationError if the new state is
    non-finite.
    """
    h = solver.step_size if dt is None else dt
    if h < 0.0:
        raise ValueError(f"negative step size {h}")
    if h == 0.0:
        return x
    if solver.method == "euler":
        x_new = x + field(x, u, z, t) * h
    else:
        k1 = field(x, u, z, t)
        k2 = field(x + k1 * (h / 2.0), u, z, t + h / 2.0)
        k3 = field(x + k2 * (h / 2.0), u, z, t + h / 2.0)
        k4 = field(x + k3 * h, u, z, t + h)
        x_new = x + (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0)
    if not _is_finite(x_new):
        raise IntegrationError("non-finite state after ode step")
    return x_new


def integrate(field, x0, controls, dt: float, n_steps: int, solver: SolverKind, z=None):
    """Roll the field forward ``n_steps`` steps; returns all n_steps+1 states.

    ``controls`` must supply at least ``n_steps`` inputs; state i is at time
    ``i * dt``.
    """
    if len(controls) < n_steps:
        raise ValueError(f"need {n_steps} controls, got {len(controls)}")
    states = [x0]
    x = x0
    for i in range(n_steps):
        try:
            x = ode_step(field, x, controls[i], z, i * dt, solver, dt=dt)
        except IntegrationError as exc:
            raise IntegrationError(f"{exc} at step {i}", step_index=i) from None
        states.append(x)
    return states
