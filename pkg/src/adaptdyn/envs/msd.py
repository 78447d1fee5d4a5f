"""Mass-spring-damper ground truth: one mass on a line under an external force."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..numerics import IntegrationError, SolverKind, ode_step
from .factors import MSDFactors

__all__ = ["MSDParams", "msd_matrices", "msd_field", "msd_step", "MSDSim"]

STATE_DIM = 2  # [displacement, velocity]
ACTION_DIM = 1  # [force]
ENV_DIM = 1  # [mass]
DT_DEFAULT = 0.04


@dataclass(frozen=True)
class MSDParams:
    k: float = 1.0  # spring constant N/m
    b: float = 0.5  # damping N·s/m


def msd_matrices(mass: float, params: MSDParams = MSDParams()):
    A = np.array([[0.0, 1.0], [-params.k / mass, -params.b / mass]])
    B = np.array([[0.0], [1.0 / mass]])
    return A, B


def msd_field(factors: MSDFactors, params: MSDParams = MSDParams()):
    A, B = msd_matrices(factors.mass, params)

    def field(x, u, z, t):
        return A @ x + B @ np.atleast_1d(u)

    return field


def msd_step(x: np.ndarray, u, factors: MSDFactors, dt: float = DT_DEFAULT,
             params: MSDParams = MSDParams()) -> np.ndarray:
    solver = SolverKind.rk4(dt)
    return ode_step(msd_field(factors, params), np.asarray(x, dtype=np.float64),
                    u, None, 0.0, solver)


class MSDSim:
    """Stepped simulator; factors come from the schedule at each control step."""

    platform = "msd"

    def __init__(self, schedule, params: MSDParams = MSDParams(), dt: float = DT_DEFAULT,
                 x0=None):
        self.schedule = schedule
        self.params = params
        self.dt = dt
        self.reset(x0)

    def reset(self, x0=None) -> np.ndarray:
        self.state = np.zeros(2) if x0 is None else np.asarray(x0, dtype=np.float64).copy()
        self.step_index = 0
        return self.state.copy()

    def peek_factors(self) -> MSDFactors:
        return self.schedule.at(self.state[:1], self.step_index)

    def step(self, u) -> tuple[np.ndarray, MSDFactors]:
        factors = self.peek_factors()
        try:
            self.state = msd_step(self.state, u, factors, self.dt, self.params)
        except IntegrationError as exc:
            raise IntegrationError(str(exc), step_index=self.step_index) from None
        self.step_index += 1
        return self.state.copy(), factors
