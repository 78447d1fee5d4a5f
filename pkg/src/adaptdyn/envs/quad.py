"""Quadrotor ground truth: rigid body at wrench level with wind disturbance.

Observed state is [p (3), v (3), q (4, scalar-first)]; the body rate omega
lives in the simulator (the low-level loop consumes it). Commands are
[total thrust N, desired body rates rad/s x3]; an inner controller converts
rate errors to torque as tau = J K_w (w_des - w) + w x J w, which makes the
closed-loop rate dynamics exactly first order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..numerics import IntegrationError, SolverKind, ode_step
from ..numerics.quat import quat_mul, quat_normalize, rotmat_from_quat
from .factors import QuadFactors

__all__ = ["QuadParams", "quad_field", "observe", "QuadSim", "HOVER_OBS"]

STATE_DIM = 10
ACTION_DIM = 4
ENV_DIM = 3
DT_DEFAULT = 0.02

IDENTITY_QUAT = np.array([1.0, 0.0, 0.0, 0.0])
HOVER_OBS = np.concatenate([np.zeros(6), IDENTITY_QUAT])


@dataclass(frozen=True)
class QuadParams:
    m: float = 1.0  # kg
    J: tuple = (0.01, 0.01, 0.02)  # diagonal inertia kg·m²
    k_omega: float = 20.0  # rate-loop gain 1/s
    g: float = 9.81

    @property
    def J_mat(self) -> np.ndarray:
        return np.diag(self.J)


def quad_field(u_high, wind: np.ndarray, params: QuadParams = QuadParams()):
    """Vector field on the internal state [p, v, q, omega] (13,)."""
    thrust = float(u_high[0])
    omega_des = np.asarray(u_high[1:4], dtype=np.float64)
    J = params.J_mat
    g_vec = np.array([0.0, 0.0, -params.g])

    def field(s, u, z, t):
        v = s[3:6]
        q = s[6:10]
        omega = s[10:13]
        R = rotmat_from_quat(q / np.linalg.norm(q))
        tau = J @ (params.k_omega * (omega_des - omega)) + np.cross(omega, J @ omega)
        v_dot = g_vec + (R[:, 2] * thrust + wind) / params.m
        q_dot = 0.5 * quat_mul(q, np.concatenate([[0.0], omega]))
        omega_dot = np.linalg.solve(J, np.cross(J @ omega, omega) + tau)
        return np.concatenate([v, v_dot, q_dot, omega_dot])

    return field


def observe(internal: np.ndarray) -> np.ndarray:
    return internal[:10].copy()


class QuadSim:
    platform = "quad"

    def __init__(self, schedule, params: QuadParams = QuadParams(), dt: float = DT_DEFAULT,
                 x0=None):
        self.schedule = schedule
        self.params = params
        self.dt = dt
        self.reset(x0)

    def reset(self, x0=None) -> np.ndarray:
        """x0 is the observed 10-vector (body rates start at rest)."""
        if x0 is None:
            x0 = HOVER_OBS
        x0 = np.asarray(x0, dtype=np.float64)
        self.internal = np.concatenate([x0[:6], quat_normalize(x0[6:10]), np.zeros(3)])
        self.step_index = 0
        return observe(self.internal)

    @property
    def state(self) -> np.ndarray:
        return observe(self.internal)

    def peek_factors(self) -> QuadFactors:
        return self.schedule.at(self.internal[:3], self.step_index)

    def step(self, u_high) -> tuple[np.ndarray, QuadFactors]:
        factors = self.peek_factors()
        field = quad_field(u_high, factors.wind, self.params)
        try:
            self.internal = ode_step(field, self.internal, None, None, 0.0,
                                     SolverKind.rk4(self.dt))
        except IntegrationError as exc:
            raise IntegrationError(str(exc), step_index=self.step_index) from None
        self.internal[6:10] = quat_normalize(self.internal[6:10])
        self.step_index += 1
        return observe(self.internal), factors
