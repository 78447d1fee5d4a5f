"""Differential-drive ground truth: a smooth friction surrogate ODE.

The observed state is [x, y, theta, vx, vy, omega] with vx = v cos(theta),
vy = v sin(theta) (the surrogate does not slip laterally); internally the
integrator works on [x, y, theta, v, omega]. High-level commands
[u_forward m/s, u_turn] become per-wheel torques through a fixed PID and
each wheel samples the friction schedule at its own contact point, so mixed
surfaces under one robot are representable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..numerics import IntegrationError, SolverKind, ode_step
from .factors import DiffDriveFactors, PIDGains, WheelFriction

__all__ = [
    "DiffDriveParams",
    "DEFAULT_GAINS",
    "SLIPPERY",
    "NON_SLIPPERY",
    "traction",
    "diffdrive_lowlevel",
    "diffdrive_field",
    "observe",
    "DiffDriveSim",
]

STATE_DIM = 6
ACTION_DIM = 2
ENV_DIM = 6
DT_DEFAULT = 0.04

# training surface triples (mu_sliding, mu_turning, mu_rolling)
SLIPPERY = WheelFriction(0.7, 0.04, 0.01)
NON_SLIPPERY = WheelFriction(2.0, 0.005, 0.0)


@dataclass(frozen=True)
class DiffDriveParams:
    m: float = 1.0  # kg
    r: float = 0.03  # wheel radius m
    W: float = 0.15  # track width m
    I: float = 0.005  # yaw inertia kg·m²
    b_v: float = 0.2  # base forward drag
    b_omega: float = 1.5  # base yaw drag 1/s
    c_r: float = 0.5  # rolling-friction drag coefficient
    c_t: float = 5.0  # turning-friction damping coefficient
    v_eps: float = 0.01  # drag smoothing scale m/s
    mu0: float = 0.5  # traction half-saturation
    tau_cap_per_mu: float = 0.015  # transmissible torque limit per unit mu_sliding, N·m
    g: float = 9.81


DEFAULT_GAINS = PIDGains(kp_v=0.1, ki_v=0.15, kp_h=0.003, kd_h=0.0005)


def traction(mu_sliding: float, mu0: float = 0.5) -> float:
    return mu_sliding / (mu_sliding + mu0)


def diffdrive_lowlevel(u_cmd, v: float, gains: PIDGains, integral: float,
                       prev_turn: float, dt: float):
    """PID from commands to wheel torques; returns (tau_left, tau_right, integral)."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    e_v = float(u_cmd[0]) - v
    integral = integral + e_v * dt
    vel_term = gains.kp_v * e_v + gains.ki_v * integral
    head_term = gains.kp_h * float(u_cmd[1]) + gains.kd_h * (float(u_cmd[1]) - prev_turn) / dt
    return vel_term + head_term, vel_term - head_term, integral


def diffdrive_field(tau_left: float, tau_right: float, factors: DiffDriveFactors,
                    params: DiffDriveParams = DiffDriveParams()):
    """Vector field on the internal state [x, y, theta, v, omega].

    Each wheel transmits at most tau_cap_per_mu * mu_sliding of commanded
    torque; when a cap binds, both torques scale down together (the pair
    shares the traction budget, keeping their ratio), then traction
    efficiency k_t = mu/(mu + mu0) scales what got through.
    """
    cap_l = params.tau_cap_per_mu * factors.left.mu_sliding
    cap_r = params.tau_cap_per_mu * factors.right.mu_sliding
    scale = 1.0
    if abs(tau_left) > cap_l:
        scale = min(scale, cap_l / abs(tau_left))
    if abs(tau_right) > cap_r:
        scale = min(scale, cap_r / abs(tau_right))
    tau_l = tau_left * scale
    tau_r = tau_right * scale
    k_l = traction(factors.left.mu_sliding, params.mu0)
    k_r = traction(factors.right.mu_sliding, params.mu0)
    mu_roll = 0.5 * (factors.left.mu_rolling + factors.right.mu_rolling)
    mu_turn = 0.5 * (factors.left.mu_turning + factors.right.mu_turning)
    drag = params.b_v + params.c_r * mu_roll * params.g

    def field(s, u, z, t):
        theta, v, omega = s[2], s[3], s[4]
        v_dot = (k_l * tau_l + k_r * tau_r) / (params.m * params.r) \
            - drag * np.tanh(v / params.v_eps)
        omega_dot = (k_r * tau_r - k_l * tau_l) * params.W \
            / (2.0 * params.I * params.r) - (params.b_omega + params.c_t * mu_turn) * omega
        return np.array([v * np.cos(theta), v * np.sin(theta), omega, v_dot, omega_dot])

    return field


def core_from_obs(obs) -> np.ndarray:
    """Inverse of observe; recovers the signed forward speed."""
    x, y, theta, vx, vy, omega = np.asarray(obs, dtype=np.float64)
    return np.array([x, y, theta, vx * np.cos(theta) + vy * np.sin(theta), omega])


def observe(core: np.ndarray) -> np.ndarray:
    x, y, theta, v, omega = core
    return np.array([x, y, theta, v * np.cos(theta), v * np.sin(theta), omega])


class DiffDriveSim:
    platform = "diffdrive"

    def __init__(self, schedule, params: DiffDriveParams = DiffDriveParams(),
                 gains: PIDGains = DEFAULT_GAINS, dt: float = DT_DEFAULT, x0=None):
        self.schedule = schedule
        self.params = params
        self.gains = gains
        self.dt = dt
        self.reset(x0)

    def reset(self, x0=None) -> np.ndarray:
        """x0 is the internal [x, y, theta, v, omega]; zeros by default."""
        self.core = np.zeros(5) if x0 is None else np.asarray(x0, dtype=np.float64).copy()
        self.integral = 0.0
        self.prev_turn = 0.0
        self.step_index = 0
        return observe(self.core)

    @property
    def state(self) -> np.ndarray:
        return observe(self.core)

    def _wheel_positions(self) -> tuple[np.ndarray, np.ndarray]:
        x, y, theta = self.core[0], self.core[1], self.core[2]
        normal = np.array([-np.sin(theta), np.cos(theta)])  # to the robot's left
        center = np.array([x, y])
        half = 0.5 * self.params.W
        return center + half * normal, center - half * normal

    def peek_factors(self) -> DiffDriveFactors:
        left_pos, right_pos = self._wheel_positions()
        return DiffDriveFactors(
            left=self.schedule.at(left_pos, self.step_index),
            right=self.schedule.at(right_pos, self.step_index),
        )

    def step(self, u_cmd) -> tuple[np.ndarray, DiffDriveFactors]:
        factors = self.peek_factors()
        tau_l, tau_r, self.integral = diffdrive_lowlevel(
            u_cmd, self.core[3], self.gains, self.integral, self.prev_turn, self.dt)
        field = diffdrive_field(tau_l, tau_r, factors, self.params)
        try:
            self.core = ode_step(field, self.core, None, None, 0.0, SolverKind.rk4(self.dt))
        except IntegrationError as exc:
            raise IntegrationError(str(exc), step_index=self.step_index) from None
        self.prev_turn = float(u_cmd[1])
        self.step_index += 1
        return observe(self.core), factors
