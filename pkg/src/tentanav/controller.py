"""Next-pose calculation: yaw clamping plus lateral-velocity ramping.

Turns the selected tentacle into a pose command the platform can reach
within one cycle. The yaw command aims at the tentacle's first navigation
point, clamped to the per-cycle yaw budget and scaled by alpha_omega. The
lateral velocity ramps toward the nominal value by at most delta_mu per
cycle, brakes by an extra 2*delta_mu when the goal is near, and is clamped
to [mu_min, mu_max]; the position command interpolates from the robot
toward the first blocked navigation point at arc length mu_t * d_t.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .geometry import quat_from_yaw, quat_identity
from .tentacles import Tentacle


@dataclass(frozen=True)
class ControlParams:
    alpha_omega: float = 0.8  # angular velocity weight in (0, 1]
    mu_nom: float = 0.8  # nominal lateral velocity, m/s
    delta_mu: float = 0.1  # velocity ramp step, m/s
    mu_max: float = 0.9  # lateral velocity bounds, m/s
    mu_min: float = 0.0
    omega_max_phi: float = math.pi / 2  # max yaw rate, rad/s
    d_t: float = 0.1  # cycle period, s

    def __post_init__(self):
        if not 0 < self.alpha_omega <= 1:
            raise ValueError(f"alpha_omega must be in (0, 1], got {self.alpha_omega}")
        if not self.mu_min <= self.mu_nom <= self.mu_max:
            raise ValueError(
                f"velocities must satisfy mu_min <= mu_nom <= mu_max, got "
                f"{self.mu_min}, {self.mu_nom}, {self.mu_max}"
            )
        if self.delta_mu <= 0:
            raise ValueError("delta_mu must be > 0")
        if self.d_t <= 0:
            raise ValueError("d_t must be > 0")
        if self.omega_max_phi < 0:
            raise ValueError("omega_max_phi must be >= 0")


@dataclass(frozen=True)
class ControlState:
    """Commanded lateral velocity and the previously selected tentacle index."""

    mu_t: float = 0.0
    prev_best: Optional[int] = None


@dataclass(frozen=True)
class PoseCommand:
    """Robot-frame position target and yaw-only orientation target."""

    p_next: np.ndarray
    q_next: np.ndarray


def _ramp_velocity(mu_t: float, best_length: float, goal_dist: float, params: ControlParams) -> float:
    # Condition 1: approach the nominal velocity by at most delta_mu.
    if params.mu_nom >= mu_t:
        mu_t = mu_t + params.delta_mu if params.mu_nom - mu_t > params.delta_mu else params.mu_nom
    else:
        mu_t = mu_t - params.delta_mu if mu_t - params.mu_nom > params.delta_mu else params.mu_nom
    # Condition 2: brake near the goal.
    if goal_dist < 0.25 * best_length:
        mu_t -= 2.0 * params.delta_mu
    # Condition 3: clamp.
    return min(max(mu_t, params.mu_min), params.mu_max)


def calculate_next_pose(
    best: Optional[Tentacle],
    k_obs: Optional[int],
    goal_R: np.ndarray,
    params: ControlParams,
    state: ControlState,
) -> tuple[PoseCommand, ControlState]:
    """Compute the next pose command from the selected tentacle.

    `k_obs` is the tentacle's first blocked navigation-point index (1-based),
    or None when clear, in which case interpolation targets the tip. A None
    `best` (no navigable tentacle) yields a hold command with the velocity
    ramped down by delta_mu.

    Returns the command and the updated control state.
    """
    if best is None:
        mu_t = min(max(state.mu_t - params.delta_mu, params.mu_min), params.mu_max)
        return PoseCommand(p_next=np.zeros(3), q_next=quat_identity()), replace(state, mu_t=mu_t)

    phi_max = params.omega_max_phi * params.d_t
    first = best.first_point
    phi_next = math.atan2(first[1], first[0])
    if abs(phi_next) > phi_max:
        phi_next = math.copysign(phi_max, phi_next)
    phi_next *= params.alpha_omega
    q_next = quat_from_yaw(phi_next)

    goal_dist = float(np.linalg.norm(np.asarray(goal_R, dtype=float)))
    mu_t = _ramp_velocity(state.mu_t, best.length, goal_dist, params)

    target = best.nav_points[(k_obs if k_obs is not None else best.n_s) - 1]
    chi = mu_t * params.d_t
    dist = float(np.linalg.norm(target))
    if dist > 0.0:
        p_next = target * (min(chi, dist) / dist)
    else:
        p_next = np.zeros(3)
    return PoseCommand(p_next=p_next, q_next=q_next), replace(state, mu_t=mu_t)
