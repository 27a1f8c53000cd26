"""Unicycle kinematics of the surface vessel and the head-point transform.

The vessel pose is (x, y, theta) with inputs (nu, omega):

    x' = nu cos(theta),  y' = nu sin(theta),  theta' = omega

The head point z = (x, y) + l0 (cos theta, sin theta) sits a fixed offset
l0 > 0 ahead of the hull.  Its velocity is z' = C(theta) (nu, omega)^T with

    C = [[cos theta, -l0 sin theta],
         [sin theta,  l0 cos theta]],      det C = l0,

so commanding z' = u reduces the vehicle to a single integrator.  The
inverse used here is the true matrix inverse,

    C^-1 = [[ cos theta,      sin theta    ],
            [-sin theta / l0, cos theta / l0]].

A variant with the (2, 2) entry negated circulates in some writeups; it
satisfies neither C D = I nor D C = I (det C = l0 != 0 leaves no sign
freedom), and the validation suite demonstrates the failure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class VesselState:
    """Planar pose; heading is kept normalized to (-pi, pi]."""

    x: float
    y: float
    heading: float

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])


@dataclass(frozen=True)
class VesselParams:
    """Head-point offset and symmetric actuator limits."""

    offset: float = 0.5          # l0, m
    nu_max: float = 2.0          # m/s
    omega_max: float = 1.5       # rad/s

    def __post_init__(self):
        if self.offset <= 0:
            raise ValueError("head-point offset l0 must be > 0")
        if self.nu_max <= 0 or self.omega_max <= 0:
            raise ValueError("actuator limits must be > 0")


@dataclass(frozen=True)
class ActuatorCommand:
    nu: float                    # m/s
    omega: float                 # rad/s


def normalize_heading(theta: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    t = math.remainder(theta, 2.0 * math.pi)
    return math.pi if t == -math.pi else t


def head_point(state: VesselState, offset: float) -> np.ndarray:
    """Offset point z = x_r + l0 (cos theta, sin theta)."""
    if offset <= 0:
        raise ValueError("head-point offset l0 must be > 0")
    return np.array([state.x + offset * math.cos(state.heading),
                     state.y + offset * math.sin(state.heading)])


def input_matrix(theta: float, offset: float) -> np.ndarray:
    """C(theta) mapping (nu, omega) to the head-point velocity."""
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -offset * s], [s, offset * c]])


def inverse_input_matrix(theta: float, offset: float) -> np.ndarray:
    """Closed-form C(theta)^-1."""
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, s], [-s / offset, c / offset]])


def to_actuators(u, theta: float, params: VesselParams):
    """Map a planar head-point velocity command to (nu, omega).

    Returns (ActuatorCommand, saturated): the exact inverse transform is
    applied first, then each channel is clipped to its limit.
    """
    u = np.asarray(u, dtype=float).reshape(2)
    if not np.all(np.isfinite(u)):
        raise ValueError(f"non-finite planar control {u.tolist()}")
    raw = inverse_input_matrix(theta, params.offset) @ u
    nu = min(max(raw[0], -params.nu_max), params.nu_max)
    omega = min(max(raw[1], -params.omega_max), params.omega_max)
    saturated = (nu != raw[0]) or (omega != raw[1])
    return ActuatorCommand(float(nu), float(omega)), saturated


def _deriv(state_vec: np.ndarray, nu: float, omega: float) -> np.ndarray:
    return np.array([nu * math.cos(state_vec[2]),
                     nu * math.sin(state_vec[2]),
                     omega])


def step(state: VesselState, cmd: ActuatorCommand, dt: float,
         max_substep: float = 0.05) -> VesselState:
    """Integrate the unicycle over dt with (nu, omega) held constant.

    Classic RK4 with internal substeps no longer than ``max_substep`` so a
    long dt (e.g. a full 2 pi turn) still closes to ~1e-7.  Heading is
    renormalized afterwards.
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    n = max(1, int(math.ceil(dt / max_substep - 1e-12)))
    h = dt / n
    s = np.array([state.x, state.y, state.heading])
    for _ in range(n):
        k1 = _deriv(s, cmd.nu, cmd.omega)
        k2 = _deriv(s + 0.5 * h * k1, cmd.nu, cmd.omega)
        k3 = _deriv(s + 0.5 * h * k2, cmd.nu, cmd.omega)
        k4 = _deriv(s + h * k3, cmd.nu, cmd.omega)
        s = s + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return VesselState(float(s[0]), float(s[1]), normalize_heading(float(s[2])))
