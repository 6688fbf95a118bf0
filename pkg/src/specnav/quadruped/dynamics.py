"""Single-rigid-body trunk model and its discrete-time linearization.

State layout (13 entries):
  [0:3]  roll, pitch, yaw           [3:6]  position x, y, z
  [6:9]  world angular velocity     [9:12] linear velocity
  [12]   gravity constant g (augmentation keeping the dynamics linear)

Forces are world-frame ground reaction forces at point feet; legs are
massless.  Euler-angle rates use the yaw-only mapping, standard for
near-level trunk control.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

GRAVITY = 9.81

ROLL, PITCH, YAW = 0, 1, 2
PX, PY, PZ = 3, 4, 5
WX, WY, WZ = 6, 7, 8
VX, VY, VZ = 9, 10, 11
GAUG = 12

FOOT_NAMES = ("FL", "FR", "RL", "RR")


@dataclass(frozen=True)
class SrbParams:
    """Trunk mass/inertia and hip geometry."""

    mass: float = 12.0
    inertia: tuple = (0.11, 0.18, 0.25)   # body-frame diagonal, kg m^2
    hip_x: float = 0.19
    hip_y: float = 0.13
    max_leg_reach: float = 0.45

    def __post_init__(self):
        if self.mass <= 0:
            raise ValueError("mass must be positive")
        if any(i <= 0 for i in self.inertia):
            raise ValueError("inertia entries must be positive")

    @property
    def hip_offsets(self) -> np.ndarray:
        """Body-frame hip positions, FOOT_NAMES order."""
        x, y = self.hip_x, self.hip_y
        return np.array([[x, y, 0.0], [x, -y, 0.0],
                         [-x, y, 0.0], [-x, -y, 0.0]])

    @property
    def weight(self) -> float:
        return self.mass * GRAVITY


def initial_state(height: float = 0.32, yaw: float = 0.0) -> np.ndarray:
    x = np.zeros(13)
    x[PZ] = height
    x[YAW] = yaw
    x[GAUG] = GRAVITY
    return x


def yaw_rotation(yaw: float) -> np.ndarray:
    c, s = np.cos(yaw), np.sin(yaw)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rotation_matrix(roll: float, pitch: float, yaw: float) -> np.ndarray:
    """World-from-body rotation, ZYX convention."""
    cr, sr = np.cos(roll), np.sin(roll)
    cp, sp = np.cos(pitch), np.sin(pitch)
    Rx = np.array([[1, 0, 0], [0, cr, -sr], [0, sr, cr]])
    Ry = np.array([[cp, 0, sp], [0, 1, 0], [-sp, 0, cp]])
    return yaw_rotation(yaw) @ Ry @ Rx


def skew(v: np.ndarray) -> np.ndarray:
    return np.array([[0.0, -v[2], v[1]],
                     [v[2], 0.0, -v[0]],
                     [-v[1], v[0], 0.0]])


def world_inertia(params: SrbParams, yaw: float) -> np.ndarray:
    Rz = yaw_rotation(yaw)
    return Rz @ np.diag(params.inertia) @ Rz.T


def model_step(state: np.ndarray, foot_positions: np.ndarray,
               forces: np.ndarray, params: SrbParams, dt: float) -> np.ndarray:
    """One explicit-Euler step of the nonlinear SRB model.

    foot_positions, forces: [n, 3] world frame; every row is an active
    contact.  Position integrates the pre-step velocity, so zero initial
    velocity leaves position unchanged for one step regardless of force.
    """
    x = np.asarray(state, dtype=np.float64)
    f = np.atleast_2d(np.asarray(forces, dtype=np.float64))
    feet = np.atleast_2d(np.asarray(foot_positions, dtype=np.float64))

    total_f = f.sum(axis=0)
    torque = np.zeros(3)
    for r, fi in zip(feet - x[PX:PZ + 1], f):
        torque += np.cross(r, fi)

    iw_inv = np.linalg.inv(world_inertia(params, x[YAW]))
    acc = total_f / params.mass - np.array([0.0, 0.0, x[GAUG]])
    ang_acc = iw_inv @ torque

    out = x.copy()
    out[ROLL:YAW + 1] += dt * (yaw_rotation(x[YAW]).T @ x[WX:WZ + 1])
    out[PX:PZ + 1] += dt * x[VX:VZ + 1]
    out[WX:WZ + 1] += dt * ang_acc
    out[VX:VZ + 1] += dt * acc
    return out


def linearize_dynamics(state: np.ndarray, foot_positions: np.ndarray,
                       stance: np.ndarray, params: SrbParams,
                       dt: float) -> tuple:
    """Discrete (A, B) of model_step about (state, f=0).

    B has one 3-column block per stance foot, in foot order.  Linearizing
    at zero force makes the force-torque coupling terms vanish, which is
    what keeps the horizon problem a QP.
    """
    stance = np.asarray(stance, dtype=bool)
    if not stance.any():
        raise ValueError("no stance feet: the model has no actuation authority")
    x = np.asarray(state, dtype=np.float64)
    yaw = x[YAW]
    Rz = yaw_rotation(yaw)

    A = np.eye(13)
    A[ROLL:YAW + 1, WX:WZ + 1] = dt * Rz.T
    # d/dyaw of Rz(yaw)^T w, needed for an exact Jacobian when w != 0
    c, s = np.cos(yaw), np.sin(yaw)
    dRzT = np.array([[-s, c, 0.0], [-c, -s, 0.0], [0.0, 0.0, 0.0]])
    A[ROLL:YAW + 1, YAW] += dt * (dRzT @ x[WX:WZ + 1])
    A[PX:PZ + 1, VX:VZ + 1] = dt * np.eye(3)
    A[VZ, GAUG] = -dt

    iw_inv = np.linalg.inv(world_inertia(params, yaw))
    feet = np.atleast_2d(np.asarray(foot_positions, dtype=np.float64))
    blocks = []
    for i in np.flatnonzero(stance):
        r = feet[i] - x[PX:PZ + 1]
        Bi = np.zeros((13, 3))
        Bi[WX:WZ + 1] = dt * iw_inv @ skew(r)
        Bi[VX:VZ + 1] = dt / params.mass * np.eye(3)
        blocks.append(Bi)
    return A, np.hstack(blocks)
