"""Stance-force model-predictive control for the trunk.

Each solve linearizes the single-rigid-body model about the current
state at zero force, condenses the horizon onto the stacked stance
forces, and hands the resulting strictly convex QP to the active-set
solver.  Friction is enforced with the inner-square pyramid
|fx|, |fy| <= (mu/sqrt(2)) fz, which is linear and sits strictly inside
the circular cone ||(fx, fy)|| <= mu fz.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import (GAUG, GRAVITY, PX, PZ, VX, VZ, YAW,
                       SrbParams, linearize_dynamics, yaw_rotation)
from .gait import GaitSchedule, raibert_foothold
from .qp import QpResult, solve_qp

N_FEET = 4


@dataclass(frozen=True)
class MpcConfig:
    """Horizon, friction, and tracking weights for the stance-force QP."""

    horizon: int = 10
    dt: float = 0.05
    mu: float = 0.5
    desired_height: float = 0.32
    desired_speed: float = 0.5
    w_roll: float = 0.2
    w_pitch: float = 0.2
    w_z: float = 50.0
    w_angvel: tuple = (0.2, 0.2, 1.0)
    w_vx: float = 10.0
    w_vy: float = 5.0
    w_vz: float = 10.0   # damps vertical bounce; zero invites bang-bang lift
    r_control: float = 1e-6
    f_max_factor: float = 2.0   # per-foot vertical bound, multiples of m*g

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        if self.mu <= 0:
            raise ValueError("mu must be positive")

    def state_weights(self) -> np.ndarray:
        w = np.zeros(13)
        w[0], w[1] = self.w_roll, self.w_pitch
        w[PZ] = self.w_z
        w[6:9] = self.w_angvel
        w[VX], w[VX + 1], w[VX + 2] = self.w_vx, self.w_vy, self.w_vz
        return w

    def f_max(self, params: SrbParams) -> float:
        return self.f_max_factor * params.weight


@dataclass
class MpcSolution:
    forces: np.ndarray        # [horizon, 4, 3], zero rows for swing feet
    objective: float
    qp: QpResult

    @property
    def first_forces(self) -> np.ndarray:
        return self.forces[0]

    @property
    def ok(self) -> bool:
        return self.qp.ok


def pyramid_constraints(mu: float, f_max: float) -> tuple:
    """Single-foot rows (A, b) with A f <= b.

    Four tangential rows bound |fx| and |fy| by (mu/sqrt(2)) fz; two more
    keep fz in [0, f_max].  Any force satisfying the pyramid satisfies
    the circular cone because the worst corner has tangential norm
    sqrt(2) * (mu/sqrt(2)) fz = mu fz.
    """
    if mu <= 0:
        raise ValueError("mu must be positive")
    if f_max <= 0:
        raise ValueError("f_max must be positive")
    c = mu / np.sqrt(2.0)
    A = np.array([
        [1.0, 0.0, -c],
        [-1.0, 0.0, -c],
        [0.0, 1.0, -c],
        [0.0, -1.0, -c],
        [0.0, 0.0, -1.0],
        [0.0, 0.0, 1.0],
    ])
    b = np.array([0.0, 0.0, 0.0, 0.0, 0.0, f_max])
    return A, b


def cone_slack(forces: np.ndarray, mu: float) -> np.ndarray:
    """mu*fz - ||(fx, fy)|| per force row; non-negative inside the cone."""
    f = np.atleast_2d(np.asarray(forces, dtype=np.float64))
    return mu * f[:, 2] - np.hypot(f[:, 0], f[:, 1])


def reference_trajectory(state: np.ndarray, config: MpcConfig,
                         desired_velocity: np.ndarray | None = None,
                         desired_yaw: float | None = None) -> np.ndarray:
    """Stacked [horizon, 13] reference: level trunk at the target height,
    constant commanded velocity, zero angular rate."""
    yaw = state[YAW] if desired_yaw is None else float(desired_yaw)
    if desired_velocity is None:
        desired_velocity = config.desired_speed * np.array(
            [np.cos(yaw), np.sin(yaw), 0.0])
    ref = np.zeros((config.horizon, 13))
    ref[:, YAW] = yaw
    steps = np.arange(1, config.horizon + 1)[:, None]
    ref[:, PX:PZ] = state[PX:PZ] + steps * config.dt * desired_velocity[None, :2]
    ref[:, PZ] = config.desired_height
    ref[:, VX:VX + 2] = desired_velocity[:2]
    ref[:, GAUG] = GRAVITY
    return ref


def plan_horizon_contacts(t: float, state: np.ndarray, foot_positions: np.ndarray,
                          gait: GaitSchedule, config: MpcConfig,
                          params: SrbParams,
                          desired_velocity: np.ndarray | None = None) -> tuple:
    """Predicted (stance_seq [H,4], feet_seq [H,4,3]) over the horizon.

    Feet keep their current anchor while in stance; a foot that touches
    down inside the horizon is placed at its heuristic foothold,
    predicted from the commanded velocity.
    """
    yaw = state[YAW]
    if desired_velocity is None:
        desired_velocity = config.desired_speed * np.array(
            [np.cos(yaw), np.sin(yaw), 0.0])
    hips_body = params.hip_offsets
    Rz = yaw_rotation(yaw)

    stance_seq = np.zeros((config.horizon, N_FEET), dtype=bool)
    feet_seq = np.zeros((config.horizon, N_FEET, 3))
    for k in range(config.horizon):
        # sample stance at the block midpoint: gait switches rarely align
        # with the planning grid, and start-sampling mis-models up to a
        # full block around every switch
        tk = t + (k + 0.5) * config.dt
        stance_seq[k] = gait.stance_mask(tk)
        com_k = state[PX:PZ + 1] + k * config.dt * desired_velocity
        for i in range(N_FEET):
            held = stance_seq[k, i] and (
                foot_positions is not None if k == 0 else stance_seq[k - 1, i])
            if held:
                feet_seq[k, i] = foot_positions[i] if k == 0 \
                    else feet_seq[k - 1, i]
            else:
                hip_world = com_k + Rz @ hips_body[i]
                feet_seq[k, i] = raibert_foothold(
                    hip_world, state[VX:VX + 3], desired_velocity,
                    gait.stance_time)
    return stance_seq, feet_seq


@dataclass
class MpcQp:
    """Condensed QP over the stacked stance forces of one MPC solve.

    offsets[k] is the first column of step k's force block; each stance
    slot occupies three consecutive columns in stance-index order.
    """

    hessian: np.ndarray
    gradient: np.ndarray
    A_ineq: np.ndarray
    b_ineq: np.ndarray
    u_ref: np.ndarray     # gravity-compensating warm start and penalty center
    constant: float       # completes the square; objective + constant >= 0
    offsets: tuple
    counts: np.ndarray

    def force_blocks(self) -> list:
        """Per stance slot (columns, A, b) of its pyramid constraints."""
        blocks = []
        row = 0
        for k, off in enumerate(self.offsets):
            for slot in range(self.counts[k]):
                cols = np.arange(off + 3 * slot, off + 3 * slot + 3)
                blocks.append((cols, self.A_ineq[row:row + 6][:, cols],
                               self.b_ineq[row:row + 6]))
                row += 6
        return blocks


def build_mpc_qp(state: np.ndarray, stance_seq: np.ndarray, feet_seq: np.ndarray,
                 config: MpcConfig, params: SrbParams,
                 desired_velocity: np.ndarray | None = None,
                 desired_yaw: float | None = None) -> MpcQp:
    """Condense the linearized horizon onto the stacked stance forces.

    The control penalty is centered on the gravity-compensating equal
    split among that step's stance feet, so an unweighted hover solves
    to force balance rather than trading height error against force
    magnitude.
    """
    x0 = np.asarray(state, dtype=np.float64)
    stance_seq = np.asarray(stance_seq, dtype=bool).reshape(config.horizon, N_FEET)
    feet_seq = np.asarray(feet_seq, dtype=np.float64).reshape(
        config.horizon, N_FEET, 3)
    H = config.horizon

    counts = stance_seq.sum(axis=1)
    if (counts == 0).any():
        raise ValueError("a horizon step has zero stance feet")

    yaw = x0[YAW] if desired_yaw is None else float(desired_yaw)
    if desired_velocity is None:
        desired_velocity = config.desired_speed * np.array(
            [np.cos(yaw), np.sin(yaw), 0.0])

    # each step's force arms are taken about the CoM predicted for that
    # step; arms about the current CoM would credit future stances with
    # phantom pitch torque growing with k*dt*v, biasing the trunk nose-up
    Bs, offsets, n_u = [], [], 0
    for k in range(H):
        x_lin = x0.copy()
        x_lin[PX:PZ + 1] = x0[PX:PZ + 1] + k * config.dt * desired_velocity
        A, Bk = linearize_dynamics(x_lin, feet_seq[k], stance_seq[k], params,
                                   config.dt)
        Bs.append(Bk)
        offsets.append(n_u)
        n_u += Bk.shape[1]

    Apow = [np.eye(13)]
    for _ in range(H):
        Apow.append(A @ Apow[-1])
    Sx = np.vstack([Apow[k] for k in range(1, H + 1)])
    Su = np.zeros((13 * H, n_u))
    for k in range(1, H + 1):
        for j in range(k):
            blk = Apow[k - 1 - j] @ Bs[j]
            Su[(k - 1) * 13:k * 13, offsets[j]:offsets[j] + blk.shape[1]] = blk

    w = config.state_weights()
    q_stack = np.tile(w, H)
    ref = reference_trajectory(x0, config, desired_velocity, desired_yaw)
    err0 = Sx @ x0 - ref.ravel()

    u_ref = np.zeros(n_u)
    for k in range(H):
        share = params.weight / counts[k]
        u_ref[offsets[k] + 2:offsets[k] + 3 * counts[k]:3] = share

    H_qp = Su.T @ (q_stack[:, None] * Su)
    H_qp[np.diag_indices_from(H_qp)] += config.r_control
    H_qp = 0.5 * (H_qp + H_qp.T)
    g_qp = Su.T @ (q_stack * err0) - config.r_control * u_ref
    # constant completing the square: objective becomes the actual
    # half tracking-plus-control cost, zero at a perfectly held hover
    c0 = 0.5 * (q_stack * err0) @ err0 + 0.5 * config.r_control * (u_ref @ u_ref)

    A_foot, b_foot = pyramid_constraints(config.mu, config.f_max(params))
    A_rows, b_rows = [], []
    for k in range(H):
        for slot in range(counts[k]):
            block = np.zeros((6, n_u))
            col = offsets[k] + 3 * slot
            block[:, col:col + 3] = A_foot
            A_rows.append(block)
            b_rows.append(b_foot)
    A_ineq = np.vstack(A_rows)
    b_ineq = np.concatenate(b_rows)
    return MpcQp(H_qp, g_qp, A_ineq, b_ineq, u_ref, float(c0),
                 tuple(offsets), counts)


def solve_mpc(state: np.ndarray, stance_seq: np.ndarray, feet_seq: np.ndarray,
              config: MpcConfig, params: SrbParams,
              desired_velocity: np.ndarray | None = None,
              desired_yaw: float | None = None,
              max_qp_iter: int | None = None) -> MpcSolution:
    """Optimal stance forces over the horizon for the current state."""
    stance_seq = np.asarray(stance_seq, dtype=bool).reshape(config.horizon, N_FEET)
    prob = build_mpc_qp(state, stance_seq, feet_seq, config, params,
                        desired_velocity, desired_yaw)
    qp = solve_qp(prob.hessian, prob.gradient, prob.A_ineq, prob.b_ineq,
                  x0=prob.u_ref, max_iter=max_qp_iter)
    forces = np.zeros((config.horizon, N_FEET, 3))
    for k in range(config.horizon):
        idx = np.flatnonzero(stance_seq[k])
        for slot, i in enumerate(idx):
            col = prob.offsets[k] + 3 * slot
            forces[k, i] = qp.x[col:col + 3]
    return MpcSolution(forces, qp.objective + prob.constant, qp)
