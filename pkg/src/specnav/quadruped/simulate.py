"""Ground-truth trot simulation with Coulomb-capped slip.

The world integrates the same single-rigid-body trunk the controller
plans with, but semi-implicitly at 1 kHz and with the true friction
coefficient: tangential force demand beyond mu_true * f_z is capped
direction-preserving, the foot anchor drifts under the excess, and a
foot dragged outside leg reach loses contact until its next touchdown.
That is what turns an optimistic friction estimate into a fall.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .dynamics import (FOOT_NAMES, GRAVITY, PITCH, PX, PZ, ROLL, VX, VZ, WX,
                       WZ, YAW, SrbParams, initial_state, rotation_matrix,
                       world_inertia, yaw_rotation)
from .gait import GaitSchedule, raibert_foothold, swing_foot_position
from .mpc import MpcConfig, N_FEET, plan_horizon_contacts, solve_mpc


@dataclass(frozen=True)
class SimConfig:
    """Integration and ground-contact parameters for the true world."""

    sim_dt: float = 1e-3
    slip_rate: float = 0.08      # anchor drift, m/s per N of excess demand
    ground_z: float = 0.0
    crash_z: float = 0.05        # trunk height at which the body grounds out
    speed_ramp_time: float = 2.0
    qp_iter_limit: int = 150     # bounds fallen-state solves; healthy < 60


def friction_speed_limit(mu: float) -> float:
    """Fastest trot command the friction budget supports, empirically.

    Per-cycle velocity corrections demand tangential impulses that grow
    with speed; beyond this envelope the trunk pitch diverges.  The
    informed controller moderates its command with this law and walks
    ice slowly; a controller believing mu = 0.5 sees no reason to."""
    return 2.0 * mu + 0.02


@dataclass
class EpisodeTrace:
    """Per-sample record of one episode at the simulation rate."""

    time: np.ndarray                  # [n]
    states: np.ndarray                # [n, 13]
    forces: np.ndarray                # [n, 4, 3] realized
    slip: np.ndarray                  # [n, 4] bool
    contact: np.ndarray               # [n, 4] bool
    desired_velocity: np.ndarray      # [n, 3] commanded reference
    desired_height: float

    def __len__(self) -> int:
        return self.time.shape[0]


@dataclass(frozen=True)
class EpisodeMetrics:
    success: bool
    min_height: float
    slippage: float      # mean ||(fx,fy)|| / fz over loaded contact samples
    tracking: float      # mean squared height + velocity error, raw
    effort: float        # sum of squared force magnitudes, raw


@dataclass
class EpisodeResult:
    trace: EpisodeTrace
    metrics: EpisodeMetrics
    mu_true: float
    mu_controller: float
    seed: int


SUCCESS_HEIGHT = 0.25


def total_energy(state: np.ndarray, params: SrbParams) -> float:
    """Kinetic plus gravitational potential energy of the trunk."""
    v = state[VX:VZ + 1]
    w = state[WX:WZ + 1]
    iw = world_inertia(params, state[YAW])
    return float(0.5 * params.mass * v @ v + 0.5 * w @ iw @ w
                 + params.mass * GRAVITY * state[PZ])


def coulomb_cap(commanded: np.ndarray, mu_true: float) -> tuple:
    """Realized forces and slip flags for commanded rows [n, 3].

    Vertical components clamp at zero from below (the ground only
    pushes); tangential components keep their direction but shrink onto
    the true cone boundary when demand exceeds mu_true * f_z.
    """
    cmd = np.atleast_2d(np.asarray(commanded, dtype=np.float64))
    realized = cmd.copy()
    realized[:, 2] = np.maximum(cmd[:, 2], 0.0)
    caps = mu_true * realized[:, 2]
    tangential = np.hypot(cmd[:, 0], cmd[:, 1])
    slipped = tangential > caps + 1e-12
    scale = np.ones(len(cmd))
    with np.errstate(divide="ignore", invalid="ignore"):
        np.divide(caps, tangential, out=scale, where=slipped)
    realized[:, 0] *= scale
    realized[:, 1] *= scale
    return realized, slipped


def simulate_step(mu_true: float, state: np.ndarray, foot_positions: np.ndarray,
                  contact: np.ndarray, commanded: np.ndarray, params: SrbParams,
                  dt: float, crash_z: float = SimConfig.crash_z) -> tuple:
    """One semi-implicit Euler step under the true friction.

    Returns (next_state, realized_forces [4, 3], slip_flags [4]).  Feet
    without contact contribute nothing regardless of command.  Grounding
    out (trunk at crash_z) is inelastic: velocities stop.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    x = np.asarray(state, dtype=np.float64)
    contact = np.asarray(contact, dtype=bool)
    commanded = np.asarray(commanded, dtype=np.float64).reshape(N_FEET, 3)

    realized = np.zeros((N_FEET, 3))
    slipped = np.zeros(N_FEET, dtype=bool)
    if contact.any():
        capped, flags = coulomb_cap(commanded[contact], mu_true)
        realized[contact] = capped
        slipped[contact] = flags

    total_f = realized.sum(axis=0)
    torque = np.zeros(3)
    for i in np.flatnonzero(contact):
        torque += np.cross(foot_positions[i] - x[PX:PZ + 1], realized[i])

    iw_inv = np.linalg.inv(world_inertia(params, x[YAW]))
    out = x.copy()
    out[VX:VZ + 1] += dt * (total_f / params.mass - np.array([0, 0, GRAVITY]))
    out[WX:WZ + 1] += dt * (iw_inv @ torque)
    out[PX:PZ + 1] += dt * out[VX:VZ + 1]
    out[ROLL:YAW + 1] += dt * (yaw_rotation(x[YAW]).T @ out[WX:WZ + 1])
    if out[PZ] <= crash_z:
        out[PZ] = crash_z
        out[VX:VZ + 1] = 0.0
        out[WX:WZ + 1] = 0.0
    return out, realized, slipped


def hip_positions_world(state: np.ndarray, params: SrbParams) -> np.ndarray:
    R = rotation_matrix(state[ROLL], state[PITCH], state[YAW])
    return state[PX:PZ + 1] + params.hip_offsets @ R.T


def run_episode(mu_true: float, mu_controller: float, duration: float = 5.0,
                seed: int = 0, params: SrbParams | None = None,
                config: MpcConfig | None = None,
                gait: GaitSchedule | None = None,
                sim: SimConfig | None = None) -> EpisodeResult:
    """Closed-loop trot episode; deterministic for a given seed.

    The controller plans with mu_controller; the world caps with
    mu_true.  Initial pose and velocity carry small seeded jitter so
    campaign episodes differ.
    """
    if duration <= 0:
        raise ValueError("duration must be positive")
    params = params or SrbParams()
    config = config or MpcConfig(mu=mu_controller)
    if config.mu != mu_controller:
        raise ValueError("config.mu must equal mu_controller")
    gait = gait or GaitSchedule()
    sim = sim or SimConfig()

    rng = np.random.default_rng(seed)
    state = initial_state(config.desired_height)
    state[PX:PZ + 1] += rng.normal(0.0, [0.01, 0.01, 0.005])
    state[ROLL:YAW + 1] += rng.normal(0.0, 0.01, 3)
    state[VX:VZ + 1] += rng.normal(0.0, 0.02, 3)

    anchors = hip_positions_world(state, params)
    anchors[:, 2] = sim.ground_z
    liftoff = anchors.copy()
    contact_ok = np.ones(N_FEET, dtype=bool)
    was_stance = gait.stance_mask(0.0)

    n_steps = int(round(duration / sim.sim_dt))
    steps_per_plan = max(1, int(round(config.dt / sim.sim_dt)))
    heading = np.array([1.0, 0.0, 0.0])

    times = np.zeros(n_steps)
    states = np.zeros((n_steps, 13))
    forces = np.zeros((n_steps, N_FEET, 3))
    slips = np.zeros((n_steps, N_FEET), dtype=bool)
    contacts = np.zeros((n_steps, N_FEET), dtype=bool)
    desired = np.zeros((n_steps, 3))

    v_limit = friction_speed_limit(mu_controller)
    commanded = np.zeros((N_FEET, 3))
    for step in range(n_steps):
        t = step * sim.sim_dt
        ramp = min(t / sim.speed_ramp_time, 1.0) if sim.speed_ramp_time > 0 else 1.0
        # the raw task profile the operator asked for
        v_des = ramp * config.desired_speed * heading
        # what the controller pursues within its friction budget; tracking
        # grades how well the controller follows this commanded reference
        v_cmd = v_des if config.desired_speed <= v_limit \
            else ramp * v_limit * heading

        stance_now = gait.stance_mask(t)
        switched = bool((stance_now != was_stance).any())
        hips = hip_positions_world(state, params)
        for i in range(N_FEET):
            if was_stance[i] and not stance_now[i]:
                liftoff[i] = anchors[i]
            elif stance_now[i] and not was_stance[i]:
                anchors[i] = raibert_foothold(hips[i], state[VX:VZ + 1],
                                              v_cmd, gait.stance_time)
                anchors[i, 2] = sim.ground_z
                contact_ok[i] = True
        was_stance = stance_now.copy()

        progress = gait.swing_progress(t)
        for i in range(N_FEET):
            if not stance_now[i]:
                target = raibert_foothold(hips[i], state[VX:VZ + 1], v_cmd,
                                          gait.stance_time)
                target[2] = sim.ground_z
                anchors[i] = swing_foot_position(liftoff[i], target,
                                                 progress[i],
                                                 gait.swing_height)

        # a stance foot dragged or left beyond leg reach cannot push
        reach = np.linalg.norm(anchors - hips, axis=1)
        contact_ok &= ~(stance_now & (reach > params.max_leg_reach))
        in_contact = stance_now & contact_ok

        # Contact switches replan immediately, otherwise a foot that just
        # touched down carries zero force until the next planning tick.
        # No fall detection: a grounded-out trunk keeps the controller
        # churning against a hopeless error, so the iteration cap bounds
        # those solves; the iterates stay primal feasible throughout.
        if step % steps_per_plan == 0 or switched:
            stance_seq, feet_seq = plan_horizon_contacts(
                t, state, anchors, gait, config, params, v_cmd)
            solution = solve_mpc(state, stance_seq, feet_seq, config,
                                 params, desired_velocity=v_cmd,
                                 desired_yaw=0.0,
                                 max_qp_iter=sim.qp_iter_limit)
            commanded = solution.first_forces.copy()

        applied = np.where(in_contact[:, None], commanded, 0.0)
        state, realized, slipped = simulate_step(
            mu_true, state, anchors, in_contact, applied, params,
            sim.sim_dt, sim.crash_z)

        # slipping feet drag along the demanded push direction's reverse
        for i in np.flatnonzero(slipped):
            tangential = applied[i, :2]
            norm = np.hypot(*tangential)
            excess = norm - mu_true * realized[i, 2]
            if norm > 1e-12 and excess > 0:
                anchors[i, :2] -= (tangential / norm) * sim.slip_rate \
                    * excess * sim.sim_dt

        times[step] = t
        states[step] = state
        forces[step] = realized
        slips[step] = slipped
        contacts[step] = in_contact
        desired[step] = v_cmd

    trace = EpisodeTrace(times, states, forces, slips, contacts, desired,
                         config.desired_height)
    metrics = compute_metrics(trace)
    return EpisodeResult(trace, metrics, mu_true, mu_controller, seed)


def compute_metrics(trace: EpisodeTrace) -> EpisodeMetrics:
    """Raw per-episode metrics; campaign summaries normalize later.

    Slippage averages the tangential/vertical force ratio over loaded
    contact samples.  Tracking is the mean squared height error plus
    squared velocity error against the commanded profile.  Effort is the
    summed squared force magnitude.
    """
    if len(trace) == 0:
        raise ValueError("empty episode trace")
    heights = trace.states[:, PZ]
    min_height = float(heights.min())

    fz = trace.forces[:, :, 2]
    loaded = trace.contact & (fz > 1e-9)
    tangential = np.hypot(trace.forces[:, :, 0], trace.forces[:, :, 1])
    slippage = float((tangential[loaded] / fz[loaded]).mean()) \
        if loaded.any() else 0.0

    vel_err = trace.states[:, VX:VZ + 1] - trace.desired_velocity
    tracking = float(np.mean((heights - trace.desired_height) ** 2
                             + np.sum(vel_err ** 2, axis=1)))
    effort = float(np.sum(trace.forces ** 2))
    return EpisodeMetrics(min_height > SUCCESS_HEIGHT, min_height,
                          slippage, tracking, effort)


@dataclass(frozen=True)
class CampaignRow:
    variant: str
    n_episodes: int
    success_rate: float
    slippage: float
    tracking: float     # normalized: informed campaign mean = 1.0
    effort: float       # normalized likewise


def summarize_campaign(results: dict, baseline: str = "informed") -> list:
    """Per-variant summary rows, ordered with the baseline first.

    Tracking and effort are normalized by the baseline variant's
    campaign means, which therefore report exactly 1.0.
    """
    if baseline not in results:
        raise ValueError(f"missing baseline variant {baseline!r}")
    base = results[baseline]
    base_tracking = float(np.mean([m.tracking for m in base]))
    base_effort = float(np.mean([m.effort for m in base]))

    rows = []
    order = [baseline] + sorted(k for k in results if k != baseline)
    for name in order:
        ms = results[name]
        if not ms:
            raise ValueError(f"variant {name!r} has no episodes")
        rows.append(CampaignRow(
            variant=name,
            n_episodes=len(ms),
            success_rate=float(np.mean([m.success for m in ms])),
            slippage=float(np.mean([m.slippage for m in ms])),
            tracking=float(np.mean([m.tracking for m in ms])) / base_tracking,
            effort=float(np.mean([m.effort for m in ms])) / base_effort,
        ))
    return rows


def write_trace_csv(path, trace: EpisodeTrace) -> None:
    header = (["time", "roll", "pitch", "yaw", "px", "py", "pz",
               "wx", "wy", "wz", "vx", "vy", "vz"]
              + [f"f_{n.lower()}_{a}" for n in FOOT_NAMES for a in "xyz"]
              + [f"slip_{n.lower()}" for n in FOOT_NAMES])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for k in range(len(trace)):
            row = [f"{trace.time[k]:.6f}"]
            row += [f"{v:.9g}" for v in trace.states[k, :12]]
            row += [f"{v:.9g}" for v in trace.forces[k].ravel()]
            row += [int(v) for v in trace.slip[k]]
            writer.writerow(row)


def write_campaign_csv(path, rows: list) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["variant", "n_episodes", "success_rate",
                         "slippage_ratio", "tracking_cost", "effort_cost"])
        for r in rows:
            writer.writerow([r.variant, r.n_episodes,
                             f"{r.success_rate:.6f}", f"{r.slippage:.9g}",
                             f"{r.tracking:.9g}", f"{r.effort:.9g}"])
