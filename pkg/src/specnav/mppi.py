"""Model Predictive Path Integral planning over the cost gridworld.

Each planning cycle perturbs the nominal control sequence with seeded
Gaussian noise, rolls every candidate out through unicycle kinematics,
and blends the candidates with exponential weights on cost.  The update
averages over all samples, so the result is a convex combination of
clamped controls and respects the limits by construction.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .gridworld import GridWorld

GOAL_RADIUS = 0.3


def wrap_angle(theta):
    """Wrap to (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(theta), 2.0 * np.pi)


@dataclass(frozen=True)
class UnicycleState:
    x: float
    y: float
    heading: float

    def __post_init__(self):
        object.__setattr__(self, "heading", float(wrap_angle(self.heading)))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.heading])


@dataclass(frozen=True)
class MppiConfig:
    """Sampling, limits, and cost weights for the planner."""

    n_samples: int = 1024
    horizon: float = 5.0        # seconds
    dt: float = 0.05
    max_linear: float = 2.0     # m/s
    max_angular: float = 3.0    # rad/s
    temperature: float = 1.0
    noise_frac: float = 0.3     # noise std as a fraction of each limit
    w_terrain: float = 3.0
    w_goal: float = 20.0
    w_control: float = 0.01
    w_bounds: float = 50.0      # per out-of-bounds step

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be at least 1")
        if self.horizon <= 0 or self.dt <= 0:
            raise ValueError("horizon and dt must be positive")
        if self.max_linear <= 0 or self.max_angular <= 0:
            raise ValueError("control limits must be positive")
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.dt))

    @property
    def limits(self) -> np.ndarray:
        return np.array([self.max_linear, self.max_angular])

    @property
    def noise_std(self) -> np.ndarray:
        return self.noise_frac * self.limits


def clamp_controls(controls: np.ndarray, config: MppiConfig) -> np.ndarray:
    lim = config.limits
    return np.clip(controls, -lim, lim)


def rollout_batch(world: GridWorld, state: np.ndarray, controls: np.ndarray,
                  config: MppiConfig) -> tuple:
    """(trajectories [K, T+1, 3], costs [K]) for clamped controls [K, T, 2].

    Stage cost: terrain under the robot (bounds penalty when outside)
    plus control effort; terminal cost: weighted goal distance.
    """
    u = clamp_controls(np.asarray(controls, dtype=np.float64), config)
    K, T, _ = u.shape
    traj = np.zeros((K, T + 1, 3))
    traj[:, 0] = np.asarray(state, dtype=np.float64)
    costs = np.zeros(K)
    x, y, th = traj[:, 0, 0].copy(), traj[:, 0, 1].copy(), traj[:, 0, 2].copy()
    for t in range(T):
        v, w = u[:, t, 0], u[:, t, 1]
        x = x + config.dt * v * np.cos(th)
        y = y + config.dt * v * np.sin(th)
        th = wrap_angle(th + config.dt * w)
        traj[:, t + 1, 0], traj[:, t + 1, 1], traj[:, t + 1, 2] = x, y, th

        inside = world.in_bounds(x, y)
        row, col = world.cell_index(x, y)
        terrain = world.costs[np.clip(row, 0, world.rows - 1),
                              np.clip(col, 0, world.cols - 1)]
        costs += np.where(inside, config.w_terrain * terrain, config.w_bounds)
        costs += config.w_control * (v * v + w * w)

    gx, gy = world.goal
    costs += config.w_goal * np.hypot(x - gx, y - gy)
    return traj, costs


def rollout(world: GridWorld, state: np.ndarray, controls: np.ndarray,
            config: MppiConfig) -> tuple:
    """(trajectory [T+1, 3], cost) for a single control sequence."""
    traj, costs = rollout_batch(world, state, controls[None], config)
    return traj[0], float(costs[0])


def mppi_weights(costs: np.ndarray, temperature: float) -> np.ndarray:
    """Normalized exponential weights on cost.

    Subtracting the minimum before exponentiating makes the weights
    exactly invariant to any constant shift of all costs and keeps the
    largest exponent at zero.
    """
    c = np.asarray(costs, dtype=np.float64)
    w = np.exp(-(c - c.min()) / temperature)
    return w / w.sum()


def mppi_update(config: MppiConfig, world: GridWorld, state: np.ndarray,
                nominal: np.ndarray, rng: np.random.Generator) -> tuple:
    """One planning cycle: (updated controls [T, 2], diagnostics dict).

    Noise for all samples is drawn as a single block from the seeded
    counter-based stream, so per-sample rollouts are pure and their
    evaluation order cannot change the result.
    """
    T = config.n_steps
    nominal = clamp_controls(np.asarray(nominal, dtype=np.float64), config)
    noise = rng.normal(0.0, 1.0, (config.n_samples, T, 2)) * config.noise_std
    candidates = clamp_controls(nominal[None] + noise, config)
    _, costs = rollout_batch(world, state, candidates, config)
    weights = mppi_weights(costs, config.temperature)
    updated = np.einsum("k,ktc->tc", weights, candidates)
    return updated, {"costs": costs, "weights": weights}


@dataclass
class PlanResult:
    trajectory: np.ndarray      # [n+1, 3] executed poses, start first
    controls: np.ndarray        # [n, 2] executed controls
    outcome: str                # "goal" | "timeout"
    steps: int
    elapsed: float              # simulated seconds

    @property
    def reached(self) -> bool:
        return self.outcome == "goal"


def plan_to_goal(world: GridWorld, config: MppiConfig,
                 max_steps: int = 400, seed: int = 0) -> PlanResult:
    """Receding-horizon execution until the goal radius or step budget."""
    rng = np.random.Generator(np.random.Philox(seed))
    state = np.array(world.start, dtype=np.float64)
    nominal = np.zeros((config.n_steps, 2))
    poses = [state.copy()]
    executed = []
    gx, gy = world.goal

    outcome = "timeout"
    for step in range(max_steps):
        if np.hypot(state[0] - gx, state[1] - gy) <= GOAL_RADIUS:
            outcome = "goal"
            break
        nominal, _ = mppi_update(config, world, state, nominal, rng)
        u = nominal[0]
        state = np.array([
            state[0] + config.dt * u[0] * np.cos(state[2]),
            state[1] + config.dt * u[0] * np.sin(state[2]),
            float(wrap_angle(state[2] + config.dt * u[1])),
        ])
        poses.append(state.copy())
        executed.append(u.copy())
        # shift the plan one step; repeat the tail action
        nominal = np.vstack([nominal[1:], nominal[-1:]])
    else:
        if np.hypot(state[0] - gx, state[1] - gy) <= GOAL_RADIUS:
            outcome = "goal"

    n = len(executed)
    return PlanResult(np.array(poses), np.array(executed).reshape(n, 2),
                      outcome, n, n * config.dt)


def patch_occupancy(world: GridWorld, trajectory: np.ndarray) -> float:
    """Fraction of executed poses inside the world's measured patch."""
    traj = np.asarray(trajectory)
    if traj.size == 0:
        return 0.0
    return float(np.mean(world.in_patch(traj[:, 0], traj[:, 1])))


def path_length(trajectory: np.ndarray) -> float:
    traj = np.asarray(trajectory)[:, :2]
    return float(np.sum(np.hypot(*np.diff(traj, axis=0).T)))


def write_trajectory_csv(path, result: PlanResult) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "x", "y", "heading", "v", "omega"])
        for k in range(result.steps):
            x, y, th = result.trajectory[k + 1]
            v, w = result.controls[k]
            writer.writerow([k, f"{x:.9g}", f"{y:.9g}", f"{th:.9g}",
                             f"{v:.9g}", f"{w:.9g}"])


DEFAULT_CLASS_COSTS = {
    "asphalt": 0.1,
    "tile": 0.2,
    "brick": 0.3,
    "sand": 0.8,
    "grass": 1.0,
    "ice": 2.0,
}
UNKNOWN_COST = 1.5


def costmap_from_labels(rows: int, cols: int, regions: list,
                        class_costs: dict | None = None,
                        unknown_cost: float = UNKNOWN_COST) -> np.ndarray:
    """Cost layer from per-region class probabilities.

    regions: list of ((r0, c0, r1, c1), class names, probability vector);
    each region's cells take the cost of its argmax class.  Cells no
    region covers carry the unknown-terrain cost.
    """
    table = DEFAULT_CLASS_COSTS if class_costs is None else class_costs
    costs = np.full((rows, cols), float(unknown_cost))
    for (r0, c0, r1, c1), names, probs in regions:
        probs = np.asarray(probs, dtype=np.float64)
        if len(names) != probs.size:
            raise ValueError("class names and probabilities disagree")
        label = names[int(np.argmax(probs))]
        if label not in table:
            raise ValueError(f"no cost entry for class {label!r}")
        costs[r0:r1, c0:c1] = table[label]
    return costs
