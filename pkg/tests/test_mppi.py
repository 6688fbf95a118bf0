"""MPPI sampling planner: weights, rollouts, goal seeking, terrain costs."""
import numpy as np
import pytest

from oracles import rollout_cost_resum
from specnav.gridworld import add_rect_cost, make_open_world
from specnav.mppi import (
    GOAL_RADIUS,
    MppiConfig,
    UnicycleState,
    clamp_controls,
    costmap_from_labels,
    mppi_update,
    mppi_weights,
    patch_occupancy,
    path_length,
    plan_to_goal,
    rollout,
    wrap_angle,
    write_trajectory_csv,
)


@pytest.fixture(scope="module")
def world():
    return make_open_world()


@pytest.fixture(scope="module")
def diagonal_world():
    return make_open_world(start=(1.25, 1.25, 0.785398), goal=(8.75, 8.75))


class TestWrapAngle:
    def test_interval_convention(self):
        assert wrap_angle(np.pi) == pytest.approx(np.pi)
        assert wrap_angle(-np.pi) == pytest.approx(np.pi)
        assert wrap_angle(1.5 * np.pi) == pytest.approx(-0.5 * np.pi)
        assert wrap_angle(0.3) == pytest.approx(0.3)

    def test_unicycle_state_wraps(self):
        s = UnicycleState(1.0, 2.0, 7.0)
        assert -np.pi < s.heading <= np.pi
        assert s.heading == pytest.approx(7.0 - 2 * np.pi)


class TestMppiConfig:
    def test_invalid_rejected(self):
        with pytest.raises(ValueError, match="n_samples"):
            MppiConfig(n_samples=0)
        with pytest.raises(ValueError, match="horizon"):
            MppiConfig(dt=0.0)
        with pytest.raises(ValueError, match="limits"):
            MppiConfig(max_linear=0.0)
        with pytest.raises(ValueError, match="temperature"):
            MppiConfig(temperature=0.0)

    def test_stated_defaults(self):
        c = MppiConfig()
        assert c.n_samples == 1024
        assert c.n_steps == 100
        assert c.max_linear == 2.0 and c.max_angular == 3.0

    def test_noise_scales_with_limits(self):
        np.testing.assert_allclose(MppiConfig().noise_std, [0.6, 0.9])


class TestClampControls:
    def test_limits_enforced(self):
        c = MppiConfig()
        u = np.array([[5.0, -7.0], [-3.0, 1.0]])
        out = clamp_controls(u, c)
        np.testing.assert_array_equal(out, [[2.0, -3.0], [-2.0, 1.0]])


class TestRollout:
    def test_stationary_closed_form(self, world):
        # zero controls: robot parked on the start cell; the cost is the
        # per-step terrain charge plus the terminal goal distance
        config = MppiConfig()
        controls = np.zeros((config.n_steps, 2))
        traj, cost = rollout(world, np.array(world.start), controls, config)
        np.testing.assert_allclose(traj - traj[0], 0.0, atol=1e-12)
        sx, sy, _ = world.start
        gx, gy = world.goal
        expected = config.n_steps * config.w_terrain * world.cost_at(sx, sy) \
            + config.w_goal * np.hypot(sx - gx, sy - gy)
        assert cost == pytest.approx(expected)

    def test_through_patch_costs_more_than_around(self, world):
        # equal-length straight lines, one through the patch, one south
        # of it; goal and effort terms are disabled to isolate terrain
        patched = add_rect_cost(world, (4.0, 4.0, 6.0, 6.0), 1.0)
        config = MppiConfig(w_goal=0.0, w_control=0.0)
        controls = np.zeros((config.n_steps, 2))
        controls[:, 0] = 1.5
        _, through = rollout(patched, np.array([1.0, 5.0, 0.0]), controls,
                             config)
        _, around = rollout(patched, np.array([1.0, 2.0, 0.0]), controls,
                            config)
        assert through > around

    def test_out_of_bounds_priced_not_raised(self, world):
        config = MppiConfig()
        controls = np.zeros((config.n_steps, 2))
        controls[:, 0] = config.max_linear   # drives off the east edge
        _, cost = rollout(world, np.array([9.0, 5.0, 0.0]), controls, config)
        _, parked = rollout(world, np.array([9.0, 5.0, 0.0]),
                            np.zeros((config.n_steps, 2)), config)
        assert np.isfinite(cost)
        assert cost > parked

    def test_matches_stepwise_reevaluation(self, world):
        # independent unicycle re-integration, re-costing, re-summation
        rng = np.random.default_rng(0)
        config = MppiConfig()
        patched = add_rect_cost(world, (4.0, 4.0, 6.0, 6.0), 1.0)
        controls = clamp_controls(
            rng.normal(0.0, 1.0, (config.n_steps, 2)), config)
        traj, cost = rollout(patched, np.array(patched.start), controls,
                             config)

        x, y, th = patched.start
        stages = []
        for v, w in controls:
            x = x + config.dt * v * np.cos(th)
            y = y + config.dt * v * np.sin(th)
            th = th + config.dt * w
            th = np.arctan2(np.sin(th), np.cos(th))
            wmax, hmax = patched.extent
            if 0 <= x < wmax and 0 <= y < hmax:
                stage = config.w_terrain * patched.costs[
                    int(y // patched.cell_size), int(x // patched.cell_size)]
            else:
                stage = config.w_bounds
            stages.append(stage + config.w_control * (v * v + w * w))
        gx, gy = patched.goal
        terminal = config.w_goal * np.hypot(x - gx, y - gy)
        assert cost == pytest.approx(rollout_cost_resum(np.array(stages),
                                                        terminal), rel=1e-12)
        np.testing.assert_allclose(traj[-1, :2], [x, y], atol=1e-9)


class TestMppiWeights:
    def test_sum_to_one_and_nonnegative(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            costs = rng.uniform(0.0, 100.0, 256)
            w = mppi_weights(costs, 1.0)
            assert abs(w.sum() - 1.0) <= 1e-12
            assert w.min() >= 0.0

    def test_cost_shift_invariance_exact(self):
        # dyadic costs and shift make the float subtraction exact, so
        # the min-subtraction yields bitwise identical weights
        costs = np.array([1.5, 2.25, 4.0, 0.75, 3.125])
        w0 = mppi_weights(costs, 0.7)
        w1 = mppi_weights(costs + 64.0, 0.7)
        np.testing.assert_array_equal(w0, w1)

    def test_small_temperature_concentrates(self):
        rng = np.random.default_rng(2)
        costs = rng.uniform(1.0, 10.0, 1024)
        w = mppi_weights(costs, 1e-6)
        assert w[np.argmin(costs)] > 0.99

    def test_identical_costs_uniform(self):
        w = mppi_weights(np.full(64, 3.2), 1.0)
        np.testing.assert_allclose(w, 1.0 / 64, atol=1e-15)


class TestMppiUpdate:
    def test_output_within_limits(self, world):
        # huge noise saturates many candidates; the weighted average of
        # clamped controls must stay within limits
        config = MppiConfig(n_samples=128, noise_frac=5.0)
        rng = np.random.Generator(np.random.Philox(0))
        u, _ = mppi_update(config, world, np.array(world.start),
                           np.zeros((config.n_steps, 2)), rng)
        assert (np.abs(u[:, 0]) <= config.max_linear + 1e-12).all()
        assert (np.abs(u[:, 1]) <= config.max_angular + 1e-12).all()

    def test_zero_weights_world_gives_mean_perturbation(self, world):
        # all cost weights zero: every sample costs 0, weights uniform,
        # and the update is the plain mean of the clamped candidates
        config = MppiConfig(n_samples=64, w_terrain=0.0, w_goal=0.0,
                            w_control=0.0, w_bounds=0.0)
        nominal = np.zeros((config.n_steps, 2))
        u, info = mppi_update(config, world, np.array(world.start), nominal,
                              np.random.Generator(np.random.Philox(3)))
        np.testing.assert_allclose(info["weights"], 1.0 / 64, atol=1e-15)
        noise = np.random.Generator(np.random.Philox(3)).normal(
            0.0, 1.0, (64, config.n_steps, 2)) * config.noise_std
        expected = clamp_controls(nominal[None] + noise, config).mean(axis=0)
        np.testing.assert_allclose(u, expected, atol=1e-12)


class TestPlanToGoal:
    def test_reaches_goal_near_straight_line(self, world):
        res = plan_to_goal(world, MppiConfig(), seed=0)
        assert res.reached
        gx, gy = world.goal
        end = res.trajectory[-1]
        assert np.hypot(end[0] - gx, end[1] - gy) <= GOAL_RADIUS
        straight = np.hypot(gx - world.start[0], gy - world.start[1])
        assert path_length(res.trajectory) <= 1.2 * straight

    def test_deterministic_given_seed(self, world):
        a = plan_to_goal(world, MppiConfig(n_samples=128), seed=5)
        b = plan_to_goal(world, MppiConfig(n_samples=128), seed=5)
        np.testing.assert_array_equal(a.trajectory, b.trajectory)
        np.testing.assert_array_equal(a.controls, b.controls)
        c = plan_to_goal(world, MppiConfig(n_samples=128), seed=6)
        assert not np.array_equal(a.trajectory, c.trajectory)

    def test_step_budget_exhaustion_times_out(self, world):
        res = plan_to_goal(world, MppiConfig(n_samples=64), max_steps=5,
                           seed=0)
        assert res.outcome == "timeout"
        assert res.steps == 5
        assert res.trajectory.shape == (6, 3)

    def test_costly_patch_avoided_free_patch_crossed(self, diagonal_world):
        config = MppiConfig()
        rect = (4.0, 4.0, 6.0, 6.0)
        grass = add_rect_cost(diagonal_world, rect, 1.0)
        free = add_rect_cost(diagonal_world, rect, 0.1)
        res_grass = plan_to_goal(grass, config, seed=0)
        res_free = plan_to_goal(free, config, seed=0)
        assert res_grass.reached and res_free.reached
        assert patch_occupancy(grass, res_grass.trajectory) == 0.0
        assert patch_occupancy(free, res_free.trajectory) > 0.0

    def test_occupancy_monotone_in_patch_cost(self, diagonal_world):
        # raising the patch cost never raises mean occupancy
        config = MppiConfig(n_samples=256)
        rect = (4.0, 4.0, 6.0, 6.0)
        means = []
        for cost in (0.0, 1.0, 10.0, 100.0):
            patched = add_rect_cost(diagonal_world, rect, cost)
            occ = [patch_occupancy(patched,
                                   plan_to_goal(patched, config,
                                                seed=s).trajectory)
                   for s in range(20)]
            means.append(np.mean(occ))
        assert all(a >= b - 1e-12 for a, b in zip(means, means[1:]))

    def test_trajectory_csv(self, tmp_path, world):
        res = plan_to_goal(world, MppiConfig(n_samples=64), max_steps=10,
                           seed=0)
        path = tmp_path / "traj.csv"
        write_trajectory_csv(path, res)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "step,x,y,heading,v,omega"
        assert len(lines) == res.steps + 1


class TestCostmapFromLabels:
    NAMES = ["asphalt", "grass"]

    def test_uniform_low_cost(self):
        regions = [((0, 0, 4, 4), self.NAMES, [0.9, 0.1])]
        costs = costmap_from_labels(4, 4, regions)
        np.testing.assert_array_equal(costs, 0.1)

    def test_single_grass_region_local(self):
        regions = [((0, 0, 4, 4), self.NAMES, [0.9, 0.1]),
                   ((1, 1, 3, 3), self.NAMES, [0.2, 0.8])]
        costs = costmap_from_labels(4, 4, regions)
        assert costs[2, 2] == 1.0
        assert costs[0, 0] == 0.1
        assert (costs == 1.0).sum() == 4

    def test_label_flip_inverts_pattern(self):
        a = costmap_from_labels(2, 2, [((0, 0, 2, 2), self.NAMES, [0.9, 0.1])])
        b = costmap_from_labels(2, 2, [((0, 0, 2, 2), self.NAMES, [0.1, 0.9])])
        np.testing.assert_array_equal(a, 0.1)
        np.testing.assert_array_equal(b, 1.0)

    def test_uncovered_cells_unknown_cost(self):
        costs = costmap_from_labels(3, 3, [((0, 0, 1, 3), self.NAMES,
                                            [1.0, 0.0])])
        np.testing.assert_array_equal(costs[0], 0.1)
        np.testing.assert_array_equal(costs[1:], 1.5)

    def test_unknown_class_rejected(self):
        with pytest.raises(ValueError, match="cost entry"):
            costmap_from_labels(2, 2, [((0, 0, 2, 2), ["lava"], [1.0])])

    def test_mismatched_probabilities_rejected(self):
        with pytest.raises(ValueError, match="disagree"):
            costmap_from_labels(2, 2, [((0, 0, 2, 2), self.NAMES, [1.0])])
