"""Slip-capped ground truth, episode loop, metrics, and campaign summary."""
import csv

import numpy as np
import pytest

from specnav.quadruped import (
    EpisodeMetrics,
    EpisodeTrace,
    GaitSchedule,
    MpcConfig,
    SrbParams,
    compute_metrics,
    coulomb_cap,
    friction_speed_limit,
    initial_state,
    run_episode,
    simulate_step,
    summarize_campaign,
    total_energy,
    write_campaign_csv,
    write_trace_csv,
)
from specnav.quadruped.dynamics import PZ, VX, VZ, WX, WZ
from specnav.quadruped.simulate import SUCCESS_HEIGHT, SimConfig


@pytest.fixture(scope="module")
def params():
    return SrbParams()


@pytest.fixture(scope="module")
def square_feet(params):
    feet = params.hip_offsets.copy()
    feet[:, 2] = 0.0
    return feet


def constant_trace(n=100, height=0.32, forces=None):
    states = np.zeros((n, 13))
    states[:, PZ] = height
    if forces is None:
        forces = np.zeros((n, 4, 3))
        forces[:, :, 2] = 29.43
    return EpisodeTrace(
        time=np.arange(n) * 1e-3,
        states=states,
        forces=forces,
        slip=np.zeros((n, 4), dtype=bool),
        contact=np.ones((n, 4), dtype=bool),
        desired_velocity=np.zeros((n, 3)),
        desired_height=0.32,
    )


class TestFrictionSpeedLimit:
    def test_monotone_in_mu(self):
        mus = np.linspace(0.05, 1.0, 20)
        limits = [friction_speed_limit(m) for m in mus]
        assert all(a < b for a, b in zip(limits, limits[1:]))

    def test_ice_slow_half_mu_unmoderated(self):
        assert friction_speed_limit(0.05) < 0.2
        # a controller believing mu=0.5 sees no reason to slow down
        assert friction_speed_limit(0.5) > MpcConfig().desired_speed


class TestCoulombCap:
    def test_within_cone_untouched(self):
        cmd = np.array([[2.0, 1.0, 100.0]])
        realized, slipped = coulomb_cap(cmd, 0.5)
        np.testing.assert_array_equal(realized, cmd)
        assert not slipped[0]

    def test_double_demand_caps_exactly(self):
        # tangential demand 2x the cap realizes exactly mu*fz, flagged
        cmd = np.array([[6.0, 8.0, 100.0]])
        realized, slipped = coulomb_cap(cmd, 0.05)
        assert slipped[0]
        assert np.hypot(realized[0, 0], realized[0, 1]) \
            == pytest.approx(0.05 * 100.0)
        # direction preserved
        assert realized[0, 0] / realized[0, 1] == pytest.approx(6.0 / 8.0)

    def test_negative_vertical_clamped(self):
        cmd = np.array([[1.0, 0.0, -5.0]])
        realized, slipped = coulomb_cap(cmd, 0.5)
        assert realized[0, 2] == 0.0
        assert np.hypot(realized[0, 0], realized[0, 1]) == 0.0
        assert slipped[0]


class TestSimulateStep:
    def test_invalid_dt_rejected(self, params, square_feet):
        with pytest.raises(ValueError, match="dt"):
            simulate_step(0.5, initial_state(), square_feet,
                          np.ones(4, dtype=bool), np.zeros((4, 3)),
                          params, 0.0)

    def test_no_contact_is_ballistic(self, params, square_feet):
        # semi-implicit: position integrates the updated velocity
        x = initial_state()
        dt = 1e-3
        nxt, realized, slipped = simulate_step(
            0.5, x, square_feet, np.zeros(4, dtype=bool),
            np.full((4, 3), 50.0), params, dt)
        np.testing.assert_array_equal(realized, 0.0)
        assert not slipped.any()
        assert nxt[VZ] == pytest.approx(-9.81 * dt)
        assert nxt[PZ] == pytest.approx(0.32 - 9.81 * dt * dt)

    def test_slip_cap_invariant(self, params, square_feet):
        rng = np.random.default_rng(4)
        for _ in range(200):
            mu = float(rng.uniform(0.05, 1.0))
            cmd = rng.normal(0.0, 40.0, (4, 3))
            cmd[:, 2] = rng.uniform(0.0, 200.0, 4)
            contact = rng.random(4) < 0.7
            _, realized, _ = simulate_step(
                mu, initial_state(), square_feet, contact, cmd, params, 1e-3)
            tangential = np.hypot(realized[:, 0], realized[:, 1])
            assert (tangential <= mu * realized[:, 2] + 1e-12).all()

    def test_energy_never_rises_without_force(self, params, square_feet):
        # ballistic flight plus ground clamping only dissipates; yaw
        # rotation of the inertia adds at most O(|w|^3 dt) which the
        # -0.5*m*g^2*dt^2 integrator loss dominates for |w| <= 1
        rng = np.random.default_rng(8)
        for _ in range(100):
            x = initial_state(height=float(rng.uniform(0.1, 0.5)))
            x[0:3] = rng.normal(0.0, 0.3, 3)
            x[WX:WZ + 1] = rng.uniform(-1.0, 1.0, 3)
            x[VX:VZ + 1] = rng.normal(0.0, 0.5, 3)
            e0 = total_energy(x, params)
            nxt, _, _ = simulate_step(0.5, x, square_feet,
                                      np.ones(4, dtype=bool),
                                      np.zeros((4, 3)), params, 1e-3)
            assert total_energy(nxt, params) <= e0

    def test_crash_clamp_stops_motion(self, params, square_feet):
        x = initial_state(height=0.0502)
        x[VZ] = -1.0
        nxt, _, _ = simulate_step(0.5, x, square_feet,
                                  np.zeros(4, dtype=bool),
                                  np.zeros((4, 3)), params, 1e-3)
        assert nxt[PZ] == SimConfig.crash_z
        np.testing.assert_array_equal(nxt[VX:VZ + 1], 0.0)
        np.testing.assert_array_equal(nxt[WX:WZ + 1], 0.0)


class TestRunEpisode:
    def test_invalid_arguments_rejected(self):
        with pytest.raises(ValueError, match="duration"):
            run_episode(0.5, 0.5, duration=0.0)
        with pytest.raises(ValueError, match="config.mu"):
            run_episode(0.5, 0.5, config=MpcConfig(mu=0.3))

    def test_seeded_episodes_bit_reproducible(self):
        a = run_episode(0.8, 0.8, duration=0.5, seed=12)
        b = run_episode(0.8, 0.8, duration=0.5, seed=12)
        np.testing.assert_array_equal(a.trace.states, b.trace.states)
        np.testing.assert_array_equal(a.trace.forces, b.trace.forces)
        assert a.metrics == b.metrics

    def test_distinct_seeds_differ(self):
        a = run_episode(0.8, 0.8, duration=0.5, seed=1)
        b = run_episode(0.8, 0.8, duration=0.5, seed=2)
        assert not np.array_equal(a.trace.states, b.trace.states)

    def test_matched_high_friction_walks(self):
        res = run_episode(0.8, 0.8, duration=3.0, seed=0)
        assert res.metrics.success
        assert res.metrics.min_height > SUCCESS_HEIGHT
        assert res.metrics.slippage < 0.12

    def test_ice_differentiates_controllers(self):
        fixed = run_episode(0.05, 0.5, duration=3.0, seed=0)
        informed = run_episode(0.05, 0.05, duration=3.0, seed=0)
        assert not fixed.metrics.success
        assert informed.metrics.success
        assert fixed.metrics.min_height <= SUCCESS_HEIGHT

    def test_trace_layout(self):
        res = run_episode(0.8, 0.8, duration=0.25, seed=0)
        n = len(res.trace)
        assert n == 250
        assert res.trace.states.shape == (n, 13)
        assert res.trace.forces.shape == (n, 4, 3)
        assert res.trace.time[0] == 0.0


class TestComputeMetrics:
    def test_empty_trace_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            compute_metrics(constant_trace(n=0))

    def test_constant_height_succeeds(self):
        m = compute_metrics(constant_trace())
        assert m.success
        assert m.min_height == pytest.approx(0.32)

    def test_purely_vertical_forces_zero_slippage(self):
        m = compute_metrics(constant_trace())
        assert m.slippage == 0.0

    def test_tangential_ratio(self):
        forces = np.zeros((10, 4, 3))
        forces[:, :, 2] = 100.0
        forces[:, :, 0] = 30.0
        m = compute_metrics(constant_trace(n=10, forces=forces))
        assert m.slippage == pytest.approx(0.3)

    def test_effort_is_summed_square(self):
        forces = np.zeros((10, 4, 3))
        forces[:, :, 2] = 2.0
        m = compute_metrics(constant_trace(n=10, forces=forces))
        assert m.effort == pytest.approx(10 * 4 * 4.0)


class TestSummarizeCampaign:
    def metrics(self, tracking, effort, success=True):
        return EpisodeMetrics(success, 0.3, 0.05, tracking, effort)

    def test_baseline_normalizes_to_one(self):
        results = {
            "informed": [self.metrics(2.0, 10.0), self.metrics(4.0, 30.0)],
            "fixed": [self.metrics(6.0, 40.0), self.metrics(6.0, 40.0)],
        }
        rows = summarize_campaign(results)
        assert rows[0].variant == "informed"
        assert rows[0].tracking == pytest.approx(1.0)
        assert rows[0].effort == pytest.approx(1.0)
        assert rows[1].tracking == pytest.approx(2.0)
        assert rows[1].effort == pytest.approx(2.0)

    def test_success_rate(self):
        results = {"informed": [self.metrics(1, 1, True),
                                self.metrics(1, 1, False)]}
        assert summarize_campaign(results)[0].success_rate == 0.5

    def test_missing_baseline_rejected(self):
        with pytest.raises(ValueError, match="baseline"):
            summarize_campaign({"fixed": [self.metrics(1, 1)]})

    def test_empty_variant_rejected(self):
        with pytest.raises(ValueError, match="episodes"):
            summarize_campaign({"informed": [self.metrics(1, 1)],
                                "fixed": []})


class TestCsvWriters:
    def test_trace_csv_round_trip(self, tmp_path):
        res = run_episode(0.8, 0.8, duration=0.05, seed=0)
        path = tmp_path / "trace.csv"
        write_trace_csv(path, res.trace)
        with open(path) as fh:
            rows = list(csv.reader(fh))
        assert rows[0][:3] == ["time", "roll", "pitch"]
        assert len(rows) == len(res.trace) + 1
        assert float(rows[1][6]) == pytest.approx(res.trace.states[0, PZ])

    def test_campaign_csv(self, tmp_path):
        rows_in = summarize_campaign(
            {"informed": [EpisodeMetrics(True, 0.3, 0.05, 2.0, 8.0)]})
        path = tmp_path / "campaign.csv"
        write_campaign_csv(path, rows_in)
        with open(path) as fh:
            rows = list(csv.reader(fh))
        assert rows[0][0] == "variant"
        assert rows[1][0] == "informed"
        assert float(rows[1][2]) == 1.0
