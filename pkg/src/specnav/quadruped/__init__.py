"""Friction-aware trunk MPC, trot gait, and the slip-capable simulator."""
from .dynamics import (FOOT_NAMES, GRAVITY, SrbParams, initial_state,
                       linearize_dynamics, model_step)
from .gait import GaitSchedule, raibert_foothold, swing_foot_position
from .mpc import (MpcConfig, MpcQp, MpcSolution, build_mpc_qp, cone_slack,
                  plan_horizon_contacts, pyramid_constraints,
                  reference_trajectory, solve_mpc)
from .qp import QpResult, kkt_residual, solve_qp
from .simulate import (CampaignRow, EpisodeMetrics, EpisodeResult,
                       EpisodeTrace, SimConfig, compute_metrics, coulomb_cap,
                       friction_speed_limit, run_episode, simulate_step,
                       summarize_campaign, total_energy, write_campaign_csv,
                       write_trace_csv)

__all__ = [
    "FOOT_NAMES", "GRAVITY", "SrbParams", "initial_state",
    "linearize_dynamics", "model_step",
    "GaitSchedule", "raibert_foothold", "swing_foot_position",
    "MpcConfig", "MpcQp", "MpcSolution", "build_mpc_qp", "cone_slack",
    "plan_horizon_contacts", "pyramid_constraints", "reference_trajectory",
    "solve_mpc",
    "QpResult", "kkt_residual", "solve_qp",
    "CampaignRow", "EpisodeMetrics", "EpisodeResult", "EpisodeTrace",
    "SimConfig", "compute_metrics", "coulomb_cap", "friction_speed_limit",
    "run_episode", "simulate_step", "summarize_campaign", "total_energy",
    "write_campaign_csv", "write_trace_csv",
]
