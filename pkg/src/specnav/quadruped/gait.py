"""Trot gait timing and swing-foot trajectories.

Diagonal pairs alternate: (FL, RR) in stance during the first half of
each cycle, (FR, RL) during the second.  Duty factor 0.5 keeps exactly
two feet on the ground at all times.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# foot order FL, FR, RL, RR; 0.0 phase offset = stance at cycle start
_TROT_OFFSETS = np.array([0.0, 0.5, 0.5, 0.0])


@dataclass(frozen=True)
class GaitSchedule:
    """Periodic stance/swing pattern for the trot."""

    frequency: float = 2.75      # cycles per second
    duty: float = 0.5            # stance fraction of each cycle
    swing_height: float = 0.10   # swing apex above the ground, m

    def __post_init__(self):
        if self.frequency <= 0:
            raise ValueError("frequency must be positive")
        if not 0.0 < self.duty < 1.0:
            raise ValueError("duty must lie in (0, 1)")

    @property
    def cycle_time(self) -> float:
        return 1.0 / self.frequency

    @property
    def stance_time(self) -> float:
        return self.duty * self.cycle_time

    @property
    def swing_time(self) -> float:
        return (1.0 - self.duty) * self.cycle_time

    def leg_phase(self, t: float) -> np.ndarray:
        """Per-foot phase in [0, 1) at time t."""
        return (t * self.frequency + _TROT_OFFSETS) % 1.0

    def stance_mask(self, t: float) -> np.ndarray:
        """Per-foot stance flags at time t.  Phase < duty means stance."""
        return self.leg_phase(t) < self.duty

    def swing_progress(self, t: float) -> np.ndarray:
        """Per-foot swing completion in [0, 1); 0 for feet in stance."""
        phase = self.leg_phase(t)
        prog = (phase - self.duty) / (1.0 - self.duty)
        return np.where(phase < self.duty, 0.0, prog)


def swing_foot_position(liftoff: np.ndarray, target: np.ndarray,
                        progress: float, swing_height: float) -> np.ndarray:
    """Point on the swing arc from liftoff to target.

    Horizontal motion interpolates linearly; height follows a half-sine
    peaking at swing_height mid-swing, returning to the ground plane at
    touchdown.
    """
    s = float(np.clip(progress, 0.0, 1.0))
    pos = (1.0 - s) * liftoff + s * target
    pos[2] = (1.0 - s) * liftoff[2] + s * target[2] \
        + swing_height * np.sin(np.pi * s)
    return pos


def raibert_foothold(hip_world: np.ndarray, velocity: np.ndarray,
                     desired_velocity: np.ndarray, stance_time: float,
                     gain: float = 0.1) -> np.ndarray:
    """Touchdown point: hip projection plus velocity-based offset.

    Half-stance symmetry term centers the stance phase under the hip;
    the feedback term leans the foothold into velocity error.
    """
    target = hip_world.copy()
    target[2] = 0.0
    target[:2] += 0.5 * stance_time * velocity[:2]
    target[:2] += gain * (velocity[:2] - desired_velocity[:2])
    return target
