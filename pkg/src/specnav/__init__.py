"""specnav: spectral terrain perception with planning consumers.

RGB patches in, per-pixel-free spectral signatures out, then a
friction-aware quadruped MPC and a terrain-cost MPPI planner that
consume the estimates.
"""

__version__ = "0.1.0"
