"""2D cost gridworld for the wheeled planner.

Cells carry non-negative traversal costs; an optional rectangular patch
marks the high-cost material region experiments measure occupancy
against.  Row 0 sits at y = 0 and rows grow with y; rendering flips
vertically so images show y up.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np


@dataclass(frozen=True)
class GridWorld:
    """Cost field plus the planning endpoints."""

    costs: np.ndarray            # [rows, cols], finite, >= 0
    cell_size: float
    start: tuple                 # (x, y, heading)
    goal: tuple                  # (x, y)
    patch: tuple | None = None   # (x0, y0, x1, y1) world rect, optional

    def __post_init__(self):
        costs = np.asarray(self.costs, dtype=np.float64)
        object.__setattr__(self, "costs", costs)
        if costs.ndim != 2 or costs.size == 0:
            raise ValueError("costs must be a non-empty 2-D array")
        if not np.isfinite(costs).all() or (costs < 0).any():
            raise ValueError("costs must be finite and non-negative")
        if self.cell_size <= 0:
            raise ValueError("cell_size must be positive")
        if not self.in_bounds(self.start[0], self.start[1]):
            raise ValueError("start must lie inside the grid")
        if not self.in_bounds(self.goal[0], self.goal[1]):
            raise ValueError("goal must lie inside the grid")

    @property
    def rows(self) -> int:
        return self.costs.shape[0]

    @property
    def cols(self) -> int:
        return self.costs.shape[1]

    @property
    def extent(self) -> tuple:
        """(width, height) in meters."""
        return (self.cols * self.cell_size, self.rows * self.cell_size)

    def in_bounds(self, x, y):
        w, h = self.extent
        return (x >= 0) & (x < w) & (y >= 0) & (y < h)

    def cell_index(self, x, y):
        """(row, col) arrays for in-bounds world coordinates."""
        col = np.floor(np.asarray(x) / self.cell_size).astype(int)
        row = np.floor(np.asarray(y) / self.cell_size).astype(int)
        return row, col

    def cost_at(self, x, y):
        """Terrain cost under in-bounds points; out of bounds is the
        caller's problem (planners price it separately)."""
        row, col = self.cell_index(x, y)
        return self.costs[row, col]

    def in_patch(self, x, y):
        if self.patch is None:
            return np.zeros(np.shape(x), dtype=bool)
        x0, y0, x1, y1 = self.patch
        return (x >= x0) & (x < x1) & (y >= y0) & (y < y1)


def make_open_world(cols: int = 40, rows: int = 40, cell_size: float = 0.25,
                    base_cost: float = 0.1,
                    start: tuple = (1.25, 5.0, 0.0),
                    goal: tuple = (8.75, 5.0)) -> GridWorld:
    """Uniform low-cost world; defaults put the goal straight ahead."""
    costs = np.full((rows, cols), float(base_cost))
    return GridWorld(costs, cell_size, tuple(start), tuple(goal))


def add_rect_cost(world: GridWorld, rect: tuple, cost: float) -> GridWorld:
    """World with cells inside the (x0, y0, x1, y1) rect set to cost.

    The rect also becomes the world's measured patch, snapped to the
    painted cell boundaries so occupancy checks match the cost field.
    """
    x0, y0, x1, y1 = rect
    if not (x1 > x0 and y1 > y0):
        raise ValueError("rect must have positive area")
    if cost < 0:
        raise ValueError("cost must be non-negative")
    c0 = int(np.floor(x0 / world.cell_size))
    c1 = int(np.ceil(x1 / world.cell_size))
    r0 = int(np.floor(y0 / world.cell_size))
    r1 = int(np.ceil(y1 / world.cell_size))
    c0, r0 = max(c0, 0), max(r0, 0)
    c1, r1 = min(c1, world.cols), min(r1, world.rows)
    costs = world.costs.copy()
    costs[r0:r1, c0:c1] = cost
    snapped = (c0 * world.cell_size, r0 * world.cell_size,
               c1 * world.cell_size, r1 * world.cell_size)
    return replace(world, costs=costs, patch=snapped)


def save_world(path, world: GridWorld) -> None:
    """Plain-text format: dims/cell-size header, start, goal, optional
    patch, then one row of cost values per grid row."""
    lines = ["specnav-gridworld 1",
             f"{world.cols} {world.rows} {world.cell_size:.9g}",
             "start " + " ".join(f"{v:.9g}" for v in world.start),
             "goal " + " ".join(f"{v:.9g}" for v in world.goal)]
    if world.patch is not None:
        lines.append("patch " + " ".join(f"{v:.9g}" for v in world.patch))
    for row in world.costs:
        lines.append(" ".join(f"{v:.9g}" for v in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_world(path) -> GridWorld:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0].split()[0] != "specnav-gridworld":
        raise ValueError("not a gridworld file")
    cols, rows, cell_size = lines[1].split()
    cols, rows, cell_size = int(cols), int(rows), float(cell_size)
    start = goal = patch = None
    k = 2
    while k < len(lines) and lines[k].split()[0] in ("start", "goal", "patch"):
        tag, *vals = lines[k].split()
        vals = tuple(float(v) for v in vals)
        if tag == "start":
            start = vals
        elif tag == "goal":
            goal = vals
        else:
            patch = vals
        k += 1
    if start is None or goal is None:
        raise ValueError("gridworld file missing start or goal")
    costs = np.array([[float(v) for v in lines[k + r].split()]
                      for r in range(rows)])
    if costs.shape != (rows, cols):
        raise ValueError("cost rows do not match the declared dimensions")
    return GridWorld(costs, cell_size, start, goal, patch)


def render_ppm(path, world: GridWorld, trajectory: np.ndarray | None = None,
               scale: int = 8) -> None:
    """Binary PPM of the cost field with the trajectory drawn on top.

    Cost maps to a green-to-brown ramp (low cost green); the path is
    red, start blue, goal white.  Deterministic bytes for fixed inputs.
    """
    cmax = max(world.costs.max(), 1e-9)
    level = (world.costs / cmax)[::-1]          # flip so y points up
    img = np.zeros((world.rows, world.cols, 3), dtype=np.float64)
    img[..., 0] = 0.35 + 0.45 * level            # brown gains red
    img[..., 1] = 0.75 - 0.45 * level
    img[..., 2] = 0.15
    img = np.repeat(np.repeat(img, scale, axis=0), scale, axis=1)

    def paint(x, y, color, radius=1):
        px = int(x / world.cell_size * scale)
        py = img.shape[0] - 1 - int(y / world.cell_size * scale)
        r0, r1 = max(py - radius, 0), min(py + radius + 1, img.shape[0])
        c0, c1 = max(px - radius, 0), min(px + radius + 1, img.shape[1])
        img[r0:r1, c0:c1] = color

    if trajectory is not None:
        for x, y in np.asarray(trajectory)[:, :2]:
            paint(x, y, (0.9, 0.1, 0.1))
    paint(world.start[0], world.start[1], (0.1, 0.2, 0.9), radius=2)
    paint(world.goal[0], world.goal[1], (1.0, 1.0, 1.0), radius=2)

    data = (np.clip(img, 0.0, 1.0) * 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P6 {data.shape[1]} {data.shape[0]} 255\n".encode())
        fh.write(data.tobytes())
