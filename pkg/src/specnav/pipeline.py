"""Scene composition, segmentation, prediction adapters, and campaigns.

Glue between the perception stack and the two planners: a scene is
composed from material tiles, carved back into square patches by a
color flood fill, pushed through the network, and the estimates feed
either the quadruped campaign (minimum friction) or the wheeled
planner's cost layer (class lookup).  Predictions stay constant per
region; no per-pixel upsampling is attempted.

Every stage is a pure function of (inputs, config, seed), and all
report writers emit rows in index order, so end-to-end reruns produce
byte-identical artifacts.  Stages are safe to fan out per episode or
per patch as long as results merge back in that order.
"""
from __future__ import annotations

import csv
import time
from dataclasses import dataclass, replace

import numpy as np

from .gridworld import GridWorld, add_rect_cost, make_open_world
from .model import SpectralNet, TaskHead
from .mppi import (DEFAULT_CLASS_COSTS, UNKNOWN_COST, MppiConfig, PlanResult,
                   patch_occupancy, path_length, plan_to_goal)
from .nn import Tensor
from .quadruped.simulate import (EpisodeMetrics, SimConfig, run_episode,
                                 summarize_campaign)
from .synth import (TRAIN_CLASSES, WavelengthGrid, default_class_table,
                    gen_patch, make_response_matrix)

DEFAULT_TAU = 0.05
DEFAULT_MIN_PATCH = 8


# -- scene composition --------------------------------------------------------


@dataclass(frozen=True)
class SceneImage:
    """RGB raster tiled from materials, with ground-truth region ids."""

    rgb: np.ndarray          # [3, H, W] in [0, 1]
    regions: np.ndarray      # [H, W] int, one id per tile
    region_classes: tuple    # material name per region id

    @property
    def n_regions(self) -> int:
        return len(self.region_classes)


def compose_scene(names, class_table: dict | None = None, tile_size: int = 32,
                  cols: int | None = None, seed: int = 0,
                  textured: bool = True, grid: WavelengthGrid | None = None,
                  R: np.ndarray | None = None) -> SceneImage:
    """Tile one rendered patch per material name into a single frame.

    Tiles fill a row-major grid of `cols` columns (default one row).
    With textured=False, tiles render without texture or brightness
    jitter, so each is a constant color and segmentation can be checked
    against the region map exactly.
    """
    names = list(names)
    if not names:
        raise ValueError("scene needs at least one material")
    table = class_table or default_class_table()
    missing = [n for n in names if n not in table]
    if missing:
        raise ValueError(f"unknown materials: {missing}")
    cols = len(names) if cols is None else cols
    if cols < 1 or len(names) % cols != 0:
        raise ValueError(f"{len(names)} tiles do not fill {cols} columns")

    grid = grid or WavelengthGrid()
    R = R if R is not None else make_response_matrix(grid)
    tile_rows = len(names) // cols
    rgb = np.zeros((3, tile_rows * tile_size, cols * tile_size))
    regions = np.zeros(rgb.shape[1:], dtype=int)

    for i, name in enumerate(names):
        spec = table[name]
        if not textured:
            spec = replace(spec, texture_amp=0.0)
        brightness = (0.7, 1.3) if textured else (1.0, 1.0)
        sample = gen_patch(spec, grid, R, size=tile_size, seed=seed + i,
                           brightness_range=brightness)
        r0 = (i // cols) * tile_size
        c0 = (i % cols) * tile_size
        rgb[:, r0:r0 + tile_size, c0:c0 + tile_size] = sample.rgb
        regions[r0:r0 + tile_size, c0:c0 + tile_size] = i
    return SceneImage(rgb, regions, tuple(names))


# -- flood-fill segmentation --------------------------------------------------


@dataclass(frozen=True)
class RegionPatch:
    """One segmented region reduced to a model-ready square patch."""

    region_id: int
    patch: np.ndarray        # [3, S, S] rescaled crop
    square: tuple            # (row, col, side) of the inscribed crop
    n_pixels: int


@dataclass(frozen=True)
class Segmentation:
    patches: list            # RegionPatch per usable region
    labels: np.ndarray       # [H, W] region id per pixel, full cover
    skipped: list            # (region_id, n_pixels) below the patch minimum

    @property
    def n_regions(self) -> int:
        return len(self.patches) + len(self.skipped)


def flood_fill_regions(rgb: np.ndarray, tau: float = DEFAULT_TAU) -> np.ndarray:
    """Label pixels by flood fill from raster-order seeds; a pixel joins
    while its color stays within tau (L-inf over channels) of the seed
    color.  The frontier expands a whole wave per step, so cost scales
    with region diameter rather than pixel count."""
    if tau < 0:
        raise ValueError("tau must be non-negative")
    _, h, w = rgb.shape
    labels = np.full((h, w), -1, dtype=int)
    next_id = 0
    for start in range(h * w):
        if labels.flat[start] >= 0:
            continue
        seed_color = rgb.reshape(3, -1)[:, start][:, None]
        labels.flat[start] = next_id
        rs, cs = np.divmod(np.array([start]), w)
        while rs.size:
            nr = np.concatenate([rs - 1, rs + 1, rs, rs])
            nc = np.concatenate([cs, cs, cs - 1, cs + 1])
            ok = (nr >= 0) & (nr < h) & (nc >= 0) & (nc < w)
            nr, nc = nr[ok], nc[ok]
            flat = np.unique(nr * w + nc)
            nr, nc = np.divmod(flat, w)
            ok = labels[nr, nc] < 0
            nr, nc = nr[ok], nc[ok]
            ok = np.abs(rgb[:, nr, nc] - seed_color).max(axis=0) <= tau
            rs, cs = nr[ok], nc[ok]
            labels[rs, cs] = next_id
        next_id += 1
    return labels


def largest_square(mask: np.ndarray) -> tuple:
    """(row, col, side) of the largest all-true axis-aligned square."""
    h, w = mask.shape
    dp = np.zeros((h, w), dtype=int)
    dp[0] = mask[0]
    dp[:, 0] = mask[:, 0]
    for r in range(1, h):
        above = dp[r - 1]
        row = dp[r]
        # row[c - 1] feeds row[c], so resolve each row left to right.
        for c in range(1, w):
            if mask[r, c]:
                row[c] = min(above[c], above[c - 1], row[c - 1]) + 1
    side = int(dp.max())
    if side == 0:
        return (0, 0, 0)
    r, c = np.unravel_index(int(dp.argmax()), dp.shape)
    return (int(r) - side + 1, int(c) - side + 1, side)


def bilinear_resize(img: np.ndarray, out_size: int) -> np.ndarray:
    """Resample [3, h, w] to [3, out_size, out_size], pixel centers aligned."""
    _, h, w = img.shape
    if h == out_size and w == out_size:
        return img.copy()
    out = np.empty((img.shape[0], out_size, out_size))
    ys = np.clip((np.arange(out_size) + 0.5) * h / out_size - 0.5, 0, h - 1)
    xs = np.clip((np.arange(out_size) + 0.5) * w / out_size - 0.5, 0, w - 1)
    y0 = np.clip(ys.astype(int), 0, h - 2) if h > 1 else np.zeros(out_size, int)
    x0 = np.clip(xs.astype(int), 0, w - 2) if w > 1 else np.zeros(out_size, int)
    fy = (ys - y0)[:, None]
    fx = (xs - x0)[None, :]
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    for ch in range(img.shape[0]):
        p = img[ch]
        top = p[np.ix_(y0, x0)] * (1 - fx) + p[np.ix_(y0, x1)] * fx
        bot = p[np.ix_(y1, x0)] * (1 - fx) + p[np.ix_(y1, x1)] * fx
        out[ch] = top * (1 - fy[:, 0])[:, None] + bot * fy[:, 0][:, None]
    return out


def segment_patches(image, tau: float = DEFAULT_TAU, input_size: int = 32,
                    min_patch: int = DEFAULT_MIN_PATCH) -> Segmentation:
    """Flood-fill regions and crop each to a model-ready square patch.

    Per region, the largest inscribed axis-aligned square is cropped
    and bilinearly rescaled to input_size.  Regions whose square falls
    under min_patch are skipped and reported instead of cropped.
    """
    rgb = image.rgb if isinstance(image, SceneImage) else np.asarray(image)
    if rgb.ndim != 3 or rgb.shape[0] != 3:
        raise ValueError(f"expected an RGB raster [3, H, W], got {rgb.shape}")
    if min(rgb.shape[1:]) < min_patch:
        raise ValueError(
            f"image {rgb.shape[1]}x{rgb.shape[2]} is smaller than the "
            f"minimum patch size {min_patch}"
        )
    labels = flood_fill_regions(rgb, tau)
    patches, skipped = [], []
    for rid in range(labels.max() + 1):
        mask = labels == rid
        r0, c0, side = largest_square(mask)
        if side < min_patch:
            skipped.append((rid, int(mask.sum())))
            continue
        crop = rgb[:, r0:r0 + side, c0:c0 + side]
        patch = np.clip(bilinear_resize(crop, input_size), 0.0, 1.0)
        patches.append(RegionPatch(rid, patch, (r0, c0, side),
                                   int(mask.sum())))
    return Segmentation(patches, labels, skipped)


def match_region_iou(labels_pred: np.ndarray, labels_true: np.ndarray) -> np.ndarray:
    """Best-overlap IoU per ground-truth region id."""
    if labels_pred.shape != labels_true.shape:
        raise ValueError("label maps must share a shape")
    ious = []
    for tid in range(labels_true.max() + 1):
        t_mask = labels_true == tid
        hits = np.bincount(labels_pred[t_mask], minlength=labels_pred.max() + 1)
        pid = int(hits.argmax())
        p_mask = labels_pred == pid
        inter = float(hits[pid])
        union = float(t_mask.sum() + p_mask.sum()) - inter
        ious.append(inter / union)
    return np.array(ious)


# -- prediction adapters ------------------------------------------------------


def predict_friction(patch: np.ndarray, model: SpectralNet,
                     head: TaskHead) -> float:
    if head.kind != "regression":
        raise ValueError("friction prediction needs a regression head")
    return float(head(model(Tensor(np.asarray(patch)))).data[0])


def min_friction(patches, model: SpectralNet, head: TaskHead) -> float:
    """Scene-level friction estimate: the minimum over patch estimates.

    The planner must respect the slipperiest material in view, so the
    most pessimistic patch wins.  Order-independent by construction.
    """
    if isinstance(patches, Segmentation):
        patches = patches.patches
    arrays = [p.patch if isinstance(p, RegionPatch) else np.asarray(p)
              for p in patches]
    if not arrays:
        raise ValueError("need at least one patch to estimate friction")
    return min(predict_friction(a, model, head) for a in arrays)


def predict_classes(patches, model: SpectralNet, head: TaskHead,
                    class_names) -> list:
    if head.kind != "classification":
        raise ValueError("class prediction needs a classification head")
    if len(class_names) != head.n_out:
        raise ValueError(
            f"{len(class_names)} names for a {head.n_out}-way head"
        )
    if isinstance(patches, Segmentation):
        patches = patches.patches
    arrays = [p.patch if isinstance(p, RegionPatch) else np.asarray(p)
              for p in patches]
    out = []
    for a in arrays:
        probs = head(model(Tensor(a))).data
        out.append(class_names[int(probs.argmax())])
    return out


# -- quadruped Monte Carlo campaign -------------------------------------------


@dataclass(frozen=True)
class QuadEpisodeRow:
    """One controller variant's run on one sampled terrain."""

    episode: int
    variant: str
    class_name: str
    mu_true: float
    mu_controller: float
    seed: int
    success: bool
    min_height: float
    slippage: float
    tracking: float
    effort: float

    def metrics(self) -> EpisodeMetrics:
        return EpisodeMetrics(self.success, self.min_height, self.slippage,
                              self.tracking, self.effort)


@dataclass(frozen=True)
class CampaignReport:
    episodes: list           # QuadEpisodeRow, episode-major order
    summary: list            # CampaignRow per variant, baseline first


def summarize_episode_rows(rows, baseline: str = "informed") -> list:
    """Aggregate per-episode rows; the path the report itself uses, so a
    CSV round trip reproduces the summary exactly."""
    groups: dict = {}
    for row in rows:
        groups.setdefault(row.variant, []).append(row.metrics())
    return summarize_campaign(groups, baseline=baseline)


def monte_carlo_quad(episodes: int = 200, class_table: dict | None = None,
                     seed: int = 0, duration: float = 3.0,
                     mu_fixed: float = 0.5,
                     model: SpectralNet | None = None,
                     head: TaskHead | None = None,
                     classes: tuple = TRAIN_CLASSES,
                     sim: SimConfig | None = None,
                     input_size: int = 32) -> CampaignReport:
    """Paired-variant trot campaign over a sampled terrain library.

    Each episode samples a material, renders its scene, and runs the
    informed and fixed-mu controllers with the same seed so they face
    identical worlds.  With a model and regression head the informed
    controller walks on the estimated friction from the rendered scene;
    without them it receives the library value directly, isolating the
    control-side effect from perception error.
    """
    if episodes < 1:
        raise ValueError("need at least one episode")
    if (model is None) != (head is None):
        raise ValueError("model and head must be given together")
    table = class_table or default_class_table()
    missing = [n for n in classes if n not in table]
    if missing:
        raise ValueError(f"library classes missing from the table: {missing}")

    rng = np.random.default_rng(seed)
    class_idx = rng.integers(0, len(classes), size=episodes)
    ep_seeds = rng.integers(0, 2**31 - 1, size=episodes)
    grid = WavelengthGrid()
    R = make_response_matrix(grid) if model is not None else None

    rows = []
    for i in range(episodes):
        name = classes[class_idx[i]]
        mu_true = table[name].friction
        ep_seed = int(ep_seeds[i])
        if model is not None:
            scene = compose_scene([name], table, tile_size=input_size,
                                  seed=ep_seed, grid=grid, R=R)
            # Single-material scene: a permissive threshold keeps the
            # tile whole so the model sees a training-scale patch.
            seg = segment_patches(scene, tau=1.0, input_size=input_size)
            informed_mu = min_friction(seg, model, head)
        else:
            informed_mu = mu_true
        for variant, mu_c in (("informed", informed_mu),
                              ("fixed", mu_fixed)):
            res = run_episode(mu_true, mu_c, duration=duration,
                              seed=ep_seed, sim=sim)
            m = res.metrics
            rows.append(QuadEpisodeRow(
                episode=i, variant=variant, class_name=name,
                mu_true=mu_true, mu_controller=mu_c, seed=ep_seed,
                success=m.success, min_height=m.min_height,
                slippage=m.slippage, tracking=m.tracking, effort=m.effort,
            ))
    return CampaignReport(rows, summarize_episode_rows(rows))


def write_quad_episode_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["episode", "variant", "class", "mu_true",
                         "mu_controller", "seed", "success", "min_height",
                         "slippage", "tracking", "effort"])
        for r in rows:
            writer.writerow([
                r.episode, r.variant, r.class_name, f"{r.mu_true:.17g}",
                f"{r.mu_controller:.17g}", r.seed, int(r.success),
                f"{r.min_height:.17g}", f"{r.slippage:.17g}",
                f"{r.tracking:.17g}", f"{r.effort:.17g}",
            ])


def read_quad_episode_csv(path) -> list:
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            rows.append(QuadEpisodeRow(
                episode=int(rec["episode"]), variant=rec["variant"],
                class_name=rec["class"], mu_true=float(rec["mu_true"]),
                mu_controller=float(rec["mu_controller"]),
                seed=int(rec["seed"]), success=bool(int(rec["success"])),
                min_height=float(rec["min_height"]),
                slippage=float(rec["slippage"]),
                tracking=float(rec["tracking"]),
                effort=float(rec["effort"]),
            ))
    return rows


# -- wheeled planner comparison -----------------------------------------------

CROSSING_START = (1.25, 1.25, np.pi / 4)
CROSSING_GOAL = (8.75, 8.75)
CROSSING_PATCH = (4.0, 4.0, 6.0, 6.0)


def make_crossing_world(base_cost: float = 0.1,
                        patch_cost: float | None = None) -> GridWorld:
    """10 m square world whose diagonal start-goal line pierces a patch."""
    world = make_open_world(cols=40, rows=40, cell_size=0.25,
                            base_cost=base_cost, start=CROSSING_START,
                            goal=CROSSING_GOAL)
    if patch_cost is not None:
        world = add_rect_cost(world, CROSSING_PATCH, patch_cost)
    return world


@dataclass(frozen=True)
class WheeledRun:
    condition: str
    reached: bool
    time_to_goal: float      # simulated seconds to the goal radius
    path_length: float
    occupancy: float         # fraction of poses inside the true patch


@dataclass(frozen=True)
class WheeledReport:
    runs: list               # WheeledRun per condition, baseline first
    predicted: dict          # true material name -> predicted class
    results: dict            # condition -> PlanResult


def run_wheeled_comparison(classifier, base: str = "asphalt",
                           patch: str = "grass",
                           class_table: dict | None = None,
                           config: MppiConfig | None = None, seed: int = 0,
                           max_steps: int = 400, base_cost: float = 0.1,
                           class_costs: dict | None = None,
                           input_size: int = 32) -> WheeledReport:
    """Baseline MPPI (geometry-only costs) against the terrain-aware
    cost layer built from the classifier's per-region predictions.

    Both conditions share hyperparameters and the sampling seed; only
    the cost map differs.  Occupancy for both is measured against the
    ground-truth patch rectangle.
    """
    if classifier is None:
        raise ValueError("a trained terrain classifier is required")
    table = class_table or default_class_table()
    grid = WavelengthGrid()
    R = make_response_matrix(grid)
    imgs = np.stack([
        gen_patch(table[name], grid, R, size=input_size, seed=seed + k).rgb
        for k, name in enumerate((base, patch))
    ])
    pred_base, pred_patch = (str(v) for v in classifier.predict(imgs))

    costs = class_costs or DEFAULT_CLASS_COSTS
    truth = make_crossing_world(base_cost, patch_cost=1.0)
    worlds = {
        "baseline": make_crossing_world(base_cost),
        "terrain-aware": make_crossing_world(
            costs.get(pred_base, UNKNOWN_COST),
            patch_cost=costs.get(pred_patch, UNKNOWN_COST)),
    }

    config = config or MppiConfig()
    runs, results = [], {}
    for condition in ("baseline", "terrain-aware"):
        result = plan_to_goal(worlds[condition], config,
                              max_steps=max_steps, seed=seed)
        results[condition] = result
        runs.append(WheeledRun(
            condition=condition, reached=result.reached,
            time_to_goal=result.elapsed,
            path_length=path_length(result.trajectory),
            occupancy=patch_occupancy(truth, result.trajectory),
        ))
    return WheeledReport(runs, {base: pred_base, patch: pred_patch}, results)


def write_wheeled_csv(path, report: WheeledReport) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["condition", "reached", "time_to_goal",
                         "path_length", "patch_occupancy"])
        for r in report.runs:
            writer.writerow([r.condition, int(r.reached),
                             f"{r.time_to_goal:.17g}",
                             f"{r.path_length:.17g}",
                             f"{r.occupancy:.17g}"])


# -- inference throughput -----------------------------------------------------


@dataclass(frozen=True)
class ThroughputReport:
    n_patches: int
    seconds_per_frame: float         # full segment -> predict cycle
    frames_per_second: float
    patches_per_second: float
    single_frame_seconds: float      # same cycle on a one-tile scene


def benchmark_inference(model: SpectralNet, head: TaskHead,
                        n_patches: int = 6, input_size: int = 32,
                        repeats: int = 3,
                        class_table: dict | None = None) -> ThroughputReport:
    """Time the segment-then-predict pipeline on an n-tile scene.

    Reports the best of `repeats` full cycles plus a one-tile reference
    cycle, so callers can check that per-patch cost in a frame does not
    exceed the single-patch frame cost.
    """
    if n_patches < 0:
        raise ValueError("n_patches must be non-negative")
    if n_patches == 0:
        return ThroughputReport(0, 0.0, 0.0, 0.0, 0.0)
    table = class_table or default_class_table()
    names = [TRAIN_CLASSES[i % len(TRAIN_CLASSES)] for i in range(n_patches)]

    def cycle(scene_names) -> float:
        scene = compose_scene(scene_names, table, tile_size=input_size,
                              textured=False)
        t0 = time.perf_counter()
        seg = segment_patches(scene, input_size=input_size)
        min_friction(seg, model, head)
        return time.perf_counter() - t0

    best = min(cycle(names) for _ in range(repeats))
    single = min(cycle(names[:1]) for _ in range(repeats))
    return ThroughputReport(
        n_patches=n_patches, seconds_per_frame=best,
        frames_per_second=1.0 / best, patches_per_second=n_patches / best,
        single_frame_seconds=single,
    )
