"""Synthetic spectral world: materials, rendering, patches, datasets.

Each material owns a reflectance spectrum (sum of Gaussian bumps over a
wavelength grid plus a broadband baseline), a spatial texture model, and
a ground-truth friction coefficient.  RGB images are rendered through a
3-row sensor response matrix, which also defines the metamer null space.
"""
from __future__ import annotations

import csv
import json
import struct
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy.ndimage import gaussian_filter

TRAIN_CLASSES = ("asphalt", "brick", "grass", "ice", "sand", "tile")
HELDOUT_CLASSES = ("carpet", "concrete", "gravel", "mulch", "turf")

_PATCH_MAGIC = b"SNPB"


@dataclass(frozen=True)
class WavelengthGrid:
    """Uniform band axis in nanometres."""

    start: float = 400.0
    end: float = 1000.0
    n_bands: int = 64

    def __post_init__(self):
        if not self.start < self.end:
            raise ValueError(f"start {self.start} must be < end {self.end}")
        if self.n_bands < 3:
            raise ValueError(f"need at least 3 bands, got {self.n_bands}")

    @property
    def wavelengths(self) -> np.ndarray:
        return np.linspace(self.start, self.end, self.n_bands)


@dataclass(frozen=True)
class MaterialSpec:
    """One terrain material: spectrum model, texture model, friction."""

    name: str
    centers: tuple = ()
    widths: tuple = ()
    amps: tuple = ()
    baseline: float = 0.0
    texture_corr: float = 2.0
    texture_amp: float = 0.2
    friction: float = 0.5
    explicit_spectrum: tuple | None = None

    def __post_init__(self):
        if len({len(self.centers), len(self.widths), len(self.amps)}) != 1:
            raise ValueError("centers, widths, amps must have equal lengths")
        if any(a < 0 for a in self.amps) or self.baseline < 0:
            raise ValueError("bump amplitudes and baseline must be >= 0")
        if any(w <= 0 for w in self.widths):
            raise ValueError("bump widths must be positive")
        if not 0.05 <= self.friction <= 1.0:
            raise ValueError(f"friction {self.friction} outside [0.05, 1.0]")
        if self.texture_corr <= 0 or self.texture_amp < 0:
            raise ValueError("texture_corr must be > 0 and texture_amp >= 0")
        if self.explicit_spectrum is not None:
            if any(v < 0 for v in self.explicit_spectrum):
                raise ValueError("explicit spectrum must be non-negative")


@dataclass
class TrainingSample:
    """One rendered patch with its supervision targets."""

    sample_id: str
    class_name: str
    rgb: np.ndarray          # [3, H, W] in [0, 1]
    spectrum: np.ndarray     # [B] patch-mean spectrum
    friction: float
    seed: int


@dataclass
class Dataset:
    train: list
    val: list
    test: list
    heldout: list
    class_names: list        # training classes, sorted; index = label
    grid: WavelengthGrid

    def label_of(self, class_name: str) -> int:
        return self.class_names.index(class_name)


def canonical_spectrum(spec: MaterialSpec, grid: WavelengthGrid) -> np.ndarray:
    """Noise-free spectrum of a material sampled on the grid."""
    if spec.explicit_spectrum is not None:
        s = np.asarray(spec.explicit_spectrum, dtype=np.float64)
        if s.shape != (grid.n_bands,):
            raise ValueError(
                f"explicit spectrum has {s.size} bands, grid has {grid.n_bands}"
            )
        return s.copy()
    lam = grid.wavelengths
    s = np.full(grid.n_bands, spec.baseline)
    for c, w, a in zip(spec.centers, spec.widths, spec.amps):
        s = s + a * np.exp(-0.5 * ((lam - c) / w) ** 2)
    return s


def make_response_matrix(grid: WavelengthGrid,
                         centers: tuple = (620.0, 550.0, 460.0),
                         width: float = 45.0) -> np.ndarray:
    """3 x B sensor response with Gaussian channels (R, G, B order).

    Rows are normalized to unit sum so a flat spectrum renders gray.
    """
    lam = grid.wavelengths
    R = np.stack([np.exp(-0.5 * ((lam - c) / width) ** 2) for c in centers])
    return R / R.sum(axis=1, keepdims=True)


def render_rgb(spectrum: np.ndarray, R: np.ndarray) -> np.ndarray:
    """Integrate a spectrum against the response rows; clamp into [0, 1]."""
    spectrum = np.asarray(spectrum, dtype=np.float64)
    if R.shape[1] != spectrum.shape[-1]:
        raise ValueError(
            f"spectrum has {spectrum.shape[-1]} bands, response expects {R.shape[1]}"
        )
    return np.clip(R @ spectrum, 0.0, 1.0)


def texture_field(size: int, corr: float, amp: float,
                  rng: np.random.Generator) -> np.ndarray:
    """Multiplicative brightness field: 1 + amp * smoothed unit-variance noise."""
    noise = rng.normal(size=(size, size))
    if corr > 0:
        noise = gaussian_filter(noise, sigma=corr, mode="wrap")
        sd = noise.std()
        if sd > 0:
            noise = noise / sd
    return np.clip(1.0 + amp * noise, 0.05, None)


def gen_patch(spec: MaterialSpec, grid: WavelengthGrid, R: np.ndarray,
              size: int = 32, seed: int = 0,
              brightness_range: tuple = (0.7, 1.3)) -> TrainingSample:
    """Render one textured patch and its patch-mean spectrum target."""
    if size < 8:
        raise ValueError(f"patch size must be >= 8, got {size}")
    rng = np.random.default_rng(seed)
    base = canonical_spectrum(spec, grid)
    field_hw = texture_field(size, spec.texture_corr, spec.texture_amp, rng)
    brightness = rng.uniform(*brightness_range)

    scale = brightness * field_hw                       # [H, W]
    spectra = base[:, None, None] * scale[None]         # [B, H, W]
    rgb = np.clip(np.tensordot(R, spectra, axes=1), 0.0, 1.0)
    return TrainingSample(
        sample_id=f"{spec.name}-{seed:06d}",
        class_name=spec.name,
        rgb=rgb,
        spectrum=spectra.mean(axis=(1, 2)),
        friction=spec.friction,
        seed=seed,
    )


def null_space_basis(R: np.ndarray) -> np.ndarray:
    """Orthonormal basis (columns) of the null space of R via SVD."""
    _, s, vt = np.linalg.svd(R)
    rank = int((s > s.max() * max(R.shape) * np.finfo(float).eps).sum())
    return vt[rank:].T


@dataclass
class MetamerPair:
    """Two spectra the camera cannot tell apart, with distinct textures."""

    spectrum_a: np.ndarray
    spectrum_b: np.ndarray
    texture_a: tuple   # (corr, amp)
    texture_b: tuple


def make_metamer_pair(base: MaterialSpec, R: np.ndarray, grid: WavelengthGrid,
                      seed: int = 0, rel_gap: float = 0.3,
                      max_retries: int = 100) -> MetamerPair:
    """Construct s2 = s1 + d with d in null(R), s2 >= 0, ||d|| >= 0.1 ||s1||.

    The perturbation is a random draw projected onto the camera null
    space; clipping to non-negativity can break metamerism, in which
    case we retry with a fresh draw.
    """
    if grid.n_bands <= 3:
        raise ValueError("need more bands than camera channels for a null space")
    s1 = canonical_spectrum(base, grid)
    N = null_space_basis(R)
    for attempt in range(max_retries):
        rng = np.random.default_rng(seed + attempt)
        z = rng.normal(size=grid.n_bands)
        d = N @ (N.T @ z)
        norm = np.linalg.norm(d)
        if norm == 0.0:
            continue
        d = d * (rel_gap * np.linalg.norm(s1) / norm)
        s2 = np.clip(s1 + d, 0.0, None)
        gap = s1 - s2
        if (np.linalg.norm(R @ gap) < 1e-9
                and np.linalg.norm(gap) >= 0.1 * np.linalg.norm(s1)):
            return MetamerPair(
                spectrum_a=s1,
                spectrum_b=s2,
                texture_a=(base.texture_corr, base.texture_amp),
                texture_b=(base.texture_corr * 2.5, base.texture_amp),
            )
    raise RuntimeError(
        f"no valid metamer after {max_retries} retries (clipping keeps "
        "breaking the null-space condition); raise the spectrum baseline"
    )


def metamer_materials(base: MaterialSpec, pair: MetamerPair,
                      friction_b: float | None = None):
    """Wrap a metamer pair as two renderable materials."""
    mat_a = replace(
        base,
        name=base.name + "-a",
        explicit_spectrum=tuple(pair.spectrum_a),
        texture_corr=pair.texture_a[0],
        texture_amp=pair.texture_a[1],
    )
    mat_b = replace(
        base,
        name=base.name + "-b",
        explicit_spectrum=tuple(pair.spectrum_b),
        texture_corr=pair.texture_b[0],
        texture_amp=pair.texture_b[1],
        friction=base.friction if friction_b is None else friction_b,
    )
    return mat_a, mat_b


def default_class_table() -> dict:
    """Built-in materials: 6 training classes plus 5 held-out classes."""
    t = {}

    def add(name, bumps, baseline, corr, amp, mu):
        centers, widths, amps = zip(*bumps) if bumps else ((), (), ())
        t[name] = MaterialSpec(
            name=name, centers=centers, widths=widths, amps=amps,
            baseline=baseline, texture_corr=corr, texture_amp=amp, friction=mu,
        )

    # training classes
    add("asphalt", [(750, 220, 0.18)], 0.06, 1.2, 0.20, 0.80)
    add("brick", [(620, 60, 0.45), (900, 150, 0.25)], 0.08, 5.0, 0.15, 0.60)
    add("grass", [(550, 40, 0.30), (850, 120, 0.55)], 0.06, 2.5, 0.30, 0.55)
    add("ice", [(430, 90, 0.50)], 0.12, 6.0, 0.08, 0.05)
    add("sand", [(600, 120, 0.40), (800, 150, 0.25)], 0.10, 1.5, 0.25, 0.45)
    add("tile", [(550, 150, 0.45)], 0.15, 8.0, 0.06, 0.30)
    # held-out classes
    add("carpet", [(480, 70, 0.30), (650, 90, 0.20)], 0.10, 2.0, 0.18, 0.50)
    add("concrete", [(600, 250, 0.25)], 0.18, 4.0, 0.10, 0.70)
    add("gravel", [(650, 200, 0.15)], 0.08, 2.2, 0.35, 0.40)
    add("mulch", [(625, 65, 0.35), (900, 145, 0.22)], 0.06, 3.0, 0.30, 0.35)
    add("turf", [(550, 45, 0.35)], 0.07, 2.0, 0.22, 0.50)
    return t


def gen_dataset(class_table: dict, n_per_class: int,
                split: tuple = (0.8, 0.1, 0.1), seed: int = 0,
                grid: WavelengthGrid | None = None,
                R: np.ndarray | None = None, size: int = 32) -> Dataset:
    """Render n patches per class and split train classes deterministically.

    Held-out classes (never in `TRAIN_CLASSES`) go entirely into the
    generalization set. Splits partition each class's samples.
    """
    if n_per_class < 1:
        raise ValueError("need at least one sample per class")
    if abs(sum(split) - 1.0) > 1e-9 or any(r < 0 for r in split):
        raise ValueError(f"split ratios must be non-negative and sum to 1: {split}")
    grid = grid or WavelengthGrid()
    R = R if R is not None else make_response_matrix(grid)

    # Anything not on the held-out list is trainable, so custom tables
    # (e.g. a constructed metamer pair) train normally.
    ds = Dataset(train=[], val=[], test=[], heldout=[],
                 class_names=sorted(n for n in class_table
                                    if n not in HELDOUT_CLASSES),
                 grid=grid)
    for ci, name in enumerate(sorted(class_table)):
        spec = class_table[name]
        samples = [
            gen_patch(spec, grid, R, size=size, seed=seed + ci * n_per_class + i)
            for i in range(n_per_class)
        ]
        if name in HELDOUT_CLASSES:
            ds.heldout.extend(samples)
            continue
        order = np.random.default_rng((seed, ci)).permutation(n_per_class)
        n_train = int(round(split[0] * n_per_class))
        n_val = int(round(split[1] * n_per_class))
        for pos, j in enumerate(order):
            dest = (ds.train if pos < n_train
                    else ds.val if pos < n_train + n_val else ds.test)
            dest.append(samples[j])
    return ds


# -- disk formats -----------------------------------------------------------


def write_patch(path, rgb: np.ndarray) -> None:
    """Binary patch: magic, then C,H,W as u32 LE, then float64 LE values."""
    c, h, w = rgb.shape
    with open(path, "wb") as f:
        f.write(_PATCH_MAGIC)
        f.write(struct.pack("<III", c, h, w))
        f.write(np.ascontiguousarray(rgb, dtype="<f8").tobytes())


def read_patch(path) -> np.ndarray:
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != _PATCH_MAGIC:
            raise ValueError(f"{path}: not a patch file (magic {magic!r})")
        c, h, w = struct.unpack("<III", f.read(12))
        data = np.frombuffer(f.read(c * h * w * 8), dtype="<f8")
        if data.size != c * h * w:
            raise ValueError(f"{path}: truncated patch payload")
        return data.reshape(c, h, w).astype(np.float64)


def save_dataset(ds: Dataset, out_dir) -> None:
    """Manifest CSV + per-sample patch binaries + spectra CSV."""
    out = Path(out_dir)
    (out / "patches").mkdir(parents=True, exist_ok=True)
    rows = []
    spectra = []
    for split_name in ("train", "val", "test", "heldout"):
        for s in getattr(ds, split_name):
            rel = f"patches/{s.sample_id}.bin"
            write_patch(out / rel, s.rgb)
            rows.append([s.sample_id, split_name, s.class_name,
                         f"{s.friction:.6f}", rel, len(spectra), s.seed])
            spectra.append(s.spectrum)

    with open(out / "manifest.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["sample_id", "split", "class", "friction",
                    "patch_path", "spectrum_row", "seed"])
        w.writerows(rows)
    with open(out / "spectra.csv", "w", newline="") as f:
        w = csv.writer(f)
        for s in spectra:
            w.writerow([f"{v:.17g}" for v in s])
    meta = {"grid": {"start": ds.grid.start, "end": ds.grid.end,
                     "n_bands": ds.grid.n_bands},
            "class_names": ds.class_names}
    (out / "meta.json").write_text(json.dumps(meta, indent=2) + "\n")


def load_dataset(in_dir) -> Dataset:
    src = Path(in_dir)
    meta = json.loads((src / "meta.json").read_text())
    grid = WavelengthGrid(**meta["grid"])
    ds = Dataset(train=[], val=[], test=[], heldout=[],
                 class_names=list(meta["class_names"]), grid=grid)

    with open(src / "spectra.csv", newline="") as f:
        spectra = [np.array([float(v) for v in row]) for row in csv.reader(f)]
    with open(src / "manifest.csv", newline="") as f:
        for row in csv.DictReader(f):
            sample = TrainingSample(
                sample_id=row["sample_id"],
                class_name=row["class"],
                rgb=read_patch(src / row["patch_path"]),
                spectrum=spectra[int(row["spectrum_row"])],
                friction=float(row["friction"]),
                seed=int(row["seed"]),
            )
            getattr(ds, row["split"]).append(sample)
    return ds


def save_class_table(table: dict, path) -> None:
    """JSON class table; schema documented in the README."""
    out = {}
    for name, m in table.items():
        out[name] = {
            "centers": list(m.centers), "widths": list(m.widths),
            "amps": list(m.amps), "baseline": m.baseline,
            "texture_corr": m.texture_corr, "texture_amp": m.texture_amp,
            "friction": m.friction,
        }
        if m.explicit_spectrum is not None:
            out[name]["explicit_spectrum"] = list(m.explicit_spectrum)
    Path(path).write_text(json.dumps(out, indent=2, sort_keys=True) + "\n")


def load_class_table(path) -> dict:
    raw = json.loads(Path(path).read_text())
    table = {}
    for name, v in raw.items():
        table[name] = MaterialSpec(
            name=name,
            centers=tuple(v["centers"]), widths=tuple(v["widths"]),
            amps=tuple(v["amps"]), baseline=v["baseline"],
            texture_corr=v["texture_corr"], texture_amp=v["texture_amp"],
            friction=v["friction"],
            explicit_spectrum=(tuple(v["explicit_spectrum"])
                               if "explicit_spectrum" in v else None),
        )
    return table
