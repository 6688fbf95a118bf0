"""Run configuration: INI schema, defaults, and field-level validation.

A config file is standard INI text.  Every key is optional; omitted
keys keep the defaults below, and unknown sections or keys are
rejected by name so typos cannot silently revert to defaults.

    [spectral]              # sensing model
    bands = 64              # output spectral bands, >= 3
    wavelength_start = 400  # band axis in nanometres
    wavelength_end = 1000   # must exceed wavelength_start
    patch_size = 32         # model input side, >= 8, divisible by 4

    [data]
    n_per_class = 20        # rendered samples per material, >= 1

    [train]
    pretrain_epochs = 20    # spectrum-only epochs, >= 0
    finetune_epochs = 10    # joint epochs, >= 0
    lr = 0.001              # Adam step size, > 0
    alpha = 0.7             # task share of the joint loss, in [0, 1]
    dropout = 0.1           # head dropout rate, in [0, 1)

    [segmentation]
    tau = 0.05              # flood-fill color threshold, L-inf RGB, >= 0
    min_patch = 8           # smallest usable inscribed square, >= 1

    [quad]
    mu_fixed = 0.5          # fixed-variant friction belief, in [0.05, 1]
    duration = 3.0          # seconds per episode, > 0
    mpc_dt = 0.05           # planner step, > 0
    horizon = 10            # planner steps, >= 1
    sim_dt = 0.001          # world integration step, > 0, <= mpc_dt

    [campaign]
    episodes = 200          # paired episodes; the full protocol runs 1000

    [mppi]
    n_samples = 1024        # rollouts per planning step, >= 1
    horizon = 5.0           # seconds, > 0
    dt = 0.05               # integration step, > 0
    max_linear = 2.0        # m/s, > 0
    max_angular = 3.0       # rad/s, > 0
    temperature = 1.0       # weight softness, > 0
    noise_frac = 0.3        # sampling noise as a fraction of limits, > 0

    [comparison]
    time_factor = 1.5       # terrain-aware time budget vs baseline, >= 1
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields, replace
from pathlib import Path


class ConfigError(ValueError):
    """Invalid config file; the message names the offending field."""


@dataclass(frozen=True)
class SpectralConfig:
    bands: int = 64
    wavelength_start: float = 400.0
    wavelength_end: float = 1000.0
    patch_size: int = 32


@dataclass(frozen=True)
class DataConfig:
    n_per_class: int = 20


@dataclass(frozen=True)
class TrainConfig:
    pretrain_epochs: int = 20
    finetune_epochs: int = 10
    lr: float = 1e-3
    alpha: float = 0.7
    dropout: float = 0.1


@dataclass(frozen=True)
class SegmentationConfig:
    tau: float = 0.05
    min_patch: int = 8


@dataclass(frozen=True)
class QuadConfig:
    mu_fixed: float = 0.5
    duration: float = 3.0
    mpc_dt: float = 0.05
    horizon: int = 10
    sim_dt: float = 1e-3


@dataclass(frozen=True)
class CampaignConfig:
    episodes: int = 200


@dataclass(frozen=True)
class MppiSection:
    n_samples: int = 1024
    horizon: float = 5.0
    dt: float = 0.05
    max_linear: float = 2.0
    max_angular: float = 3.0
    temperature: float = 1.0
    noise_frac: float = 0.3


@dataclass(frozen=True)
class ComparisonConfig:
    time_factor: float = 1.5


@dataclass(frozen=True)
class RunConfig:
    spectral: SpectralConfig = field(default_factory=SpectralConfig)
    data: DataConfig = field(default_factory=DataConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    segmentation: SegmentationConfig = field(default_factory=SegmentationConfig)
    quad: QuadConfig = field(default_factory=QuadConfig)
    campaign: CampaignConfig = field(default_factory=CampaignConfig)
    mppi: MppiSection = field(default_factory=MppiSection)
    comparison: ComparisonConfig = field(default_factory=ComparisonConfig)


def default_config() -> RunConfig:
    return RunConfig()


def _check(cond: bool, field_name: str, message: str, value) -> None:
    if not cond:
        raise ConfigError(f"{field_name} {message}, got {value}")


def validate_config(cfg: RunConfig) -> RunConfig:
    """Bounds checks; errors name the field as section.key."""
    s, q, m = cfg.spectral, cfg.quad, cfg.mppi
    t, g = cfg.train, cfg.segmentation
    _check(s.bands >= 3, "spectral.bands", "must be >= 3", s.bands)
    _check(s.wavelength_end > s.wavelength_start, "spectral.wavelength_end",
           f"must exceed wavelength_start {s.wavelength_start}",
           s.wavelength_end)
    _check(s.patch_size >= 8 and s.patch_size % 4 == 0, "spectral.patch_size",
           "must be >= 8 and divisible by 4", s.patch_size)
    _check(cfg.data.n_per_class >= 1, "data.n_per_class", "must be >= 1",
           cfg.data.n_per_class)
    _check(t.pretrain_epochs >= 0, "train.pretrain_epochs", "must be >= 0",
           t.pretrain_epochs)
    _check(t.finetune_epochs >= 0, "train.finetune_epochs", "must be >= 0",
           t.finetune_epochs)
    _check(t.lr > 0, "train.lr", "must be positive", t.lr)
    _check(0.0 <= t.alpha <= 1.0, "train.alpha", "must lie in [0, 1]",
           t.alpha)
    _check(0.0 <= t.dropout < 1.0, "train.dropout", "must lie in [0, 1)",
           t.dropout)
    _check(g.tau >= 0, "segmentation.tau", "must be >= 0", g.tau)
    _check(g.min_patch >= 1, "segmentation.min_patch", "must be >= 1",
           g.min_patch)
    _check(0.05 <= q.mu_fixed <= 1.0, "quad.mu_fixed",
           "must lie in [0.05, 1.0]", q.mu_fixed)
    _check(q.duration > 0, "quad.duration", "must be positive", q.duration)
    _check(q.mpc_dt > 0, "quad.mpc_dt", "must be positive", q.mpc_dt)
    _check(q.horizon >= 1, "quad.horizon", "must be >= 1", q.horizon)
    _check(0 < q.sim_dt <= q.mpc_dt, "quad.sim_dt",
           f"must be positive and at most mpc_dt {q.mpc_dt}", q.sim_dt)
    _check(cfg.campaign.episodes >= 1, "campaign.episodes", "must be >= 1",
           cfg.campaign.episodes)
    _check(m.n_samples >= 1, "mppi.n_samples", "must be >= 1", m.n_samples)
    for key in ("horizon", "dt", "max_linear", "max_angular", "temperature",
                "noise_frac"):
        _check(getattr(m, key) > 0, f"mppi.{key}", "must be positive",
               getattr(m, key))
    _check(cfg.comparison.time_factor >= 1.0, "comparison.time_factor",
           "must be >= 1", cfg.comparison.time_factor)
    return cfg


def _parse_value(section: str, key: str, raw: str, default):
    kind = type(default)
    try:
        if kind is int:
            return int(raw)
        return float(raw)
    except ValueError:
        raise ConfigError(
            f"{section}.{key} expects {kind.__name__}, got {raw!r}"
        ) from None


def parse_config(text: str) -> RunConfig:
    """RunConfig from INI text; unknown names and bad values are errors."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None

    cfg = RunConfig()
    sections = {f.name: getattr(cfg, f.name) for f in fields(cfg)}
    for section in parser.sections():
        if section not in sections:
            raise ConfigError(
                f"unknown section [{section}]; expected one of "
                f"{sorted(sections)}"
            )
        current = sections[section]
        known = {f.name for f in fields(current)}
        updates = {}
        for key, raw in parser.items(section):
            if key not in known:
                raise ConfigError(
                    f"unknown key {section}.{key}; expected one of "
                    f"{sorted(known)}"
                )
            updates[key] = _parse_value(section, key, raw,
                                        getattr(current, key))
        sections[section] = replace(current, **updates)
    return validate_config(RunConfig(**sections))


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    return parse_config(path.read_text())


def write_config(path, cfg: RunConfig | None = None) -> None:
    """Emit a complete INI with the given (or default) values."""
    cfg = cfg or RunConfig()
    lines = ["# specnav run configuration; see specnav.config for bounds"]
    for section_field in fields(cfg):
        section = getattr(cfg, section_field.name)
        lines.append(f"\n[{section_field.name}]")
        for f in fields(section):
            lines.append(f"{f.name} = {getattr(section, f.name)}")
    Path(path).write_text("\n".join(lines) + "\n")
