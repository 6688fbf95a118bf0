"""RGB-to-spectrum network: two dense blocks with feature fusion, plus
task heads that map the predicted spectrum to planner-facing outputs.

The backbone turns a [3,S,S] patch into a non-negative spectrum of
`n_bands` values.  Heads consume only the spectrum, so gradients from a
task loss flow back through the spectral representation.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import nn
from .nn import Tensor
from .nn import functional as F


@dataclass(frozen=True)
class NetConfig:
    """Backbone hyperparameters; defaults are the desk-scale preset."""

    input_size: int = 32
    stem_channels: int = 8
    growth_rate: int = 4
    block1_layers: int = 6
    block2_layers: int = 12
    reduce1_channels: int = 16
    reduce2_channels: int = 9
    n_bands: int = 64
    head_dims: tuple = (64, 32)
    alpha: float = 0.7
    dropout_rate: float = 0.1

    def __post_init__(self):
        if self.input_size < 8 or self.input_size % 4 != 0:
            raise ValueError("input_size must be >= 8 and divisible by 4")
        for name in ("stem_channels", "growth_rate", "block1_layers",
                     "block2_layers", "reduce1_channels", "reduce2_channels",
                     "n_bands"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must lie in [0, 1)")

    @classmethod
    def desk(cls) -> "NetConfig":
        return cls()

    @classmethod
    def full_scale(cls) -> "NetConfig":
        """Full-size preset: must construct and run forward, untrained."""
        return cls(input_size=224, stem_channels=64, growth_rate=32,
                   reduce1_channels=64, n_bands=1550, head_dims=(512, 128))


class SpectralNet:
    """stem -> dense block 1 -> transition -> dense block 2 -> fusion ->
    two reduction convs -> flatten -> two fully connected layers."""

    def __init__(self, config: NetConfig, seed: int = 0):
        self.config = config
        rng = np.random.default_rng(seed)
        c = config

        self.stem = nn.Conv2d(3, c.stem_channels, k=3, padding=1, rng=rng)
        b1_out = c.stem_channels + c.block1_layers * c.growth_rate
        self.block1 = nn.DenseBlock(c.stem_channels, c.growth_rate,
                                    c.block1_layers, rng=rng)
        trans_out = b1_out // 2
        self.transition = nn.Conv2d(b1_out, trans_out, k=1, rng=rng)
        self.block2 = nn.DenseBlock(trans_out, c.growth_rate,
                                    c.block2_layers, rng=rng)
        b2_out = trans_out + c.block2_layers * c.growth_rate
        self.fused_channels = trans_out + b2_out
        self.reduce1 = nn.Conv2d(self.fused_channels, c.reduce1_channels,
                                 k=3, stride=2, padding=1, rng=rng)
        self.reduce2 = nn.Conv2d(c.reduce1_channels, c.reduce2_channels,
                                 k=1, rng=rng)

        s = c.input_size // 4                     # after the two pools
        s_red = (s - 1) // 2 + 1                  # reduce1 at stride 2, pad 1
        self.flat_dim = c.reduce2_channels * s_red * s_red
        self.fc1 = nn.Linear(self.flat_dim, c.n_bands, rng=rng)
        self.fc2 = nn.Linear(c.n_bands, c.n_bands, rng=rng)

    def forward(self, patch: Tensor) -> Tensor:
        """Patch [3,S,S] -> non-negative spectrum [n_bands]."""
        expected = (3, self.config.input_size, self.config.input_size)
        if patch.data.shape != expected:
            raise ValueError(
                f"patch shape {patch.data.shape} does not match {expected}"
            )
        x = F.maxpool2d(F.relu(self.stem(patch)), window=2)
        x = self.block1(x)
        # Transition: 1x1 conv then pool; its pooled output is also one of
        # the two fusion inputs, so both fusion operands share a grid.
        x8 = F.maxpool2d(F.relu(self.transition(x)), window=2)
        x21 = self.block2(x8)
        fused = F.concat_channels(x8, x21)
        x = F.relu(self.reduce1(fused))
        x = F.relu(self.reduce2(x))
        x = F.gelu(self.fc1(F.flatten(x)))
        return F.softplus(self.fc2(x))

    def __call__(self, patch: Tensor) -> Tensor:
        return self.forward(patch)

    def predict(self, rgb: np.ndarray) -> np.ndarray:
        """Inference convenience on a raw [3,S,S] array."""
        return self.forward(Tensor(rgb)).data

    def params(self) -> list:
        out = list(self.stem.params())
        out += self.block1.params()
        out += self.transition.params()
        out += self.block2.params()
        out += self.reduce1.params() + self.reduce2.params()
        out += self.fc1.params() + self.fc2.params()
        return out

    @property
    def n_params(self) -> int:
        return sum(p.data.size for p in self.params())


class TaskHead:
    """Spectrum -> class probabilities or a friction scalar.

    Three affine layers with GELU and dropout between them.  The
    regression output is squashed into [0.05, 1.0], the friction range
    of the simulated world.
    """

    KINDS = ("classification", "regression")

    def __init__(self, kind: str, n_bands: int, head_dims: tuple = (64, 32),
                 n_classes: int = 1, dropout_rate: float = 0.1, seed: int = 0):
        if kind not in self.KINDS:
            raise ValueError(f"kind must be one of {self.KINDS}, got {kind!r}")
        if kind == "classification" and n_classes < 2:
            raise ValueError("classification head needs n_classes >= 2")
        h1, h2 = head_dims
        rng = np.random.default_rng(seed)
        self.kind = kind
        self.n_bands = n_bands
        self.head_dims = tuple(head_dims)
        self.n_out = n_classes if kind == "classification" else 1
        self.dropout_rate = dropout_rate
        self.l1 = nn.Linear(n_bands, h1, rng=rng)
        self.l2 = nn.Linear(h1, h2, rng=rng)
        self.l3 = nn.Linear(h2, self.n_out, rng=rng)

    def forward(self, spectrum: Tensor, training: bool = False,
                rng=None) -> Tensor:
        if spectrum.data.shape != (self.n_bands,):
            raise ValueError(
                f"spectrum length {spectrum.data.shape} != ({self.n_bands},)"
            )
        x = F.gelu(self.l1(spectrum))
        x = F.dropout(x, self.dropout_rate, training, rng)
        x = F.gelu(self.l2(x))
        x = F.dropout(x, self.dropout_rate, training, rng)
        x = self.l3(x)
        if self.kind == "classification":
            return F.softmax(x)
        return F.sigmoid(x) * 0.95 + 0.05

    def __call__(self, spectrum: Tensor, training: bool = False, rng=None):
        return self.forward(spectrum, training, rng)

    def params(self) -> list:
        return self.l1.params() + self.l2.params() + self.l3.params()


@dataclass
class LogRow:
    """One training epoch; task fields are NaN during pretraining."""

    epoch: int
    spec_loss: float
    task_loss: float = float("nan")
    combined_loss: float = float("nan")
    accuracy_or_mae: float = float("nan")


def save_training_log(rows: list, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["epoch", "spec_loss", "task_loss", "combined_loss",
                    "accuracy_or_mae"])
        for r in rows:
            w.writerow([r.epoch, f"{r.spec_loss:.17g}", f"{r.task_loss:.17g}",
                        f"{r.combined_loss:.17g}", f"{r.accuracy_or_mae:.17g}"])


def pretrain_spectral(model: SpectralNet, samples: list, epochs: int = 20,
                      seed: int = 0, lr: float = 1e-3) -> list:
    """Spectrum-only training with per-sample Adam steps; returns the log."""
    if not samples:
        raise ValueError("cannot pretrain on an empty dataset")
    rng = np.random.default_rng(seed)
    opt = nn.Adam(model.params(), lr=lr)
    log = []
    for epoch in range(epochs):
        order = rng.permutation(len(samples))
        total = 0.0
        for i in order:
            s = samples[i]
            opt.zero_grad()
            loss = nn.mse_loss(model(Tensor(s.rgb)), s.spectrum)
            loss.backward()
            opt.step()
            total += loss.item()
        log.append(LogRow(epoch=epoch, spec_loss=total / len(samples)))
    return log


def finetune_joint(model: SpectralNet, head: TaskHead, samples: list,
                   class_names: list, alpha: float = 0.7, epochs: int = 10,
                   seed: int = 0, lr: float = 1e-3) -> list:
    """End-to-end training of alpha*task + (1-alpha)*spectral."""
    if not samples:
        raise ValueError("cannot finetune on an empty dataset")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    rng = np.random.default_rng(seed)
    opt = nn.Adam(model.params() + head.params(), lr=lr)
    log = []
    for epoch in range(epochs):
        order = rng.permutation(len(samples))
        spec_total = task_total = comb_total = metric_total = 0.0
        for i in order:
            s = samples[i]
            opt.zero_grad()
            spectrum = model(Tensor(s.rgb))
            out = head(spectrum, training=True, rng=rng)
            spec_l = nn.mse_loss(spectrum, s.spectrum)
            if head.kind == "classification":
                label = class_names.index(s.class_name)
                task_l = nn.cross_entropy(out, label)
                metric_total += float(np.argmax(out.data) == label)
            else:
                task_l = nn.l1_loss(out, np.array([s.friction]))
                metric_total += abs(out.data[0] - s.friction)
            loss = nn.combined_loss(task_l, spec_l, alpha)
            loss.backward()
            opt.step()
            spec_total += spec_l.item()
            task_total += task_l.item()
            comb_total += loss.item()
        n = len(samples)
        log.append(LogRow(epoch=epoch, spec_loss=spec_total / n,
                          task_loss=task_total / n,
                          combined_loss=comb_total / n,
                          accuracy_or_mae=metric_total / n))
    return log


def evaluate_classification(model: SpectralNet, head: TaskHead,
                            samples: list, class_names: list) -> float:
    """Fraction of samples whose argmax class matches the label."""
    hits = 0
    for s in samples:
        probs = head(model(Tensor(s.rgb)))
        hits += int(np.argmax(probs.data) == class_names.index(s.class_name))
    return hits / len(samples)


def evaluate_friction_mae(model: SpectralNet, head: TaskHead,
                          samples: list) -> float:
    total = 0.0
    for s in samples:
        pred = head(model(Tensor(s.rgb)))
        total += abs(pred.data[0] - s.friction)
    return total / len(samples)


def spectral_correlations(model: SpectralNet, samples: list) -> np.ndarray:
    """Per-sample Pearson correlation of predicted vs true spectrum."""
    out = []
    for s in samples:
        pred = model.predict(s.rgb)
        out.append(np.corrcoef(pred, s.spectrum)[0, 1])
    return np.array(out)
