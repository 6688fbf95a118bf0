"""Scikit-learn style wrappers around the network and task heads.

These adapt the training loops to the fit/predict/transform idiom so the
model slots into sklearn tooling (clone, get_params, pipelines operating
on patch arrays).  X is always a batch of RGB patches [n, 3, S, S].
"""
from __future__ import annotations

from types import SimpleNamespace

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from .model import NetConfig, SpectralNet, TaskHead, finetune_joint, pretrain_spectral
from .nn import Tensor
from .validation import check_friction, check_labels, check_patches, check_spectra


def _as_samples(X, spectra=None, class_names=None, labels=None, friction=None):
    n = X.shape[0]
    out = []
    for i in range(n):
        out.append(SimpleNamespace(
            rgb=X[i],
            spectrum=spectra[i] if spectra is not None else np.zeros(0),
            class_name=(str(labels[i]) if labels is not None else ""),
            friction=(float(friction[i]) if friction is not None else 0.5),
        ))
    return out


class SpectrumRegressor(BaseEstimator, RegressorMixin):
    """RGB patches -> spectra, trained with the mean-squared objective."""

    def __init__(self, input_size: int = 32, n_bands: int = 64,
                 epochs: int = 20, lr: float = 1e-3, seed: int = 0):
        self.input_size = input_size
        self.n_bands = n_bands
        self.epochs = epochs
        self.lr = lr
        self.seed = seed

    def fit(self, X, y):
        X = check_patches(X, self.input_size)
        y = check_spectra(y, self.n_bands, n_samples=X.shape[0])
        config = NetConfig(input_size=self.input_size, n_bands=self.n_bands)
        self.model_ = SpectralNet(config, seed=self.seed)
        self.log_ = pretrain_spectral(
            self.model_, _as_samples(X, spectra=y),
            epochs=self.epochs, seed=self.seed, lr=self.lr,
        )
        return self

    def predict(self, X):
        check_is_fitted(self, "model_")
        X = check_patches(X, self.input_size)
        return np.stack([self.model_.predict(x) for x in X])

    def transform(self, X):
        """Spectra as features for downstream estimators."""
        return self.predict(X)


class _JointEstimator(BaseEstimator):
    """Shared fit machinery for the two task heads."""

    kind = ""

    def __init__(self, input_size: int = 32, n_bands: int = 64,
                 pretrain_epochs: int = 5, epochs: int = 10,
                 alpha: float = 0.7, lr: float = 1e-3, seed: int = 0):
        self.input_size = input_size
        self.n_bands = n_bands
        self.pretrain_epochs = pretrain_epochs
        self.epochs = epochs
        self.alpha = alpha
        self.lr = lr
        self.seed = seed

    def _fit_joint(self, X, samples, class_names, n_out):
        config = NetConfig(input_size=self.input_size, n_bands=self.n_bands)
        self.model_ = SpectralNet(config, seed=self.seed)
        self.head_ = TaskHead(self.kind, self.n_bands,
                              head_dims=config.head_dims, n_classes=n_out,
                              dropout_rate=config.dropout_rate, seed=self.seed)
        has_spectra = samples[0].spectrum.size > 0
        if has_spectra and self.pretrain_epochs > 0:
            pretrain_spectral(self.model_, samples,
                              epochs=self.pretrain_epochs,
                              seed=self.seed, lr=self.lr)
        # Without spectral targets the blended objective degenerates to
        # the task term; force its weight to 1 so the zero-length targets
        # never participate.
        alpha = self.alpha if has_spectra else 1.0
        if not has_spectra:
            for s in samples:
                s.spectrum = np.zeros(self.n_bands)
        self.log_ = finetune_joint(self.model_, self.head_, samples,
                                   class_names, alpha=alpha,
                                   epochs=self.epochs, seed=self.seed,
                                   lr=self.lr)
        return self


class TerrainClassifier(_JointEstimator, ClassifierMixin):
    """RGB patches -> terrain class, via the spectral representation.

    fit accepts an optional `spectra` array; with it, training blends the
    classification and spectral losses (weight `alpha`), without it the
    model trains on the task loss alone.
    """

    kind = "classification"

    def fit(self, X, y, spectra=None):
        X = check_patches(X, self.input_size)
        y = check_labels(y, X.shape[0])
        if spectra is not None:
            spectra = check_spectra(spectra, self.n_bands, X.shape[0])
        self.classes_ = np.unique(y)
        class_names = [str(c) for c in self.classes_]
        samples = _as_samples(X, spectra=spectra, labels=y)
        return self._fit_joint(X, samples, class_names, len(self.classes_))

    def predict_proba(self, X):
        check_is_fitted(self, "head_")
        X = check_patches(X, self.input_size)
        return np.stack([
            self.head_(self.model_(Tensor(x))).data for x in X
        ])

    def predict(self, X):
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]


class FrictionRegressor(_JointEstimator, RegressorMixin):
    """RGB patches -> friction coefficient in [0.05, 1.0]."""

    kind = "regression"

    def fit(self, X, y, spectra=None):
        X = check_patches(X, self.input_size)
        y = check_friction(y, X.shape[0])
        if spectra is not None:
            spectra = check_spectra(spectra, self.n_bands, X.shape[0])
        samples = _as_samples(X, spectra=spectra, friction=y)
        return self._fit_joint(X, samples, [], 1)

    def predict(self, X):
        check_is_fitted(self, "head_")
        X = check_patches(X, self.input_size)
        return np.array([
            self.head_(self.model_(Tensor(x))).data[0] for x in X
        ])
