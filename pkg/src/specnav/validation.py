"""Input validation helpers shared by the estimator API and the CLI."""
from __future__ import annotations

import numpy as np


def check_patches(X, input_size: int) -> np.ndarray:
    """Validate a batch of RGB patches: [n, 3, S, S], finite, in [0, 1]."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 3:
        X = X[None]
    if X.ndim != 4 or X.shape[1] != 3:
        raise ValueError(
            f"expected patches shaped [n, 3, S, S], got {X.shape}"
        )
    if X.shape[2] != input_size or X.shape[3] != input_size:
        raise ValueError(
            f"patch size {X.shape[2]}x{X.shape[3]} does not match the "
            f"configured input size {input_size}"
        )
    if not np.isfinite(X).all():
        raise ValueError("patches contain NaN or Inf")
    if X.min() < 0.0 or X.max() > 1.0:
        raise ValueError("patch values must lie in [0, 1]")
    return X


def check_spectra(Y, n_bands: int, n_samples: int | None = None) -> np.ndarray:
    """Validate spectra targets: [n, n_bands], finite, non-negative."""
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[None]
    if Y.ndim != 2 or Y.shape[1] != n_bands:
        raise ValueError(f"expected spectra shaped [n, {n_bands}], got {Y.shape}")
    if n_samples is not None and Y.shape[0] != n_samples:
        raise ValueError(
            f"got {Y.shape[0]} spectra for {n_samples} patches"
        )
    if not np.isfinite(Y).all():
        raise ValueError("spectra contain NaN or Inf")
    if Y.min() < 0.0:
        raise ValueError("spectra must be non-negative")
    return Y


def check_labels(y, n_samples: int) -> np.ndarray:
    """Validate class labels: one integer or string label per sample."""
    y = np.asarray(y)
    if y.ndim != 1 or y.shape[0] != n_samples:
        raise ValueError(f"expected {n_samples} labels, got shape {y.shape}")
    return y


def check_friction(y, n_samples: int) -> np.ndarray:
    """Validate friction targets: [n] floats within [0.05, 1.0]."""
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1 or y.shape[0] != n_samples:
        raise ValueError(f"expected {n_samples} friction values, got {y.shape}")
    if not np.isfinite(y).all():
        raise ValueError("friction targets contain NaN or Inf")
    if y.min() < 0.05 or y.max() > 1.0:
        raise ValueError("friction targets must lie in [0.05, 1.0]")
    return y
