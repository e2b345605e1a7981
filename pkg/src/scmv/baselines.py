"""Ridge least-squares baselines on view 2.

TB fits only the labeled original target-language rows; TSB adds the labeled
rows whose view-2 features were obtained by translation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .dataset import TwoViewDataset
from .errors import ValidationError
from .model import sign


@dataclass(frozen=True, eq=False)
class RidgeModel:
    w: np.ndarray
    b: float
    view: int
    alpha: float

    def __post_init__(self):
        if not (np.all(np.isfinite(self.w)) and np.isfinite(self.b)):
            raise ValidationError("ridge parameters must be finite")


def fit_ridge(x: np.ndarray, y: np.ndarray, alpha: float) -> tuple[np.ndarray, float]:
    """argmin ||X w + b - y||^2 + alpha ||w||^2, bias unpenalized."""
    if not alpha > 0:
        raise ValidationError("alpha must be positive")
    if x.shape[0] == 0:
        raise ValidationError("empty row selection")
    mu = x.mean(axis=0)
    xc = x - mu
    yc = y - y.mean()
    a = xc.T @ xc
    a[np.diag_indices_from(a)] += alpha
    w = linalg.solve(a, xc.T @ yc, assume_a="pos")
    b = float(y.mean() - mu @ w)
    return w, b


def _select(ds: TwoViewDataset, rows) -> np.ndarray:
    rows = np.asarray(rows, dtype=int).reshape(-1)
    if rows.size and (rows.min() < 0 or rows.max() >= ds.l):
        raise ValidationError("baseline rows must index the labeled prefix")
    return rows


def train_tb(ds: TwoViewDataset, target_rows, alpha: float = 0.1) -> RidgeModel:
    rows = _select(ds, target_rows)
    if rows.size == 0:
        raise ValidationError("TB needs at least one target row")
    w, b = fit_ridge(ds.x2[rows], ds.y[rows], alpha)
    return RidgeModel(w, b, 2, alpha)


def train_tsb(ds: TwoViewDataset, target_rows, source_translated_rows, alpha: float = 0.1) -> RidgeModel:
    rows = np.concatenate([_select(ds, target_rows), _select(ds, source_translated_rows)])
    if rows.size == 0:
        raise ValidationError("TSB needs at least one row")
    w, b = fit_ridge(ds.x2[rows], ds.y[rows], alpha)
    return RidgeModel(w, b, 2, alpha)


def predict_ridge(model: RidgeModel, x) -> int:
    x = np.asarray(x, dtype=float)
    if x.shape != model.w.shape:
        raise ValidationError(f"expected {model.w.shape[0]} features, got shape {x.shape}")
    return sign(float(x @ model.w) + model.b)


def ridge_accuracy(model: RidgeModel, x, y) -> float:
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[1] != model.w.shape[0]:
        raise ValidationError("feature dimension mismatch")
    scores = x @ model.w + model.b
    labels = np.where(scores < 0, -1, 1)
    return float(np.mean(labels == np.asarray(y)))
