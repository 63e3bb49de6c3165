"""Evaluation metrics, computed in scaled space."""

from __future__ import annotations

import numpy as np


def rmse(pred: np.ndarray, truth: np.ndarray) -> float:
    """Root mean squared error pooled over all elements (batch x features).

    The single dimensionless score used throughout for model comparison;
    see rmse_per_feature for the breakdown.
    """
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape:
        raise ValueError(f"shape mismatch {pred.shape} vs {truth.shape}")
    if pred.size == 0:
        raise ValueError("rmse of empty arrays is undefined")
    return float(np.sqrt(np.mean((pred - truth) ** 2)))


def rmse_per_feature(pred: np.ndarray, truth: np.ndarray) -> np.ndarray:
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape or pred.ndim != 2:
        raise ValueError("expected matching [B x F] arrays")
    if pred.size == 0:
        raise ValueError("rmse of empty arrays is undefined")
    return np.sqrt(np.mean((pred - truth) ** 2, axis=0))
