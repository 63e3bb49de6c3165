"""Uncertainty and diagnostics: split conformal intervals, empirical
coverage, permutation feature importance, and recursive multi-step
forecasting.

Conformal scores are kept per feature (8 independent interval systems);
reported coverage is the macro-average over features.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .features import LOOKBACK, N_FEATURES
from .metrics import rmse


def _as_predict(model):
    """Accept a TrainedModel or any X -> Y callable."""
    return model.predict if hasattr(model, "predict") else model


@dataclass(frozen=True)
class ConformalCalibration:
    alpha: float
    q: np.ndarray  # [8] per-feature interval half-widths
    n_cal: int

    def __post_init__(self):
        if self.q.shape != (N_FEATURES,):
            raise ValueError("q must hold one half-width per feature")
        if np.any(self.q < 0):
            raise ValueError("half-widths must be nonnegative")


def conformal_calibrate(model, X_cal, Y_cal, alpha: float = 0.05) -> ConformalCalibration:
    """Split conformal: q[f] is the k-th smallest |residual| on calibration
    data, k = ceil((n+1)(1-alpha)); +inf when k exceeds n."""
    n_cal = len(X_cal)
    if n_cal < 1:
        raise ValueError("calibration set must be nonempty")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1)")
    pred = _as_predict(model)(X_cal)
    scores = np.abs(np.asarray(Y_cal, dtype=np.float64) - pred)
    k = math.ceil((n_cal + 1) * (1.0 - alpha))
    if k > n_cal:
        q = np.full(N_FEATURES, np.inf)
    else:
        q = np.sort(scores, axis=0)[k - 1]
    return ConformalCalibration(alpha=alpha, q=q, n_cal=n_cal)


def conformal_interval(model, X, calibration: ConformalCalibration):
    """Symmetric intervals [y_hat - q, y_hat + q]; width is constant across
    inputs (split conformal property)."""
    pred = np.asarray(_as_predict(model)(X), dtype=np.float64)
    return pred - calibration.q, pred + calibration.q


def empirical_coverage(lower, upper, truths):
    """Returns (per-feature coverage [8], macro-average, mean width)."""
    truths = np.asarray(truths, dtype=np.float64)
    if truths.shape != lower.shape or truths.shape != upper.shape:
        raise ValueError("interval and truth shapes must match")
    if len(truths) < 1:
        raise ValueError("need at least one test point")
    inside = (truths >= lower) & (truths <= upper)
    per_feature = inside.mean(axis=0)
    width = upper - lower
    return per_feature, float(per_feature.mean()), float(width.mean())


@dataclass
class ImportanceReport:
    baseline_rmse: float
    deltas: np.ndarray        # [8] mean permuted RMSE - baseline
    permuted_mean: np.ndarray  # [8]
    permuted_std: np.ndarray   # [8]
    repeats: int


def permutation_importance(model, X_test, Y_test, repeats: int = 5,
                           seed: int = 0) -> ImportanceReport:
    """Window-level permutation importance per feature.

    A feature's entire 24-hour slice moves between windows (intra-window
    temporal structure survives; the feature/target association breaks).
    """
    if len(X_test) < 2:
        raise ValueError("need at least two test windows to permute")
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    predict = _as_predict(model)
    X_test = np.asarray(X_test)
    baseline = rmse(predict(X_test), Y_test)
    scores = np.empty((repeats, N_FEATURES))
    rng = np.random.default_rng(seed)
    for r in range(repeats):
        for f in range(N_FEATURES):
            perm = rng.permutation(len(X_test))
            Xp = X_test.copy()
            Xp[:, :, f] = X_test[perm, :, f]
            scores[r, f] = rmse(predict(Xp), Y_test)
    mean = scores.mean(axis=0)
    std = scores.std(axis=0, ddof=1) if repeats > 1 else np.zeros(N_FEATURES)
    return ImportanceReport(
        baseline_rmse=baseline,
        deltas=mean - baseline,
        permuted_mean=mean,
        permuted_std=std,
        repeats=repeats,
    )


MAX_HORIZON = 48


def recursive_forecast(model, seed_window, horizon: int) -> np.ndarray:
    """Iterated multi-step forecast: predict, append, drop the oldest row.

    seed_window is one [T x 8] scaled window; returns [horizon x 8].
    """
    if not 1 <= horizon <= MAX_HORIZON:
        raise ValueError(f"horizon must be in [1, {MAX_HORIZON}]")
    window = np.asarray(seed_window)
    if window.ndim != 2:
        raise ValueError("seed window must be a [T x F] matrix")
    preds = _recursive_batch(model, window[None, :, :], horizon)
    return preds[:, 0, :]


def _recursive_batch(model, windows, horizon: int) -> np.ndarray:
    """Vectorized recursion over many seed windows: returns [H x B x 8]."""
    predict = _as_predict(model)
    current = np.array(windows, dtype=np.float32)
    out = np.empty((horizon, current.shape[0], current.shape[2]), dtype=np.float32)
    for h in range(horizon):
        step = np.asarray(predict(current))
        if not np.isfinite(step).all():
            raise FloatingPointError(f"non-finite prediction at recursion step {h + 1}")
        out[h] = step
        current = np.concatenate([current[:, 1:, :], step[:, None, :]], axis=1)
    return out


def horizon_rmse(model, scaled_rows, horizon: int, T: int = LOOKBACK,
                 stride: int = 1, max_windows: int | None = None) -> np.ndarray:
    """Per-horizon RMSE of recursive forecasts over one contiguous scaled
    series; returns [horizon] RMSE values (pooled over features/windows)."""
    rows = np.asarray(scaled_rows, dtype=np.float32)
    n = len(rows)
    if n < T + horizon:
        raise ValueError(f"need at least T+horizon={T + horizon} rows, got {n}")
    starts = np.arange(0, n - T - horizon + 1, stride)
    if max_windows is not None and len(starts) > max_windows:
        starts = starts[np.linspace(0, len(starts) - 1, max_windows).astype(int)]
    windows = np.stack([rows[s:s + T] for s in starts])
    preds = _recursive_batch(model, windows, horizon)
    out = np.empty(horizon)
    for h in range(horizon):
        truth = rows[starts + T + h]
        out[h] = rmse(preds[h], truth)
    return out
