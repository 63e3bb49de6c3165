"""Statistical baselines: persistence and hour/month climatology."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .features import N_FEATURES


def persistence_forecast(X: np.ndarray) -> np.ndarray:
    """Predict that the next hour equals the last observed hour."""
    X = np.asarray(X)
    if X.ndim != 3 or X.shape[1] < 1:
        raise ValueError("expected nonempty [B x T x F] windows")
    return X[:, -1, :].copy()


@dataclass
class ClimatologyTable:
    """Mean per (month 1-12, hour 0-23, feature); empty cells fall back to
    the global per-feature training mean."""

    mean: np.ndarray    # [12, 24, F]
    counts: np.ndarray  # [12, 24]
    global_mean: np.ndarray  # [F]


def climatology_fit(values: np.ndarray, timestamps: np.ndarray) -> ClimatologyTable:
    """Fit hour/month means on training rows.

    ``timestamps`` are numpy datetime64 values aligned with rows (UTC).
    """
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2 or values.shape[1] != N_FEATURES:
        raise ValueError(f"expected [n x {N_FEATURES}] values")
    if len(timestamps) != len(values):
        raise ValueError("timestamps must align with rows")
    months, hours = _month_hour(timestamps)
    sums = np.zeros((12, 24, N_FEATURES))
    counts = np.zeros((12, 24), dtype=np.int64)
    np.add.at(sums, (months, hours), values)
    np.add.at(counts, (months, hours), 1)
    mean = np.divide(sums, counts[..., None], out=np.zeros_like(sums), where=counts[..., None] > 0)
    return ClimatologyTable(mean=mean, counts=counts, global_mean=values.mean(axis=0))


def climatology_forecast(table: ClimatologyTable, timestamps: np.ndarray) -> np.ndarray:
    """Predict the fitted (month, hour) mean for each queried timestamp."""
    months, hours = _month_hour(timestamps)
    pred = table.mean[months, hours]
    unseen = table.counts[months, hours] == 0
    if unseen.any():
        pred = pred.copy()
        pred[unseen] = table.global_mean
    return pred


def _month_hour(timestamps) -> tuple[np.ndarray, np.ndarray]:
    ts = np.asarray(timestamps, dtype="datetime64[h]")
    months = (ts.astype("datetime64[M]").astype(int) % 12)  # 0-based month index
    hours = (ts.astype(int) % 24)
    return months, hours
