"""Dataset preparation: per-city min-max scaling, sliding-window
tensorization, chronological splits, and pooled multi-city assembly.

Windows are 24 consecutive scaled hourly rows predicting the next row. A
window never crosses a city boundary, a split boundary, or a masked
(missing) row.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ArtifactError
from .features import LOOKBACK, N_FEATURES

CONTAINER_MAGIC = b"GNDS"
CONTAINER_VERSION = 1


@dataclass(frozen=True)
class ScalerParams:
    """Per-feature min/max fitted on a training-range segment of one city.

    Features with min == max are degenerate and scale to 0.0.
    """

    city: str
    min: np.ndarray  # float64 [8]
    max: np.ndarray  # float64 [8]

    def __post_init__(self):
        if self.min.shape != (N_FEATURES,) or self.max.shape != (N_FEATURES,):
            raise ValueError("scaler min/max must have one entry per feature")
        if np.any(self.min > self.max):
            raise ValueError("scaler min must be <= max per feature")

    @property
    def degenerate(self) -> np.ndarray:
        return self.min == self.max

    def to_dict(self):
        return {"city": self.city, "min": self.min.tolist(), "max": self.max.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(city=d["city"], min=np.asarray(d["min"], dtype=np.float64),
                   max=np.asarray(d["max"], dtype=np.float64))


@dataclass(frozen=True)
class SplitSpec:
    """Chronological row boundaries: [0, train_end) / [train_end, val_end) / [val_end, n)."""

    n_rows: int
    train_end: int
    val_end: int

    def segment_range(self, segment: str) -> tuple[int, int]:
        if segment == "train":
            return 0, self.train_end
        if segment == "val":
            return self.train_end, self.val_end
        if segment == "test":
            return self.val_end, self.n_rows
        raise ValueError(f"unknown segment {segment!r}")


@dataclass
class WindowedDataset:
    """Supervised windows: X [N x T x 8] inputs, Y [N x 8] next-step targets.

    ``origin`` carries (city, source-row-index) per window, where the row
    index is the window's first input row in the full city series.
    """

    X: np.ndarray
    Y: np.ndarray
    origin: list[tuple[str, int]] = field(default_factory=list)

    def __post_init__(self):
        if self.X.ndim != 3 or self.Y.ndim != 2:
            raise ValueError("X must be [N x T x F], Y must be [N x F]")
        if self.X.shape[0] != self.Y.shape[0]:
            raise ValueError("X and Y must have the same window count")
        if self.origin and len(self.origin) != self.X.shape[0]:
            raise ValueError("origin length must match window count")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    def subsample(self, fraction: float, rng) -> "WindowedDataset":
        """Seeded random subsample (at least one window)."""
        if not 0.0 < fraction <= 1.0:
            raise ValueError("fraction must be in (0, 1]")
        if fraction == 1.0:
            return self
        k = max(1, int(round(self.n * fraction)))
        idx = np.sort(rng.choice(self.n, size=k, replace=False))
        origin = [self.origin[i] for i in idx] if self.origin else []
        return WindowedDataset(self.X[idx], self.Y[idx], origin)


def fit_scaler(series, train_range: tuple[int, int]) -> ScalerParams:
    """Min/max per feature over ``train_range`` rows only (masked rows excluded)."""
    lo, hi = train_range
    if hi <= lo:
        raise ValueError(f"empty train range [{lo}, {hi})")
    block = series.values[lo:hi]
    mask = series.missing_mask[lo:hi]
    mins = np.empty(N_FEATURES)
    maxs = np.empty(N_FEATURES)
    for f in range(N_FEATURES):
        col = block[~mask[:, f], f]
        if col.size == 0:
            raise ValueError(f"feature {f} has no valid rows in train range")
        mins[f] = col.min()
        maxs[f] = col.max()
    return ScalerParams(city=series.city.name, min=mins, max=maxs)


def apply_scaler(values: np.ndarray, params: ScalerParams) -> np.ndarray:
    """(x - min) / (max - min) per feature; degenerate features map to 0.0.

    Values outside the fitted range scale outside [0, 1] and are not clipped.
    """
    if values.ndim != 2 or values.shape[1] != N_FEATURES:
        raise ValueError(f"expected [n x {N_FEATURES}] matrix, got {values.shape}")
    span = params.max - params.min
    safe = np.where(params.degenerate, 1.0, span)
    scaled = (values - params.min) / safe
    return np.where(params.degenerate, 0.0, scaled)


def inverse_scaler(scaled: np.ndarray, params: ScalerParams) -> np.ndarray:
    """Inverse of apply_scaler; degenerate features recover their constant."""
    if scaled.ndim != 2 or scaled.shape[1] != N_FEATURES:
        raise ValueError(f"expected [n x {N_FEATURES}] matrix, got {scaled.shape}")
    span = params.max - params.min
    raw = scaled * span + params.min
    return np.where(params.degenerate, params.min, raw)


def make_windows(scaled: np.ndarray, T: int = LOOKBACK, city: str = "",
                 row_offset: int = 0, valid: np.ndarray | None = None) -> WindowedDataset:
    """Slide a length-T input window over ``scaled``; target is row i+T.

    ``valid`` (bool per row) excludes any window touching an invalid row.
    ``row_offset`` shifts origin indices so they address the full city series.
    """
    n = scaled.shape[0]
    if n <= T:
        raise ValueError(f"need more than T={T} rows to build windows, got {n}")
    N = n - T
    if valid is None:
        keep = np.arange(N)
    else:
        ok = np.asarray(valid, dtype=bool)
        # window i covers rows [i, i+T] inclusive of the target row
        csum = np.concatenate([[0], np.cumsum(ok)])
        spans = csum[T + 1:] - csum[:-T - 1]
        keep = np.flatnonzero(spans == T + 1)
        if keep.size == 0:
            raise ValueError("no window is free of missing rows")
    sw = np.lib.stride_tricks.sliding_window_view(scaled, (T, scaled.shape[1]))[:, 0]
    X = np.ascontiguousarray(sw[keep], dtype=np.float32)
    Y = np.ascontiguousarray(scaled[keep + T], dtype=np.float32)
    origin = [(city, int(row_offset + i)) for i in keep]
    return WindowedDataset(X, Y, origin)


def chronological_split(n_rows: int, fractions=(0.70, 0.15, 0.15), T: int = LOOKBACK) -> SplitSpec:
    """Row boundaries at cumulative fractions (rounded down), train -> val -> test."""
    fractions = tuple(float(f) for f in fractions)
    if len(fractions) != 3 or any(f <= 0 for f in fractions):
        raise ValueError("need three positive fractions")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"fractions must sum to 1, got {sum(fractions)}")
    train_end = int(n_rows * fractions[0])
    val_end = int(n_rows * (fractions[0] + fractions[1]))
    spec = SplitSpec(n_rows=n_rows, train_end=train_end, val_end=val_end)
    for name in ("train", "val", "test"):
        lo, hi = spec.segment_range(name)
        if hi - lo < T + 1:
            raise ValueError(
                f"{name} segment has {hi - lo} rows; needs at least {T + 1} to form a window"
            )
    return spec


def city_segment_windows(series, params: ScalerParams, split: SplitSpec,
                         segment: str, T: int = LOOKBACK) -> WindowedDataset:
    """Windows for one split segment of one city, scaled by that city's params."""
    lo, hi = split.segment_range(segment)
    scaled = apply_scaler(series.values[lo:hi], params)
    valid = ~series.missing_mask[lo:hi].any(axis=1)
    return make_windows(scaled, T=T, city=series.city.name, row_offset=lo,
                        valid=None if valid.all() else valid)


def conformal_split_windows(series, params: ScalerParams, split: SplitSpec,
                            calib_fraction: float = 0.2,
                            T: int = LOOKBACK) -> tuple[WindowedDataset, WindowedDataset]:
    """Carve a target city's test segment into (calibration, evaluation)
    windows: the chronologically first ``calib_fraction`` of test rows
    calibrate, the rest evaluate. No window crosses the boundary."""
    lo, hi = split.segment_range("test")
    calib_end = lo + int((hi - lo) * calib_fraction)
    valid = ~series.missing_mask.any(axis=1)

    def _segment(a, b):
        scaled = apply_scaler(series.values[a:b], params)
        seg_valid = valid[a:b]
        return make_windows(scaled, T=T, city=series.city.name, row_offset=a,
                            valid=None if seg_valid.all() else seg_valid)

    return _segment(lo, calib_end), _segment(calib_end, hi)


def assemble_pooled(cities, segment: str, T: int = LOOKBACK) -> WindowedDataset:
    """Concatenate per-city windows for one segment.

    ``cities`` is a list of (HourlySeries, ScalerParams, SplitSpec) triples;
    each city is scaled by its own params and windows never cross cities.
    """
    if not cities:
        raise ValueError("assemble_pooled needs at least one city")
    parts = [city_segment_windows(series, params, split, segment, T=T)
             for series, params, split in cities]
    X = np.concatenate([p.X for p in parts], axis=0)
    Y = np.concatenate([p.Y for p in parts], axis=0)
    origin = [o for p in parts for o in p.origin]
    return WindowedDataset(X, Y, origin)


# ---------------------------------------------------------------------------
# Binary container: magic GNDS, version, T, F, N, per-segment offsets, then
# little-endian float32 payloads (row-major). Origins go to a JSON sidecar.

_HEADER = struct.Struct("<4sIIII")
_SEGHEAD = struct.Struct("<HQQQ")


def save_container(path, segments: dict[str, WindowedDataset]):
    """Persist named WindowedDatasets into one GNDS container file."""
    if not segments:
        raise ValueError("container needs at least one segment")
    first = next(iter(segments.values()))
    T, F = first.X.shape[1], first.X.shape[2]
    names = list(segments)
    total = sum(ds.n for ds in segments.values())
    head = _HEADER.pack(CONTAINER_MAGIC, CONTAINER_VERSION, T, F, len(names))
    directory_size = _HEADER.size + 8
    encoded_names = [n.encode("utf-8") for n in names]
    for en in encoded_names:
        directory_size += _SEGHEAD.size + len(en)
    offset = directory_size
    entries = []
    for name, en in zip(names, encoded_names):
        ds = segments[name]
        if ds.X.shape[1] != T or ds.X.shape[2] != F:
            raise ValueError(f"segment {name!r} has mismatched window shape")
        x_off = offset
        offset += ds.X.size * 4
        y_off = offset
        offset += ds.Y.size * 4
        entries.append((en, ds.n, x_off, y_off))
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(head)
        fh.write(struct.pack("<Q", total))
        for en, n, x_off, y_off in entries:
            fh.write(_SEGHEAD.pack(len(en), n, x_off, y_off))
            fh.write(en)
        for name in names:
            ds = segments[name]
            fh.write(np.ascontiguousarray(ds.X, dtype="<f4").tobytes())
            fh.write(np.ascontiguousarray(ds.Y, dtype="<f4").tobytes())
    sidecar = {name: [[c, r] for c, r in segments[name].origin] for name in names}
    path.with_suffix(path.suffix + ".origins.json").write_text(json.dumps(sidecar))
    return path


def load_container(path) -> dict[str, WindowedDataset]:
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise ArtifactError(f"cannot read container {path}: {exc}") from exc
    if len(blob) < _HEADER.size + 8:
        raise ArtifactError(f"{path}: truncated header")
    magic, version, T, F, n_seg = _HEADER.unpack_from(blob, 0)
    if magic != CONTAINER_MAGIC:
        raise ArtifactError(f"{path}: bad magic {magic!r}")
    if version != CONTAINER_VERSION:
        raise ArtifactError(f"{path}: unsupported container version {version}")
    pos = _HEADER.size + 8
    entries = []
    for _ in range(n_seg):
        name_len, n, x_off, y_off = _SEGHEAD.unpack_from(blob, pos)
        pos += _SEGHEAD.size
        name = blob[pos:pos + name_len].decode("utf-8")
        pos += name_len
        entries.append((name, n, x_off, y_off))
    sidecar_path = path.with_suffix(path.suffix + ".origins.json")
    origins = json.loads(sidecar_path.read_text()) if sidecar_path.exists() else {}
    out = {}
    for name, n, x_off, y_off in entries:
        x_bytes = n * T * F * 4
        y_bytes = n * F * 4
        if y_off + y_bytes > len(blob):
            raise ArtifactError(f"{path}: segment {name!r} payload truncated")
        X = np.frombuffer(blob, dtype="<f4", count=n * T * F, offset=x_off).reshape(n, T, F)
        Y = np.frombuffer(blob, dtype="<f4", count=n * F, offset=y_off).reshape(n, F)
        origin = [(c, int(r)) for c, r in origins.get(name, [])]
        out[name] = WindowedDataset(X.copy(), Y.copy(), origin)
    return out
