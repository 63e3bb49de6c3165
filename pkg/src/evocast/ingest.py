"""Hourly weather ingestion: Open-Meteo archive fetches, a local text cache,
and a deterministic synthetic generator for offline work.

Date ranges are end-date inclusive (the archive API convention), so a range
covers 24 * (end - start + 1 day) hours. Gaps in the API data are never
dropped: rows stay in place and are flagged in ``missing_mask``.
"""

from __future__ import annotations

import csv
import logging
import math
import os
import time
from dataclasses import dataclass, replace
from datetime import date, datetime, timedelta, timezone
from pathlib import Path

import numpy as np
import requests

from .cities import CityRecord
from .errors import CacheIOError, FetchRetryError, PayloadError
from .features import FEATURE_NAMES, FEATURE_UNITS, N_FEATURES, SCHEMA_VERSION

log = logging.getLogger(__name__)

ARCHIVE_URL = "https://archive-api.open-meteo.com/v1/archive"
CACHE_ENV_VAR = "EVOCAST_CACHE"

RETRY_ATTEMPTS = 3
RETRY_BASE_DELAY = 1.0  # seconds, doubled per attempt

SYNTHETIC_PROFILES = ("temperate", "tropical", "arid")
SYNTHETIC_EPOCH = datetime(2019, 1, 1, tzinfo=timezone.utc)


@dataclass(frozen=True)
class HourlySeries:
    """One city's contiguous hourly record: [n_hours x 8] raw physical values.

    Timestamps are implied: row i is ``start_time + i hours`` (UTC). Missing
    observations are flagged in ``missing_mask``, never removed.
    """

    city: CityRecord
    start_time: datetime
    values: np.ndarray       # float64 [n, 8]
    missing_mask: np.ndarray  # bool [n, 8]

    def __post_init__(self):
        if self.start_time.tzinfo is None or self.start_time.utcoffset() != timedelta(0):
            raise ValueError("start_time must be a UTC timestamp")
        if self.start_time.minute or self.start_time.second or self.start_time.microsecond:
            raise ValueError("start_time must be aligned to a whole hour")
        if self.values.ndim != 2 or self.values.shape[1] != N_FEATURES:
            raise ValueError(f"values must be [n x {N_FEATURES}], got {self.values.shape}")
        if self.missing_mask.shape != self.values.shape:
            raise ValueError("missing_mask shape must match values")

    @property
    def n_hours(self) -> int:
        return self.values.shape[0]

    def timestamps(self) -> np.ndarray:
        """Row timestamps as numpy datetime64[h] (UTC)."""
        start = np.datetime64(self.start_time.replace(tzinfo=None), "h")
        return start + np.arange(self.n_hours, dtype="timedelta64[h]")


def expected_hours(start: date, end: date) -> int:
    """Hours covered by [start, end] with end-date inclusive."""
    return ((end - start).days + 1) * 24


# ---------------------------------------------------------------------------
# Open-Meteo archive client


def fetch_city_history(city, start, end, cache_dir=None, session=None) -> HourlySeries:
    """Fetch one city's hourly history from the Open-Meteo archive.

    Retries transient failures (3 attempts, exponential backoff from 1 s,
    honoring Retry-After on 429). The result is persisted to ``cache_dir``
    (default: $EVOCAST_CACHE if set) before returning.
    """
    if start >= end:
        raise ValueError(f"start {start} must be before end {end}")
    params = {
        "latitude": city.latitude,
        "longitude": city.longitude,
        "start_date": start.isoformat(),
        "end_date": end.isoformat(),
        "hourly": ",".join(FEATURE_NAMES),
        "timezone": "UTC",
    }
    payload = _get_with_retries(session or requests, ARCHIVE_URL, params)
    series = _parse_archive_payload(city, start, end, payload)
    cache_dir = cache_dir or os.environ.get(CACHE_ENV_VAR)
    if cache_dir:
        cache_store(series, start, end, cache_dir)
    return series


def _get_with_retries(session, url, params):
    delay = RETRY_BASE_DELAY
    last_error = None
    for attempt in range(1, RETRY_ATTEMPTS + 1):
        try:
            resp = session.get(url, params=params, timeout=60)
        except requests.RequestException as exc:
            last_error = exc
        else:
            if resp.status_code == 200:
                return resp.json()
            if resp.status_code == 429:
                retry_after = float(resp.headers.get("Retry-After", delay))
                last_error = requests.HTTPError(f"HTTP 429 (rate limited)")
                if attempt < RETRY_ATTEMPTS:
                    time.sleep(max(retry_after, delay))
                    delay *= 2
                    continue
            else:
                last_error = requests.HTTPError(f"HTTP {resp.status_code}")
        if attempt < RETRY_ATTEMPTS:
            time.sleep(delay)
            delay *= 2
    raise FetchRetryError(f"GET {url} failed: {last_error}", attempts=RETRY_ATTEMPTS)


def _parse_archive_payload(city, start, end, payload) -> HourlySeries:
    hourly = payload.get("hourly")
    if hourly is None:
        raise PayloadError("hourly", "missing block")
    times = hourly.get("time")
    if not times:
        raise PayloadError("hourly.time", "missing or empty")
    n = len(times)
    n_expected = expected_hours(start, end)
    if n != n_expected:
        raise PayloadError("hourly.time", f"expected {n_expected} rows, got {n}")
    values = np.empty((n, N_FEATURES), dtype=np.float64)
    mask = np.zeros((n, N_FEATURES), dtype=bool)
    for f, name in enumerate(FEATURE_NAMES):
        column = hourly.get(name)
        if column is None:
            raise PayloadError(f"hourly.{name}", "missing feature column")
        if len(column) != n:
            raise PayloadError(f"hourly.{name}", f"length {len(column)} != {n}")
        for i, v in enumerate(column):
            if v is None:
                values[i, f] = np.nan
                mask[i, f] = True
            else:
                values[i, f] = float(v)
    start_time = datetime.fromisoformat(times[0]).replace(tzinfo=timezone.utc)
    return HourlySeries(city=city, start_time=start_time, values=values, missing_mask=mask)


# ---------------------------------------------------------------------------
# Local cache: one delimited-text file per (city, range), human-inspectable.


def cache_path(city, start, end, cache_dir) -> Path:
    safe = "".join(ch if ch.isalnum() or ch in "-_" else "-" for ch in city.name.lower())
    return Path(cache_dir) / f"{safe}_{start.isoformat()}_{end.isoformat()}_v{SCHEMA_VERSION}.csv"


def cache_store(series, start, end, cache_dir) -> Path:
    """Write a series to the cache atomically (write-then-rename)."""
    path = cache_path(series.city, start, end, cache_dir)
    tmp = path.with_suffix(f".tmp-{os.getpid()}")
    c = series.city
    try:
        with open(tmp, "w", newline="", encoding="utf-8") as fh:
            fh.write(f"# evocast-cache schema_version={SCHEMA_VERSION}\n")
            fh.write(
                f"# city={c.name} latitude={c.latitude!r} longitude={c.longitude!r}"
                f" climate_zone={c.climate_zone} role={c.role}\n"
            )
            fh.write(f"# start={start.isoformat()} end={end.isoformat()} rows={series.n_hours}\n")
            units = ",".join(f"{n}[{FEATURE_UNITS[n]}]" for n in FEATURE_NAMES)
            fh.write(f"time,{units}\n")
            writer = csv.writer(fh)
            stamps = series.timestamps()
            for i in range(series.n_hours):
                row = [str(stamps[i])]
                for f in range(N_FEATURES):
                    row.append("" if series.missing_mask[i, f] else repr(float(series.values[i, f])))
                writer.writerow(row)
        os.replace(tmp, path)
    except OSError as exc:
        tmp.unlink(missing_ok=True)
        raise CacheIOError(f"cannot write cache file {path}: {exc}") from exc
    return path


def cache_load(city, start, end, cache_dir) -> HourlySeries:
    """Load a cached series; raises CacheIOError on a missing or corrupt file."""
    path = cache_path(city, start, end, cache_dir)
    if not path.exists():
        raise CacheIOError(f"no cache entry at {path}")
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            header = [fh.readline() for _ in range(3)]
            if not header[0].startswith(f"# evocast-cache schema_version={SCHEMA_VERSION}"):
                raise CacheIOError(f"{path}: unknown cache schema")
            declared = int(header[2].split("rows=")[1])
            fh.readline()  # column header
            reader = csv.reader(fh)
            rows = list(reader)
    except (OSError, IndexError, ValueError) as exc:
        raise CacheIOError(f"cannot read cache file {path}: {exc}") from exc
    if len(rows) != declared or declared == 0:
        raise CacheIOError(f"{path}: truncated ({len(rows)} of {declared} rows)")
    values = np.empty((declared, N_FEATURES), dtype=np.float64)
    mask = np.zeros((declared, N_FEATURES), dtype=bool)
    try:
        start_time = datetime.fromisoformat(rows[0][0]).replace(tzinfo=timezone.utc)
        for i, row in enumerate(rows):
            if len(row) != N_FEATURES + 1:
                raise ValueError(f"row {i} has {len(row)} fields")
            for f in range(N_FEATURES):
                cell = row[f + 1]
                if cell == "":
                    values[i, f] = np.nan
                    mask[i, f] = True
                else:
                    values[i, f] = float(cell)
    except (ValueError, IndexError) as exc:
        raise CacheIOError(f"{path}: corrupt row: {exc}") from exc
    return HourlySeries(city=city, start_time=start_time, values=values, missing_mask=mask)


def cache_get_or_fetch(city, start, end, cache_dir, session=None) -> HourlySeries:
    """Return the cached series for (city, start, end), fetching on a miss.

    A corrupt cache file is deleted and refetched with a logged warning.
    """
    cache_dir = Path(cache_dir)
    if not cache_dir.is_dir():
        raise ValueError(f"cache_dir {cache_dir} does not exist")
    path = cache_path(city, start, end, cache_dir)
    if path.exists():
        try:
            return cache_load(city, start, end, cache_dir)
        except CacheIOError as exc:
            log.warning("discarding corrupt cache entry %s: %s", path, exc)
            path.unlink(missing_ok=True)
    return fetch_city_history(city, start, end, cache_dir=cache_dir, session=session)


# ---------------------------------------------------------------------------
# Gap handling


def fill_short_gaps(series: HourlySeries, max_gap_hours: int = 6) -> HourlySeries:
    """Linearly interpolate masked runs of at most ``max_gap_hours`` per feature.

    Interpolated cells are unmasked; longer runs (and runs touching either
    end of the series) stay masked so downstream windowing excludes them.
    """
    values = series.values.copy()
    mask = series.missing_mask.copy()
    n = series.n_hours
    for f in range(N_FEATURES):
        col_mask = mask[:, f]
        i = 0
        while i < n:
            if not col_mask[i]:
                i += 1
                continue
            j = i
            while j < n and col_mask[j]:
                j += 1
            run = j - i
            if run <= max_gap_hours and i > 0 and j < n:
                left, right = values[i - 1, f], values[j, f]
                for k in range(run):
                    frac = (k + 1) / (run + 1)
                    values[i + k, f] = left + (right - left) * frac
                col_mask[i:j] = False
            i = j
    return replace(series, values=values, missing_mask=mask)


# ---------------------------------------------------------------------------
# Synthetic cities (offline testing)

_PROFILE_PARAMS = {
    # mean temp, annual amplitude, diurnal amplitude, humidity base, rain prob, radiation peak
    "temperate": dict(t_mean=12.0, t_annual=10.0, t_diurnal=7.0, rh_base=70.0, rain_p=0.08, sw_peak=650.0),
    "tropical": dict(t_mean=27.0, t_annual=2.5, t_diurnal=5.0, rh_base=82.0, rain_p=0.15, sw_peak=800.0),
    "arid": dict(t_mean=22.0, t_annual=8.0, t_diurnal=11.0, rh_base=30.0, rain_p=0.01, sw_peak=900.0),
}


def generate_synthetic_city(seed: int, n_hours: int, profile: str,
                            name: str | None = None, role: str = "source") -> HourlySeries:
    """Deterministic synthetic hourly series mimicking one climate profile.

    Temperature = annual sinusoid + diurnal sinusoid + AR(1) noise; pressure
    is anti-correlated with temperature; shortwave radiation is zero at night
    (hours outside 06-18 local, with local == UTC for synthetic cities).
    Pure function of (seed, n_hours, profile).
    """
    if n_hours < 48:
        raise ValueError(f"n_hours must be >= 48, got {n_hours}")
    if profile not in SYNTHETIC_PROFILES:
        raise ValueError(f"profile must be one of {SYNTHETIC_PROFILES}, got {profile!r}")
    p = _PROFILE_PARAMS[profile]
    rng = np.random.default_rng([seed, SYNTHETIC_PROFILES.index(profile)])

    h = np.arange(n_hours, dtype=np.float64)
    hour_of_day = h % 24.0
    annual = np.sin(2.0 * math.pi * (h / (24.0 * 365.25) - 0.25))
    diurnal = np.sin(2.0 * math.pi * (hour_of_day - 9.0) / 24.0)

    def ar1(phi, sigma):
        eps = rng.normal(0.0, sigma, size=n_hours)
        out = np.empty(n_hours)
        out[0] = eps[0] / math.sqrt(1.0 - phi * phi)
        for i in range(1, n_hours):
            out[i] = phi * out[i - 1] + eps[i]
        return out

    temp = p["t_mean"] + p["t_annual"] * annual + p["t_diurnal"] * diurnal + ar1(0.9, 0.5)
    temp_anom = temp - (p["t_mean"] + p["t_annual"] * annual)

    humidity = np.clip(p["rh_base"] - 1.8 * temp_anom + ar1(0.9, 1.5), 5.0, 100.0)

    # wet/dry spells follow a two-state Markov chain so rain has memory
    wet = np.empty(n_hours, dtype=bool)
    state = False
    p_onset = p["rain_p"] * 0.5
    gates = rng.random(n_hours)
    for i in range(n_hours):
        state = gates[i] < (0.55 if state else p_onset)
        wet[i] = state
    precipitation = np.round(np.where(wet, rng.exponential(1.2, size=n_hours), 0.0), 2)

    pressure = 1013.0 - 0.9 * temp_anom + 2.5 * ar1(0.98, 0.12)

    cloud = np.clip(35.0 + 0.55 * (humidity - p["rh_base"]) + 12.0 * diurnal
                    + ar1(0.85, 5.0) + 30.0 * wet, 0.0, 100.0)

    wind_speed = np.abs(9.0 + 3.0 * diurnal + ar1(0.9, 1.2))

    # prevailing direction with seasonal/diurnal swing, not an unbounded walk
    wind_direction = np.clip(200.0 + 35.0 * annual + 20.0 * diurnal + ar1(0.92, 9.0),
                             0.0, 359.99)

    daylight = np.sin(math.pi * (hour_of_day - 6.0) / 12.0)
    daylight = np.where((hour_of_day >= 6.0) & (hour_of_day <= 18.0), np.maximum(daylight, 0.0), 0.0)
    season = 1.0 + 0.3 * annual
    radiation = np.maximum(p["sw_peak"] * daylight * season * (1.0 - 0.007 * cloud), 0.0)

    values = np.column_stack(
        [temp, humidity, precipitation, pressure, cloud, wind_speed, wind_direction, radiation]
    )
    city = CityRecord(
        name=name or f"synthetic-{profile}-{seed}",
        latitude=float(np.round(-60 + (seed * 37 % 120), 4)),
        longitude=float(np.round(-150 + (seed * 73 % 300), 4)),
        climate_zone=profile,
        role=role,
    )
    return HourlySeries(
        city=city,
        start_time=SYNTHETIC_EPOCH,
        values=values,
        missing_mask=np.zeros_like(values, dtype=bool),
    )
