"""Canonical feature schema for hourly weather records.

The column order is fixed and must be identical across ingestion, training
and inference; everything downstream indexes features by position.
"""

FEATURES = (
    ("temperature_2m", "°C"),
    ("relative_humidity_2m", "%"),
    ("precipitation", "mm"),
    ("surface_pressure", "hPa"),
    ("cloud_cover", "%"),
    ("wind_speed_10m", "km/h"),
    ("wind_direction_10m", "degrees"),
    ("shortwave_radiation", "W/m²"),
)

FEATURE_NAMES = tuple(name for name, _ in FEATURES)
FEATURE_UNITS = dict(FEATURES)
N_FEATURES = len(FEATURES)

SCHEMA_VERSION = 1

# Forecasting window: 24 hourly observations in, the next hour out.
LOOKBACK = 24


def feature_index(name: str) -> int:
    try:
        return FEATURE_NAMES.index(name)
    except ValueError:
        raise KeyError(f"unknown feature {name!r}") from None
