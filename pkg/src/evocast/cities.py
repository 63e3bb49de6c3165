"""City records and the shipped 24-city configuration.

The default config partitions cities into 18 training "source" cities and
6 held-out "target" cities across four Köppen climate groups.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

ROLES = ("source", "target")
CLIMATE_ZONES = ("tropical", "arid", "temperate", "continental")


@dataclass(frozen=True)
class CityRecord:
    name: str
    latitude: float
    longitude: float
    climate_zone: str
    role: str

    def __post_init__(self):
        if not -90.0 <= self.latitude <= 90.0:
            raise ValueError(f"{self.name}: latitude {self.latitude} outside [-90, 90]")
        if not -180.0 <= self.longitude <= 180.0:
            raise ValueError(f"{self.name}: longitude {self.longitude} outside [-180, 180]")
        if self.role not in ROLES:
            raise ValueError(f"{self.name}: role must be one of {ROLES}, got {self.role!r}")


def load_city_config(path) -> list[CityRecord]:
    """Parse a city config CSV (name, latitude, longitude, climate_zone, role).

    Both the source and the target set must be nonempty.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        cities = _parse_rows(csv.DictReader(fh), str(path))
    return cities


def default_cities() -> list[CityRecord]:
    """The 24-city configuration shipped with the package."""
    ref = resources.files("evocast.data").joinpath("cities.csv")
    with ref.open("r", encoding="utf-8") as fh:
        return _parse_rows(csv.DictReader(fh), "builtin cities.csv")


def _parse_rows(reader, origin) -> list[CityRecord]:
    cities = []
    for row in reader:
        try:
            cities.append(
                CityRecord(
                    name=row["name"].strip(),
                    latitude=float(row["latitude"]),
                    longitude=float(row["longitude"]),
                    climate_zone=row["climate_zone"].strip(),
                    role=row["role"].strip(),
                )
            )
        except (KeyError, ValueError) as exc:
            raise ValueError(f"{origin}: bad city row {row!r}: {exc}") from exc
    roles = {c.role for c in cities}
    if not {"source", "target"} <= roles:
        raise ValueError(f"{origin}: config must contain at least one source and one target city")
    return cities


def split_roles(cities) -> tuple[list[CityRecord], list[CityRecord]]:
    sources = [c for c in cities if c.role == "source"]
    targets = [c for c in cities if c.role == "target"]
    return sources, targets


def write_city_config(cities, path):
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["name", "latitude", "longitude", "climate_zone", "role"])
        for c in cities:
            writer.writerow([c.name, c.latitude, c.longitude, c.climate_zone, c.role])
