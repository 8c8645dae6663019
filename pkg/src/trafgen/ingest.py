"""Track ingestion: file parsing, WGS84 -> local ENU conversion, flight classification.

Track files are UTF-8 CSV with header ``id,time,lat,lon,alt`` and optional
``gs,vr`` columns (times in seconds, altitudes in feet). All geometry
downstream of this module is in meters in an east-north-up frame centered at
the configured airport reference point.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import ClassificationError, DataError
from .units import FT_TO_M, NM_TO_M

# WGS84 ellipsoid
_WGS84_A = 6378137.0
_WGS84_F = 1.0 / 298.257223563
_WGS84_E2 = _WGS84_F * (2.0 - _WGS84_F)


class FlightClass(Enum):
    ARRIVAL = "arrival"
    DEPARTURE = "departure"
    OVERFLIGHT = "overflight"


@dataclass(frozen=True)
class TrackPoint:
    time: float            # seconds, monotonic epoch
    lat: float             # degrees WGS84
    lon: float             # degrees WGS84
    alt: float             # feet
    ground_speed: float | None = None   # knots
    vertical_rate: float | None = None  # feet/min


@dataclass
class Flight:
    id: str
    points: list[TrackPoint]
    kind: FlightClass | None = None
    runway: str | None = None

    def times(self) -> np.ndarray:
        return np.array([p.time for p in self.points], dtype=float)


@dataclass(frozen=True)
class AirspaceConfig:
    origin_lat: float
    origin_lon: float
    origin_alt_ft: float = 0.0
    radius_nm: float = 25.0
    landing_ceiling_ft: float = 500.0
    landing_radius_nm: float = 2.0

    def __post_init__(self) -> None:
        if self.radius_nm <= 0:
            raise ValueError("radius_nm must be positive")

    @property
    def radius_m(self) -> float:
        return self.radius_nm * NM_TO_M

    @classmethod
    def from_file(cls, path: str | Path) -> "AirspaceConfig":
        """Read a ``key = value`` config file ('#' starts a comment)."""
        values = parse_keyvalue_file(path)
        known = {
            "origin_lat", "origin_lon", "origin_alt_ft", "radius_nm",
            "landing_ceiling_ft", "landing_radius_nm",
        }
        kwargs = {k: float(v) for k, v in values.items() if k in known}
        if "origin_lat" not in kwargs or "origin_lon" not in kwargs:
            raise DataError(f"{path}: origin_lat and origin_lon are required")
        return cls(**kwargs)


def parse_keyvalue_file(path: str | Path) -> dict[str, str]:
    """Parse a flat ``key = value`` text file into a string dict."""
    values: dict[str, str] = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DataError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        values[key.strip()] = value.strip()
    return values


# ---------------------------------------------------------------------------
# Geodesy

def geodetic_to_ecef(lat_deg, lon_deg, alt_m):
    """WGS84 geodetic coordinates to earth-centered earth-fixed, in meters."""
    lat = np.radians(np.asarray(lat_deg, dtype=float))
    lon = np.radians(np.asarray(lon_deg, dtype=float))
    alt = np.asarray(alt_m, dtype=float)
    sin_lat, cos_lat = np.sin(lat), np.cos(lat)
    n = _WGS84_A / np.sqrt(1.0 - _WGS84_E2 * sin_lat**2)
    x = (n + alt) * cos_lat * np.cos(lon)
    y = (n + alt) * cos_lat * np.sin(lon)
    z = (n * (1.0 - _WGS84_E2) + alt) * sin_lat
    return np.stack(np.broadcast_arrays(x, y, z), axis=-1)


def ecef_to_geodetic(ecef):
    """Inverse of :func:`geodetic_to_ecef` (iterated to machine precision)."""
    ecef = np.asarray(ecef, dtype=float)
    x, y, z = ecef[..., 0], ecef[..., 1], ecef[..., 2]
    lon = np.arctan2(y, x)
    p = np.hypot(x, y)
    lat = np.arctan2(z, p * (1.0 - _WGS84_E2))
    for _ in range(10):
        sin_lat = np.sin(lat)
        n = _WGS84_A / np.sqrt(1.0 - _WGS84_E2 * sin_lat**2)
        alt = p / np.cos(lat) - n
        new_lat = np.arctan2(z, p * (1.0 - _WGS84_E2 * n / (n + alt)))
        if np.all(np.abs(new_lat - lat) < 1e-14):
            lat = new_lat
            break
        lat = new_lat
    sin_lat = np.sin(lat)
    n = _WGS84_A / np.sqrt(1.0 - _WGS84_E2 * sin_lat**2)
    alt = p / np.cos(lat) - n
    return np.degrees(lat), np.degrees(lon), alt


def _enu_rotation(lat_deg: float, lon_deg: float) -> np.ndarray:
    lat, lon = math.radians(lat_deg), math.radians(lon_deg)
    sin_lat, cos_lat = math.sin(lat), math.cos(lat)
    sin_lon, cos_lon = math.sin(lon), math.cos(lon)
    return np.array([
        [-sin_lon, cos_lon, 0.0],
        [-sin_lat * cos_lon, -sin_lat * sin_lon, cos_lat],
        [cos_lat * cos_lon, cos_lat * sin_lon, sin_lat],
    ])


def wgs84_to_enu(lat_deg, lon_deg, alt_ft, config: AirspaceConfig) -> np.ndarray:
    """Convert geodetic positions (altitude in feet) to ENU meters.

    Scalar inputs give a shape (3,) array; length-n inputs give (n, 3).
    """
    origin_ecef = geodetic_to_ecef(
        config.origin_lat, config.origin_lon, config.origin_alt_ft * FT_TO_M
    )
    rot = _enu_rotation(config.origin_lat, config.origin_lon)
    ecef = geodetic_to_ecef(lat_deg, lon_deg, np.asarray(alt_ft, dtype=float) * FT_TO_M)
    return (ecef - origin_ecef) @ rot.T


def enu_to_wgs84(enu, config: AirspaceConfig):
    """Convert ENU meters back to (lat deg, lon deg, alt ft)."""
    origin_ecef = geodetic_to_ecef(
        config.origin_lat, config.origin_lon, config.origin_alt_ft * FT_TO_M
    )
    rot = _enu_rotation(config.origin_lat, config.origin_lon)
    ecef = np.asarray(enu, dtype=float) @ rot + origin_ecef
    lat, lon, alt_m = ecef_to_geodetic(ecef)
    return lat, lon, alt_m / FT_TO_M


# ---------------------------------------------------------------------------
# Track file parsing

_REQUIRED_COLUMNS = ("id", "time", "lat", "lon", "alt")


def parse_tracks(path: str | Path, config: AirspaceConfig | None = None,
                 ) -> tuple[list[Flight], list[str]]:
    """Parse a track CSV into per-aircraft flights.

    Returns (flights, record-level error messages). Rows violating the
    coordinate invariants are rejected individually; an unreadable or
    header-less file raises DataError. ``config`` is accepted for call-site
    symmetry with the rest of the ingest pipeline; parsing itself does not
    depend on the airspace.
    """
    path = Path(path)
    try:
        handle = path.open(newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read track file {path}: {exc}") from exc

    errors: list[str] = []
    rows_by_id: dict[str, list[TrackPoint]] = {}
    with handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None or not set(_REQUIRED_COLUMNS) <= set(reader.fieldnames):
            raise DataError(
                f"{path}: header must contain columns {','.join(_REQUIRED_COLUMNS)}"
            )
        for lineno, row in enumerate(reader, start=2):
            try:
                point = _parse_row(row)
            except (KeyError, TypeError, ValueError) as exc:
                errors.append(f"{path}:{lineno}: {exc}")
                continue
            rows_by_id.setdefault(row["id"], []).append(point)

    flights: list[Flight] = []
    for flight_id, points in rows_by_id.items():
        points.sort(key=lambda p: p.time)
        deduped: list[TrackPoint] = []
        for p in points:
            if deduped and p.time == deduped[-1].time:
                continue  # duplicate timestamp: keep first
            deduped.append(p)
        if len(deduped) < 2:
            errors.append(f"{path}: flight {flight_id!r} has fewer than 2 usable points")
            continue
        flights.append(Flight(id=flight_id, points=deduped))
    return flights, errors


def _parse_row(row: dict[str, str]) -> TrackPoint:
    time = float(row["time"])
    lat = float(row["lat"])
    lon = float(row["lon"])
    alt = float(row["alt"])
    if not (-90.0 <= lat <= 90.0):
        raise ValueError(f"lat {lat} outside [-90, 90]")
    if not (-180.0 <= lon <= 180.0):
        raise ValueError(f"lon {lon} outside [-180, 180]")
    if not (math.isfinite(alt) and math.isfinite(time)):
        raise ValueError("time and alt must be finite")
    gs = row.get("gs")
    vr = row.get("vr")
    return TrackPoint(
        time=time, lat=lat, lon=lon, alt=alt,
        ground_speed=float(gs) if gs not in (None, "") else None,
        vertical_rate=float(vr) if vr not in (None, "") else None,
    )


# ---------------------------------------------------------------------------
# ENU trajectories and classification

def flight_to_enu(flight: Flight, config: AirspaceConfig,
                  clip_to_airspace: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """ENU trajectory of a flight as (times, positions (n, 3)).

    With ``clip_to_airspace`` only points within the configured horizontal
    radius are kept and times are rebased to the first kept point.
    """
    lats = np.array([p.lat for p in flight.points])
    lons = np.array([p.lon for p in flight.points])
    alts = np.array([p.alt for p in flight.points])
    times = flight.times()
    xyz = wgs84_to_enu(lats, lons, alts, config)
    if clip_to_airspace:
        inside = np.hypot(xyz[:, 0], xyz[:, 1]) <= config.radius_m
        xyz, times = xyz[inside], times[inside]
        if len(times):
            times = times - times[0]
    return times, xyz


def classify_flight(flight: Flight, config: AirspaceConfig) -> FlightClass:
    """Classify a flight as arrival, departure, or overflight.

    An arrival shows a net-decreasing range to the origin and ends below the
    landing ceiling within the landing radius; a departure is the mirror
    image; anything else is an overflight. Uses only the in-airspace portion
    of the track.
    """
    times, xyz = flight_to_enu(flight, config)
    if len(times) < 2:
        raise ClassificationError(
            f"flight {flight.id!r}: fewer than 2 points inside the airspace"
        )
    ranges = np.hypot(xyz[:, 0], xyz[:, 1])
    agl = xyz[:, 2]  # meters above the airport reference point
    ceiling_m = config.landing_ceiling_ft * FT_TO_M
    landing_radius_m = config.landing_radius_nm * NM_TO_M

    ends_low_and_close = ranges[-1] <= landing_radius_m and agl[-1] <= ceiling_m
    starts_low_and_close = ranges[0] <= landing_radius_m and agl[0] <= ceiling_m
    if ranges[-1] < ranges[0] and ends_low_and_close:
        return FlightClass.ARRIVAL
    if ranges[0] < ranges[-1] and starts_low_and_close:
        return FlightClass.DEPARTURE
    return FlightClass.OVERFLIGHT
