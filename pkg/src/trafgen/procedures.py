"""Flight procedures and their fixed-length, time-parameterized trajectories.

Published instrument approach procedures (IAPs) come from waypoint files;
radar-vector "procedures" have no published path, so nominal paths are
extracted from the recorded arrival set by clustering and curated by hand.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np
import yaml

from ._cluster import kmeans
from .errors import DataError
from .ingest import AirspaceConfig, Flight, enu_to_wgs84, flight_to_enu, wgs84_to_enu
from .preprocess import path_length, pchip_resample
from .units import KT_TO_MPS, NM_TO_M


class ProcedureKind(Enum):
    IAP = "IAP"
    RADAR_VECTOR = "radar_vector"


@dataclass
class Procedure:
    """A named waypoint path with a relative traffic frequency weight.

    Waypoints are (lat deg, lon deg, alt ft or None). ``duration_s`` is the
    mean transit duration of the source flights when the procedure was
    extracted from data; it provides the timing for radar-vector procedures.
    """

    name: str
    kind: ProcedureKind
    waypoints: list[tuple[float, float, float | None]]
    frequency: float = 1.0
    duration_s: float | None = None

    def __post_init__(self) -> None:
        if len(self.waypoints) < 2:
            raise ValueError(f"procedure {self.name!r} needs >= 2 waypoints")
        if self.frequency < 0:
            raise ValueError("frequency must be nonnegative")


@dataclass
class ProceduralTrajectory:
    """Fixed-length resampling of a procedure: T timed ENU points."""

    procedure: str
    times: np.ndarray   # (T,), strictly increasing from 0
    points: np.ndarray  # (T, 3) meters ENU
    total_distance: float

    def __post_init__(self) -> None:
        self.times = np.asarray(self.times, dtype=float)
        self.points = np.asarray(self.points, dtype=float)
        if self.points.ndim != 2 or self.points.shape[1] != 3:
            raise ValueError("points must have shape (T, 3)")
        if self.times.shape[0] != self.points.shape[0]:
            raise ValueError("times and points lengths differ")
        if self.times[0] != 0.0 or np.any(np.diff(self.times) <= 0):
            raise ValueError("times must increase strictly from 0")


# ---------------------------------------------------------------------------
# Procedure files: a YAML stream with one document per procedure.

def load_procedures(path: str | Path) -> list[Procedure]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read procedure file {path}: {exc}") from exc
    procedures = []
    for doc in yaml.safe_load_all(text):
        if doc is None:
            continue
        try:
            waypoints = [
                (float(wp[0]), float(wp[1]),
                 float(wp[2]) if len(wp) > 2 and wp[2] is not None else None)
                for wp in doc["waypoints"]
            ]
            procedures.append(Procedure(
                name=str(doc["name"]),
                kind=ProcedureKind(doc["kind"]),
                waypoints=waypoints,
                frequency=float(doc.get("frequency", 1.0)),
                duration_s=(float(doc["duration_s"])
                            if doc.get("duration_s") is not None else None),
            ))
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise DataError(f"{path}: malformed procedure document: {exc}") from exc
    if not procedures:
        raise DataError(f"{path}: no procedures found")
    return procedures


def save_procedures(procedures: Sequence[Procedure], path: str | Path) -> None:
    docs = []
    for proc in procedures:
        docs.append({
            "name": proc.name,
            "kind": proc.kind.value,
            "frequency": float(proc.frequency),
            "duration_s": (float(proc.duration_s)
                           if proc.duration_s is not None else None),
            "waypoints": [
                [wp[0], wp[1]] if wp[2] is None else [wp[0], wp[1], wp[2]]
                for wp in proc.waypoints
            ],
        })
    Path(path).write_text(
        yaml.safe_dump_all(docs, sort_keys=True, default_flow_style=None),
        encoding="utf-8",
    )


# ---------------------------------------------------------------------------
# Nominal radar-vector paths from data

def extract_nominal_paths(flights: Sequence[Flight], k: int,
                          config: AirspaceConfig, *,
                          samples: int = 100,
                          waypoint_count: int = 25,
                          restarts: int = 20,
                          rng: np.random.Generator | int | None = None,
                          ) -> list[Procedure]:
    """Cluster arrival tracks into ``k`` nominal radar-vector paths.

    Flights are resampled to a common length and clustered with k-means
    (k-means++ seeding, best of ``restarts``) on flattened horizontal
    positions. Cluster means become waypoint lists; frequency is the cluster
    membership fraction. The caller curates which paths to keep.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(flights) < k:
        raise ValueError(f"need at least k={k} flights, got {len(flights)}")
    rng = np.random.default_rng(rng)

    rows = []
    durations = []
    for flight in flights:
        times, xyz = flight_to_enu(flight, config)
        if len(times) < 2:
            raise DataError(f"flight {flight.id!r} has no usable airspace track")
        _, resampled = pchip_resample(times, xyz[:, :2], samples)
        rows.append(resampled.ravel())
        durations.append(times[-1] - times[0])
    data = np.asarray(rows)
    durations = np.asarray(durations)

    result = kmeans(data, k, rng, restarts=restarts)
    procedures = []
    for j in range(k):
        member = result.labels == j
        if not member.any():
            continue  # empty cluster survived every restart: drop it
        mean_path = result.centers[j].reshape(samples, 2)
        wp_idx = np.unique(np.linspace(0, samples - 1, waypoint_count).astype(int))
        enu_wps = np.column_stack([mean_path[wp_idx], np.zeros(len(wp_idx))])
        lat, lon, _ = enu_to_wgs84(enu_wps, config)
        procedures.append(Procedure(
            name=f"NOMINAL{j}",
            kind=ProcedureKind.RADAR_VECTOR,
            waypoints=[(float(la), float(lo), None) for la, lo in zip(lat, lon)],
            frequency=float(member.mean()),
            duration_s=float(durations[member].mean()),
        ))
    return procedures


# ---------------------------------------------------------------------------
# Procedural trajectories

def waypoints_to_enu(proc: Procedure, config: AirspaceConfig) -> np.ndarray:
    lats = np.array([wp[0] for wp in proc.waypoints])
    lons = np.array([wp[1] for wp in proc.waypoints])
    alts = np.array([wp[2] if wp[2] is not None else 0.0 for wp in proc.waypoints])
    return wgs84_to_enu(lats, lons, alts, config)


def build_procedural_trajectory(proc: Procedure, count: int,
                                config: AirspaceConfig, *,
                                exemplars: Sequence[Flight] = (),
                                proximity_nm: float = 0.5,
                                default_speed_kts: float = 140.0,
                                ) -> ProceduralTrajectory:
    """Resample a procedure's waypoint path into ``count`` timed ENU points.

    The spatial path is a monotone cubic interpolation through the waypoints,
    sampled at equal steps of the chord-length parameter. Timing comes from,
    in order of preference: exemplar flights that pass within ``proximity_nm``
    of every waypoint (IAPs), the procedure's recorded mean duration
    (radar-vector nominal paths), or a constant-speed fallback.
    """
    if count < 2:
        raise ValueError("count must be >= 2")
    wps = waypoints_to_enu(proc, config)
    if wps.shape[0] < 2:
        raise ValueError("need >= 2 waypoints")

    seg_len = np.linalg.norm(np.diff(wps, axis=0), axis=1)
    if np.any(seg_len == 0):
        raise ValueError(f"procedure {proc.name!r} repeats a waypoint")
    chord = np.concatenate(([0.0], np.cumsum(seg_len)))
    _, points = pchip_resample(chord, wps, count)
    total = path_length(points)

    times = None
    if exemplars:
        times = _mean_exemplar_times(wps, points, exemplars, config,
                                     proximity_nm * NM_TO_M)
    if times is None and proc.duration_s is not None:
        times = np.linspace(0.0, proc.duration_s, count)
    if times is None:
        times = np.linspace(0.0, total / (default_speed_kts * KT_TO_MPS), count)
    return ProceduralTrajectory(procedure=proc.name, times=times, points=points,
                                total_distance=total)


def _mean_exemplar_times(waypoints_enu: np.ndarray, proc_points: np.ndarray,
                         exemplars: Sequence[Flight], config: AirspaceConfig,
                         proximity_m: float) -> np.ndarray | None:
    """Mean arc-length-aligned exemplar timing, or None if none qualify.

    An exemplar qualifies when it passes within ``proximity_m`` (horizontal)
    of every waypoint. Its slice between the nearest approaches to the first
    and last waypoints is aligned to the procedural path by fractional arc
    length before averaging.
    """
    count = proc_points.shape[0]
    proc_arc = np.concatenate(
        ([0.0], np.cumsum(np.linalg.norm(np.diff(proc_points, axis=0), axis=1))))
    fractions = proc_arc / proc_arc[-1]

    aligned = []
    for flight in exemplars:
        times, xyz = flight_to_enu(flight, config)
        if len(times) < 2:
            continue
        dists_to_wps = np.linalg.norm(
            xyz[:, None, :2] - waypoints_enu[None, :, :2], axis=2)  # (n, W)
        if np.any(dists_to_wps.min(axis=0) > proximity_m):
            continue
        first = int(dists_to_wps[:, 0].argmin())
        last = int(dists_to_wps[:, -1].argmin())
        if last <= first:
            continue
        seg_times = times[first:last + 1] - times[first]
        seg_xyz = xyz[first:last + 1]
        arc = np.concatenate(
            ([0.0], np.cumsum(np.linalg.norm(np.diff(seg_xyz, axis=0), axis=1))))
        if arc[-1] <= 0 or np.any(np.diff(arc) <= 0):
            continue
        aligned.append(np.interp(fractions * arc[-1], arc, seg_times))
    if not aligned:
        return None
    mean_times = np.mean(aligned, axis=0)
    mean_times -= mean_times[0]
    if np.any(np.diff(mean_times) <= 0):
        return None  # degenerate exemplar timing: let the caller fall back
    return mean_times
