import numpy as np
import pytest

from trafgen.ingest import AirspaceConfig, Flight, TrackPoint
from trafgen.procedures import ProceduralTrajectory


@pytest.fixture
def airspace():
    # JFK-like reference point
    return AirspaceConfig(origin_lat=40.6413, origin_lon=-73.7781,
                          origin_alt_ft=13.0, radius_nm=25.0)


def make_flight(flight_id, times, lats, lons, alts):
    points = [TrackPoint(time=float(t), lat=float(la), lon=float(lo), alt=float(al))
              for t, la, lo, al in zip(times, lats, lons, alts)]
    return Flight(id=flight_id, points=points)


def make_proc_traj(points, name="PROC", duration=None):
    """ProceduralTrajectory straight from an ENU point array (test shortcut)."""
    points = np.asarray(points, dtype=float)
    length = float(np.linalg.norm(np.diff(points, axis=0), axis=1).sum())
    if duration is None:
        duration = max(length / 70.0, 1.0)
    times = np.linspace(0.0, duration, points.shape[0])
    return ProceduralTrajectory(procedure=name, times=times, points=points,
                                total_distance=length)
