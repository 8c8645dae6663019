"""Trajectory preprocessing: DTW assignment, segmentation, resampling, deviations.

A deviation vector packs a trajectory's transit time, path length, and its
per-step 3-D offsets from a procedural trajectory into a single flat vector
of dimension 3T + 2, the training representation used by the mixture models.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import SegmentationError

if TYPE_CHECKING:
    from .procedures import ProceduralTrajectory


@dataclass(frozen=True)
class DeviationVector:
    """Transit time, total distance, and T per-step ENU deviations (meters)."""

    transit_time: float
    total_distance: float
    deviations: np.ndarray  # (T, 3)

    def __post_init__(self) -> None:
        if self.transit_time <= 0:
            raise ValueError("transit_time must be positive")
        if self.total_distance <= 0:
            raise ValueError("total_distance must be positive")
        dev = np.asarray(self.deviations, dtype=float)
        if dev.ndim != 2 or dev.shape[1] != 3:
            raise ValueError("deviations must have shape (T, 3)")
        object.__setattr__(self, "deviations", dev)

    @property
    def dimension(self) -> int:
        return 3 * self.deviations.shape[0] + 2

    def to_array(self) -> np.ndarray:
        return np.concatenate(([self.transit_time, self.total_distance],
                               self.deviations.ravel()))

    @classmethod
    def from_array(cls, tau: np.ndarray) -> "DeviationVector":
        tau = np.asarray(tau, dtype=float)
        if tau.ndim != 1 or (tau.size - 2) % 3 != 0 or tau.size < 5:
            raise ValueError(f"deviation vector length {tau.size} is not 3T+2")
        return cls(transit_time=float(tau[0]), total_distance=float(tau[1]),
                   deviations=tau[2:].reshape(-1, 3))


@dataclass
class SegmentedArrival:
    """An arrival split at the sample where it joins the final approach."""

    radar_vector_times: np.ndarray
    radar_vector_points: np.ndarray
    final_approach_times: np.ndarray
    final_approach_points: np.ndarray
    boundary: int
    assigned_procedure: str | None = None


def path_length(points: np.ndarray) -> float:
    """Total polyline length (sum of consecutive segment lengths)."""
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    return float(np.linalg.norm(np.diff(points, axis=0), axis=1).sum())


def dtw_distance(a: Sequence | np.ndarray, b: Sequence | np.ndarray) -> float:
    """Dynamic-time-warping distance with Euclidean local cost.

    Accepts 1-D sequences or (n, d) point arrays. O(mn) time and memory;
    no warping band is applied.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float).T).T
    b = np.atleast_2d(np.asarray(b, dtype=float).T).T
    if a.shape[0] == 0 or b.shape[0] == 0:
        raise ValueError("dtw_distance requires nonempty sequences")
    if a.shape[1] != b.shape[1]:
        raise ValueError("point dimensions differ")
    # local cost c[i, j] = ||a_i - b_j||_2
    diff = a[:, None, :] - b[None, :, :]
    cost = np.sqrt((diff ** 2).sum(axis=2))
    m, n = cost.shape
    acc = np.empty_like(cost)
    acc[0, 0] = cost[0, 0]
    acc[0, 1:] = cost[0, 1:].cumsum() + acc[0, 0]
    acc[1:, 0] = cost[1:, 0].cumsum() + acc[0, 0]
    for i in range(1, m):
        row = acc[i]
        prev = acc[i - 1]
        for j in range(1, n):
            row[j] = cost[i, j] + min(prev[j], prev[j - 1], row[j - 1])
    return float(acc[m - 1, n - 1])


def assign_procedure(points: np.ndarray,
                     procedures: Sequence["ProceduralTrajectory"]) -> int:
    """Index of the procedure with the smallest horizontal DTW distance.

    Ties break toward the lowest index.
    """
    if len(procedures) == 0:
        raise ValueError("need at least one candidate procedure")
    xy = np.asarray(points, dtype=float)[:, :2]
    distances = [dtw_distance(xy, proc.points[:, :2]) for proc in procedures]
    return int(np.argmin(distances))


def point_to_polyline_distance(points: np.ndarray, polyline: np.ndarray) -> np.ndarray:
    """Distance from each point to a polyline (both 2-D), vectorized."""
    points = np.asarray(points, dtype=float)[:, :2]
    poly = np.asarray(polyline, dtype=float)[:, :2]
    starts, ends = poly[:-1], poly[1:]
    seg = ends - starts                                   # (S, 2)
    seg_len_sq = (seg ** 2).sum(axis=1)                   # (S,)
    rel = points[:, None, :] - starts[None, :, :]         # (P, S, 2)
    t = (rel * seg[None, :, :]).sum(axis=2)
    with np.errstate(invalid="ignore", divide="ignore"):
        t = np.where(seg_len_sq > 0, t / seg_len_sq, 0.0)
    t = np.clip(t, 0.0, 1.0)
    nearest = starts[None, :, :] + t[:, :, None] * seg[None, :, :]
    dist = np.linalg.norm(points[:, None, :] - nearest, axis=2)
    return dist.min(axis=1)


def segment_trajectory(points: np.ndarray, iap: "ProceduralTrajectory",
                       threshold: float) -> int:
    """Boundary index splitting radar-vector from final-approach points.

    The boundary is the first index from which the horizontal distance to the
    IAP polyline stays below ``threshold`` (meters) for the rest of the
    flight. Raises SegmentationError when the flight never joins the IAP.
    """
    dist = point_to_polyline_distance(np.asarray(points, dtype=float), iap.points)
    below = dist < threshold
    # first index where every later sample is also below the threshold
    suffix_ok = np.logical_and.accumulate(below[::-1])[::-1]
    if not suffix_ok[-1]:
        raise SegmentationError(
            f"trajectory never joins the final approach (last distance "
            f"{dist[-1]:.0f} m >= {threshold:.0f} m)"
        )
    return int(np.argmax(suffix_ok))


def split_arrival(times: np.ndarray, points: np.ndarray, boundary: int,
                  assigned_procedure: str | None = None) -> SegmentedArrival:
    """Package the two segments around a boundary index."""
    return SegmentedArrival(
        radar_vector_times=times[:boundary],
        radar_vector_points=points[:boundary],
        final_approach_times=times[boundary:],
        final_approach_points=points[boundary:],
        boundary=boundary,
        assigned_procedure=assigned_procedure,
    )


def pchip_resample(times: np.ndarray, values: np.ndarray, count: int,
                   ) -> tuple[np.ndarray, np.ndarray]:
    """Resample a timed sequence to ``count`` equally spaced times.

    Each coordinate is interpolated independently as a monotone piecewise
    cubic Hermite function of time, so resampled coordinates never overshoot
    the data on monotone intervals.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if count < 2:
        raise ValueError("count must be >= 2")
    if times.ndim != 1 or times.size < 2:
        raise ValueError("need at least 2 samples")
    if np.any(np.diff(times) <= 0):
        raise ValueError("times must be strictly increasing")
    interp = PchipInterpolator(times, values, axis=0, extrapolate=False)
    new_times = np.linspace(times[0], times[-1], count)
    return new_times, interp(new_times)


def build_deviation_vector(times: np.ndarray, points: np.ndarray,
                           proc: "ProceduralTrajectory") -> DeviationVector:
    """Deviation vector of a resampled trajectory against a procedural one."""
    points = np.asarray(points, dtype=float)
    if points.shape != proc.points.shape:
        raise ValueError(
            f"trajectory shape {points.shape} does not match procedural "
            f"trajectory shape {proc.points.shape}"
        )
    times = np.asarray(times, dtype=float)
    return DeviationVector(
        transit_time=float(times[-1] - times[0]),
        total_distance=path_length(points),
        deviations=points - proc.points,
    )


def reconstruct_trajectory(tau: DeviationVector | np.ndarray,
                           proc: "ProceduralTrajectory",
                           ) -> tuple[np.ndarray, np.ndarray]:
    """Rebuild a timed trajectory from a deviation vector and a procedure.

    Positions are the procedural points plus deviations. The transit time is
    rescaled to the procedure's length (t' = tau_1 / tau_2 * d') and
    timestamps are spread evenly over [0, t'].
    """
    if not isinstance(tau, DeviationVector):
        tau = DeviationVector.from_array(tau)
    if tau.deviations.shape[0] != proc.points.shape[0]:
        raise ValueError("deviation count does not match procedural length")
    if tau.total_distance <= 0:
        raise ValueError("total_distance must be positive")
    points = proc.points + tau.deviations
    transit = tau.transit_time / tau.total_distance * proc.total_distance
    times = np.linspace(0.0, transit, proc.points.shape[0])
    return times, points
