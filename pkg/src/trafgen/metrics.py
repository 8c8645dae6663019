"""Model selection and evaluation metrics.

Covers silhouette scoring for choosing mixture component counts, histogram
comparison with the Jensen-Shannon divergence (log base 2, so the value is
bounded by [0, 1]), and loss-of-separation counting under the standard
3 NM / 1,000 ft terminal separation minima.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.spatial.distance import cdist

from .errors import DataError
from .mixture import em_fit
from .units import MPS_TO_KT, NM_TO_M, FT_TO_M

# A trajectory is (times (n,), points (n, 3)); a scene is a list of them.
Trajectory = tuple[np.ndarray, np.ndarray]
Scene = Sequence[Trajectory]


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray   # (B+1,), strictly increasing
    counts: np.ndarray  # (B,), nonnegative integers
    mass: np.ndarray    # (B,), sums to 1

    @classmethod
    def from_samples(cls, samples: np.ndarray, edges: np.ndarray) -> "Histogram":
        samples = np.asarray(samples, dtype=float)
        edges = np.asarray(edges, dtype=float)
        if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
            raise ValueError("edges must be strictly increasing with >= 2 entries")
        counts, _ = np.histogram(samples, bins=edges)
        total = counts.sum()
        if total == 0:
            raise DataError("empty histogram: no samples fall inside the edges")
        return cls(edges=edges, counts=counts, mass=counts / total)


@dataclass(frozen=True)
class SeparationConfig:
    horizontal_min_nm: float = 3.0
    vertical_min_ft: float = 1000.0

    def __post_init__(self) -> None:
        if self.horizontal_min_nm <= 0 or self.vertical_min_ft <= 0:
            raise ValueError("separation minima must be positive")


def shared_fd_edges(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Freedman-Diaconis bin edges over the union of two sample sets."""
    union = np.concatenate([np.asarray(x, dtype=float).ravel(),
                            np.asarray(y, dtype=float).ravel()])
    if union.size == 0:
        raise DataError("cannot bin empty sample sets")
    lo, hi = union.min(), union.max()
    if lo == hi:
        return np.array([lo - 0.5, hi + 0.5])
    edges = np.histogram_bin_edges(union, bins="fd")
    if edges.size < 2 or np.any(np.diff(edges) <= 0):
        edges = np.array([lo, hi])
    return edges


def histogram_pair(x: np.ndarray, y: np.ndarray) -> tuple[Histogram, Histogram]:
    """Histograms of two sample sets over shared Freedman-Diaconis edges."""
    edges = shared_fd_edges(x, y)
    return Histogram.from_samples(x, edges), Histogram.from_samples(y, edges)


def js_divergence(p: Histogram, q: Histogram) -> float:
    """Jensen-Shannon divergence between two histograms on identical edges."""
    if p.edges.shape != q.edges.shape or not np.array_equal(p.edges, q.edges):
        raise ValueError("histograms have different edges")
    pm, qm = p.mass, q.mass
    mm = (pm + qm) / 2.0
    with np.errstate(divide="ignore", invalid="ignore"):
        kl_p = np.where(pm > 0, pm * np.log2(pm / mm), 0.0)
        kl_q = np.where(qm > 0, qm * np.log2(qm / mm), 0.0)
    return float((kl_p.sum() + kl_q.sum()) / 2.0)


# ---------------------------------------------------------------------------
# Silhouette

def silhouette_score(data: np.ndarray, labels: np.ndarray) -> float:
    """Mean silhouette coefficient (b - a) / max(a, b) over all points.

    a(i) is the mean Euclidean distance to the other points of i's cluster,
    b(i) the mean distance to the nearest other cluster. Singleton-cluster
    points score 0.
    """
    data = np.asarray(data, dtype=float)
    labels = np.asarray(labels)
    if data.ndim == 1:
        data = data[:, None]
    unique = np.unique(labels)
    if unique.size < 2:
        raise ValueError("silhouette needs at least 2 clusters")
    dist = cdist(data, data)
    m = data.shape[0]
    cluster_sizes = {c: int(np.sum(labels == c)) for c in unique}
    # mean distance from every point to every cluster
    mean_to_cluster = np.column_stack([
        dist[:, labels == c].sum(axis=1) / cluster_sizes[c] for c in unique])
    scores = np.zeros(m)
    for pos, c in enumerate(unique):
        member = labels == c
        size = cluster_sizes[c]
        if size == 1:
            continue  # singleton: score 0
        a = mean_to_cluster[member, pos] * size / (size - 1)  # exclude self
        others = np.delete(mean_to_cluster[member], pos, axis=1)
        b = others.min(axis=1)
        scores[member] = (b - a) / np.maximum(a, b)
    return float(scores.mean())


@dataclass
class SilhouetteSweep:
    n_components: int
    curve: list[tuple[int, float]]  # (K, silhouette score)


def silhouette_sweep(data: np.ndarray, component_grid: Sequence[int], *,
                     seed: int = 0, max_iter: int = 200,
                     tol: float = 1e-6) -> SilhouetteSweep:
    """Fit a mixture per grid value and score its hard labels.

    Returns the argmax K (ties toward the smaller K) with the full curve.
    """
    grid = list(component_grid)
    if not grid:
        raise ValueError("component grid is empty")
    if any(k < 2 for k in grid):
        raise ValueError("silhouette sweep needs K >= 2")
    curve = []
    for k in grid:
        fit = em_fit(data, k, seed=seed, max_iter=max_iter, tol=tol)
        curve.append((int(k), silhouette_score(data, fit.labels)))
    best = max(range(len(curve)), key=lambda i: (curve[i][1], -curve[i][0]))
    return SilhouetteSweep(n_components=curve[best][0], curve=curve)


# ---------------------------------------------------------------------------
# Trajectory variables

@dataclass
class VariableSamples:
    """Pooled per-variable samples extracted from scenes."""

    x_east: np.ndarray            # meters
    y_north: np.ndarray           # meters
    horizontal_speed: np.ndarray  # knots
    closest_distance: np.ndarray  # meters, empty for single-aircraft input

    def as_dict(self) -> dict[str, np.ndarray]:
        return {
            "x_east": self.x_east,
            "y_north": self.y_north,
            "horizontal_speed": self.horizontal_speed,
            "closest_distance": self.closest_distance,
        }


def _interp_position(times: np.ndarray, points: np.ndarray,
                     at: np.ndarray) -> np.ndarray:
    cols = [np.interp(at, times, points[:, i]) for i in range(points.shape[1])]
    return np.column_stack(cols)


def extract_variables(scenes: Sequence[Scene]) -> VariableSamples:
    """Pool position, speed, and closest-aircraft-distance samples.

    Horizontal speed comes from finite differences of consecutive samples.
    The closest-aircraft distance evaluates, at each sample of a trajectory,
    the horizontal distance to every other aircraft of the same scene whose
    track covers that time (positions linearly interpolated).
    """
    xs, ys, speeds, closest = [], [], [], []
    for scene in scenes:
        trajectories = [(np.asarray(t, dtype=float), np.asarray(p, dtype=float))
                        for t, p in scene]
        for i, (times, points) in enumerate(trajectories):
            xs.append(points[:, 0])
            ys.append(points[:, 1])
            dt = np.diff(times)
            step = np.linalg.norm(np.diff(points[:, :2], axis=0), axis=1)
            speeds.append(step / dt * MPS_TO_KT)
            others = [trajectories[j] for j in range(len(trajectories)) if j != i]
            if not others:
                continue
            min_dist = np.full(times.shape, np.inf)
            for other_times, other_points in others:
                active = (times >= other_times[0]) & (times <= other_times[-1])
                if not active.any():
                    continue
                pos = _interp_position(other_times, other_points[:, :2], times[active])
                d = np.linalg.norm(points[active, :2] - pos, axis=1)
                min_dist[active] = np.minimum(min_dist[active], d)
            finite = np.isfinite(min_dist)
            if finite.any():
                closest.append(min_dist[finite])
    return VariableSamples(
        x_east=np.concatenate(xs) if xs else np.empty(0),
        y_north=np.concatenate(ys) if ys else np.empty(0),
        horizontal_speed=np.concatenate(speeds) if speeds else np.empty(0),
        closest_distance=np.concatenate(closest) if closest else np.empty(0),
    )


# ---------------------------------------------------------------------------
# Loss of separation

@dataclass
class SeparationReport:
    count: int                    # violation events (or samples, per unit)
    scene_flags: list[bool]       # any violation per scene
    unit: str                     # "events" | "samples"


def loss_of_separation_count(scenes: Sequence[Scene],
                             sep: SeparationConfig = SeparationConfig(), *,
                             unit: str = "events") -> SeparationReport:
    """Count separation violations across scenes.

    A sample violates when a pair is simultaneously below BOTH the horizontal
    and the vertical minimum. With ``unit="events"`` (default) each maximal
    contiguous run of violating samples for a pair counts once; with
    ``unit="samples"`` every violating time sample counts.
    """
    if unit not in ("events", "samples"):
        raise ValueError(f"unknown counting unit {unit!r}")
    h_min = sep.horizontal_min_nm * NM_TO_M
    v_min = sep.vertical_min_ft * FT_TO_M
    total = 0
    flags = []
    for scene in scenes:
        trajectories = [(np.asarray(t, dtype=float), np.asarray(p, dtype=float))
                        for t, p in scene]
        scene_count = 0
        for i in range(len(trajectories)):
            for j in range(i + 1, len(trajectories)):
                ti, pi = trajectories[i]
                tj, pj = trajectories[j]
                lo, hi = max(ti[0], tj[0]), min(ti[-1], tj[-1])
                grid = np.union1d(ti, tj)
                grid = grid[(grid >= lo) & (grid <= hi)]
                if grid.size == 0:
                    continue
                pos_i = _interp_position(ti, pi, grid)
                pos_j = _interp_position(tj, pj, grid)
                horiz = np.linalg.norm(pos_i[:, :2] - pos_j[:, :2], axis=1)
                vert = np.abs(pos_i[:, 2] - pos_j[:, 2])
                violating = (horiz < h_min) & (vert < v_min)
                if unit == "samples":
                    scene_count += int(violating.sum())
                else:
                    starts = violating & ~np.concatenate(([False], violating[:-1]))
                    scene_count += int(starts.sum())
        total += scene_count
        flags.append(scene_count > 0)
    return SeparationReport(count=total, scene_flags=flags, unit=unit)
