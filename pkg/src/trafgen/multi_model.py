"""Pairwise trajectory models and correlated multi-aircraft scene generation.

A pairwise sample stacks two co-arriving aircraft's deviation vectors around
their inter-arrival time, [tau1, delta12, tau2]. Scene generation assembles a
joint Gaussian over [tau1, d12, tau2, d23, tau3, ...] by matching covariance
sub-blocks across the trained pairwise mixtures, then samples it once.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import DataError, NumericalError
from .mixture import MixtureModel, compress_model, em_fit, psd_factor
from .preprocess import DeviationVector, reconstruct_trajectory
from .procedures import ProceduralTrajectory

logger = logging.getLogger(__name__)

DEFAULT_PAIRING_WINDOW_S = 180.0


@dataclass(frozen=True)
class ArrivalRecord:
    """One arrival's deviation vector with its arrival time and procedure."""

    flight_id: str
    procedure: str
    arrival_time: float  # seconds, landing time in the source track's epoch
    tau: np.ndarray      # (3T+2,)


@dataclass(frozen=True)
class PairwiseSample:
    tau1: np.ndarray
    delta12: float  # seconds between the two arrivals (tau1 lands first)
    tau2: np.ndarray

    def __post_init__(self) -> None:
        if self.delta12 < 0:
            raise ValueError("delta12 must be nonnegative")
        if self.tau1.shape != self.tau2.shape:
            raise ValueError("paired deviation vectors differ in dimension")

    def to_array(self) -> np.ndarray:
        return np.concatenate([self.tau1, [self.delta12], self.tau2])


@dataclass
class SceneParams:
    """Mean and assembled covariance of a joint N-aircraft deviation vector."""

    mean: np.ndarray
    covariance: np.ndarray
    per_aircraft_dim: int
    procedure_sequence: list[str]
    provenance: dict[str, int]      # source component index per assembled block
    block_drift: list[float] = field(default_factory=list)  # PSD-repair drift

    @property
    def n_aircraft(self) -> int:
        return len(self.procedure_sequence)


@dataclass
class SceneTrajectory:
    times: np.ndarray
    points: np.ndarray
    procedure_used: str


@dataclass
class TrafficScene:
    trajectories: list[SceneTrajectory]
    inter_arrival_times: np.ndarray  # (N-1,), nonnegative


def _block(i: int, d: int) -> slice:
    """Slice of aircraft ``i``'s deviation block inside the set vector."""
    start = i * (d + 1)
    return slice(start, start + d)


def _delta_index(i: int, d: int) -> int:
    """Index of the inter-arrival time between aircraft ``i`` and ``i+1``."""
    return (i + 1) * (d + 1) - 1


# ---------------------------------------------------------------------------
# Pair extraction and training

def extract_pairs(records: Sequence[ArrivalRecord],
                  window: float = DEFAULT_PAIRING_WINDOW_S,
                  ) -> dict[tuple[str, str], list[PairwiseSample]]:
    """Successive-arrival pairs within the time window, grouped by procedures.

    Records are ordered by arrival time; each consecutive pair whose gap is
    at most ``window`` seconds becomes one sample keyed by (first aircraft's
    procedure, second aircraft's procedure).
    """
    ordered = sorted(records, key=lambda r: r.arrival_time)
    groups: dict[tuple[str, str], list[PairwiseSample]] = {}
    for first, second in zip(ordered, ordered[1:]):
        delta = second.arrival_time - first.arrival_time
        if delta > window:
            continue
        key = (first.procedure, second.procedure)
        groups.setdefault(key, []).append(PairwiseSample(
            tau1=np.asarray(first.tau, dtype=float), delta12=float(delta),
            tau2=np.asarray(second.tau, dtype=float)))
    return groups


def stack_pairs(samples: Sequence[PairwiseSample]) -> np.ndarray:
    return np.stack([s.to_array() for s in samples])


def train_pairwise(groups: Mapping[tuple[str, str], Sequence[PairwiseSample]],
                   n_components: int, rank: int, *,
                   min_samples: int | None = None,
                   seed: int = 0, max_iter: int = 200, tol: float = 1e-6,
                   ) -> dict[tuple[str, str], MixtureModel]:
    """Fit one compressed pairwise mixture per procedure combination.

    Groups with fewer than ``min_samples`` samples (default 5 per component)
    are skipped with a warning.
    """
    if min_samples is None:
        min_samples = 5 * n_components
    models: dict[tuple[str, str], MixtureModel] = {}
    for key in sorted(groups):
        samples = groups[key]
        if len(samples) < min_samples:
            logger.warning("skipping pairwise group %s: %d samples < %d",
                           key, len(samples), min_samples)
            continue
        data = stack_pairs(samples)
        fit = em_fit(data, n_components, seed=seed, max_iter=max_iter, tol=tol,
                     segment_kind="pairwise")
        models[key] = compress_model(fit.model, rank)
    return models


# ---------------------------------------------------------------------------
# Scene assembly

def _require_model(models: Mapping[tuple[str, str], MixtureModel],
                   key: tuple[str, str]) -> MixtureModel:
    if key not in models:
        raise DataError(f"no pairwise model for procedure combination {key}")
    return models[key]


def _pair_dim(models: Mapping[tuple[str, str], MixtureModel]) -> int:
    dims = {model.dimension for model in models.values()}
    if len(dims) != 1:
        raise ValueError(f"pairwise models disagree on dimension: {sorted(dims)}")
    dim = dims.pop()
    if (dim - 1) % 2 != 0:
        raise ValueError(f"pairwise dimension {dim} is not 2*(3T+2)+1")
    return (dim - 1) // 2


def assemble_scene_params(models: Mapping[tuple[str, str], MixtureModel],
                          procedure_sequence: Sequence[str],
                          rng: int | np.random.Generator | None = None,
                          ) -> SceneParams:
    """Assemble the joint mean and covariance for an N-aircraft scene.

    Step 1 samples a component from the first pair's model. Each further
    adjacent pair picks the component whose leading diagonal block is closest
    (Frobenius) to the block already placed for the shared aircraft; each
    non-adjacent pair picks the component whose two diagonal blocks are
    jointly closest and contributes only its cross block. Inter-arrival
    covariances that no pairwise model observes stay zero. The result is
    repaired to PSD by eigenvalue clipping.
    """
    rng = np.random.default_rng(rng)
    procs = list(procedure_sequence)
    n = len(procs)
    if n < 2:
        raise ValueError("a scene needs at least 2 aircraft")
    d = _pair_dim(models)
    a_blk, b_blk = slice(0, d), slice(d + 1, 2 * d + 1)

    dim = n * d + (n - 1)
    mean = np.zeros(dim)
    cov = np.zeros((dim, dim))
    diag_blocks: list[np.ndarray] = []
    provenance: dict[str, int] = {}

    # step 1: sample a component from the first pair's model
    model01 = _require_model(models, (procs[0], procs[1]))
    j0 = int(rng.choice(len(model01.components), p=model01.weights))
    comp = model01.components[j0]
    full = comp.covariance()
    mean[:2 * d + 1] = comp.mean
    cov[:2 * d + 1, :2 * d + 1] = full
    diag_blocks.append(full[a_blk, a_blk])
    diag_blocks.append(full[b_blk, b_blk])
    provenance["pair_0_1"] = j0

    # step 2 repeated: adjacent pairs (k, k+1), matching the shared block
    for k in range(1, n - 1):
        model_k = _require_model(models, (procs[k], procs[k + 1]))
        dists = [np.linalg.norm(c.covariance()[a_blk, a_blk] - diag_blocks[k])
                 for c in model_k.components]
        jk = int(np.argmin(dists))
        comp = model_k.components[jk]
        full = comp.covariance()
        q = _delta_index(k, d)
        blk_k, blk_k1 = _block(k, d), _block(k + 1, d)
        mean[q] = comp.mean[d]
        mean[blk_k1] = comp.mean[b_blk]
        cov[blk_k, q] = full[a_blk, d]
        cov[q, blk_k] = full[d, a_blk]
        cov[blk_k, blk_k1] = full[a_blk, b_blk]
        cov[blk_k1, blk_k] = full[b_blk, a_blk]
        cov[q, q] = full[d, d]
        cov[q, blk_k1] = full[d, b_blk]
        cov[blk_k1, q] = full[b_blk, d]
        cov[blk_k1, blk_k1] = full[b_blk, b_blk]
        diag_blocks.append(full[b_blk, b_blk])
        provenance[f"pair_{k}_{k + 1}"] = jk

    # step 3 repeated: non-adjacent cross blocks; own delta row is discarded
    for k in range(2, n):
        for i in range(0, k - 1):
            model_ik = _require_model(models, (procs[i], procs[k]))
            dists = [
                np.linalg.norm(c.covariance()[a_blk, a_blk] - diag_blocks[i])
                + np.linalg.norm(c.covariance()[b_blk, b_blk] - diag_blocks[k])
                for c in model_ik.components
            ]
            jik = int(np.argmin(dists))
            full = model_ik.components[jik].covariance()
            cov[_block(i, d), _block(k, d)] = full[a_blk, b_blk]
            cov[_block(k, d), _block(i, d)] = full[b_blk, a_blk]
            provenance[f"cross_{i}_{k}"] = jik

    cov = (cov + cov.T) / 2.0
    repaired, drift = _repair_psd(cov, [_block(i, d) for i in range(n)])
    for i, value in enumerate(drift):
        if value > 0.05:
            logger.warning(
                "PSD repair moved aircraft %d's diagonal block by %.1f%% "
                "(incompatible component selection)", i, 100 * value)
    return SceneParams(mean=mean, covariance=repaired, per_aircraft_dim=d,
                       procedure_sequence=procs, provenance=provenance,
                       block_drift=drift)


def _repair_psd(cov: np.ndarray, blocks: Sequence[slice],
                ) -> tuple[np.ndarray, list[float]]:
    """Clip negative eigenvalues to zero; report per-block Frobenius drift."""
    eigvals, eigvecs = np.linalg.eigh(cov)
    if eigvals[0] >= 0.0:
        return cov, [0.0] * len(blocks)
    repaired = (eigvecs * np.clip(eigvals, 0.0, None)) @ eigvecs.T
    repaired = (repaired + repaired.T) / 2.0
    drift = []
    for blk in blocks:
        before = cov[blk, blk]
        denom = np.linalg.norm(before)
        delta = np.linalg.norm(repaired[blk, blk] - before)
        drift.append(float(delta / denom) if denom > 0 else 0.0)
    return repaired, drift


# ---------------------------------------------------------------------------
# Scene generation

def generate_scene(params: SceneParams,
                   procedures: Sequence[ProceduralTrajectory],
                   rng: int | np.random.Generator | None = None, *,
                   max_retries: int = 10) -> TrafficScene:
    """Sample one joint deviation vector and reconstruct the N trajectories.

    The scene vector is redrawn (up to ``max_retries``) while any sampled
    inter-arrival time is negative or a deviation block has nonpositive
    transit time or distance. Trajectory timestamps are aligned so that
    successive reconstructed arrival (final) times differ exactly by the
    sampled inter-arrival times, with the first aircraft starting at 0.
    """
    rng = np.random.default_rng(rng)
    n, d = params.n_aircraft, params.per_aircraft_dim
    if len(procedures) != n:
        raise ValueError(f"need {n} procedural trajectories, got {len(procedures)}")
    factor = psd_factor(params.covariance)

    for _ in range(max_retries):
        vec = params.mean + factor @ rng.standard_normal(params.mean.size)
        deltas = np.array([vec[_delta_index(i, d)] for i in range(n - 1)])
        if np.any(deltas < 0):
            continue
        taus = []
        try:
            for i in range(n):
                taus.append(DeviationVector.from_array(vec[_block(i, d)]))
        except ValueError:
            continue  # nonpositive transit time or distance: redraw
        trajectories = []
        arrival = 0.0
        for i, (tau, proc) in enumerate(zip(taus, procedures)):
            times, points = reconstruct_trajectory(tau, proc)
            arrival = times[-1] if i == 0 else arrival + deltas[i - 1]
            trajectories.append(SceneTrajectory(
                times=times + (arrival - times[-1]), points=points,
                procedure_used=proc.procedure))
        return TrafficScene(trajectories=trajectories, inter_arrival_times=deltas)
    raise NumericalError(
        f"scene sampling failed {max_retries} times (negative inter-arrival "
        "times or degenerate deviation blocks)")
