"""Single-aircraft model: per-segment mixtures and stitched trajectory generation.

Generation samples a radar-vector deviation vector, reconstructs it against a
test procedure, then conditions the final-approach mixture on the deviations
implied by the tail of the radar-vector trajectory so the two segments join
smoothly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError
from .metrics import silhouette_score
from .mixture import MixtureModel, compress_model, condition, em_fit, sample
from .preprocess import DeviationVector, reconstruct_trajectory
from .procedures import ProceduralTrajectory


@dataclass(frozen=True)
class SingleModelConfig:
    segment_length_rv: int   # T_v, radar-vector samples
    segment_length_fa: int   # T_f, final-approach samples
    n_overlap: int = 10

    def __post_init__(self) -> None:
        if self.segment_length_rv < 2 or self.segment_length_fa < 2:
            raise ValueError("segment lengths must be >= 2")
        if not 1 <= self.n_overlap < self.segment_length_fa:
            raise ValueError("n_overlap must be in [1, T_f)")
        if self.n_overlap > self.segment_length_rv:
            raise ValueError("n_overlap cannot exceed T_v")


@dataclass
class SingleTrajectoryModel:
    radar_vector_model: MixtureModel
    final_approach_model: MixtureModel
    config: SingleModelConfig

    def __post_init__(self) -> None:
        expected_rv = 3 * self.config.segment_length_rv + 2
        expected_fa = 3 * self.config.segment_length_fa + 2
        if self.radar_vector_model.dimension != expected_rv:
            raise ValueError(
                f"radar-vector model dimension {self.radar_vector_model.dimension}"
                f" != 3*T_v+2 = {expected_rv}")
        if self.final_approach_model.dimension != expected_fa:
            raise ValueError(
                f"final-approach model dimension {self.final_approach_model.dimension}"
                f" != 3*T_f+2 = {expected_fa}")


@dataclass
class SyntheticTrajectory:
    times: np.ndarray    # (T_v + T_f,), strictly increasing
    points: np.ndarray   # (T_v + T_f, 3)
    procedure_used: str
    source_components: tuple[int, int]  # (radar-vector, final-approach)
    boundary: int        # first final-approach sample index

    def __post_init__(self) -> None:
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("timestamps must be strictly increasing")


@dataclass
class TrainingReport:
    log_likelihoods_rv: list[float]
    log_likelihoods_fa: list[float]
    silhouette_rv: float | None
    silhouette_fa: float | None


@dataclass
class ProcedureSet:
    """Procedural trajectories to generate against, with RV frequencies."""

    radar_vectors: list[ProceduralTrajectory]
    frequencies: list[float]
    iap: ProceduralTrajectory

    def __post_init__(self) -> None:
        if not self.radar_vectors:
            raise ValueError("need at least one radar-vector procedure")
        if len(self.frequencies) != len(self.radar_vectors):
            raise ValueError("one frequency per radar-vector procedure")
        total = float(sum(self.frequencies))
        if total <= 0:
            raise ValueError("frequencies must have positive total")
        self.frequencies = [f / total for f in self.frequencies]


def train(rv_data: np.ndarray, fa_data: np.ndarray, config: SingleModelConfig, *,
          n_components_rv: int, n_components_fa: int,
          rank_rv: int, rank_fa: int,
          seed: int = 0, max_iter: int = 200, tol: float = 1e-6,
          ) -> tuple[SingleTrajectoryModel, TrainingReport]:
    """Fit and compress one mixture per segment from deviation datasets."""
    rv_data = np.asarray(rv_data, dtype=float)
    fa_data = np.asarray(fa_data, dtype=float)
    if rv_data.shape[1] != 3 * config.segment_length_rv + 2:
        raise ValueError("radar-vector dataset width is not 3*T_v+2")
    if fa_data.shape[1] != 3 * config.segment_length_fa + 2:
        raise ValueError("final-approach dataset width is not 3*T_f+2")

    fit_rv = em_fit(rv_data, n_components_rv, seed=seed, max_iter=max_iter,
                    tol=tol, segment_kind="radar_vector")
    fit_fa = em_fit(fa_data, n_components_fa, seed=seed, max_iter=max_iter,
                    tol=tol, segment_kind="final_approach")
    model = SingleTrajectoryModel(
        radar_vector_model=compress_model(fit_rv.model, rank_rv),
        final_approach_model=compress_model(fit_fa.model, rank_fa),
        config=config,
    )
    report = TrainingReport(
        log_likelihoods_rv=fit_rv.log_likelihoods,
        log_likelihoods_fa=fit_fa.log_likelihoods,
        silhouette_rv=(silhouette_score(rv_data, fit_rv.labels)
                       if n_components_rv >= 2 else None),
        silhouette_fa=(silhouette_score(fa_data, fit_fa.labels)
                       if n_components_fa >= 2 else None),
    )
    return model, report


def generate(model: SingleTrajectoryModel, procedures: ProcedureSet,
             rng: int | np.random.Generator | None = None, *,
             max_retries: int = 10) -> SyntheticTrajectory:
    """Generate one synthetic trajectory against test procedures.

    Picks a radar-vector procedure proportionally to frequency, samples and
    reconstructs the radar-vector segment, conditions the final-approach
    mixture on the deviations of the segment's last ``n_overlap`` positions
    from the IAP head, and concatenates the reconstructed segments.
    """
    rng = np.random.default_rng(rng)
    cfg = model.config
    t_v, t_f, n_ov = cfg.segment_length_rv, cfg.segment_length_fa, cfg.n_overlap
    proc_idx = int(rng.choice(len(procedures.radar_vectors),
                              p=procedures.frequencies))
    rv_proc = procedures.radar_vectors[proc_idx]
    iap = procedures.iap
    if rv_proc.points.shape[0] != t_v:
        raise ValueError("radar-vector procedural trajectory length != T_v")
    if iap.points.shape[0] != t_f:
        raise ValueError("IAP procedural trajectory length != T_f")

    last_error: NumericalError | None = None
    for _ in range(max_retries):
        tau_rv, comp_rv = sample(model.radar_vector_model, rng)
        try:
            rv_dev = DeviationVector.from_array(tau_rv)
        except ValueError:
            continue  # nonpositive sampled time/distance: resample
        rv_times, rv_points = reconstruct_trajectory(rv_dev, rv_proc)

        # deviations of the trajectory tail from the IAP head (tau_a block)
        overlap_dev = rv_points[t_v - n_ov:] - iap.points[:n_ov]
        observed_idx = np.arange(2, 2 + 3 * n_ov)
        try:
            conditional = condition(model.final_approach_model, observed_idx,
                                    overlap_dev.ravel())
        except NumericalError as exc:
            last_error = exc
            continue
        tau_b, comp_fa = sample(conditional, rng)
        tau_fa = np.empty(3 * t_f + 2)
        tau_fa[observed_idx] = overlap_dev.ravel()
        mask = np.ones(tau_fa.size, dtype=bool)
        mask[observed_idx] = False
        tau_fa[mask] = tau_b
        try:
            fa_dev = DeviationVector.from_array(tau_fa)
        except ValueError:
            continue
        fa_times, fa_points = reconstruct_trajectory(fa_dev, iap)

        # The first final-approach position retraces the radar-vector end, so
        # the physical time gap at the join is zero; a vanishing offset keeps
        # timestamps strictly increasing without distorting segment durations.
        epsilon = max(1e-6 * fa_times[-1], 1e-9 * rv_times[-1], 1e-9)
        fa_times = fa_times + rv_times[-1] + epsilon
        return SyntheticTrajectory(
            times=np.concatenate([rv_times, fa_times]),
            points=np.vstack([rv_points, fa_points]),
            procedure_used=rv_proc.procedure,
            source_components=(int(comp_rv), int(comp_fa)),
            boundary=t_v,
        )
    raise NumericalError(
        f"generation failed after {max_retries} attempts: {last_error}")
