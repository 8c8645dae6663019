"""Per-segment training and stitched single-trajectory generation."""

import numpy as np
import pytest

from trafgen.metrics import histogram_pair, js_divergence, silhouette_sweep
from trafgen.mixture import GaussianComponent, MixtureModel, model_to_dict, \
    sample_many
from trafgen.single_model import (SingleModelConfig, SingleTrajectoryModel,
                                  ProcedureSet, generate, train)

from conftest import make_proc_traj


T_V, T_F, N_OV = 10, 6, 2
DIM_V, DIM_F = 3 * T_V + 2, 3 * T_F + 2
CONFIG = SingleModelConfig(segment_length_rv=T_V, segment_length_fa=T_F,
                           n_overlap=N_OV)


def iap_procedure():
    u = np.linspace(0.0, 1.0, T_F)
    x = np.zeros(T_F)
    y = -8000.0 * u
    z = 450.0 * (1.0 - u)
    return make_proc_traj(np.column_stack([x, y, z]), name="IAP", duration=120.0)


def rv_procedure(name="RV0", length=20000.0, y0=15000.0):
    """Radar-vector path whose final points hand off onto the IAP head."""
    lead = T_V - N_OV
    u = np.linspace(0.0, 1.0, lead, endpoint=False)
    x = -length * (1.0 - u)
    y = y0 * (1.0 - u) ** 2
    z = 1200.0 * (1.0 - u) + 450.0 * u
    points = np.vstack([np.column_stack([x, y, z]),
                        iap_procedure().points[:N_OV]])
    return make_proc_traj(points, name=name, duration=300.0)


def smooth_factor(dim, scale, seed):
    """Low-rank factor with smooth columns over the deviation block."""
    rng = np.random.default_rng(seed)
    t_len = (dim - 2) // 3
    u = np.linspace(0.0, 1.0, t_len)
    shapes = [np.sin(np.pi * u), np.sin(2 * np.pi * u), u * (1.0 - u) * 4.0]
    factor = np.zeros((dim, 3))
    factor[0, 0] = 8.0    # transit-time spread
    factor[1, 1] = 60.0   # distance spread
    for col, shape in enumerate(shapes):
        block = np.outer(shape, rng.normal(scale=scale, size=3)).ravel()
        factor[2:, col] += block
    return factor


def gt_component(proc, dim, lateral, scale, weight, seed):
    t_len = (dim - 2) // 3
    u = np.linspace(0.0, 1.0, t_len)
    mean = np.zeros(dim)
    mean[0] = proc.times[-1]
    mean[1] = proc.total_distance
    mean[2::3] = lateral * np.sin(np.pi * u)  # tapered east offset
    return GaussianComponent(weight=weight, mean=mean,
                             cov_factor=smooth_factor(dim, scale, seed),
                             noise_var=4.0)


def ground_truth_model():
    rv = MixtureModel(components=[
        gt_component(rv_procedure(), DIM_V, +400.0, 30.0, 0.6, seed=1),
        gt_component(rv_procedure(), DIM_V, -400.0, 30.0, 0.4, seed=2),
    ], segment_kind="radar_vector")
    fa = MixtureModel(components=[
        gt_component(iap_procedure(), DIM_F, +120.0, 15.0, 0.5, seed=3),
        gt_component(iap_procedure(), DIM_F, -120.0, 15.0, 0.5, seed=4),
    ], segment_kind="final_approach")
    return SingleTrajectoryModel(radar_vector_model=rv, final_approach_model=fa,
                                 config=CONFIG)


def zero_cov_model():
    def degenerate(proc, dim):
        mean = np.zeros(dim)
        mean[0] = proc.times[-1]
        mean[1] = proc.total_distance
        return MixtureModel(components=[GaussianComponent(
            weight=1.0, mean=mean, cov_factor=np.zeros((dim, 0)))])
    return SingleTrajectoryModel(
        radar_vector_model=degenerate(rv_procedure(), DIM_V),
        final_approach_model=degenerate(iap_procedure(), DIM_F),
        config=CONFIG)


def make_procs():
    return ProcedureSet(radar_vectors=[rv_procedure()], frequencies=[1.0],
                          iap=iap_procedure())


# ---------------------------------------------------------------------------
# train

def test_train_recovers_single_component_mean():
    gt = ground_truth_model().radar_vector_model.components[0]
    gt_single = MixtureModel(components=[GaussianComponent(
        weight=1.0, mean=gt.mean, cov_factor=gt.cov_factor,
        noise_var=gt.noise_var)])
    data, _ = sample_many(gt_single, 4000, np.random.default_rng(0))
    fa_comp = ground_truth_model().final_approach_model.components[0]
    fa_single = MixtureModel(components=[GaussianComponent(
        weight=1.0, mean=fa_comp.mean, cov_factor=fa_comp.cov_factor,
        noise_var=fa_comp.noise_var)])
    fa_data, _ = sample_many(fa_single, 4000, np.random.default_rng(1))

    model, report = train(data, fa_data, CONFIG, n_components_rv=1,
                          n_components_fa=1, rank_rv=3, rank_fa=3, seed=0)
    recovered = model.radar_vector_model.components[0]
    sigma = np.sqrt(np.diag(gt.covariance()))
    assert np.all(np.abs(recovered.mean - gt.mean) <= 0.05 * sigma + 1e-9)
    assert report.silhouette_rv is None
    assert len(report.log_likelihoods_rv) >= 1


def test_silhouette_sweep_finds_generating_component_count():
    rng = np.random.default_rng(5)
    for k_true, offsets in ((2, [-2000.0, 2000.0]),
                            (6, [-5000.0, -3000.0, -1000.0,
                                 1000.0, 3000.0, 5000.0])):
        blobs = [rng.normal(scale=60.0, size=(120, DIM_F))
                 + np.eye(DIM_F)[2] * off for off in offsets]
        data = np.vstack(blobs) + np.array([300.0, 9000.0] + [0.0] * (DIM_F - 2))
        sweep = silhouette_sweep(data, [2, 3, 4, 5, 6, 7], seed=4)
        assert sweep.n_components == k_true


def test_train_is_bit_identical_for_fixed_seed():
    rng = np.random.default_rng(6)
    rv_data, _ = sample_many(ground_truth_model().radar_vector_model, 600, rng)
    fa_data, _ = sample_many(ground_truth_model().final_approach_model, 600,
                             np.random.default_rng(7))
    kwargs = dict(n_components_rv=2, n_components_fa=2, rank_rv=3, rank_fa=3,
                  seed=123)
    model1, _ = train(rv_data, fa_data, CONFIG, **kwargs)
    model2, _ = train(rv_data, fa_data, CONFIG, **kwargs)
    assert (model_to_dict(model1.radar_vector_model)
            == model_to_dict(model2.radar_vector_model))
    assert (model_to_dict(model1.final_approach_model)
            == model_to_dict(model2.final_approach_model))


def test_train_validates_dataset_width():
    with pytest.raises(ValueError):
        train(np.zeros((10, DIM_V + 1)), np.zeros((10, DIM_F)), CONFIG,
              n_components_rv=1, n_components_fa=1, rank_rv=2, rank_fa=2)


# ---------------------------------------------------------------------------
# generate

def test_degenerate_frequencies_pin_the_procedure():
    procs = ProcedureSet(
        radar_vectors=[rv_procedure("RV0"), rv_procedure("RV1", y0=-15000.0),
                       rv_procedure("RV2", y0=0.0)],
        frequencies=[1.0, 0.0, 0.0], iap=iap_procedure())
    model = zero_cov_model()
    rng = np.random.default_rng(8)
    for _ in range(10):
        assert generate(model, procs, rng).procedure_used == "RV0"


def test_zero_covariance_reproduces_procedural_paths():
    model = zero_cov_model()
    traj = generate(model, make_procs(), np.random.default_rng(9))
    rv_proc, iap = rv_procedure(), iap_procedure()
    assert np.allclose(traj.points[:T_V], rv_proc.points, atol=1e-9)
    assert np.allclose(traj.points[T_V:], iap.points, atol=1e-9)
    # mean transit times: tau_2 equals the procedural distance, so t' = tau_1
    assert traj.times[T_V - 1] == pytest.approx(rv_proc.times[-1], abs=1e-9)
    span_fa = traj.times[-1] - traj.times[T_V]
    assert span_fa == pytest.approx(iap.times[-1], abs=1e-9)


def test_generated_trajectory_shape_and_monotone_times():
    model = ground_truth_model()
    rng = np.random.default_rng(10)
    for _ in range(25):
        traj = generate(model, make_procs(), rng)
        assert traj.points.shape == (T_V + T_F, 3)
        assert np.all(np.diff(traj.times) > 0)
        assert traj.boundary == T_V


def test_conditioning_consistency_of_overlap():
    model = ground_truth_model()
    iap = iap_procedure()
    rng = np.random.default_rng(11)
    for _ in range(10):
        traj = generate(model, make_procs(), rng)
        rv_tail = traj.points[T_V - N_OV:T_V]
        fa_head = traj.points[T_V:T_V + N_OV]
        implied = fa_head - iap.points[:N_OV]
        conditioned_on = rv_tail - iap.points[:N_OV]
        assert np.allclose(implied, conditioned_on, atol=1e-9, rtol=0.0)


def test_generate_reproducible_for_fixed_seed():
    model = ground_truth_model()
    t1 = generate(model, make_procs(), np.random.default_rng(12))
    t2 = generate(model, make_procs(), np.random.default_rng(12))
    assert np.array_equal(t1.times, t2.times)
    assert np.array_equal(t1.points, t2.points)
    assert t1.source_components == t2.source_components


def test_transit_time_scales_linearly_with_procedure_length():
    model = zero_cov_model()
    short = make_procs()
    long_proc = rv_procedure("RVLONG", length=40000.0)
    # same sampled (tau_1, tau_2); doubled-length procedure
    long = ProcedureSet(radar_vectors=[long_proc], frequencies=[1.0],
                          iap=iap_procedure())
    t_short = generate(model, short, np.random.default_rng(13))
    t_long = generate(model, long, np.random.default_rng(13))
    rv_mean = model.radar_vector_model.components[0].mean
    ratio = long_proc.total_distance / rv_procedure().total_distance
    expected = rv_mean[0] / rv_mean[1] * long_proc.total_distance
    assert t_long.times[T_V - 1] == pytest.approx(expected, rel=1e-12)
    assert t_long.times[T_V - 1] == pytest.approx(
        t_short.times[T_V - 1] * ratio, rel=1e-12)


def test_end_to_end_distribution_matches_ground_truth():
    gt = ground_truth_model()
    procs = make_procs()
    # "actual" trajectories straight from the ground-truth generator
    rng = np.random.default_rng(14)
    actual = [generate(gt, procs, rng) for _ in range(1000)]
    # training datasets drawn from the ground-truth deviation mixtures
    rv_data, _ = sample_many(gt.radar_vector_model, 2000,
                             np.random.default_rng(15))
    fa_data, _ = sample_many(gt.final_approach_model, 2000,
                             np.random.default_rng(16))
    model, _ = train(rv_data, fa_data, CONFIG, n_components_rv=2,
                     n_components_fa=2, rank_rv=4, rank_fa=4, seed=1)
    rng = np.random.default_rng(17)
    synthetic = [generate(model, procs, rng) for _ in range(1000)]

    for axis in range(3):
        a = np.concatenate([t.points[:, axis] for t in actual])
        s = np.concatenate([t.points[:, axis] for t in synthetic])
        ha, hs = histogram_pair(a, s)
        assert js_divergence(ha, hs) <= 0.05


def test_model_dimension_validation():
    with pytest.raises(ValueError):
        SingleTrajectoryModel(
            radar_vector_model=zero_cov_model().final_approach_model,
            final_approach_model=zero_cov_model().final_approach_model,
            config=CONFIG)
