"""Command-line front end for the ingest/select/train/generate/evaluate pipeline.

All randomness flows from the single configured seed through named
substreams, so every command is reproducible byte-for-byte given the same
config and inputs. Exit codes: 0 success, 1 usage error, 2 data error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import metrics, multi_model, preprocess, procedures, single_model
from .errors import DataError, NumericalError, TrafgenError
from .ingest import AirspaceConfig, FlightClass, classify_flight, flight_to_enu, \
    parse_keyvalue_file, parse_tracks
from .mixture import (compress_model, em_fit, load_model,
                      model_from_dict, model_to_dict, save_model, select_rank)
from .units import NM_TO_M

logger = logging.getLogger(__name__)

DEVIATION_FORMAT = "trafgen-deviations/1"
PAIRWISE_FORMAT = "trafgen-pairwise/1"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3


class _Parser(argparse.ArgumentParser):
    """argparse defaults to exit code 2 on usage errors; we reserve 2 for data."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def substream(seed: int, name: str) -> np.random.Generator:
    """Deterministic named RNG substream derived from the config seed."""
    return np.random.default_rng(
        np.random.SeedSequence([seed, zlib.crc32(name.encode())]))


# ---------------------------------------------------------------------------
# Run configuration

@dataclass
class RunConfig:
    airspace: AirspaceConfig
    tracks: Path
    procedures: Path
    out_dir: Path
    segment_length_rv: int = 350
    segment_length_fa: int = 150
    n_overlap: int = 10
    component_grid: list[int] = field(default_factory=lambda: [2, 3, 4, 5, 6])
    rank_grid: list[int] = field(default_factory=lambda: [1, 2, 4, 8, 16])
    pairing_window_s: float = multi_model.DEFAULT_PAIRING_WINDOW_S
    segment_threshold_nm: float = 1.0
    proximity_nm: float = 0.5
    default_speed_kts: float = 140.0
    seed: int = 0
    threads: int = 1
    n_components_rv: int | None = None
    n_components_fa: int | None = None
    rank_rv: int | None = None
    rank_fa: int | None = None
    n_components_pairwise: int = 1
    rank_pairwise: int | None = None
    pairwise_segment: str = "radar_vector"

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        values = parse_keyvalue_file(path)
        base = Path(path).parent

        def take(key, cast, default=None):
            if key in values:
                return cast(values.pop(key))
            return default

        def take_grid(key, default):
            raw = values.pop(key, None)
            if raw is None:
                return default
            return [int(v) for v in raw.split(",") if v.strip()]

        airspace_keys = {
            "origin_lat", "origin_lon", "origin_alt_ft", "radius_nm",
            "landing_ceiling_ft", "landing_radius_nm",
        }
        airspace_kwargs = {k: float(values.pop(k))
                           for k in list(values) if k in airspace_keys}
        if "origin_lat" not in airspace_kwargs or "origin_lon" not in airspace_kwargs:
            raise DataError(f"{path}: origin_lat and origin_lon are required")

        cfg = cls(
            airspace=AirspaceConfig(**airspace_kwargs),
            tracks=base / take("tracks", str, "tracks.csv"),
            procedures=base / take("procedures", str, "procedures.yaml"),
            out_dir=base / take("out_dir", str, "out"),
            segment_length_rv=take("t_v", int, 350),
            segment_length_fa=take("t_f", int, 150),
            n_overlap=take("n_overlap", int, 10),
            component_grid=take_grid("k_grid", [2, 3, 4, 5, 6]),
            rank_grid=take_grid("rank_grid", [1, 2, 4, 8, 16]),
            pairing_window_s=take("pairing_window_s", float,
                                  multi_model.DEFAULT_PAIRING_WINDOW_S),
            segment_threshold_nm=take("segment_threshold_nm", float, 1.0),
            proximity_nm=take("proximity_nm", float, 0.5),
            default_speed_kts=take("default_speed_kts", float, 140.0),
            seed=take("seed", int, 0),
            threads=take("threads", int, 1),
            n_components_rv=take("k_rv", int),
            n_components_fa=take("k_fa", int),
            rank_rv=take("rank_rv", int),
            rank_fa=take("rank_fa", int),
            n_components_pairwise=take("k_pairwise", int, 1),
            rank_pairwise=take("rank_pairwise", int),
            pairwise_segment=take("pairwise_segment", str, "radar_vector"),
        )
        if values:
            raise DataError(f"{path}: unknown config keys: {sorted(values)}")
        if min(cfg.segment_length_rv, cfg.segment_length_fa, cfg.n_overlap) < 1:
            raise DataError(f"{path}: segment lengths and n_overlap must be positive")
        return cfg


# ---------------------------------------------------------------------------
# Shared file helpers

def _write_json(path: Path, doc: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n",
                    encoding="utf-8")


def _read_json(path: Path) -> dict:
    if not path.exists():
        raise DataError(f"missing file: {path}")
    return json.loads(path.read_text(encoding="utf-8"))


def write_deviation_dataset(path: Path, data: np.ndarray, segment_kind: str,
                            segment_length: int, rows: list[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, data, delimiter=",", fmt="%.17g")
    _write_json(path.with_suffix(".meta.json"), {
        "format": DEVIATION_FORMAT,
        "segment_kind": segment_kind,
        "T": segment_length,
        "rows": rows,
    })


def read_deviation_dataset(path: Path) -> tuple[np.ndarray, dict]:
    if not path.exists():
        raise DataError(f"missing dataset: {path}")
    meta = _read_json(path.with_suffix(".meta.json"))
    if meta.get("format") != DEVIATION_FORMAT:
        raise DataError(f"{path}: unsupported dataset format {meta.get('format')!r}")
    data = np.loadtxt(path, delimiter=",", ndmin=2)
    expected = 3 * int(meta["T"]) + 2
    if data.size and data.shape[1] != expected:
        raise DataError(f"{path}: expected {expected} columns, found {data.shape[1]}")
    return data, meta


def _load_procedural_trajectories(config: RunConfig, *, exemplars=(),
                                  ) -> tuple[list, list[float],
                                             "procedures.ProceduralTrajectory"]:
    """Build (radar-vector trajectories, frequencies, IAP trajectory)."""
    procs = procedures.load_procedures(config.procedures)
    rv_procs = [p for p in procs if p.kind is procedures.ProcedureKind.RADAR_VECTOR]
    iaps = [p for p in procs if p.kind is procedures.ProcedureKind.IAP]
    if not rv_procs:
        raise DataError(f"{config.procedures}: no radar-vector procedures")
    if len(iaps) != 1:
        raise DataError(f"{config.procedures}: expected exactly 1 IAP, "
                        f"found {len(iaps)}")
    rv_trajs = [
        procedures.build_procedural_trajectory(
            p, config.segment_length_rv, config.airspace,
            default_speed_kts=config.default_speed_kts)
        for p in rv_procs
    ]
    iap_traj = procedures.build_procedural_trajectory(
        iaps[0], config.segment_length_fa, config.airspace,
        exemplars=exemplars, proximity_nm=config.proximity_nm,
        default_speed_kts=config.default_speed_kts)
    return rv_trajs, [p.frequency for p in rv_procs], iap_traj


def _write_trajectory_csv(path: Path, rows: list[tuple]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["traj_id", "t", "x", "y", "z"])
        for traj_id, times, points in rows:
            for t, (x, y, z) in zip(times, points):
                writer.writerow([traj_id, repr(float(t)), repr(float(x)),
                                 repr(float(y)), repr(float(z))])


def _write_scene_csv(path: Path, scenes: list) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["scene_id", "aircraft_idx", "t", "x", "y", "z"])
        for scene_id, scene in enumerate(scenes):
            for idx, traj in enumerate(scene.trajectories):
                for t, (x, y, z) in zip(traj.times, traj.points):
                    writer.writerow([scene_id, idx, repr(float(t)),
                                     repr(float(x)), repr(float(y)),
                                     repr(float(z))])


def read_trajectory_file(path: Path) -> list[list[tuple[np.ndarray, np.ndarray]]]:
    """Read a trajectory or scene CSV as a list of scenes.

    Trajectory files yield one single-aircraft scene per trajectory; scene
    files group aircraft by scene id.
    """
    if not path.exists():
        raise DataError(f"missing file: {path}")
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        fields = reader.fieldnames or []
        grouped: dict[tuple, list[tuple[float, float, float, float]]] = {}
        if "scene_id" in fields:
            key_of = lambda row: (row["scene_id"], row["aircraft_idx"])
        elif "traj_id" in fields:
            key_of = lambda row: (row["traj_id"], "0")
        else:
            raise DataError(f"{path}: expected a traj_id or scene_id column")
        for row in reader:
            grouped.setdefault(key_of(row), []).append(
                (float(row["t"]), float(row["x"]), float(row["y"]),
                 float(row["z"])))
    scenes: dict[str, list] = {}
    for (scene_id, _aircraft), samples in grouped.items():
        arr = np.asarray(samples)
        scenes.setdefault(scene_id, []).append((arr[:, 0], arr[:, 1:4]))
    return list(scenes.values())


# ---------------------------------------------------------------------------
# Commands

def cmd_ingest(config: RunConfig) -> int:
    """Parse tracks, classify arrivals, segment, and write deviation datasets."""
    flights, parse_errors = parse_tracks(config.tracks, config.airspace)
    for err in parse_errors:
        logger.warning("parse: %s", err)

    arrivals = []
    exclusions: list[dict] = []
    for flight in flights:
        try:
            kind = classify_flight(flight, config.airspace)
        except TrafgenError as exc:
            exclusions.append({"flight": flight.id, "reason": str(exc)})
            continue
        if kind is not FlightClass.ARRIVAL:
            exclusions.append({"flight": flight.id,
                               "reason": f"classified as {kind.value}"})
            continue
        arrivals.append(flight)
    if not arrivals:
        raise DataError("no arrival flights after classification")

    rv_trajs, _, iap_traj = _load_procedural_trajectories(
        config, exemplars=arrivals)
    threshold_m = config.segment_threshold_nm * NM_TO_M

    def process(flight):
        times, xyz = flight_to_enu(flight, config.airspace)
        boundary = preprocess.segment_trajectory(xyz, iap_traj, threshold_m)
        arrival_time = flight.points[-1].time
        result = {"flight": flight.id, "arrival_time": arrival_time}
        # the boundary sample is shared: the radar-vector part runs up TO the
        # handoff point and the final approach starts AT it, so the trained
        # radar-vector tail lands where the final-approach heads were observed
        if boundary < 1:
            result["rv"] = None
            result["rv_reason"] = "radar-vector segment too short"
        else:
            rv_times, rv_points = preprocess.pchip_resample(
                times[:boundary + 1], xyz[:boundary + 1],
                config.segment_length_rv)
            proc_idx = preprocess.assign_procedure(rv_points, rv_trajs)
            tau_rv = preprocess.build_deviation_vector(
                rv_times, rv_points, rv_trajs[proc_idx])
            result["rv"] = tau_rv.to_array()
            result["procedure"] = rv_trajs[proc_idx].procedure
        if len(times) - boundary < 2:
            result["fa"] = None
            result["fa_reason"] = "final-approach segment too short"
        else:
            fa_times, fa_points = preprocess.pchip_resample(
                times[boundary:], xyz[boundary:], config.segment_length_fa)
            tau_fa = preprocess.build_deviation_vector(
                fa_times, fa_points, iap_traj)
            result["fa"] = tau_fa.to_array()
        return result

    results = []
    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            futures = [(flight, pool.submit(process, flight)) for flight in arrivals]
        outcomes = [(flight, future.result) for flight, future in futures]
    else:
        outcomes = [(flight, (lambda f=flight: process(f))) for flight in arrivals]
    for flight, get in outcomes:
        try:
            results.append(get())
        except (TrafgenError, ValueError) as exc:
            exclusions.append({"flight": flight.id, "reason": str(exc)})

    rv_rows, rv_meta, fa_rows, fa_meta = [], [], [], []
    for res in results:
        if res.get("rv") is not None:
            rv_rows.append(res["rv"])
            rv_meta.append({"flight_id": res["flight"],
                            "procedure": res["procedure"],
                            "arrival_time": res["arrival_time"]})
        else:
            exclusions.append({"flight": res["flight"],
                               "reason": res.get("rv_reason", "no radar-vector part")})
        if res.get("fa") is not None:
            fa_rows.append(res["fa"])
            fa_meta.append({"flight_id": res["flight"],
                            "procedure": iap_traj.procedure,
                            "arrival_time": res["arrival_time"]})
    if not rv_rows or not fa_rows:
        raise DataError("ingest produced an empty deviation dataset")

    out = config.out_dir
    write_deviation_dataset(out / "rv_dataset.csv", np.stack(rv_rows),
                            "radar_vector", config.segment_length_rv, rv_meta)
    write_deviation_dataset(out / "fa_dataset.csv", np.stack(fa_rows),
                            "final_approach", config.segment_length_fa, fa_meta)
    _write_json(out / "ingest_report.json", {
        "flights_parsed": len(flights),
        "parse_errors": parse_errors,
        "arrivals_retained": len(results),
        "rv_rows": len(rv_rows),
        "fa_rows": len(fa_rows),
        "exclusions": exclusions,
    })
    return EXIT_OK


def cmd_select(config: RunConfig) -> int:
    """Run the silhouette and rank sweeps; write the model-selection report."""
    report = {}
    for segment, filename in (("radar_vector", "rv_dataset.csv"),
                              ("final_approach", "fa_dataset.csv")):
        data, _ = read_deviation_dataset(config.out_dir / filename)
        seed = int(substream(config.seed, f"select-{segment}").integers(2 ** 31))
        sweep = metrics.silhouette_sweep(data, config.component_grid, seed=seed)
        ranks = select_rank(data, config.rank_grid, seed=seed)
        report[segment] = {
            "n_components": sweep.n_components,
            "silhouette_curve": [[k, s] for k, s in sweep.curve],
            "rank": ranks.rank,
            "rank_curve": [[k, ll] for k, ll in ranks.curve],
        }
    _write_json(config.out_dir / "selection_report.json", report)
    return EXIT_OK


def _chosen(config: RunConfig, segment: str) -> tuple[int, int]:
    """(n_components, rank) for a segment from config flags or the report."""
    explicit_k = (config.n_components_rv if segment == "radar_vector"
                  else config.n_components_fa)
    explicit_rank = (config.rank_rv if segment == "radar_vector"
                     else config.rank_fa)
    if explicit_k is not None and explicit_rank is not None:
        return explicit_k, explicit_rank
    report = _read_json(config.out_dir / "selection_report.json")
    entry = report[segment]
    return (explicit_k if explicit_k is not None else int(entry["n_components"]),
            explicit_rank if explicit_rank is not None else int(entry["rank"]))


def cmd_train(config: RunConfig) -> int:
    """Fit the per-segment mixtures and write model files plus training logs."""
    log = {}
    for segment, filename, model_name in (
            ("radar_vector", "rv_dataset.csv", "model_rv.json"),
            ("final_approach", "fa_dataset.csv", "model_fa.json")):
        data, _ = read_deviation_dataset(config.out_dir / filename)
        n_components, rank = _chosen(config, segment)
        seed = int(substream(config.seed, f"train-{segment}").integers(2 ** 31))
        fit = em_fit(data, n_components, seed=seed, segment_kind=segment)
        model = compress_model(fit.model, rank)
        save_model(model, config.out_dir / model_name)
        log[segment] = {
            "n_components": n_components,
            "rank": rank,
            "log_likelihoods": fit.log_likelihoods,
        }
    _write_json(config.out_dir / "train_log.json", log)
    return EXIT_OK


def cmd_train_pairwise(config: RunConfig) -> int:
    """Fit pairwise mixtures per procedure combination from a segment dataset."""
    filename = ("rv_dataset.csv" if config.pairwise_segment == "radar_vector"
                else "fa_dataset.csv")
    data, meta = read_deviation_dataset(config.out_dir / filename)
    records = [
        multi_model.ArrivalRecord(
            flight_id=row["flight_id"], procedure=row["procedure"],
            arrival_time=float(row["arrival_time"]), tau=data[i])
        for i, row in enumerate(meta["rows"])
    ]
    groups = multi_model.extract_pairs(records, config.pairing_window_s)
    if not groups:
        raise DataError("no arrival pairs inside the pairing window")
    rank = config.rank_pairwise
    if rank is None:
        pair_dim = 2 * (3 * int(meta["T"]) + 2) + 1
        rank = min(8, pair_dim - 1)
    seed = int(substream(config.seed, "train-pairwise").integers(2 ** 31))
    models = multi_model.train_pairwise(
        groups, config.n_components_pairwise, rank, seed=seed)
    if not models:
        raise DataError("every pairwise group was under the sample minimum")
    _write_json(config.out_dir / "model_pairwise.json", {
        "format": PAIRWISE_FORMAT,
        "segment": config.pairwise_segment,
        "models": {f"{a}|{b}": model_to_dict(m)
                   for (a, b), m in models.items()},
    })
    _write_json(config.out_dir / "train_pairwise_log.json", {
        "groups": {f"{a}|{b}": len(v) for (a, b), v in groups.items()},
        "trained": sorted(f"{a}|{b}" for a, b in models),
    })
    return EXIT_OK


def cmd_generate(config: RunConfig, count: int) -> int:
    """Generate single trajectories from the trained per-segment models."""
    rv_model = load_model(config.out_dir / "model_rv.json")
    fa_model = load_model(config.out_dir / "model_fa.json")
    model = single_model.SingleTrajectoryModel(
        radar_vector_model=rv_model, final_approach_model=fa_model,
        config=single_model.SingleModelConfig(
            segment_length_rv=config.segment_length_rv,
            segment_length_fa=config.segment_length_fa,
            n_overlap=config.n_overlap))
    rv_trajs, freqs, iap_traj = _load_procedural_trajectories(config)
    test_procs = single_model.ProcedureSet(
        radar_vectors=rv_trajs, frequencies=freqs, iap=iap_traj)
    rng = substream(config.seed, "generate")
    rows, meta = [], []
    for i in range(count):
        traj = single_model.generate(model, test_procs, rng)
        rows.append((i, traj.times, traj.points))
        meta.append({"traj_id": i, "procedure": traj.procedure_used,
                     "components": list(traj.source_components)})
    _write_trajectory_csv(config.out_dir / "trajectories.csv", rows)
    _write_json(config.out_dir / "trajectories.meta.json", {
        "count": count, "seed": config.seed, "trajectories": meta,
    })
    return EXIT_OK


def cmd_generate_scenes(config: RunConfig, count: int, n_aircraft: int) -> int:
    """Generate correlated multi-aircraft scenes from the pairwise models."""
    doc = _read_json(config.out_dir / "model_pairwise.json")
    if doc.get("format") != PAIRWISE_FORMAT:
        raise DataError(f"unsupported pairwise model format {doc.get('format')!r}")
    models = {tuple(key.split("|")): model_from_dict(m)
              for key, m in doc["models"].items()}
    rv_trajs, freqs, iap_traj = _load_procedural_trajectories(config)
    if doc.get("segment") == "radar_vector":
        proc_by_name = {t.procedure: t for t in rv_trajs}
        names = [t.procedure for t in rv_trajs]
        probs = np.asarray(freqs) / np.sum(freqs)
    else:
        proc_by_name = {iap_traj.procedure: iap_traj}
        names = [iap_traj.procedure]
        probs = np.array([1.0])

    rng = substream(config.seed, "generate-scenes")
    scenes, meta = [], []
    for i in range(count):
        sequence = [names[int(rng.choice(len(names), p=probs))]
                    for _ in range(n_aircraft)]
        params = multi_model.assemble_scene_params(models, sequence, rng)
        scene = multi_model.generate_scene(
            params, [proc_by_name[name] for name in sequence], rng)
        scenes.append(scene)
        meta.append({
            "scene_id": i, "procedures": sequence,
            "components": params.provenance,
            "inter_arrival_times": [float(v) for v in scene.inter_arrival_times],
        })
    _write_scene_csv(config.out_dir / "scenes.csv", scenes)
    _write_json(config.out_dir / "scenes.meta.json", {
        "count": count, "aircraft_per_scene": n_aircraft,
        "seed": config.seed, "scenes": meta,
    })
    return EXIT_OK


def cmd_evaluate(config: RunConfig, actual_path: Path, synthetic_path: Path) -> int:
    """Compare an actual and a synthetic set; write the metrics report."""
    actual = read_trajectory_file(actual_path)
    synthetic = read_trajectory_file(synthetic_path)
    if not actual or not synthetic:
        raise DataError("both actual and synthetic sets must be nonempty")
    vars_actual = metrics.extract_variables(actual)
    vars_synth = metrics.extract_variables(synthetic)

    variables = {}
    for name in ("x_east", "y_north", "horizontal_speed", "closest_distance"):
        a = vars_actual.as_dict()[name]
        s = vars_synth.as_dict()[name]
        if a.size == 0 or s.size == 0:
            variables[name] = None
            continue
        hist_a, hist_s = metrics.histogram_pair(a, s)
        variables[name] = {
            "edges": hist_a.edges.tolist(),
            "actual_mass": hist_a.mass.tolist(),
            "synthetic_mass": hist_s.mass.tolist(),
            "js_divergence": metrics.js_divergence(hist_a, hist_s),
        }
    sep = metrics.SeparationConfig()
    los_actual = metrics.loss_of_separation_count(actual, sep)
    los_synth = metrics.loss_of_separation_count(synthetic, sep)
    _write_json(config.out_dir / "metrics_report.json", {
        "variables": variables,
        "separation": {
            "horizontal_min_nm": sep.horizontal_min_nm,
            "vertical_min_ft": sep.vertical_min_ft,
            "actual_events": los_actual.count,
            "synthetic_events": los_synth.count,
            "actual_scenes_with_violation": int(np.sum(los_actual.scene_flags)),
            "synthetic_scenes_with_violation": int(np.sum(los_synth.scene_flags)),
        },
    })
    return EXIT_OK


def cmd_review_paths(config: RunConfig, k: int, keep: list[int] | None,
                     samples: int) -> int:
    """Extract nominal radar-vector paths and write the curated subset."""
    flights, parse_errors = parse_tracks(config.tracks, config.airspace)
    for err in parse_errors:
        logger.warning("parse: %s", err)
    arrivals = []
    for flight in flights:
        try:
            if classify_flight(flight, config.airspace) is FlightClass.ARRIVAL:
                arrivals.append(flight)
        except TrafgenError:
            continue
    if len(arrivals) < k:
        raise DataError(f"only {len(arrivals)} arrivals for k={k} nominal paths")
    rng = substream(config.seed, "review-paths")
    paths = procedures.extract_nominal_paths(
        arrivals, k, config.airspace, samples=samples, rng=rng)
    if keep is not None:
        missing = [i for i in keep if not 0 <= i < len(paths)]
        if missing:
            raise DataError(f"--keep indices out of range: {missing}")
        paths = [paths[i] for i in keep]
    procedures.save_procedures(paths, config.out_dir / "nominal_paths.yaml")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Entry point

def _build_parser() -> _Parser:
    parser = _Parser(prog="trafgen", description=__doc__)
    parser.add_argument("--config", required=True, help="run config file")
    parser.add_argument("--seed", type=int, help="override the config seed")
    parser.add_argument("--threads", type=int, help="worker thread bound")
    parser.add_argument("--out", help="override the output directory")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("ingest")
    sub.add_parser("select")
    sub.add_parser("train")
    sub.add_parser("train-pairwise")
    p_gen = sub.add_parser("generate")
    p_gen.add_argument("--count", type=int, required=True)
    p_scenes = sub.add_parser("generate-scenes")
    p_scenes.add_argument("--count", type=int, required=True)
    p_scenes.add_argument("--aircraft", type=int, default=3)
    p_eval = sub.add_parser("evaluate")
    p_eval.add_argument("--actual", required=True)
    p_eval.add_argument("--synthetic", required=True)
    p_review = sub.add_parser("review-paths")
    p_review.add_argument("--k", type=int, required=True)
    p_review.add_argument("--keep", help="comma-separated path indices to keep")
    p_review.add_argument("--samples", type=int, default=100)
    return parser


def run(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    try:
        config = RunConfig.from_file(args.config)
        if args.seed is not None:
            config.seed = args.seed
        if args.threads is not None:
            config.threads = args.threads
        if args.out is not None:
            config.out_dir = Path(args.out)
        config.out_dir.mkdir(parents=True, exist_ok=True)

        if args.command == "ingest":
            return cmd_ingest(config)
        if args.command == "select":
            return cmd_select(config)
        if args.command == "train":
            return cmd_train(config)
        if args.command == "train-pairwise":
            return cmd_train_pairwise(config)
        if args.command == "generate":
            return cmd_generate(config, args.count)
        if args.command == "generate-scenes":
            return cmd_generate_scenes(config, args.count, args.aircraft)
        if args.command == "evaluate":
            return cmd_evaluate(config, Path(args.actual), Path(args.synthetic))
        if args.command == "review-paths":
            keep = ([int(v) for v in args.keep.split(",")]
                    if args.keep is not None else None)
            return cmd_review_paths(config, args.k, keep, args.samples)
        print(f"error: unknown command {args.command!r}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (DataError, OSError, ValueError, KeyError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


def main() -> None:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    sys.exit(run())


if __name__ == "__main__":
    main()
