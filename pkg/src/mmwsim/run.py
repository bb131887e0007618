"""Run orchestration: single runs, parameter sweeps, labeled dataset
generation and RCS aspect tables.

All entry points are pure functions of (config, seed) and write their
artifacts under an output directory, so the service and the CLI share
them directly.
"""

from __future__ import annotations

import dataclasses
import io
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import artifacts, rcs as rcs_mod
from .config import ConfigError, RunConfig
from .dsp import doppler_fft, form_rdm, process_cube, range_fft
from .mesh import VEHICLE_CLASSES, load_mesh
from .scene import LookGeometry
from .waveform import dump_cube, synthesize_frame

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# single run

def _cluster_summary(result, radar) -> list[dict]:
    h = radar.height
    out = []
    for cid, group in enumerate(result.clusters):
        if not group:
            continue
        peak = max(group, key=lambda d: d.snr_estimate)
        # ground-projected, power-weighted centroid over the members beyond
        # the mount height (weighting keeps skirt cells from dragging it)
        xs, ys, ws = [], [], []
        for d in group:
            if d.range <= h:
                continue
            g = math.sqrt(d.range ** 2 - h ** 2)
            w = 10.0 ** (d.snr_estimate / 10.0)
            xs.append(w * g * math.sin(d.azimuth))
            ys.append(w * g * math.cos(d.azimuth))
            ws.append(w)
        if not ws:
            continue
        wsum = float(np.sum(ws))
        out.append({
            "cluster_id": cid,
            "size": len(group),
            "range_m": peak.range,
            "radial_velocity": peak.radial_velocity,
            "azimuth_deg": math.degrees(peak.azimuth),
            "snr_db": peak.snr_estimate,
            "centroid_x": float(np.sum(xs) / wsum),
            "centroid_y": float(np.sum(ys) / wsum),
        })
    return out


def _match_targets(truth_rows: list[dict], clusters: list[dict],
                   lanes) -> list[dict]:
    """Greedy nearest-range assignment of detection clusters to targets."""
    taken = set()
    matched = []
    for gt in truth_rows:
        best, best_err = None, math.inf
        for cl in clusters:
            if cl["cluster_id"] in taken:
                continue
            err = abs(cl["range_m"] - gt["range_m"])
            if err < best_err:
                best, best_err = cl, err
        row = dict(gt)
        if best is not None:
            taken.add(best["cluster_id"])
            row["detected"] = {
                "cluster_id": best["cluster_id"],
                "range_m": best["range_m"],
                "radial_velocity": best["radial_velocity"],
                "azimuth_deg": best["azimuth_deg"],
                "range_error_m": best["range_m"] - gt["range_m"],
                "velocity_error": best["radial_velocity"] - gt["radial_velocity"],
                "lane": lanes.nearest_lane(best["centroid_x"]) + 1,
                "cluster_size": best["size"],
            }
        else:
            row["detected"] = None
        matched.append(row)
    return matched


def run_single(config: RunConfig, out_dir, write_summary: bool = True) -> dict:
    """Synthesize one frame, process it, and write the full artifact set:
    rdm.csv, rdm.pgm/.png, points.csv, summary.json (and cube.bin when
    requested)."""
    out = Path(out_dir)
    scene = config.scene()
    cfg_hash = config.sha256()
    cube, truths = synthesize_frame(
        scene, config.chirp, config.frame, config.array, config.effective_link(),
        seed=config.seed, rcs_opts=config.rcs, return_truth=True)
    result = process_cube(cube, scene.radar, config.cfar,
                          window=config.processing.window,
                          k_a=config.processing.angle_fft_size,
                          merge_db=config.processing.merge_db)

    artifacts.write_rdm_csv(result.rdm, out / "rdm.csv", config.seed, cfg_hash)
    artifacts.export_rdm_image(result.rdm, out / "rdm", config.seed, cfg_hash,
                               size=config.output.image_size,
                               dynamic_range_db=config.output.dynamic_range_db)
    artifacts.write_point_cloud_csv(result.point_cloud, out / "points.csv",
                                    config.seed, cfg_hash)
    if config.output.write_cube:
        dump_cube(cube, out / "cube.bin")

    truth_rows = [config.nose_truth(t) for t in config.targets]
    for row, tr in zip(truth_rows, truths):
        row["rcs_dbsm"] = tr.rcs_dbsm
    clusters = _cluster_summary(result, scene.radar)
    summary = {
        "chirp": dataclasses.asdict(config.chirp),
        "bandwidth_hz": config.chirp.bandwidth,
        "range_resolution_m": config.chirp.range_resolution,
        "max_unambiguous_speed": config.chirp.max_unambiguous_speed,
        "targets": _match_targets(truth_rows, clusters, config.lanes),
        "clusters": clusters,
        "num_detections": len(result.detections),
        "num_points": len(result.point_cloud),
        "artifacts": sorted(p.name for p in out.iterdir()) if out.exists() else [],
    }
    if write_summary:
        artifacts.write_json(summary, out / "summary.json", config.seed, cfg_hash)
        summary["artifacts"] = sorted(p.name for p in out.iterdir())
    return summary


# ---------------------------------------------------------------------------
# parameter sweep

_SWEEPABLE = {
    "samples_per_chirp": ("chirp", int),
    "slope": ("chirp", float),
    "sample_rate": ("chirp", float),
    "idle_time": ("chirp", float),
    "chirps_per_frame": ("frame", int),
    "snr_db": ("link", float),
}


def _with_param(config: RunConfig, name: str, value) -> RunConfig:
    if name not in _SWEEPABLE:
        raise ConfigError(f"cannot sweep {name!r}; choose one of {sorted(_SWEEPABLE)}")
    section, caster = _SWEEPABLE[name]
    value = caster(value)
    if section == "chirp":
        return dataclasses.replace(config, chirp=dataclasses.replace(config.chirp, **{name: value}))
    if section == "frame":
        return dataclasses.replace(config, frame=dataclasses.replace(config.frame, **{name: value}))
    return dataclasses.replace(config, link=dataclasses.replace(config.link, **{name: value}))


def run_sweep(config: RunConfig, parameter: str, values, out_dir) -> dict:
    """Run the configured scenario once per parameter value and tabulate
    resolution, unambiguous speed, detection results and whether the
    measured velocity is consistent with the ground truth (a wrap past
    the unambiguous limit shows up as an 'abnormal' row)."""
    out = Path(out_dir)
    rows = []
    for value in values:
        cfg = _with_param(config, parameter, value)
        sub = out / f"{parameter}_{value}"
        summary = run_single(cfg, sub)
        row = {
            parameter: value,
            "samples_per_chirp": cfg.chirp.samples_per_chirp,
            "bandwidth_hz": cfg.chirp.bandwidth,
            "range_resolution_m": cfg.chirp.range_resolution,
            "pulse_time_s": cfg.chirp.pulse_time,
            "max_unambiguous_speed": cfg.chirp.max_unambiguous_speed,
            "num_points": summary["num_points"],
        }
        flag = "no_target"
        if summary["targets"]:
            gt = summary["targets"][0]
            det = gt["detected"]
            row["true_radial_velocity"] = gt["radial_velocity"]
            if det is None:
                flag = "missed"
            else:
                row["detected_range_m"] = det["range_m"]
                row["detected_velocity"] = det["radial_velocity"]
                flag = ("abnormal" if abs(det["velocity_error"]) > 2.0 else "normal")
        row["doppler_flag"] = flag
        rows.append(row)

    cfg_hash = config.sha256()
    cols = sorted({k for r in rows for k in r})
    import csv as _csv
    buf = io.StringIO()
    buf.write(f"# seed={config.seed} config={cfg_hash}\r\n")
    writer = _csv.DictWriter(buf, fieldnames=cols, lineterminator="\r\n")
    writer.writeheader()
    writer.writerows(rows)
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep.csv").write_text(buf.getvalue(), encoding="utf-8", newline="")
    table = {"parameter": parameter, "rows": rows}
    artifacts.write_json(table, out / "sweep.json", config.seed, cfg_hash)
    return table


# ---------------------------------------------------------------------------
# dataset generation

@dataclass
class DatasetSpec:
    classes: tuple[str, ...] = tuple(VEHICLE_CLASSES)
    runs_per_class: int = 20
    distance_range: tuple[float, float] = (25.0, 40.0)
    speed_range: tuple[float, float] = (0.5, 10.0)
    lanes: tuple[int, ...] = (1, 2, 3)
    image_size: int = 451
    workers: int = 1

    def __post_init__(self):
        if self.runs_per_class < 1:
            raise ConfigError("runs_per_class must be >= 1")
        unknown = [c for c in self.classes if c not in VEHICLE_CLASSES]
        if unknown:
            raise ConfigError(f"unknown vehicle classes {unknown}")
        if not (self.distance_range[0] < self.distance_range[1]
                and self.speed_range[0] < self.speed_range[1]):
            raise ConfigError("ranges must be (low, high) with low < high")


def _dataset_run(base: RunConfig, spec: DatasetSpec, cls: str, cls_idx: int,
                 run_idx: int, out_dir: Path) -> dict:
    key = (base.seed & 0xFFFFFFFFFFFFFFFF, (cls_idx << 32) | run_idx)
    rng = np.random.Generator(np.random.Philox(key=key))
    distance = float(rng.uniform(*spec.distance_range))
    speed = float(rng.uniform(*spec.speed_range))
    lane = int(rng.choice(spec.lanes))
    run_seed = int(rng.integers(0, 2 ** 31 - 1))
    from .config import TargetSpec
    cfg = dataclasses.replace(
        base, seed=run_seed,
        targets=(TargetSpec(id=f"{cls}_{run_idx:03d}", vehicle_class=cls,
                            lane=lane, distance=distance, speed=speed),))

    scene = cfg.scene()
    cube = synthesize_frame(scene, cfg.chirp, cfg.frame, cfg.array,
                            cfg.effective_link(), seed=cfg.seed, rcs_opts=cfg.rcs)
    rdm = form_rdm(doppler_fft(range_fft(cube, cfg.processing.window),
                               cfg.processing.window), cfg.chirp)
    rel = f"{cls}/{run_idx:03d}.png"
    img = artifacts.rdm_to_image_array(rdm, spec.image_size,
                                       cfg.output.dynamic_range_db)
    artifacts.write_png(img, out_dir / rel, run_seed, cfg.sha256())
    return {"file": rel, "class": cls, "seed": run_seed, "lane": lane,
            "distance_m": distance, "speed": speed,
            "radial_velocity": cfg.nose_truth(cfg.targets[0])["radial_velocity"]}


def generate_dataset(base: RunConfig, spec: DatasetSpec, out_dir) -> dict:
    """Labeled RDM image dataset: <out>/<class>/<run>.png plus a manifest.

    Every run draws its scenario parameters and its own seed from a
    counter-based stream keyed by (dataset seed, class, run), so the
    manifest is byte-identical regardless of worker count or ordering."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    jobs = [(cls, ci, ri)
            for ci, cls in enumerate(spec.classes)
            for ri in range(spec.runs_per_class)]

    def work(job):
        cls, ci, ri = job
        return _dataset_run(base, spec, cls, ci, ri, out)

    if spec.workers > 1:
        with ThreadPoolExecutor(max_workers=spec.workers) as pool:
            entries = list(pool.map(work, jobs))
    else:
        entries = [work(j) for j in jobs]

    manifest = {
        "classes": list(spec.classes),
        "runs_per_class": spec.runs_per_class,
        "image_size": spec.image_size,
        "entries": entries,
    }
    artifacts.write_json(manifest, out / "manifest.json", base.seed, base.sha256())
    return manifest


# ---------------------------------------------------------------------------
# RCS aspect table

@dataclass
class RcsSweepSpec:
    mesh_ref: str = "car"
    f0: float = 77.0e9
    bandwidth: float = 0.625e9
    frequency_samples: int = 128
    azimuth_start_deg: float = -30.0
    azimuth_stop_deg: float = 30.0
    azimuth_steps: int = 61
    elevation_deg: float = -5.0
    range_m: float = 100.0
    ray_spacing: float = 0.008
    max_bounce: int = 3
    max_centers: int = 64
    seed: int = 1

    def azimuths(self) -> np.ndarray:
        return np.linspace(self.azimuth_start_deg, self.azimuth_stop_deg,
                           self.azimuth_steps)


def rcs_table(spec: RcsSweepSpec, out_dir=None) -> dict:
    """Band-averaged RCS versus azimuth for a mesh, with the per-aspect
    scattering-center count.  Optionally writes rcs.csv."""
    mesh = load_mesh(spec.mesh_ref)
    freqs = rcs_mod.frequency_grid(spec.f0, spec.bandwidth, spec.frequency_samples)
    density = (spec.range_m / spec.ray_spacing) ** 2
    rows = []
    for az_deg in spec.azimuths():
        look = LookGeometry(range=spec.range_m, azimuth=math.radians(az_deg),
                            elevation=math.radians(spec.elevation_deg),
                            radial_velocity=0.0)
        resp = rcs_mod.compute_scatter_response(
            mesh, look, freqs, max_bounce=spec.max_bounce, ray_density=density,
            seed=spec.seed, max_centers=spec.max_centers)
        sigma = float(np.mean(np.abs(resp.sigma_f) ** 2))
        rows.append({
            "azimuth_deg": float(az_deg),
            "rcs_m2": sigma,
            "rcs_dbsm": 10 * math.log10(sigma) if sigma > 0 else float("-inf"),
            "num_centers": len(resp.scattering_centers),
        })
    table = {"mesh": spec.mesh_ref, "elevation_deg": spec.elevation_deg,
             "f0": spec.f0, "bandwidth_hz": spec.bandwidth, "rows": rows}
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        import csv as _csv
        buf = io.StringIO()
        buf.write(f"# seed={spec.seed} mesh={spec.mesh_ref}\r\n")
        writer = _csv.DictWriter(buf, fieldnames=["azimuth_deg", "rcs_m2",
                                                  "rcs_dbsm", "num_centers"],
                                 lineterminator="\r\n")
        writer.writeheader()
        writer.writerows(rows)
        (out / "rcs.csv").write_text(buf.getvalue(), encoding="utf-8", newline="")
        (out / "rcs.json").write_text(json.dumps(table, indent=2) + "\n",
                                      encoding="utf-8")
    return table
