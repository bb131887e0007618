"""Run configuration: TOML parsing, lossless serialization and assembly
of the core simulation objects.

Target `distance` in the config is the slant range from the radar to the
front (nose) reference point of the vehicle, which is what the radar
actually measures; the scene-level anchor position is derived from it.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import asdict, dataclass, field
from typing import Any

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .dsp import CfarParams
from .mesh import VEHICLE_DIMENSIONS, load_mesh
from .scene import LaneLayout, RadarPose, Scene, TargetTrack, default_intersection
from .waveform import ArrayConfig, ChirpConfig, FrameConfig, LinkBudget, RcsOptions


class ConfigError(ValueError):
    pass


@dataclass
class TargetSpec:
    id: str
    vehicle_class: str
    lane: int                   # 1-based, as in the scenario tables
    distance: float             # slant range radar -> nose reference, m
    speed: float                # m/s toward the radar
    lane_offset_x: float = 0.0


@dataclass
class OutputOptions:
    write_cube: bool = False
    image_size: int = 451
    dynamic_range_db: float = 60.0


@dataclass
class ProcessingOptions:
    window: str = "hann"
    angle_fft_size: int = 64
    merge_db: float = 6.0


@dataclass
class RunConfig:
    seed: int
    chirp: ChirpConfig = field(default_factory=ChirpConfig)
    frame: FrameConfig = field(default_factory=FrameConfig)
    array: ArrayConfig = field(default_factory=ArrayConfig)
    link: LinkBudget = field(default_factory=LinkBudget)
    noise: bool = True
    cfar: CfarParams = field(default_factory=CfarParams)
    lanes: LaneLayout = field(default_factory=default_intersection)
    radar_height: float = 6.0
    downtilt_deg: float = 5.0
    targets: tuple[TargetSpec, ...] = ()
    rcs: RcsOptions = field(default_factory=RcsOptions)
    processing: ProcessingOptions = field(default_factory=ProcessingOptions)
    output: OutputOptions = field(default_factory=OutputOptions)

    # ------------------------------------------------------------------
    def radar_pose(self) -> RadarPose:
        return RadarPose(position=(0.0, 0.0, self.radar_height),
                         downtilt_deg=self.downtilt_deg)

    def effective_link(self) -> LinkBudget:
        if self.noise:
            return self.link
        return LinkBudget(self.link.tx_power, self.link.tx_gain,
                          self.link.rx_gain, math.inf)

    def scene(self) -> Scene:
        tracks = []
        for t in self.targets:
            if not 1 <= t.lane <= self.lanes.num_lanes:
                raise ConfigError(f"target {t.id}: lane {t.lane} out of range")
            dims = _vehicle_dims(t.vehicle_class)
            length, _, height = dims
            x = self.lanes.lane_center_x[t.lane - 1] + t.lane_offset_x
            dz = self.radar_height - height / 2.0
            under = t.distance ** 2 - x ** 2 - dz ** 2
            if under <= 0:
                raise ConfigError(
                    f"target {t.id}: distance {t.distance} m too short for lane {t.lane}")
            y_front = math.sqrt(under)
            tracks.append(TargetTrack(
                target_id=t.id, mesh_ref=t.vehicle_class, lane_index=t.lane - 1,
                initial_range_y=y_front + length / 2.0, speed=t.speed,
                lane_offset_x=t.lane_offset_x, height=height))
        return Scene(lanes=self.lanes, radar=self.radar_pose(), targets=tuple(tracks))

    def nose_truth(self, t: TargetSpec) -> dict:
        """Ground truth referenced to the nose point the radar ranges to."""
        dims = _vehicle_dims(t.vehicle_class)
        length, _, height = dims
        x = self.lanes.lane_center_x[t.lane - 1] + t.lane_offset_x
        dz = self.radar_height - height / 2.0
        y_front = math.sqrt(t.distance ** 2 - x ** 2 - dz ** 2)
        return {
            "id": t.id,
            "class": t.vehicle_class,
            "lane": t.lane,
            "range_m": t.distance,
            "radial_velocity": t.speed * y_front / t.distance,
            "azimuth_deg": math.degrees(math.atan2(x, y_front)),
            "x": x,
            "y": y_front,
            "center_y": y_front + length / 2.0,
            "speed": t.speed,
        }

    # ------------------------------------------------------------------
    def to_dict(self) -> dict[str, Any]:
        return {
            "seed": self.seed,
            "chirp": asdict(self.chirp),
            "frame": asdict(self.frame),
            "array": {k: v for k, v in asdict(self.array).items() if v is not None},
            "link": dict(asdict(self.link), noise=self.noise),
            "cfar": asdict(self.cfar),
            "scene": {
                "radar_height": self.radar_height,
                "downtilt_deg": self.downtilt_deg,
                "lanes": {
                    "intersection_width": self.lanes.intersection_width,
                    "lane_width": self.lanes.lane_width,
                    "centers": list(self.lanes.lane_center_x),
                },
                "targets": [
                    {"id": t.id, "class": t.vehicle_class, "lane": t.lane,
                     "distance": t.distance, "speed": t.speed,
                     "lane_offset_x": t.lane_offset_x}
                    for t in self.targets
                ],
            },
            "rcs": asdict(self.rcs),
            "processing": asdict(self.processing),
            "output": asdict(self.output),
        }

    def to_toml(self) -> str:
        return dumps_toml(self.to_dict())

    def sha256(self) -> str:
        return hashlib.sha256(self.to_toml().encode()).hexdigest()[:16]


def _vehicle_dims(ref: str) -> tuple[float, float, float]:
    if ref in VEHICLE_DIMENSIONS:
        return VEHICLE_DIMENSIONS[ref]
    mesh = load_mesh(ref)
    lo, hi = mesh.bounds()
    ext = hi - lo
    return float(ext[1]), float(ext[0]), float(ext[2])


def _take(table: dict, section: str, key: str, default, caster):
    if key not in table:
        return default
    try:
        return caster(table.pop(key))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{section}] {key}: {exc}") from exc


def _check_empty(table: dict, section: str):
    if table:
        raise ConfigError(f"[{section}]: unknown keys {sorted(table)}")


def from_dict(data: dict[str, Any]) -> RunConfig:
    data = dict(data)
    if "seed" not in data:
        raise ConfigError("seed is mandatory (reproducibility)")
    seed = int(data.pop("seed"))

    ch = dict(data.pop("chirp", {}))
    chirp = ChirpConfig(
        f0=_take(ch, "chirp", "f0", ChirpConfig.f0, float),
        slope=_take(ch, "chirp", "slope", ChirpConfig.slope, float),
        sample_rate=_take(ch, "chirp", "sample_rate", ChirpConfig.sample_rate, float),
        samples_per_chirp=_take(ch, "chirp", "samples_per_chirp",
                                ChirpConfig.samples_per_chirp, int),
        idle_time=_take(ch, "chirp", "idle_time", ChirpConfig.idle_time, float),
        phi0=_take(ch, "chirp", "phi0", ChirpConfig.phi0, float),
    )
    _check_empty(ch, "chirp")

    fr = dict(data.pop("frame", {}))
    frame = FrameConfig(
        chirps_per_frame=_take(fr, "frame", "chirps_per_frame",
                               FrameConfig.chirps_per_frame, int),
        frames=_take(fr, "frame", "frames", FrameConfig.frames, int),
    )
    _check_empty(fr, "frame")

    ar = dict(data.pop("array", {}))
    array = ArrayConfig(
        tx_count=_take(ar, "array", "tx_count", ArrayConfig.tx_count, int),
        rx_count=_take(ar, "array", "rx_count", ArrayConfig.rx_count, int),
        rx_spacing=_take(ar, "array", "rx_spacing", None, float),
    )
    _check_empty(ar, "array")

    li = dict(data.pop("link", {}))
    noise = bool(_take(li, "link", "noise", True, bool))
    link = LinkBudget(
        tx_power=_take(li, "link", "tx_power", LinkBudget.tx_power, float),
        tx_gain=_take(li, "link", "tx_gain", LinkBudget.tx_gain, float),
        rx_gain=_take(li, "link", "rx_gain", LinkBudget.rx_gain, float),
        snr_db=_take(li, "link", "snr_db", LinkBudget.snr_db, float),
    )
    _check_empty(li, "link")

    cf = dict(data.pop("cfar", {}))
    cfar = CfarParams(
        guard_range=_take(cf, "cfar", "guard_range", CfarParams.guard_range, int),
        guard_doppler=_take(cf, "cfar", "guard_doppler", CfarParams.guard_doppler, int),
        train_range=_take(cf, "cfar", "train_range", CfarParams.train_range, int),
        train_doppler=_take(cf, "cfar", "train_doppler", CfarParams.train_doppler, int),
        pfa=_take(cf, "cfar", "pfa", CfarParams.pfa, float),
    )
    _check_empty(cf, "cfar")

    sc = dict(data.pop("scene", {}))
    radar_height = _take(sc, "scene", "radar_height", 6.0, float)
    downtilt = _take(sc, "scene", "downtilt_deg", 5.0, float)
    la = dict(sc.pop("lanes", {}))
    lanes = LaneLayout(
        intersection_width=_take(la, "scene.lanes", "intersection_width", 22.5, float),
        lane_width=_take(la, "scene.lanes", "lane_width", 3.75, float),
        lane_center_x=tuple(_take(la, "scene.lanes", "centers", [2.0, 5.75, 9.5], list)),
    )
    _check_empty(la, "scene.lanes")
    targets = []
    for i, raw in enumerate(sc.pop("targets", [])):
        raw = dict(raw)
        try:
            targets.append(TargetSpec(
                id=str(raw.pop("id", f"target{i}")),
                vehicle_class=str(raw.pop("class")),
                lane=int(raw.pop("lane")),
                distance=float(raw.pop("distance")),
                speed=float(raw.pop("speed")),
                lane_offset_x=float(raw.pop("lane_offset_x", 0.0)),
            ))
        except KeyError as exc:
            raise ConfigError(f"[[scene.targets]] #{i}: missing field {exc}") from exc
        _check_empty(raw, f"scene.targets #{i}")
    _check_empty(sc, "scene")

    rc = dict(data.pop("rcs", {}))
    rcs = RcsOptions(
        ray_spacing=_take(rc, "rcs", "ray_spacing", RcsOptions.ray_spacing, float),
        max_bounce=_take(rc, "rcs", "max_bounce", RcsOptions.max_bounce, int),
        max_centers=_take(rc, "rcs", "max_centers", RcsOptions.max_centers, int),
        frequency_samples=_take(rc, "rcs", "frequency_samples",
                                RcsOptions.frequency_samples, int),
        retrace_threshold_deg=_take(rc, "rcs", "retrace_threshold_deg",
                                    RcsOptions.retrace_threshold_deg, float),
    )
    _check_empty(rc, "rcs")

    pr = dict(data.pop("processing", {}))
    processing = ProcessingOptions(
        window=_take(pr, "processing", "window", "hann", str),
        angle_fft_size=_take(pr, "processing", "angle_fft_size", 64, int),
        merge_db=_take(pr, "processing", "merge_db", 6.0, float),
    )
    _check_empty(pr, "processing")

    ou = dict(data.pop("output", {}))
    output = OutputOptions(
        write_cube=bool(_take(ou, "output", "write_cube", False, bool)),
        image_size=_take(ou, "output", "image_size", 451, int),
        dynamic_range_db=_take(ou, "output", "dynamic_range_db", 60.0, float),
    )
    _check_empty(ou, "output")
    _check_empty(data, "<root>")

    try:
        return RunConfig(seed=seed, chirp=chirp, frame=frame, array=array, link=link,
                         noise=noise, cfar=cfar, lanes=lanes, radar_height=radar_height,
                         downtilt_deg=downtilt, targets=tuple(targets), rcs=rcs,
                         processing=processing, output=output)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def loads(text: str) -> RunConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"TOML parse error: {exc}") from exc
    return from_dict(data)


def load(path) -> RunConfig:
    with open(path, "rb") as fh:
        raw = fh.read()
    return loads(raw.decode())


def default_run_config(seed: int = 1) -> RunConfig:
    return RunConfig(seed=seed)


# ---------------------------------------------------------------------------
# minimal TOML writer (dicts, lists of tables, scalars); enough for RunConfig

def _fmt_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return repr(float(v))
    if isinstance(v, str):
        escaped = v.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt_value(x) for x in v) + "]"
    raise ConfigError(f"cannot serialize {type(v).__name__} to TOML")


def dumps_toml(data: dict[str, Any]) -> str:
    lines: list[str] = []

    def emit(table: dict, prefix: str):
        scalars = {k: v for k, v in table.items()
                   if not isinstance(v, dict)
                   and not (isinstance(v, list) and v and isinstance(v[0], dict))}
        subtables = {k: v for k, v in table.items() if isinstance(v, dict)}
        arrays = {k: v for k, v in table.items()
                  if isinstance(v, list) and v and isinstance(v[0], dict)}
        if prefix and (scalars or not (subtables or arrays)):
            lines.append(f"[{prefix}]")
        for k, v in scalars.items():
            lines.append(f"{k} = {_fmt_value(v)}")
        if scalars:
            lines.append("")
        for k, v in subtables.items():
            emit(v, f"{prefix}.{k}" if prefix else k)
        for k, items in arrays.items():
            name = f"{prefix}.{k}" if prefix else k
            for item in items:
                lines.append(f"[[{name}]]")
                for kk, vv in item.items():
                    lines.append(f"{kk} = {_fmt_value(vv)}")
                lines.append("")

    emit(data, "")
    return "\n".join(lines).rstrip() + "\n"
