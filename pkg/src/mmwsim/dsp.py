"""Range/Doppler/CFAR/angle processing chain.

Range uses a forward FFT over fast time (the IF tone of a target sits at
+mu*tau).  Doppler uses the conjugate kernel (scaled inverse FFT) over
slow time so approaching targets land on the positive-velocity half of
the shifted axis; channel phases are untouched, so the angle FFT can run
directly on the Doppler-processed cube.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .constants import C
from .scene import RadarPose
from .waveform import ChirpConfig, DataCube


class DspError(ValueError):
    pass


def _window(name: str, n: int) -> np.ndarray:
    if name in (None, "rect", "none"):
        return np.ones(n)
    if name == "hann":
        return np.hanning(n)
    if name == "hamming":
        return np.hamming(n)
    raise DspError(f"unknown window {name!r}")


def _next_pow2(n: int) -> int:
    return 1 << (n - 1).bit_length()


@dataclass
class Rdm:
    """Range-Doppler map in dB with physical axes."""

    magnitude: np.ndarray        # (K_r, K_d) dB
    range_axis: np.ndarray       # m
    velocity_axis: np.ndarray    # m/s, positive = approaching
    velocity_span: tuple[float, float]
    chirp: ChirpConfig

    @property
    def linear_power(self) -> np.ndarray:
        return 10.0 ** (self.magnitude / 10.0)


@dataclass(frozen=True)
class CfarParams:
    guard_range: int = 2
    guard_doppler: int = 2
    train_range: int = 8
    train_doppler: int = 4
    pfa: float = 1e-4

    def __post_init__(self):
        if self.train_range <= 0 or self.train_doppler <= 0:
            raise DspError("training cells must be positive")
        if not 0.0 < self.pfa < 1.0:
            raise DspError("pfa must lie in (0, 1)")


@dataclass
class Detection:
    range_bin: int
    doppler_bin: int
    range: float
    radial_velocity: float
    azimuth: float
    snr_estimate: float
    cluster_id: int = -1

    def __post_init__(self):
        if abs(self.azimuth) > math.pi / 2 + 1e-9:
            raise DspError("azimuth outside +-90 deg")


@dataclass
class PointCloud:
    points: list[tuple[float, float, float, float, float]] = field(default_factory=list)
    # each point: (x, y, z, radial_velocity, intensity_db)

    def __len__(self):
        return len(self.points)

    def as_array(self) -> np.ndarray:
        return np.array(self.points).reshape(-1, 5)


def range_fft(cube: DataCube, window: str = "hann", pad: int = 2) -> np.ndarray:
    """Windowed fast-time FFT per channel and chirp, zero padded by `pad`
    beyond the next power of two so a point return spans a few range
    cells.  Returns (O, K_r, N)."""
    m = cube.chirp.samples_per_chirp
    if m < 2:
        raise DspError("need at least 2 fast-time samples")
    if pad < 1:
        raise DspError("pad must be >= 1")
    k_r = pad * _next_pow2(m)
    w = _window(window, m)
    return np.fft.fft(cube.samples * w[None, :, None], n=k_r, axis=1)


def doppler_fft(range_profiles: np.ndarray, window: str = "hann",
                pad: int = 2) -> np.ndarray:
    """Slow-time transform with the conjugate kernel, shifted so zero
    Doppler sits at bin K_d/2.  Zero padded by `pad` beyond the next power
    of two so point targets light up a few adjacent Doppler cells.
    Returns (O, K_r, K_d)."""
    n = range_profiles.shape[2]
    if n < 2:
        raise DspError("need at least 2 chirps")
    if pad < 1:
        raise DspError("pad must be >= 1")
    k_d = pad * _next_pow2(n)
    w = _window(window, n)
    spec = np.fft.ifft(range_profiles * w[None, None, :], n=k_d, axis=2) * k_d
    return np.fft.fftshift(spec, axes=2)


def range_axis(chirp: ChirpConfig, k_r: int) -> np.ndarray:
    f_if = np.arange(k_r) * chirp.sample_rate / k_r
    return C * f_if / (2.0 * chirp.slope)


def velocity_axis(chirp: ChirpConfig, k_d: int) -> np.ndarray:
    lam = chirp.wavelength
    tc = chirp.pulse_time
    return (np.arange(k_d) - k_d // 2) * lam / (2.0 * k_d * tc)


def bin_to_physical(range_bin: int, doppler_bin: int, chirp: ChirpConfig,
                    k_r: int, k_d: int) -> tuple[float, float]:
    """Bin centers to physical units: r = c f_IF / (2 mu) and
    v = lam dphi / (4 pi Tc) with dphi = 2 pi (bin - K_d/2) / K_d."""
    f_if = range_bin * chirp.sample_rate / k_r
    r = C * f_if / (2.0 * chirp.slope)
    dphi = 2.0 * math.pi * (doppler_bin - k_d // 2) / k_d
    v = chirp.wavelength * dphi / (4.0 * math.pi * chirp.pulse_time)
    return r, v


def form_rdm(doppler_cube: np.ndarray, chirp: ChirpConfig) -> Rdm:
    """Noncoherent channel sum of |.|^2 in dB with physical axes."""
    power = np.sum(np.abs(doppler_cube) ** 2, axis=0)
    k_r, k_d = power.shape
    with np.errstate(divide="ignore"):
        mag = 10.0 * np.log10(np.maximum(power, np.finfo(float).tiny))
    vmax = chirp.max_unambiguous_speed
    return Rdm(magnitude=mag, range_axis=range_axis(chirp, k_r),
               velocity_axis=velocity_axis(chirp, k_d),
               velocity_span=(-vmax, vmax), chirp=chirp)


def _box_sum(arr: np.ndarray, half_r: int, half_d: int) -> np.ndarray:
    """Sum over a (2*half_r+1) x (2*half_d+1) box, truncated at edges."""
    return ndimage.uniform_filter(
        arr, size=(2 * half_r + 1, 2 * half_d + 1), mode="constant", cval=0.0
    ) * ((2 * half_r + 1) * (2 * half_d + 1))


def cfar_2d(rdm: Rdm, params: CfarParams) -> list[tuple[int, int, float]]:
    """2-D cell-averaging CFAR on linear power.

    The training ring is the rectangle (guard+train) minus the guard
    rectangle; edge cells use the truncated ring with the threshold scale
    recomputed for the actual training count."""
    power = rdm.linear_power
    k_r, k_d = power.shape
    gr, gd = params.guard_range, params.guard_doppler
    tr, td = params.train_range, params.train_doppler
    if 2 * (gr + tr) + 1 > k_r or 2 * (gd + td) + 1 > k_d:
        raise DspError("CFAR window larger than the RDM")

    ones = np.ones_like(power)
    outer = _box_sum(power, gr + tr, gd + td)
    inner = _box_sum(power, gr, gd)
    outer_n = _box_sum(ones, gr + tr, gd + td)
    inner_n = _box_sum(ones, gr, gd)
    ring = outer - inner
    count = np.rint(outer_n - inner_n)
    if np.any(count < 1):
        raise DspError("degenerate CFAR window: no training cells")
    alpha = count * (params.pfa ** (-1.0 / count) - 1.0)
    noise = ring / count
    hits = power > alpha * noise
    out = []
    with np.errstate(divide="ignore"):
        snr = 10.0 * np.log10(np.maximum(power / np.maximum(noise, np.finfo(float).tiny),
                                         np.finfo(float).tiny))
    for rb, db in zip(*np.nonzero(hits)):
        out.append((int(rb), int(db), float(snr[rb, db])))
    return out


def angle_fft(doppler_cube: np.ndarray, range_bin: int, doppler_bin: int,
              k_a: int = 64) -> float:
    """Azimuth from a zero-padded FFT across the virtual channels at one
    RDM cell: theta = asin(lam dphi / (2 pi d)) which reduces to
    asin(2 dphi / 2 pi) at lam/2 spacing.  Uses parabolic interpolation
    around the spectral peak."""
    o = doppler_cube.shape[0]
    if o < 2:
        raise DspError("angle estimation needs at least 2 channels")
    snap = doppler_cube[:, range_bin, doppler_bin]
    spec = np.fft.fftshift(np.fft.fft(snap, n=k_a))
    mag = np.abs(spec)
    k = int(np.argmax(mag))
    # parabolic refinement on the magnitude (guarded at the edges)
    if 0 < k < k_a - 1:
        y0, y1, y2 = mag[k - 1], mag[k], mag[k + 1]
        denom = y0 - 2 * y1 + y2
        if denom != 0:
            k = k + float(np.clip(0.5 * (y0 - y2) / denom, -0.5, 0.5))
    dphi = 2.0 * math.pi * (k - k_a // 2) / k_a
    # for a uniform lambda/2 virtual array: sin(theta) = dphi / pi
    s = np.clip(dphi / math.pi, -1.0, 1.0)
    return float(math.asin(s))


def angle_fft_spaced(doppler_cube, range_bin, doppler_bin, lam, spacing, k_a=64):
    """angle_fft for an arbitrary element pitch."""
    theta_half = angle_fft(doppler_cube, range_bin, doppler_bin, k_a)
    s = math.sin(theta_half) * (lam / 2.0) / spacing
    return float(math.asin(np.clip(s, -1.0, 1.0)))


def cluster_detections(hits: list[tuple[int, int, float]], rdm: Rdm,
                       merge_db: float = 6.0) -> list[list[tuple[int, int, float]]]:
    """Merge 8-connected CFAR hits; each cluster keeps its peak cell and
    the members within merge_db of the peak."""
    if not hits:
        return []
    mask = np.zeros(rdm.magnitude.shape, dtype=bool)
    snr_map = {}
    for rb, db, snr in hits:
        mask[rb, db] = True
        snr_map[(rb, db)] = snr
    labels, n_lab = ndimage.label(mask, structure=np.ones((3, 3), dtype=int))
    clusters = []
    for lab in range(1, n_lab + 1):
        cells = list(zip(*np.nonzero(labels == lab)))
        peak_db = max(rdm.magnitude[rb, db] for rb, db in cells)
        members = [(int(rb), int(db), snr_map[(int(rb), int(db))])
                   for rb, db in cells
                   if rdm.magnitude[rb, db] >= peak_db - merge_db]
        clusters.append(members)
    return clusters


def to_point_cloud(detections: list[Detection], radar: RadarPose) -> PointCloud:
    """Project slant range + azimuth onto the ground plane using the known
    radar height; targets closer than the mount height are dropped."""
    h = radar.height
    pts = []
    for det in detections:
        if det.range <= h:
            continue  # physically under the radar
        g = math.sqrt(det.range ** 2 - h ** 2)
        x = g * math.sin(det.azimuth)
        y = g * math.cos(det.azimuth)
        pts.append((x, y, 0.0, det.radial_velocity, det.snr_estimate))
    return PointCloud(pts)


@dataclass
class ProcessingResult:
    rdm: Rdm
    detections: list[Detection]
    point_cloud: PointCloud
    clusters: list[list[Detection]]


def process_cube(cube: DataCube, radar: RadarPose, cfar: CfarParams,
                 window: str = "hann", k_a: int = 64,
                 merge_db: float = 6.0) -> ProcessingResult:
    """Full chain: range FFT, Doppler FFT, RDM, CFAR, clustering, angle
    estimation and ground projection."""
    rp = range_fft(cube, window)
    dc = doppler_fft(rp, window)
    rdm = form_rdm(dc, cube.chirp)
    hits = cfar_2d(rdm, cfar)
    raw_clusters = cluster_detections(hits, rdm, merge_db)
    k_r, k_d = rdm.magnitude.shape
    lam = cube.chirp.wavelength
    spacing = cube.array.spacing(lam)
    detections = []
    clusters = []
    for cid, members in enumerate(raw_clusters):
        group = []
        for rb, db, snr in members:
            r, v = bin_to_physical(rb, db, cube.chirp, k_r, k_d)
            if r <= 0:
                continue
            az = angle_fft_spaced(dc, rb, db, lam, spacing, k_a)
            det = Detection(range_bin=rb, doppler_bin=db, range=r,
                            radial_velocity=v, azimuth=az, snr_estimate=snr,
                            cluster_id=cid)
            group.append(det)
            detections.append(det)
        clusters.append(group)
    pc = to_point_cloud(detections, radar)
    return ProcessingResult(rdm=rdm, detections=detections, point_cloud=pc,
                            clusters=clusters)
