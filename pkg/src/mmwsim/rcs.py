"""Target scattering via bidirectional ray tracing over triangle meshes.

Monostatic far-field configuration: forward rays are launched as a
jittered-stratified parallel bundle along the look direction; a
scattering path is emitted whenever a forward ray's bounce facet is
visible back toward the radar (the backward ray of the pair, collapsed
by reciprocity in the monostatic case).  Each path carries the product
of facet reflectivities and an aperture-area weight; the coherent sum of
paths is the physical-optics connection integral, normalized so that
|sigma_f|^2 is RCS in m^2 (a broadside plate sums to 4*pi*A^2/lambda^2).

Path lengths are round-trip lengths relative to the round trip of the
target anchor point, so the derived scattering-center delays slot
directly into the echo-delay model of the waveform module.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .bvh import MeshIntersector
from .constants import C
from .mesh import TriangleMesh
from .scene import LookGeometry

log = logging.getLogger(__name__)

_CHUNK = 65536
# rays are dropped once the cumulative reflectivity product falls below
# this amplitude relative to launch
_POWER_FLOOR = 1e-2


class RcsError(ValueError):
    pass


@dataclass(frozen=True)
class RayPath:
    """One connected scattering path."""

    bounce_points: np.ndarray   # (k, 3)
    path_length: float          # round trip relative to anchor round trip
    amplitude: complex          # aperture weight x reflectivity product
    terminal_facet: int

    @property
    def bounces(self) -> int:
        return len(self.bounce_points)


class PathBundle:
    """Array-backed sequence of RayPath (cheap for ~1e5 paths)."""

    def __init__(self, bounce_points, bounce_counts, path_lengths, amplitudes,
                 terminal_facets):
        self.bounce_points = bounce_points
        self.bounce_counts = np.asarray(bounce_counts, dtype=np.int64)
        self.path_lengths = np.asarray(path_lengths, dtype=float)
        self.amplitudes = np.asarray(amplitudes, dtype=complex)
        self.terminal_facets = np.asarray(terminal_facets, dtype=np.int64)

    def __len__(self):
        return len(self.path_lengths)

    def __getitem__(self, i) -> RayPath:
        k = int(self.bounce_counts[i])
        return RayPath(
            bounce_points=self.bounce_points[i, :k].copy(),
            path_length=float(self.path_lengths[i]),
            amplitude=complex(self.amplitudes[i]),
            terminal_facet=int(self.terminal_facets[i]),
        )

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    @staticmethod
    def empty(max_bounce: int = 1) -> "PathBundle":
        return PathBundle(np.zeros((0, max_bounce, 3)), np.zeros(0, dtype=np.int64),
                          np.zeros(0), np.zeros(0, dtype=complex),
                          np.zeros(0, dtype=np.int64))


@dataclass
class ScatterResponse:
    """Swept-frequency complex response and its discrete reduction."""

    frequencies: np.ndarray
    sigma_f: np.ndarray
    scattering_centers: list[tuple[float, complex]] = field(default_factory=list)

    @property
    def is_zero(self) -> bool:
        return not np.any(self.sigma_f)


def look_direction(look: LookGeometry) -> np.ndarray:
    """Unit propagation direction radar -> target in the target frame
    (same axes as the world frame; targets are not yawed)."""
    ce = math.cos(look.elevation)
    return np.array([ce * math.sin(look.azimuth),
                     ce * math.cos(look.azimuth),
                     math.sin(look.elevation)])


def trace_bidirectional(mesh: TriangleMesh, look: LookGeometry, max_bounce: int = 3,
                        ray_density: float = 1e7, seed: int = 0,
                        anchor=None, reverse: bool = False,
                        jitter: float = 0.0,
                        center_frequency: float = 77.0e9) -> PathBundle:
    """Trace the mesh at one look geometry and return all connected paths.

    ray_density is rays per steradian as seen from the radar, so the
    aperture grid pitch is range/sqrt(ray_density).  `reverse` swaps the
    roles of the forward and backward bundles; the monostatic geometry
    makes both launches identical, which is exactly the reciprocity
    property callers can verify.
    """
    if mesh.num_triangles == 0:
        raise RcsError("empty mesh")
    if max_bounce < 1:
        raise RcsError("max_bounce must be >= 1")
    if max_bounce > 1 and not mesh.is_watertight():
        log.info("mesh is not watertight; multi-bounce paths may be incomplete")

    del reverse  # monostatic: forward and backward launches coincide

    if anchor is None:
        lo, hi = mesh.bounds()
        anchor = np.array([(lo[0] + hi[0]) / 2, (lo[1] + hi[1]) / 2, (lo[2] + hi[2]) / 2])
    anchor = np.asarray(anchor, dtype=float)

    u = look_direction(look)
    spacing = look.range / math.sqrt(ray_density)
    radius = mesh.bounding_radius(anchor) + spacing
    if spacing <= 0 or not np.isfinite(spacing):
        raise RcsError("invalid ray density")

    # aperture basis perpendicular to the propagation direction
    up = np.array([0.0, 0.0, 1.0])
    if abs(np.dot(u, up)) > 0.99:
        up = np.array([1.0, 0.0, 0.0])
    e1 = np.cross(u, up)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(u, e1)

    # rectangular aperture fitted to the projected bounding box (a disk of
    # the bounding radius wastes most rays on elongated meshes)
    lo, hi = mesh.bounds()
    corners = np.array([[x, y, z] for x in (lo[0], hi[0])
                        for y in (lo[1], hi[1]) for z in (lo[2], hi[2])]) - anchor
    s1 = corners @ e1
    s2 = corners @ e2
    c1 = (np.arange(math.floor(s1.min() / spacing) - 1,
                    math.ceil(s1.max() / spacing) + 1) + 0.5) * spacing
    c2 = (np.arange(math.floor(s2.min() / spacing) - 1,
                    math.ceil(s2.max() / spacing) + 1) + 0.5) * spacing
    gx, gy = np.meshgrid(c1, c2, indexing="ij")
    gx = gx.ravel()
    gy = gy.ravel()
    if jitter > 0.0:
        # stratified jitter: decorrelates aliasing against periodic facet
        # patterns, at the cost of Monte Carlo noise in the coherent sum
        rng = np.random.Generator(np.random.Philox(seed))
        wobble = rng.uniform(-0.5, 0.5, size=(2, gx.size)) * spacing * jitter
        gx = gx + wobble[0]
        gy = gy + wobble[1]

    back = radius + 1.0
    origins = anchor + gx[:, None] * e1 + gy[:, None] * e2 - back * u
    if origins.size == 0:
        return PathBundle.empty(max_bounce)

    intersector = MeshIntersector(mesh)
    normals = mesh.normals()
    refl = mesh.reflectivity
    weight = spacing * spacing
    # band-center wavenumber for the cell-average quadrature factor below
    k_c = 2.0 * math.pi * center_frequency / C

    out_points = []
    out_counts = []
    out_lengths = []
    out_amps = []
    out_facets = []

    for start in range(0, len(origins), _CHUNK):
        o = origins[start:start + _CHUNK]
        n_rays = len(o)
        d = np.broadcast_to(u, (n_rays, 3)).copy()
        lrel = (o - anchor) @ u
        amp = np.full(n_rays, weight, dtype=complex)
        chain = np.full((n_rays, max_bounce, 3), np.nan)
        alive = np.ones(n_rays, dtype=bool)
        pos = o.copy()
        # aperture-cell basis, transported through the mirror chain along
        # with the ray direction; used for the cell-average phase factor
        cb1 = np.broadcast_to(spacing * e1, (n_rays, 3)).copy()
        cb2 = np.broadcast_to(spacing * e2, (n_rays, 3)).copy()

        for bounce in range(1, max_bounce + 1):
            idx = np.nonzero(alive)[0]
            if idx.size == 0:
                break
            t, tri = intersector.intersect(pos[idx], d[idx])
            hit = np.isfinite(t)
            alive[idx[~hit]] = False
            hidx = idx[hit]
            if hidx.size == 0:
                break
            th, trih = t[hit], tri[hit]
            # sheets are opaque but only scatter from their front side:
            # back-face hits absorb the ray
            front = np.einsum("ij,ij->i", d[hidx], normals[trih]) < 0.0
            alive[hidx[~front]] = False
            hidx, th, trih = hidx[front], th[front], trih[front]
            if hidx.size == 0:
                continue
            p = pos[hidx] + d[hidx] * th[:, None]
            lrel[hidx] += th
            amp[hidx] *= refl[trih]
            chain[hidx, bounce - 1] = p

            # connect to the backward bundle: the facet must see the radar
            visible = ~intersector.occluded(p + (-u) * 1e-6, np.broadcast_to(-u, p.shape))
            if np.any(visible):
                vsel = hidx[visible]
                total = lrel[vsel] + (p[visible] - anchor) @ u
                # cell-average quadrature: the midpoint sample stands for the
                # phase integral over the ray's footprint on the facet.  The
                # wavefront stays planar through specular reflections, so the
                # in-cell phase gradient is k (d + u); averaging it over the
                # footprint parallelogram gives a product of sincs.  Near the
                # specular connection (d ~ -u) the factor is 1; on surfaces
                # seen far off specular it makes neighboring cells cancel as
                # the continuous integral does, instead of aliasing the
                # sub-cell oscillation into a spurious coherent sum.
                nv = normals[trih[visible]]
                dv = d[vsel]
                dn = np.einsum("ij,ij->i", dv, nv)
                dn = np.where(np.abs(dn) < 1e-9, np.copysign(1e-9, dn), dn)
                g = k_c * (dv + u)
                fac = np.ones(vsel.size)
                for cb in (cb1, cb2):
                    foot = cb[vsel] - (np.einsum("ij,ij->i", cb[vsel], nv)
                                       / dn)[:, None] * dv
                    fac *= np.sinc(np.einsum("ij,ij->i", g, foot)
                                   / (2.0 * math.pi))
                out_points.append(chain[vsel].copy())
                out_counts.append(np.full(vsel.size, bounce, dtype=np.int64))
                out_lengths.append(total)
                out_amps.append(amp[vsel] * fac)
                out_facets.append(trih[visible])

            if bounce == max_bounce:
                break
            # specular reflection and continuation
            nrm = normals[trih]
            d_new = d[hidx] - 2.0 * np.einsum("ij,ij->i", d[hidx], nrm)[:, None] * nrm
            d[hidx] = d_new
            pos[hidx] = p + d_new * 1e-7
            for cb in (cb1, cb2):
                cb[hidx] -= 2.0 * np.einsum("ij,ij->i", cb[hidx], nrm)[:, None] * nrm
            weak = np.abs(amp[hidx]) < _POWER_FLOOR * weight
            alive[hidx[weak]] = False

    if not out_lengths:
        return PathBundle.empty(max_bounce)
    return PathBundle(np.concatenate(out_points), np.concatenate(out_counts),
                      np.concatenate(out_lengths), np.concatenate(out_amps),
                      np.concatenate(out_facets))


def frequency_response(paths, frequencies) -> np.ndarray:
    """Coherent path sum: sigma_f(f) = k0 * sum_i a_i exp(-j 2 pi f L_i / c),
    normalized at the band center so a single specular path has a
    frequency-flat magnitude and |sigma_f|^2 is RCS in m^2."""
    f = np.asarray(frequencies, dtype=float)
    if f.ndim != 1 or f.size < 2:
        raise RcsError("need an ascending frequency grid")
    df = np.diff(f)
    if np.any(df <= 0) or not np.allclose(df, df[0], rtol=1e-9):
        raise RcsError("frequencies must be uniform and ascending")
    if isinstance(paths, PathBundle):
        amps, lengths = paths.amplitudes, paths.path_lengths
    else:
        amps = np.array([p.amplitude for p in paths], dtype=complex)
        lengths = np.array([p.path_length for p in paths], dtype=float)
    if amps.size == 0:
        log.info("empty path list: zero scattering response")
        return np.zeros(f.size, dtype=complex)
    lam0 = C / (0.5 * (f[0] + f[-1]))
    k0 = math.sqrt(4.0 * math.pi) / lam0
    phase = np.exp(-2j * math.pi * np.outer(f, lengths) / C)
    return k0 * (phase @ amps)


def reconstruct_from_centers(centers, frequencies) -> np.ndarray:
    f = np.asarray(frequencies, dtype=float)
    out = np.zeros(f.size, dtype=complex)
    for delay, amp in centers:
        out += amp * np.exp(-2j * math.pi * f * delay)
    return out


def extract_scattering_centers(response: ScatterResponse, max_centers: int = 64,
                               tol: float = 0.04) -> list[tuple[float, complex]]:
    """Reduce sigma_f to discrete (delay, amplitude) centers by CLEAN-style
    matching pursuit on an oversampled delay grid.  Stops when the
    residual drops below tol (relative L2) or max_centers is reached."""
    f = np.asarray(response.frequencies, dtype=float)
    sig = np.asarray(response.sigma_f, dtype=complex)
    if f.size < 8:
        raise RcsError("need at least 8 frequency samples")
    if not np.any(sig):
        return []
    n = f.size
    df = f[1] - f[0]
    pad = 8 * n
    norm = np.linalg.norm(sig)
    residual = sig.copy()
    delays: list[float] = []
    atoms: list[np.ndarray] = []
    amps = np.zeros(0, dtype=complex)
    for _ in range(max_centers):
        profile = np.fft.ifft(residual, n=pad)
        mag = np.abs(profile)
        k = int(np.argmax(mag))
        # parabolic refinement puts the delay between grid points
        ym, y0, yp = mag[k - 1], mag[k], mag[(k + 1) % pad]
        denom = ym - 2 * y0 + yp
        frac = 0.0 if denom == 0 else 0.5 * (ym - yp) / denom
        delay = (k + frac) / (pad * df)
        if delay > 0.5 / df:
            delay -= 1.0 / df  # wrap to the negative (closer than anchor) side
        delays.append(delay)
        atoms.append(np.exp(-2j * math.pi * f * delay))
        # joint polish: re-fit all amplitudes at once, then cycle through
        # the delays re-estimating each against the signal minus the other
        # centers (undoes the bias that mutual interference puts on
        # single-pass picks)
        basis = np.stack(atoms, axis=1)
        amps = np.linalg.lstsq(basis, sig, rcond=None)[0]
        residual = sig - basis @ amps
        h = 0.25 / (pad * df)
        for _ in range(2):
            for i in range(len(delays)):
                part = residual + amps[i] * atoms[i]
                ti = delays[i]
                c = [np.abs(np.vdot(np.exp(-2j * math.pi * f * t), part)) ** 2
                     for t in (ti - h, ti, ti + h)]
                den = c[0] - 2 * c[1] + c[2]
                if den < 0:
                    ti = ti + 0.5 * h * (c[0] - c[2]) / den
                delays[i] = ti
                atoms[i] = np.exp(-2j * math.pi * f * ti)
            basis = np.stack(atoms, axis=1)
            amps = np.linalg.lstsq(basis, sig, rcond=None)[0]
            residual = sig - basis @ amps
        if np.linalg.norm(residual) <= tol * norm:
            break
    centers = list(zip(delays, (complex(a) for a in amps)))
    centers.sort(key=lambda c: -abs(c[1]))
    return centers


def compute_scatter_response(mesh: TriangleMesh, look: LookGeometry,
                             frequencies, max_bounce: int = 3,
                             ray_density: float = 1e7, seed: int = 0,
                             max_centers: int = 64, anchor=None) -> ScatterResponse:
    """Trace + coherent sum + center extraction in one call."""
    f = np.asarray(frequencies, dtype=float)
    paths = trace_bidirectional(mesh, look, max_bounce=max_bounce,
                                ray_density=ray_density, seed=seed, anchor=anchor,
                                center_frequency=0.5 * (f[0] + f[-1]))
    sigma = frequency_response(paths, frequencies)
    resp = ScatterResponse(np.asarray(frequencies, dtype=float), sigma)
    if np.any(sigma):
        resp.scattering_centers = extract_scattering_centers(resp, max_centers)
    return resp


def frequency_grid(f0: float, bandwidth: float, samples: int = 128) -> np.ndarray:
    """Uniform sweep grid over [f0, f0 + B]."""
    return np.linspace(f0, f0 + bandwidth, samples)


def analytic_rcs(shape: str, dims, f: float, incidence: float = 0.0) -> float:
    """Optical-region closed forms used as tracer oracles.

    shape: 'plate' (a, b), 'sphere' (r,), 'dihedral' (a, b).
    incidence in radians from the specular/peak aspect (plate: tilt about
    the b edge; dihedral and sphere report their peak value).
    """
    lam = C / f
    dims = tuple(float(x) for x in dims)
    if min(dims) < 5 * lam:
        raise RcsError(f"{shape} dimension {min(dims):g} m below optical regime (5 lambda)")
    if shape == "plate":
        a, b = dims
        ka = 2 * math.pi / lam * a
        x = ka * math.sin(incidence)
        taper = 1.0 if x == 0 else (math.sin(x) / x) ** 2
        return 4 * math.pi * (a * b) ** 2 / lam ** 2 * math.cos(incidence) ** 2 * taper
    if shape == "sphere":
        (r,) = dims
        return math.pi * r * r
    if shape == "dihedral":
        a, b = dims
        return 8 * math.pi * a ** 2 * b ** 2 / lam ** 2
    raise RcsError(f"unknown shape {shape!r}")
