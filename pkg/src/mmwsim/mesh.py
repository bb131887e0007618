"""Triangle meshes for scattering: primitives, vehicle composites and import.

Meshes are in meters.  Facet normals follow the triangle winding
(counter-clockwise seen from outside); for closed meshes outwardness is
checked via signed volume.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class MeshError(ValueError):
    pass


@dataclass
class TriangleMesh:
    vertices: np.ndarray            # (V, 3) float
    triangles: np.ndarray           # (T, 3) int
    reflectivity: np.ndarray = None  # (T,) complex, default -1 (conductor)

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float).reshape(-1, 3)
        self.triangles = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        if self.triangles.size and (self.triangles.min() < 0
                                    or self.triangles.max() >= len(self.vertices)):
            raise MeshError("triangle index out of range")
        if self.reflectivity is None:
            self.reflectivity = np.full(len(self.triangles), -1.0 + 0.0j)
        else:
            self.reflectivity = np.broadcast_to(
                np.asarray(self.reflectivity, dtype=complex), (len(self.triangles),)
            ).copy()

    @property
    def num_triangles(self) -> int:
        return len(self.triangles)

    def triangle_vertices(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        v = self.vertices
        t = self.triangles
        return v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]

    def normals(self) -> np.ndarray:
        a, b, c = self.triangle_vertices()
        n = np.cross(b - a, c - a)
        lens = np.linalg.norm(n, axis=1, keepdims=True)
        lens[lens == 0] = 1.0
        return n / lens

    def areas(self) -> np.ndarray:
        a, b, c = self.triangle_vertices()
        return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)

    def signed_volume(self) -> float:
        a, b, c = self.triangle_vertices()
        return float(np.sum(np.einsum("ij,ij->i", a, np.cross(b, c))) / 6.0)

    def is_watertight(self) -> bool:
        edges = {}
        for tri in self.triangles:
            for i in range(3):
                e = tuple(sorted((int(tri[i]), int(tri[(i + 1) % 3]))))
                edges[e] = edges.get(e, 0) + 1
        return bool(edges) and all(n == 2 for n in edges.values())

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def bounding_radius(self, center=None) -> float:
        if center is None:
            center = self.vertices.mean(axis=0)
        return float(np.max(np.linalg.norm(self.vertices - center, axis=1)))

    def translated(self, offset) -> "TriangleMesh":
        return TriangleMesh(self.vertices + np.asarray(offset, dtype=float),
                            self.triangles.copy(), self.reflectivity.copy())

    @staticmethod
    def concatenate(meshes: list["TriangleMesh"]) -> "TriangleMesh":
        verts, tris, refl = [], [], []
        off = 0
        for m in meshes:
            verts.append(m.vertices)
            tris.append(m.triangles + off)
            refl.append(m.reflectivity)
            off += len(m.vertices)
        return TriangleMesh(np.vstack(verts), np.vstack(tris), np.concatenate(refl))


# ---------------------------------------------------------------------------
# primitives

def plate(a: float, b: float, center=(0, 0, 0), normal_axis: int = 1) -> TriangleMesh:
    """Flat rectangular plate, a x b, normal along +normal_axis."""
    # in-plane axes are the two others, in cyclic order
    u_ax, v_ax = [(1, 2), (2, 0), (0, 1)][normal_axis]
    verts = np.zeros((4, 3))
    for i, (su, sv) in enumerate([(-1, -1), (1, -1), (1, 1), (-1, 1)]):
        verts[i, u_ax] = su * a / 2
        verts[i, v_ax] = sv * b / 2
    verts += np.asarray(center, dtype=float)
    tris = np.array([[0, 1, 2], [0, 2, 3]])
    return TriangleMesh(verts, tris)


def box(lx: float, ly: float, lz: float, center=(0, 0, 0),
        open_faces: tuple[str, ...] = ()) -> TriangleMesh:
    """Axis-aligned box with outward normals.  Faces named in open_faces
    ("-x", "+x", "-y", "+y", "-z", "+z") are left out."""
    hx, hy, hz = lx / 2, ly / 2, lz / 2
    cx, cy, cz = center
    v = np.array([[sx, sy, sz] for sz in (-1, 1) for sy in (-1, 1) for sx in (-1, 1)],
                 dtype=float) * [hx, hy, hz] + [cx, cy, cz]
    # faces as quads with outward winding, split into triangles
    quads = {
        "-z": (0, 2, 3, 1),
        "+z": (4, 5, 7, 6),
        "-y": (0, 1, 5, 4),
        "+y": (2, 6, 7, 3),
        "-x": (0, 4, 6, 2),
        "+x": (1, 3, 7, 5),
    }
    unknown = set(open_faces) - set(quads)
    if unknown:
        raise MeshError(f"unknown box faces {sorted(unknown)}")
    tris = []
    for name, q in quads.items():
        if name in open_faces:
            continue
        tris.append([q[0], q[1], q[2]])
        tris.append([q[0], q[2], q[3]])
    return TriangleMesh(v, np.array(tris))


def dihedral(a: float, b: float, opening_deg: float = 90.0) -> TriangleMesh:
    """Two a x b plates joined along a common vertical fold (the Z axis),
    opening symmetric about +Y.  A ray arriving along -Y (radar on the +Y
    side) sees the concave interior and double-bounces back."""
    half = math.radians(opening_deg) / 2
    # plates extend from the fold outward in the XY plane
    d1 = np.array([math.sin(half), math.cos(half), 0.0])   # plate 1 direction
    d2 = np.array([-math.sin(half), math.cos(half), 0.0])  # plate 2 direction
    z = np.array([0.0, 0.0, 1.0])
    verts = []
    tris = []
    # winding per plate chosen so normals face the wedge interior
    for d, flip in ((d1, True), (d2, False)):
        i0 = len(verts)
        verts += [(-z * b / 2), (d * a - z * b / 2), (d * a + z * b / 2), (z * b / 2)]
        if flip:
            tris += [[i0, i0 + 2, i0 + 1], [i0, i0 + 3, i0 + 2]]
        else:
            tris += [[i0, i0 + 1, i0 + 2], [i0, i0 + 2, i0 + 3]]
    return TriangleMesh(np.array(verts), np.array(tris))


def icosphere(radius: float, subdivisions: int = 4, center=(0, 0, 0)) -> TriangleMesh:
    """Subdivided icosahedron approximating a sphere."""
    phi = (1 + math.sqrt(5)) / 2
    verts = np.array([
        [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
        [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
        [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
    ], dtype=float)
    verts /= np.linalg.norm(verts[0])
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    verts = [tuple(v) for v in verts]
    cache = {}

    def midpoint(i, j):
        key = (min(i, j), max(i, j))
        if key in cache:
            return cache[key]
        m = np.array(verts[i]) + np.array(verts[j])
        m /= np.linalg.norm(m)
        verts.append(tuple(m))
        cache[key] = len(verts) - 1
        return cache[key]

    for _ in range(subdivisions):
        new_faces = []
        for i, j, k in faces:
            a = midpoint(i, j)
            b = midpoint(j, k)
            c = midpoint(k, i)
            new_faces += [(i, a, c), (j, b, a), (k, c, b), (a, b, c)]
        faces = new_faces
    v = np.array(verts) * radius + np.asarray(center, dtype=float)
    return TriangleMesh(v, np.array(faces))


# ---------------------------------------------------------------------------
# vehicle composites

VEHICLE_CLASSES = ("car", "bus", "truck", "motorcycle")

# length x width x height per class; car per the 5 x 2 x 1.8 m reference
# vehicle, the rest are standard dimensions kept as artifact constants.
VEHICLE_DIMENSIONS = {
    "car": (5.0, 2.0, 1.8),
    "bus": (12.0, 2.5, 3.0),
    "truck": (8.0, 2.5, 3.2),
    "motorcycle": (2.2, 0.8, 1.4),
}

# Vertical half-opening of the nose patch normals, degrees.  The patch
# normals span elevations 0..2x this value, covering a 6 m pole radar
# watching 25-60 m (depression angles ~4-13 deg).
_NOSE_EL_HALF_DEG = 7.5


def _nose_patch(width: float, z_lo: float, z_hi: float, tip_y: float,
                facet: float = 0.035) -> TriangleMesh:
    """Doubly-curved front patch (torus section).

    Flat vehicle-sized panels at mm-wave are so directive (~lambda/width
    beamwidth) that the return collapses off the exact specular aspect.
    Real vehicle fronts are curved; a horizontal curvature radius ~ the
    vehicle width keeps a specular point for azimuths within +-30 deg, and
    a vertical radius sized to the nose band height covers the radar
    depression angles.  Peak RCS ~ pi * Rh * Rv.
    """
    phi_max = math.radians(30.0)
    psi_half = math.radians(_NOSE_EL_HALF_DEG)
    alpha = psi_half                      # center normal tilts up by psi_half
    r_h = width / (2.0 * math.sin(phi_max))
    band = z_hi - z_lo
    r_v = band / (2.0 * math.sin(psi_half))
    # torus: minor circle (vertical) of radius r_v swept about a vertical
    # axis; major radius set so the horizontal section radius is r_h at the
    # patch center (may go negative for a spindle torus - still convex)
    r_major = r_h * math.cos(alpha) - r_v * math.cos(alpha)
    z_mid = 0.5 * (z_lo + z_hi)

    n_phi = max(8, int(math.ceil(width * phi_max / facet)) | 1)
    n_psi = max(8, int(math.ceil(2 * r_v * psi_half / facet)) | 1)
    phis = np.linspace(-phi_max, phi_max, n_phi + 1)
    psis = np.linspace(-psi_half, psi_half, n_psi + 1)

    pp, ss = np.meshgrid(phis, psis, indexing="ij")
    rho = r_major + r_v * np.cos(alpha + ss)
    x = rho * np.sin(pp)
    y = -rho * np.cos(pp)
    z = r_v * np.sin(alpha + ss)
    # shift so the patch center sits at (0, tip_y, z_mid)
    y -= y[n_phi // 2, n_psi // 2] - tip_y
    z -= z[n_phi // 2, n_psi // 2] - z_mid
    verts = np.stack([x.ravel(), y.ravel(), z.ravel()], axis=1)

    tris = []
    cols = n_psi + 1
    for i in range(n_phi):
        for j in range(n_psi):
            a = i * cols + j
            b = (i + 1) * cols + j
            # winding: normals face -Y (toward the radar)
            tris.append([a, b, b + 1])
            tris.append([a, b + 1, a + 1])
    return TriangleMesh(verts, np.array(tris))


def _vehicle_body(length: float, width: float, height: float,
                  cabin: tuple[float, float, float] | None) -> TriangleMesh:
    """Box body with a curved nose patch and an optional cabin on top.
    The nose faces -Y (vehicles drive toward the radar in -Y) with normals
    fanning up toward a pole-mounted radar.

    The flat front faces of the boxes are left open: a vertical mm-wave
    panel that size has a ~70 dBsm specular flash whose elevation sidelobes
    (~width^2 / (pi sin^2(depression))) would swamp and speckle the curved
    nose return at every aspect.  The curved patches stand in for the
    (rounded, raked) front surfaces of a real vehicle."""
    parts = [box(width, length, height, center=(0, 0, height / 2),
                 open_faces=("-y",))]
    # nose band over the middle of the front face, slightly proud of the
    # box so incoming rays hit it first
    z_lo, z_hi = 0.2 * height, 0.75 * height
    parts.append(_nose_patch(width, z_lo, z_hi, tip_y=-length / 2 - 0.01))
    if cabin is not None:
        cl, cw, ch = cabin
        cab_y = length * 0.1
        parts.append(box(cw, cl, ch, center=(0, cab_y, height + ch / 2),
                         open_faces=("-y",)))
        # windshield: a second, smaller curved patch set back from the nose,
        # giving each class its own two-center range profile
        parts.append(_nose_patch(cw, height + 0.15 * ch, height + 0.85 * ch,
                                 tip_y=cab_y - cl / 2 - 0.01))
    return TriangleMesh.concatenate(parts)


def builtin_vehicle_mesh(vehicle_class: str) -> TriangleMesh:
    """Parameterized primitive composite for one of the four vehicle
    classes, anchored at the ground-projected centroid (z in [0, H])."""
    if vehicle_class not in VEHICLE_CLASSES:
        raise MeshError(f"unknown vehicle class {vehicle_class!r}")
    length, width, height = VEHICLE_DIMENSIONS[vehicle_class]
    if vehicle_class == "car":
        body_h = 1.0
        m = _vehicle_body(length, width, body_h, cabin=(2.5, 1.8, height - body_h))
    elif vehicle_class == "truck":
        body_h = 2.2
        m = _vehicle_body(length, width, body_h, cabin=(2.0, 2.4, height - body_h))
    elif vehicle_class == "bus":
        m = _vehicle_body(length, width, height, cabin=None)
    else:  # motorcycle
        body_h = 0.8
        m = _vehicle_body(length, width, body_h, cabin=(0.6, 0.5, height - body_h))
    return m


# ---------------------------------------------------------------------------
# import / export

def load_ascii_stl(path) -> TriangleMesh:
    """Minimal ASCII STL reader (vertices in meters)."""
    verts = []
    tris = []
    current = []
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "vertex":
                current.append([float(x) for x in parts[1:4]])
            elif parts[0] == "endfacet":
                if len(current) != 3:
                    raise MeshError(f"{path}: facet with {len(current)} vertices")
                i0 = len(verts)
                verts += current
                tris.append([i0, i0 + 1, i0 + 2])
                current = []
    if not tris:
        raise MeshError(f"{path}: no facets found")
    return TriangleMesh(np.array(verts), np.array(tris))


def load_vertex_face_text(path) -> TriangleMesh:
    """Plain-text mesh: lines `v x y z` and `f i j k` (0-based indices);
    `#` starts a comment."""
    verts = []
    tris = []
    with open(path) as fh:
        for ln, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if parts[0] == "v":
                verts.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                tris.append([int(x) for x in parts[1:4]])
            else:
                raise MeshError(f"{path}:{ln}: unknown record {parts[0]!r}")
    if not tris:
        raise MeshError(f"{path}: no faces found")
    return TriangleMesh(np.array(verts), np.array(tris))


def load_mesh(ref: str) -> TriangleMesh:
    """Resolve a mesh reference: builtin class name or a file path
    (.stl ASCII or .txt vertex/face list)."""
    if ref in VEHICLE_CLASSES:
        return builtin_vehicle_mesh(ref)
    p = Path(ref)
    if not p.exists():
        raise MeshError(f"mesh reference {ref!r}: not a builtin class and file not found")
    if p.suffix.lower() == ".stl":
        return load_ascii_stl(p)
    return load_vertex_face_text(p)
