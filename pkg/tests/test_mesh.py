import math

import numpy as np
import pytest

from mmwsim import mesh as M


class TestPrimitives:
    def test_plate_area_and_normal(self):
        p = M.plate(0.3, 0.5, normal_axis=1)
        assert p.num_triangles == 2
        assert p.areas().sum() == pytest.approx(0.15)
        n = p.normals()
        assert np.allclose(n, [[0, 1, 0], [0, 1, 0]])

    def test_plate_axes(self):
        for axis in range(3):
            p = M.plate(0.2, 0.2, normal_axis=axis)
            n = p.normals()[0]
            assert n[axis] == pytest.approx(1.0)

    def test_box_closed_outward(self):
        b = M.box(2.0, 3.0, 4.0)
        assert b.is_watertight()
        # signed volume positive for outward winding
        assert b.signed_volume() == pytest.approx(24.0)
        assert b.areas().sum() == pytest.approx(2 * (6 + 8 + 12))

    def test_box_centered(self):
        b = M.box(1.0, 1.0, 1.0, center=(0, 0, 0.5))
        lo, hi = b.bounds()
        assert lo[2] == pytest.approx(0.0)
        assert hi[2] == pytest.approx(1.0)

    def test_dihedral_normals_face_wedge_interior(self):
        d = M.dihedral(0.2, 0.2)
        # interior opens toward +Y: every normal has a -Y... no, toward the
        # fold; each plate's normal must point at the other plate's side,
        # i.e. have positive dot with +Y minus its own direction
        normals = d.normals()
        verts_y = d.vertices[:, 1]
        assert verts_y.max() > 0  # plates extend into +Y
        # a ray arriving along -Y must see both plates front-on
        dirs = np.array([[0.0, -1.0, 0.0]])
        assert all(np.dot(n, dirs[0]) < 0 for n in normals)

    def test_icosphere_radius_and_area(self):
        s = M.icosphere(1.0, 3)
        r = np.linalg.norm(s.vertices, axis=1)
        assert np.allclose(r, 1.0)
        assert s.is_watertight()
        # faceted area slightly below 4 pi
        area = s.areas().sum()
        assert 0.97 * 4 * math.pi < area < 4 * math.pi

    def test_icosphere_volume_positive(self):
        s = M.icosphere(2.0, 2)
        vol = s.signed_volume()
        assert 0.9 * (4 / 3) * math.pi * 8 < vol < (4 / 3) * math.pi * 8


class TestTriangleMesh:
    def test_index_validation(self):
        with pytest.raises(M.MeshError):
            M.TriangleMesh(np.zeros((3, 3)), np.array([[0, 1, 3]]))

    def test_default_reflectivity_is_conductor(self):
        p = M.plate(1, 1)
        assert np.allclose(p.reflectivity, -1.0)

    def test_concatenate(self):
        a = M.plate(1, 1)
        b = M.plate(1, 1, center=(5, 0, 0))
        c = M.TriangleMesh.concatenate([a, b])
        assert c.num_triangles == 4
        assert len(c.vertices) == 8

    def test_translated(self):
        p = M.plate(1, 1).translated((1, 2, 3))
        assert np.allclose(p.vertices.mean(axis=0), [1, 2, 3])

    def test_bounding_radius(self):
        b = M.box(2, 2, 2)
        assert b.bounding_radius() == pytest.approx(math.sqrt(3))


class TestVehicles:
    @pytest.mark.parametrize("cls", M.VEHICLE_CLASSES)
    def test_builtin_dimensions(self, cls):
        m = M.builtin_vehicle_mesh(cls)
        length, width, height = M.VEHICLE_DIMENSIONS[cls]
        lo, hi = m.bounds()
        assert hi[2] - lo[2] == pytest.approx(height, abs=0.05)
        assert hi[0] - lo[0] == pytest.approx(width, abs=0.05)
        # the raked nose sticks out slightly past the body
        assert hi[1] - lo[1] == pytest.approx(length, abs=0.2)
        assert lo[2] == pytest.approx(0.0, abs=1e-9)  # rests on the ground

    def test_nose_faces_travel_direction(self):
        # the curved nose faces -Y and its facet normals fan upward so a
        # pole-mounted radar always finds a specular point
        m = M.builtin_vehicle_mesh("car")
        normals = m.normals()
        nose = normals[normals[:, 1] < -0.85]
        assert len(nose) > 20
        assert nose[:, 2].min() > -0.05
        assert nose[:, 2].max() > 0.2

    def test_unknown_class(self):
        with pytest.raises(M.MeshError):
            M.builtin_vehicle_mesh("boat")

    def test_size_ordering(self):
        # sanity: bus > truck > car > motorcycle in footprint
        areas = {c: M.builtin_vehicle_mesh(c).areas().sum() for c in M.VEHICLE_CLASSES}
        assert areas["bus"] > areas["truck"] > areas["car"] > areas["motorcycle"]


class TestLoaders:
    def test_ascii_stl_roundtrip(self, tmp_path):
        stl = tmp_path / "tri.stl"
        stl.write_text(
            "solid tri\n"
            " facet normal 0 0 1\n"
            "  outer loop\n"
            "   vertex 0 0 0\n   vertex 1 0 0\n   vertex 0 1 0\n"
            "  endloop\n"
            " endfacet\n"
            "endsolid tri\n")
        m = M.load_ascii_stl(stl)
        assert m.num_triangles == 1
        assert m.areas()[0] == pytest.approx(0.5)

    def test_vertex_face_text(self, tmp_path):
        f = tmp_path / "mesh.txt"
        f.write_text("# comment\nv 0 0 0\nv 1 0 0\nv 0 1 0\nf 0 1 2\n")
        m = M.load_vertex_face_text(f)
        assert m.num_triangles == 1

    def test_load_mesh_builtin(self):
        m = M.load_mesh("bus")
        assert m.num_triangles > 0

    def test_load_mesh_missing_file(self):
        with pytest.raises(M.MeshError):
            M.load_mesh("/nonexistent/mesh.stl")

    def test_empty_stl_rejected(self, tmp_path):
        f = tmp_path / "empty.stl"
        f.write_text("solid nothing\nendsolid nothing\n")
        with pytest.raises(M.MeshError):
            M.load_ascii_stl(f)
