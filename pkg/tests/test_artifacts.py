import json
import math

import numpy as np
import pytest
from PIL import Image

from mmwsim import artifacts as A
from mmwsim import dsp as D
from mmwsim import waveform as W


CHIRP = W.ChirpConfig()


def make_rdm(k_r=32, k_d=16, seed=0):
    rng = np.random.default_rng(seed)
    mag = 10 * np.log10(rng.exponential(size=(k_r, k_d)))
    return D.Rdm(magnitude=mag, range_axis=D.range_axis(CHIRP, k_r),
                 velocity_axis=D.velocity_axis(CHIRP, k_d),
                 velocity_span=(-16.0, 16.0), chirp=CHIRP)


class TestCsv:
    def test_rdm_csv_layout(self, tmp_path):
        rdm = make_rdm()
        p = tmp_path / "rdm.csv"
        A.write_rdm_csv(rdm, p, seed=7, config_hash="cafe")
        raw = p.read_bytes()
        # RFC 4180: CRLF terminators throughout
        assert raw.count(b"\r\n") == raw.count(b"\n")
        lines = raw.decode().split("\r\n")
        assert lines[0] == "# seed=7 config=cafe"
        header = lines[1].split(",")
        assert header[0] == "range_m"
        assert len(header) == 1 + 16
        assert header[1].startswith("v_")
        # one data row per range bin, numbers parse back
        rows = [l for l in lines[2:] if l]
        assert len(rows) == 32
        first = rows[0].split(",")
        assert float(first[0]) == pytest.approx(rdm.range_axis[0], abs=1e-4)
        assert float(first[3]) == pytest.approx(rdm.magnitude[0, 2], abs=1e-3)

    def test_point_cloud_csv(self, tmp_path):
        pc = D.PointCloud([(1.0, 2.0, 0.0, -3.5, 12.25)])
        p = tmp_path / "points.csv"
        A.write_point_cloud_csv(pc, p, seed=1, config_hash="beef")
        lines = p.read_bytes().decode().split("\r\n")
        assert lines[1] == "x,y,z,v,intensity"
        assert lines[2] == "1.0000,2.0000,0.0000,-3.5000,12.25"

    def test_empty_point_cloud(self, tmp_path):
        p = tmp_path / "points.csv"
        A.write_point_cloud_csv(D.PointCloud(), p, seed=1, config_hash="00")
        lines = [l for l in p.read_bytes().decode().split("\r\n") if l]
        assert len(lines) == 2  # meta + header only


class TestImageArray:
    def test_peak_maps_to_white(self):
        rdm = make_rdm(k_r=16, k_d=16)
        rdm.magnitude[5, 3] = 40.0
        img = A.rdm_to_image_array(rdm, size=16)
        assert img.shape == (16, 16)
        assert img.dtype == np.uint8
        assert img.max() == 255

    def test_velocity_rows_positive_up(self):
        rdm = make_rdm(k_r=8, k_d=8)
        rdm.magnitude[:] = -30.0
        # light one cell at max positive velocity: must land in the top row
        rdm.magnitude[4, 7] = 30.0
        img = A.rdm_to_image_array(rdm, size=8)
        assert np.argmax(img) // 8 == 0

    def test_constant_map_is_mid_gray(self):
        rdm = make_rdm(k_r=8, k_d=8)
        rdm.magnitude[:] = 5.0
        img = A.rdm_to_image_array(rdm, size=8)
        assert np.all(img == 128)

    def test_dynamic_range_clip(self):
        rdm = make_rdm(k_r=8, k_d=8)
        rdm.magnitude[:] = -100.0
        rdm.magnitude[0, 0] = 0.0
        rdm.magnitude[1, 1] = -70.0  # below the 60 dB window: clips to floor
        img = A.rdm_to_image_array(rdm, size=8, dynamic_range_db=60.0)
        floor = img[-1, 2]  # any untouched cell
        assert img[-2, 1] == floor


class TestPgm:
    def test_round_trip(self, tmp_path):
        img = np.arange(48, dtype=np.uint8).reshape(6, 8)
        p = tmp_path / "img.pgm"
        A.write_pgm(img, p, seed=3, config_hash="abcd")
        back = A.read_pgm(p)
        np.testing.assert_array_equal(back, img)

    def test_header_comment(self, tmp_path):
        img = np.zeros((4, 4), dtype=np.uint8)
        p = tmp_path / "img.pgm"
        A.write_pgm(img, p, seed=9, config_hash="0f0f")
        raw = p.read_bytes()
        assert raw.startswith(b"P5\n# seed=9 config=0f0f\n4 4\n255\n")

    def test_reject_non_pgm(self, tmp_path):
        p = tmp_path / "junk.pgm"
        p.write_bytes(b"JUNK")
        with pytest.raises(A.ArtifactError):
            A.read_pgm(p)


class TestPng:
    def test_png_readable_with_provenance(self, tmp_path):
        img = np.random.default_rng(0).integers(0, 256, (16, 16)).astype(np.uint8)
        p = tmp_path / "img.png"
        A.write_png(img, p, seed=5, config_hash="1234")
        with Image.open(p) as pil:
            np.testing.assert_array_equal(np.asarray(pil), img)
            assert pil.info["provenance"] == "seed=5 config=1234"

    def test_export_writes_both(self, tmp_path):
        rdm = make_rdm()
        out = A.export_rdm_image(rdm, tmp_path / "rdm", seed=2, config_hash="aa",
                                 size=32)
        pgm = A.read_pgm(out["pgm"])
        with Image.open(out["png"]) as pil:
            png = np.asarray(pil)
        np.testing.assert_array_equal(pgm, png)
        assert pgm.shape == (32, 32)


class TestJson:
    def test_provenance_injected(self, tmp_path):
        p = tmp_path / "summary.json"
        A.write_json({"answer": 42}, p, seed=11, config_hash="dead")
        data = json.loads(p.read_text())
        assert data == {"seed": 11, "config": "dead", "answer": 42}
