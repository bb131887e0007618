import dataclasses
import json

import numpy as np
import pytest

from mmwsim import run as R
from mmwsim.artifacts import read_pgm
from mmwsim.config import ConfigError, TargetSpec, default_run_config
from mmwsim.waveform import RcsOptions, load_cube_samples


def fast_config(seed=11, **target_kw):
    """Small scenario that still exercises the full pipeline: one
    motorcycle, coarse ray grid, quarter-length frame."""
    base = default_run_config(seed=seed)
    tgt = dict(id="m0", vehicle_class="motorcycle", lane=1,
               distance=40.0, speed=5.0)
    tgt.update(target_kw)
    return dataclasses.replace(
        base,
        frame=dataclasses.replace(base.frame, chirps_per_frame=32),
        rcs=RcsOptions(ray_spacing=0.04, max_bounce=2, max_centers=16,
                       frequency_samples=64),
        output=dataclasses.replace(base.output, image_size=64),
        targets=(TargetSpec(**tgt),),
    )


@pytest.fixture(scope="module")
def single(tmp_path_factory):
    out = tmp_path_factory.mktemp("single")
    cfg = fast_config()
    return cfg, out, R.run_single(cfg, out)


class TestRunSingle:
    def test_artifact_set(self, single):
        _, out, summary = single
        names = {p.name for p in out.iterdir()}
        assert {"rdm.csv", "rdm.pgm", "rdm.png", "points.csv",
                "summary.json"} <= names
        assert "cube.bin" not in names  # not requested
        assert sorted(names) == summary["artifacts"]

    def test_summary_chirp_block(self, single):
        cfg, _, summary = single
        assert summary["bandwidth_hz"] == pytest.approx(0.625e9)
        assert summary["range_resolution_m"] == pytest.approx(0.24)
        assert summary["chirp"]["samples_per_chirp"] == 256

    def test_target_detected(self, single):
        cfg, _, summary = single
        rows = summary["targets"]
        assert len(rows) == 1
        det = rows[0]["detected"]
        assert det is not None
        assert abs(det["range_error_m"]) < 0.5
        assert abs(det["velocity_error"]) < 0.5
        assert det["lane"] == 1
        assert det["cluster_size"] >= 1

    def test_summary_json_matches_return(self, single):
        cfg, out, summary = single
        disk = json.loads((out / "summary.json").read_text())
        assert disk["seed"] == cfg.seed
        assert disk["num_points"] == summary["num_points"]
        assert disk["targets"] == summary["targets"]

    def test_images_consistent(self, single):
        _, out, _ = single
        from PIL import Image
        pgm = read_pgm(out / "rdm.pgm")
        with Image.open(out / "rdm.png") as pil:
            png = np.asarray(pil)
        np.testing.assert_array_equal(pgm, png)
        assert pgm.shape == (64, 64)


class TestDeterminism:
    def test_byte_identical_artifacts(self, tmp_path):
        cfg = fast_config(seed=21)
        cfg = dataclasses.replace(
            cfg, output=dataclasses.replace(cfg.output, write_cube=True))
        a, b = tmp_path / "a", tmp_path / "b"
        R.run_single(cfg, a)
        R.run_single(cfg, b)
        for name in ("rdm.csv", "points.csv", "rdm.pgm", "rdm.png",
                     "cube.bin", "summary.json"):
            assert (a / name).read_bytes() == (b / name).read_bytes(), name

    def test_seed_changes_noise(self, tmp_path):
        cfg = fast_config(seed=21)
        cfg2 = dataclasses.replace(cfg, seed=22)
        cfg = dataclasses.replace(
            cfg, output=dataclasses.replace(cfg.output, write_cube=True))
        cfg2 = dataclasses.replace(
            cfg2, output=dataclasses.replace(cfg2.output, write_cube=True))
        R.run_single(cfg, tmp_path / "a")
        R.run_single(cfg2, tmp_path / "b")
        sa, _ = load_cube_samples(tmp_path / "a" / "cube.bin")
        sb, _ = load_cube_samples(tmp_path / "b" / "cube.bin")
        assert not np.array_equal(sa, sb)


class TestSweep:
    def test_with_param_validation(self):
        cfg = fast_config()
        with pytest.raises(ConfigError):
            R._with_param(cfg, "carrier_frequency", 79e9)
        swept = R._with_param(cfg, "samples_per_chirp", 512.0)
        assert swept.chirp.samples_per_chirp == 512
        assert isinstance(swept.chirp.samples_per_chirp, int)
        assert R._with_param(cfg, "snr_db", 3).link.snr_db == 3.0

    def test_snr_sweep_table(self, tmp_path):
        cfg = fast_config(seed=5)
        table = R.run_sweep(cfg, "snr_db", [20.0, 30.0], tmp_path)
        assert table["parameter"] == "snr_db"
        assert [r["snr_db"] for r in table["rows"]] == [20.0, 30.0]
        for row in table["rows"]:
            assert row["doppler_flag"] in ("normal", "abnormal", "missed",
                                           "no_target")
            assert row["range_resolution_m"] == pytest.approx(0.24)
        # artifacts: per-value subdirectory plus the aggregate table
        assert (tmp_path / "snr_db_20.0" / "rdm.png").exists()
        lines = (tmp_path / "sweep.csv").read_bytes().decode().split("\r\n")
        assert lines[0].startswith("# seed=5 config=")
        assert "doppler_flag" in lines[1].split(",")
        assert len([l for l in lines[2:] if l]) == 2
        disk = json.loads((tmp_path / "sweep.json").read_text())
        assert disk["rows"] == table["rows"]


class TestDataset:
    def test_spec_validation(self):
        with pytest.raises(ConfigError):
            R.DatasetSpec(runs_per_class=0)
        with pytest.raises(ConfigError):
            R.DatasetSpec(classes=("car", "tank"))
        with pytest.raises(ConfigError):
            R.DatasetSpec(distance_range=(40.0, 25.0))

    def test_serial_parallel_identical(self, tmp_path):
        base = dataclasses.replace(fast_config(seed=9), targets=())
        spec = R.DatasetSpec(classes=("motorcycle",), runs_per_class=2,
                             image_size=32)
        m1 = R.generate_dataset(base, spec, tmp_path / "serial")
        m2 = R.generate_dataset(base, dataclasses.replace(spec, workers=4),
                                tmp_path / "parallel")
        assert m1["entries"] == m2["entries"]
        for e in m1["entries"]:
            fa = (tmp_path / "serial" / e["file"]).read_bytes()
            fb = (tmp_path / "parallel" / e["file"]).read_bytes()
            assert fa == fb
        assert len(m1["entries"]) == 2
        for e in m1["entries"]:
            assert e["class"] == "motorcycle"
            assert spec.distance_range[0] <= e["distance_m"] <= spec.distance_range[1]
            assert spec.speed_range[0] <= e["speed"] <= spec.speed_range[1]
            assert e["lane"] in spec.lanes
        manifest = json.loads((tmp_path / "serial" / "manifest.json").read_text())
        assert manifest["entries"] == m1["entries"]


class TestRcsTable:
    def test_small_sweep(self, tmp_path):
        spec = R.RcsSweepSpec(mesh_ref="motorcycle", azimuth_start_deg=-10.0,
                              azimuth_stop_deg=10.0, azimuth_steps=3,
                              frequency_samples=32, ray_spacing=0.05,
                              range_m=60.0, max_bounce=2, max_centers=16)
        table = R.rcs_table(spec, tmp_path)
        assert [r["azimuth_deg"] for r in table["rows"]] == [-10.0, 0.0, 10.0]
        for row in table["rows"]:
            assert row["rcs_m2"] > 0
            assert row["rcs_dbsm"] == pytest.approx(
                10 * np.log10(row["rcs_m2"]))
            assert row["num_centers"] >= 1
        lines = (tmp_path / "rcs.csv").read_bytes().decode().split("\r\n")
        assert lines[1] == "azimuth_deg,rcs_m2,rcs_dbsm,num_centers"
        assert len([l for l in lines[2:] if l]) == 3
        disk = json.loads((tmp_path / "rcs.json").read_text())
        assert disk["rows"] == table["rows"]
