import dataclasses
import json

import pytest

from mmwsim import cli
from mmwsim.config import TargetSpec, default_run_config
from mmwsim.waveform import RcsOptions


def fast_toml(seed=11):
    base = default_run_config(seed=seed)
    cfg = dataclasses.replace(
        base,
        frame=dataclasses.replace(base.frame, chirps_per_frame=32),
        rcs=RcsOptions(ray_spacing=0.04, max_bounce=2, max_centers=16,
                       frequency_samples=64),
        output=dataclasses.replace(base.output, image_size=64),
        targets=(TargetSpec(id="m0", vehicle_class="motorcycle", lane=1,
                            distance=40.0, speed=5.0),),
    )
    return cfg.to_toml()


@pytest.fixture
def config_file(tmp_path):
    p = tmp_path / "run.toml"
    p.write_text(fast_toml())
    return str(p)


def run_cli(argv):
    try:
        return cli.main(argv)
    except SystemExit as exc:
        return exc.code


class TestRun:
    def test_success(self, config_file, tmp_path, capsys):
        out = tmp_path / "out"
        code = run_cli(["run", "--config", config_file, "--out", str(out)])
        assert code == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["targets"][0]["detected"] is not None
        assert (out / "rdm.png").exists()

    def test_seed_override(self, config_file, tmp_path):
        out = tmp_path / "out"
        code = run_cli(["run", "--config", config_file, "--seed", "42",
                        "--out", str(out)])
        assert code == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["seed"] == 42

    def test_missing_config_exits_2(self, tmp_path):
        code = run_cli(["run", "--config", str(tmp_path / "nope.toml"),
                        "--out", str(tmp_path)])
        assert code == cli.EXIT_CONFIG == 2

    def test_invalid_config_exits_2(self, tmp_path):
        p = tmp_path / "bad.toml"
        p.write_text("seed = 1\nbogus_section_key = true\n")
        code = run_cli(["run", "--config", str(p), "--out", str(tmp_path / "o")])
        assert code == 2

    def test_unwritable_out_exits_3(self, config_file, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        code = run_cli(["run", "--config", config_file,
                        "--out", str(blocker / "sub")])
        assert code == cli.EXIT_IO == 3


class TestSweep:
    def test_success(self, config_file, tmp_path, capsys):
        out = tmp_path / "sweep"
        code = run_cli(["sweep", "--config", config_file, "--out", str(out),
                        "--param", "snr_db", "--values", "20,30"])
        assert code == 0
        table = json.loads(capsys.readouterr().out)
        assert len(table["rows"]) == 2
        assert (out / "sweep.csv").exists()

    def test_bad_values_exit_2(self, config_file, tmp_path):
        code = run_cli(["sweep", "--config", config_file,
                        "--out", str(tmp_path), "--values", "20,banana"])
        assert code == 2

    def test_unknown_param_exits_2(self, config_file, tmp_path):
        code = run_cli(["sweep", "--config", config_file,
                        "--out", str(tmp_path), "--param", "carrier",
                        "--values", "1"])
        assert code == 2


class TestDataset:
    def test_success(self, config_file, tmp_path, capsys):
        out = tmp_path / "ds"
        code = run_cli(["dataset", "--config", config_file, "--out", str(out),
                        "--classes", "motorcycle", "--runs-per-class", "2",
                        "--image-size", "32"])
        assert code == 0
        assert "wrote 2 images" in capsys.readouterr().out
        manifest = json.loads((out / "manifest.json").read_text())
        assert len(manifest["entries"]) == 2

    def test_unknown_class_exits_2(self, tmp_path):
        code = run_cli(["dataset", "--out", str(tmp_path),
                        "--classes", "tank", "--runs-per-class", "1"])
        assert code == 2


class TestRcs:
    def test_success(self, tmp_path, capsys):
        code = run_cli(["rcs", "--mesh", "motorcycle",
                        "--azimuth", "0:0:1", "--out", str(tmp_path)])
        assert code == 0
        out = capsys.readouterr().out
        assert "dBsm" in out
        assert (tmp_path / "rcs.csv").exists()

    def test_bad_azimuth_exits_2(self):
        code = run_cli(["rcs", "--azimuth", "0-30-5"])
        assert code == 2

    def test_unknown_mesh_exits_2(self, tmp_path):
        code = run_cli(["rcs", "--mesh", "submarine", "--azimuth", "0:0:1",
                        "--out", str(tmp_path)])
        assert code == 2
