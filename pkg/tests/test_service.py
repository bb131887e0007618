import dataclasses

import pytest
from fastapi.testclient import TestClient

from mmwsim.config import TargetSpec, default_run_config
from mmwsim.service import app
from mmwsim.waveform import RcsOptions


@pytest.fixture(scope="module")
def client():
    with TestClient(app) as c:
        yield c


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


def test_health(client):
    resp = client.get("/health")
    assert resp.status_code == 200
    assert resp.json() == {"status": "ok"}


def test_run_endpoint(client, tmp_path):
    resp = client.post("/run", json={"config_toml": fast_toml(),
                                     "out_dir": str(tmp_path)})
    assert resp.status_code == 200
    data = resp.json()
    assert data["seed"] == 11
    assert len(data["config_hash"]) == 16
    assert data["summary"]["targets"][0]["detected"] is not None
    assert (tmp_path / "rdm.png").exists()
    assert (tmp_path / "summary.json").exists()


def test_run_seed_override(client, tmp_path):
    resp = client.post("/run", json={"config_toml": fast_toml(), "seed": 77,
                                     "out_dir": str(tmp_path)})
    assert resp.status_code == 200
    assert resp.json()["seed"] == 77


def test_run_bad_toml_is_config_error(client, tmp_path):
    resp = client.post("/run", json={"config_toml": "seed = ???",
                                     "out_dir": str(tmp_path)})
    assert resp.status_code == 400
    assert resp.json()["detail"]["kind"] == "config"


def test_run_bad_lane_is_config_error(client, tmp_path):
    toml = fast_toml().replace("lane = 1", "lane = 9")
    resp = client.post("/run", json={"config_toml": toml,
                                     "out_dir": str(tmp_path)})
    assert resp.status_code == 400
    detail = resp.json()["detail"]
    assert detail["kind"] == "config"
    assert "lane" in detail["message"]


def test_run_unwritable_out_is_io_error(client, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    resp = client.post("/run", json={"config_toml": fast_toml(),
                                     "out_dir": str(blocker / "sub")})
    assert resp.status_code == 500
    assert resp.json()["detail"]["kind"] == "io"


def test_sweep_endpoint(client, tmp_path):
    resp = client.post("/sweep", json={"config_toml": fast_toml(),
                                       "out_dir": str(tmp_path),
                                       "parameter": "snr_db",
                                       "values": [20.0, 30.0]})
    assert resp.status_code == 200
    table = resp.json()["table"]
    assert table["parameter"] == "snr_db"
    assert len(table["rows"]) == 2
    assert (tmp_path / "sweep.csv").exists()


def test_sweep_unknown_parameter(client, tmp_path):
    resp = client.post("/sweep", json={"config_toml": fast_toml(),
                                       "out_dir": str(tmp_path),
                                       "parameter": "carrier_frequency",
                                       "values": [79e9]})
    assert resp.status_code == 400
    assert resp.json()["detail"]["kind"] == "config"


def test_dataset_endpoint(client, tmp_path):
    # the per-run scenario is drawn by the generator, so the base config's
    # own target table (if any) is simply replaced
    resp = client.post("/dataset", json={
        "config_toml": fast_toml(), "out_dir": str(tmp_path),
        "classes": ["motorcycle"], "runs_per_class": 2, "image_size": 32})
    assert resp.status_code == 200
    manifest = resp.json()["manifest"]
    assert manifest["classes"] == ["motorcycle"]
    for e in manifest["entries"]:
        assert (tmp_path / e["file"]).exists()
    assert (tmp_path / "manifest.json").exists()


def test_dataset_unknown_class(client, tmp_path):
    resp = client.post("/dataset", json={"out_dir": str(tmp_path),
                                         "classes": ["tank"],
                                         "runs_per_class": 1})
    assert resp.status_code == 400
    assert resp.json()["detail"]["kind"] == "config"


def test_rcs_endpoint(client, tmp_path):
    resp = client.post("/rcs", json={"mesh": "motorcycle",
                                     "azimuth_start_deg": 0.0,
                                     "azimuth_stop_deg": 0.0,
                                     "azimuth_steps": 1,
                                     "frequency_samples": 32,
                                     "ray_spacing": 0.05,
                                     "range_m": 60.0, "max_bounce": 2,
                                     "out_dir": str(tmp_path)})
    assert resp.status_code == 200
    rows = resp.json()["table"]["rows"]
    assert len(rows) == 1
    assert rows[0]["rcs_m2"] > 0
    assert (tmp_path / "rcs.csv").exists()


def test_rcs_unknown_mesh(client):
    resp = client.post("/rcs", json={"mesh": "submarine", "azimuth_steps": 1,
                                     "azimuth_start_deg": 0.0,
                                     "azimuth_stop_deg": 0.0})
    assert resp.status_code == 400
    assert resp.json()["detail"]["kind"] == "config"
